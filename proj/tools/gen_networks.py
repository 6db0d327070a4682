#!/usr/bin/env python3
"""Regenerates the bundled network descriptions under networks/.

Only convolution layers carry features; pooling and merge points are emitted
as "shape" entries so channel counts can be propagated through them.
"""
import json
import math
import pathlib

OUT = pathlib.Path(__file__).resolve().parent.parent / "networks"


class Builder:
    def __init__(self, name, channels=3, spatial=224):
        self.doc = {"name": name, "input": {"channels": channels, "spatial": spatial},
                    "layers": [], "edges": []}

    def conv(self, lid, n, m, k, s, p, ip, g=1, src=None, mode="passthrough"):
        self.doc["layers"].append({"id": lid, "type": "conv", "n": n, "m": m, "k": k,
                                   "s": s, "p": p, "g": g, "ip": ip})
        self._link(src, lid, mode)
        return lid

    def shape(self, lid, channels, spatial, src=None, mode="passthrough"):
        self.doc["layers"].append({"id": lid, "type": "shape", "out_channels": channels,
                                   "out_spatial": spatial})
        self._link(src, lid, mode)
        return lid

    def _link(self, src, lid, mode):
        if src is None:
            return
        for s in (src if isinstance(src, list) else [src]):
            self.doc["edges"].append({"from": s, "to": lid, "mode": mode})

    def write(self, fname):
        OUT.mkdir(exist_ok=True)
        (OUT / fname).write_text(json.dumps(self.doc, indent=2) + "\n")
        convs = sum(1 for l in self.doc["layers"] if l["type"] == "conv")
        print(f"{fname}: {convs} conv layers")


def out_size(ip, k, s, p):
    return 1 + (ip + 2 * p - k) // s


def resnet18():
    b = Builder("resnet18")
    x = b.conv("conv1", 64, 3, 7, 2, 3, 224)
    x = b.shape("maxpool", 64, 56, x)
    channels, spatial = 64, 56
    for stage, width in enumerate([64, 128, 256, 512], start=1):
        for block in range(2):
            stride = 2 if stage > 1 and block == 0 else 1
            pre = f"layer{stage}.{block}"
            out_sp = out_size(spatial, 3, stride, 1)
            a = b.conv(f"{pre}.conv1", width, channels, 3, stride, 1, spatial, src=x)
            c = b.conv(f"{pre}.conv2", width, width, 3, 1, 1, out_sp, src=a)
            shortcut = x
            if stride != 1 or channels != width:
                shortcut = b.conv(f"{pre}.downsample", width, channels, 1, stride, 0, spatial, src=x)
            x = b.shape(f"{pre}.add", width, out_sp, [c, shortcut], mode="add")
            channels, spatial = width, out_sp
    b.shape("avgpool", channels, 1, x)
    b.write("resnet18.json")


def mobilenetv2():
    b = Builder("mobilenetv2")
    x = b.conv("features.0", 32, 3, 3, 2, 1, 224)
    channels, spatial = 32, 112
    settings = [(1, 16, 1, 1), (6, 24, 2, 2), (6, 32, 3, 2), (6, 64, 4, 2),
                (6, 96, 3, 1), (6, 160, 3, 2), (6, 320, 1, 1)]
    idx = 1
    for t, c, n, s in settings:
        for i in range(n):
            stride = s if i == 0 else 1
            pre = f"features.{idx}"
            hidden = channels * t
            src = x
            if t != 1:
                src = b.conv(f"{pre}.expand", hidden, channels, 1, 1, 0, spatial, src=src)
            out_sp = out_size(spatial, 3, stride, 1)
            dw = b.conv(f"{pre}.dw", hidden, hidden, 3, stride, 1, spatial, g=hidden, src=src)
            proj = b.conv(f"{pre}.project", c, hidden, 1, 1, 0, out_sp, src=dw)
            if stride == 1 and channels == c:
                x = b.shape(f"{pre}.add", c, out_sp, [proj, x], mode="add")
            else:
                x = proj
            channels, spatial = c, out_sp
            idx += 1
    b.conv(f"features.{idx}", 1280, channels, 1, 1, 0, spatial, src=x)
    b.write("mobilenetv2.json")


def squeezenet():
    # SqueezeNet 1.1; pooling uses ceil mode.
    b = Builder("squeezenet")
    x = b.conv("conv1", 64, 3, 3, 2, 0, 224)
    spatial = out_size(224, 3, 2, 0)
    channels = 64

    def pool(name, src, ch, sp):
        nsp = math.ceil((sp - 3) / 2) + 1
        return b.shape(name, ch, nsp, src), nsp

    x, spatial = pool("pool1", x, channels, spatial)
    fires = [(16, 64), (16, 64), "pool", (32, 128), (32, 128), "pool",
             (48, 192), (48, 192), (64, 256), (64, 256)]
    fire_id, pool_id = 2, 2
    for f in fires:
        if f == "pool":
            x, spatial = pool(f"pool{pool_id}", x, channels, spatial)
            pool_id += 1
            continue
        sq, ex = f
        pre = f"fire{fire_id}"
        s = b.conv(f"{pre}.squeeze", sq, channels, 1, 1, 0, spatial, src=x)
        e1 = b.conv(f"{pre}.expand1x1", ex, sq, 1, 1, 0, spatial, src=s)
        e3 = b.conv(f"{pre}.expand3x3", ex, sq, 3, 1, 1, spatial, src=s)
        x = b.shape(f"{pre}.concat", 2 * ex, spatial, [e1, e3], mode="concat")
        channels = 2 * ex
        fire_id += 1
    b.conv("classifier.conv", 1000, channels, 1, 1, 0, spatial, src=x)
    b.write("squeezenet.json")


def mnasnet():
    # MnasNet 1.0 (depth multiplier 1.0).
    b = Builder("mnasnet")
    x = b.conv("layers.0", 32, 3, 3, 2, 1, 224)
    x = b.conv("layers.3", 32, 32, 3, 1, 1, 112, g=32, src=x)
    x = b.conv("layers.6", 16, 32, 1, 1, 0, 112, src=x)
    channels, spatial = 16, 112
    stacks = [(24, 3, 2, 3, 3), (40, 5, 2, 3, 3), (80, 5, 2, 6, 3),
              (96, 3, 1, 6, 2), (192, 5, 2, 6, 4), (320, 3, 1, 6, 1)]
    for si, (out, k, stride0, t, reps) in enumerate(stacks, start=8):
        for r in range(reps):
            stride = stride0 if r == 0 else 1
            pre = f"layers.{si}.{r}"
            hidden = channels * t
            e = b.conv(f"{pre}.expand", hidden, channels, 1, 1, 0, spatial, src=x)
            out_sp = out_size(spatial, k, stride, k // 2)
            dw = b.conv(f"{pre}.dw", hidden, hidden, k, stride, k // 2, spatial, g=hidden, src=e)
            proj = b.conv(f"{pre}.project", out, hidden, 1, 1, 0, out_sp, src=dw)
            if stride == 1 and channels == out:
                x = b.shape(f"{pre}.add", out, out_sp, [proj, x], mode="add")
            else:
                x = proj
            channels, spatial = out, out_sp
    b.conv("layers.14", 1280, channels, 1, 1, 0, spatial, src=x)
    b.write("mnasnet.json")


if __name__ == "__main__":
    resnet18()
    mobilenetv2()
    squeezenet()
    mnasnet()
