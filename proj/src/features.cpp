#include "trainperf/features.hpp"

#include <stdexcept>

#include "trainperf/errors.hpp"

namespace trainperf {

namespace {

constexpr std::array<FeatureInfo, kFeatureCount> kTable{{
    {"mem_w", Pass::Fwd},
    {"mem_w_grad", Pass::BwdW},
    // Equal to the forward activation sizes, hence tagged forward.
    {"mem_ifm_grad", Pass::Fwd},
    {"mem_ofm_grad", Pass::Fwd},
    {"mem_tensor_sum", Pass::Mixed},

    {"mem_i2c_mm_fwd_total", Pass::Fwd},
    {"mem_i2c_mm_bwd_w_total", Pass::BwdW},
    {"mem_i2c_mm_fwd_index", Pass::Fwd},
    {"mem_i2c_mm_bwd_x_total", Pass::BwdX},
    {"mem_i2c_mm_bwd_x_index", Pass::BwdX},
    {"mem_i2c_mm_total_sum", Pass::Mixed},
    {"mem_i2c_mm_index_sum", Pass::Mixed},
    {"ops_mm_fwd", Pass::Fwd},
    {"ops_mm_bwd_x", Pass::BwdX},
    {"ops_mm_sum", Pass::Mixed},

    {"mem_fft_w_fwd", Pass::Fwd},
    {"mem_fft_ifm_fwd", Pass::Fwd},
    {"mem_fft_ofm_bwd_w", Pass::BwdW},
    {"mem_fft_w_bwd_x", Pass::BwdX},
    {"mem_fft_ofm_bwd_x", Pass::BwdX},
    {"mem_fft_fwd_sum", Pass::Fwd},
    {"mem_fft_ofm_sum", Pass::Mixed},
    {"mem_fft_ofm_ifm_sum", Pass::Mixed},
    {"mem_fft_total_sum", Pass::Mixed},
    {"ops_fft_fwd", Pass::Fwd},
    {"ops_fft_bwd_x", Pass::BwdX},
    {"ops_fft_bwd_w", Pass::BwdW},
    {"ops_fft_sum", Pass::Mixed},

    {"mem_wino_fwd", Pass::Fwd},
    {"mem_wino_bwd_x", Pass::BwdX},
    {"mem_wino_bwd_w", Pass::BwdW},
    {"mem_wino_fwd_bwd_x_sum", Pass::Mixed},
    {"mem_wino_fwd_bwd_w_sum", Pass::Mixed},
    {"mem_wino_bwd_w_bwd_x_sum", Pass::Mixed},
    {"mem_wino_total_sum", Pass::Mixed},
    {"ops_wino_fwd", Pass::Fwd},
    {"ops_wino_bwd_x", Pass::BwdX},
    {"ops_wino_bwd_w", Pass::BwdW},
    {"ops_wino_fwd_bwd_x_sum", Pass::Mixed},
    {"ops_wino_fwd_bwd_w_sum", Pass::Mixed},
    {"ops_wino_bwd_x_bwd_w_sum", Pass::Mixed},
    {"ops_wino_total_sum", Pass::Mixed},
}};

constexpr std::size_t idx(Feature f) { return static_cast<std::size_t>(f); }

std::int64_t mul(std::initializer_list<std::int64_t> factors) {
  std::int64_t out = 1;
  for (std::int64_t f : factors) out = checked_mul(out, f);
  return out;
}

std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return (a + b - 1) / b; }

std::string tile_suffix(WinogradTile t) {
  return "_q" + std::to_string(t.q) + "r" + std::to_string(t.r);
}

// One output column: a feature, and for split Winograd columns the tiling it belongs to.
struct Column {
  Feature feature;
  int tile = -1;
};

std::vector<Column> columns(const FeatureLayout& layout) {
  auto keep = [&](Feature f) {
    return layout.mode == FeatureMode::Training || info(f).pass == Pass::Fwd;
  };
  std::vector<Column> cols;
  for (std::size_t i = 0; i < kFirstWinogradFeature; ++i) {
    if (keep(Feature(i))) cols.push_back({Feature(i)});
  }
  if (layout.winograd == WinogradLayout::Summed) {
    for (std::size_t i = kFirstWinogradFeature; i < kFeatureCount; ++i) {
      if (keep(Feature(i))) cols.push_back({Feature(i)});
    }
  } else {
    for (int t = 0; t < static_cast<int>(kWinogradTiles.size()); ++t) {
      for (std::size_t i = kFirstWinogradFeature; i < kFeatureCount; ++i) {
        if (keep(Feature(i))) cols.push_back({Feature(i), t});
      }
    }
  }
  return cols;
}

}  // namespace

const std::array<FeatureInfo, kFeatureCount>& feature_table() { return kTable; }

void layer_tensor_features(const ConvLayerSpec& l, std::int64_t bs, LayerFeatures& out) {
  const std::int64_t op = ofm_size(l);
  const std::int64_t mg = l.m / l.g;
  out[idx(Feature::MemW)] = mul({l.n, mg, l.k, l.k});
  out[idx(Feature::MemWGrad)] = mul({bs, l.n, mg, l.k, l.k});
  out[idx(Feature::MemIfmGrad)] = mul({bs, l.m, l.ip, l.ip});
  out[idx(Feature::MemOfmGrad)] = mul({bs, l.n, op, op});
  out[idx(Feature::MemTensorSum)] = out[idx(Feature::MemW)] + out[idx(Feature::MemWGrad)] +
                                    out[idx(Feature::MemIfmGrad)] + out[idx(Feature::MemOfmGrad)];
}

void layer_matmul_features(const ConvLayerSpec& l, std::int64_t bs, LayerFeatures& out) {
  const std::int64_t op = ofm_size(l);
  const std::int64_t mg = l.m / l.g;
  out[idx(Feature::MemI2cFwdTotal)] = mul({bs, op, op, l.k, l.k, l.m});
  out[idx(Feature::MemI2cBwdWTotal)] = mul({bs, op, op, l.k, l.k, mg});
  out[idx(Feature::MemI2cFwdIndex)] = mul({bs, op, op});
  out[idx(Feature::MemI2cBwdXTotal)] = mul({bs, l.ip, l.ip, l.k, l.k, l.m});
  out[idx(Feature::MemI2cBwdXIndex)] = mul({bs, l.ip, l.ip});
  out[idx(Feature::MemI2cTotalSum)] = out[idx(Feature::MemI2cFwdTotal)] + out[idx(Feature::MemI2cBwdWTotal)] +
                                      out[idx(Feature::MemI2cBwdXTotal)];
  out[idx(Feature::MemI2cIndexSum)] =
      2 * out[idx(Feature::MemI2cFwdIndex)] + out[idx(Feature::MemI2cBwdXIndex)];
  out[idx(Feature::OpsMmFwd)] = mul({bs, l.n, op, op, l.k, l.k, mg});
  out[idx(Feature::OpsMmBwdX)] = mul({bs, l.m, l.ip, l.ip, l.k, l.k, l.n});
  out[idx(Feature::OpsMmSum)] = 2 * out[idx(Feature::OpsMmFwd)] + out[idx(Feature::OpsMmBwdX)];
}

void layer_fft_features(const ConvLayerSpec& l, std::int64_t bs, LayerFeatures& out) {
  const std::int64_t op = ofm_size(l);
  const std::int64_t mg = l.m / l.g;
  out[idx(Feature::MemFftWFwd)] = mul({l.n, mg, l.ip, 1 + l.ip});
  out[idx(Feature::MemFftIfmFwd)] = mul({bs, l.m, l.ip, 1 + l.ip});
  out[idx(Feature::MemFftOfmBwdW)] = mul({bs, l.n, l.ip, 1 + l.ip});
  out[idx(Feature::MemFftWBwdX)] = mul({l.n, mg, op, 1 + op});
  out[idx(Feature::MemFftOfmBwdX)] = mul({bs, l.n, op, 1 + op});
  out[idx(Feature::MemFftFwdSum)] = out[idx(Feature::MemFftWFwd)] + out[idx(Feature::MemFftIfmFwd)];
  out[idx(Feature::MemFftOfmSum)] = out[idx(Feature::MemFftOfmBwdX)] + out[idx(Feature::MemFftOfmBwdW)];
  out[idx(Feature::MemFftOfmIfmSum)] = out[idx(Feature::MemFftOfmBwdW)] + out[idx(Feature::MemFftIfmFwd)];
  out[idx(Feature::MemFftTotalSum)] = out[idx(Feature::MemFftFwdSum)] + out[idx(Feature::MemFftOfmSum)] +
                                      out[idx(Feature::MemFftOfmIfmSum)];

  // Transform work: bs*(m+n) feature maps plus n*(m/g) filter planes.
  const std::int64_t planes = checked_add(mul({bs, l.m + l.n}), mul({l.n, mg}));
  const std::int64_t pointwise = mul({bs, l.n, l.m});
  out[idx(Feature::OpsFftFwd)] =
      ExactCount::log2_of(l.ip) * mul({l.ip, l.ip, planes}) + ExactCount(mul({pointwise, l.ip, l.ip}));
  out[idx(Feature::OpsFftBwdX)] =
      ExactCount::log2_of(op) * mul({op, op, planes}) + ExactCount(mul({pointwise, op, op}));
  // ip * log(ip^2) here, not ip^2 * log(ip) as in the other two transforms.
  out[idx(Feature::OpsFftBwdW)] =
      ExactCount::log2_of(l.ip) * mul({2, l.ip, planes}) + ExactCount(mul({pointwise, l.ip, l.ip}));
  out[idx(Feature::OpsFftSum)] =
      out[idx(Feature::OpsFftFwd)] + out[idx(Feature::OpsFftBwdX)] + out[idx(Feature::OpsFftBwdW)];
}

void layer_winograd_features(const ConvLayerSpec& l, std::int64_t bs, WinogradTile tile,
                             LayerFeatures& out) {
  const std::int64_t op = ofm_size(l);
  const std::int64_t mg = l.m / l.g;
  const std::int64_t t = tile.q + tile.r - 1;
  const std::int64_t hadamard = t * t;
  const std::int64_t in_tiles = ceil_div(l.ip, tile.q);
  const std::int64_t out_tiles = ceil_div(op, tile.q);
  const std::int64_t filter_tiles = ceil_div(l.k, tile.r);
  const std::int64_t out_filter_tiles = ceil_div(op, tile.r);

  auto& f = out;
  f[idx(Feature::MemWinoFwd)] = mul({bs, l.n, in_tiles, in_tiles, 3, hadamard});
  f[idx(Feature::MemWinoBwdX)] = mul({bs, l.m, out_tiles, out_tiles, 3, hadamard});
  f[idx(Feature::MemWinoBwdW)] = mul({bs, l.n, mg, in_tiles, in_tiles, 3, hadamard});
  f[idx(Feature::MemWinoFwdBwdXSum)] = f[idx(Feature::MemWinoFwd)] + f[idx(Feature::MemWinoBwdX)];
  f[idx(Feature::MemWinoFwdBwdWSum)] = f[idx(Feature::MemWinoFwd)] + f[idx(Feature::MemWinoBwdW)];
  f[idx(Feature::MemWinoBwdWBwdXSum)] = f[idx(Feature::MemWinoBwdW)] + f[idx(Feature::MemWinoBwdX)];
  f[idx(Feature::MemWinoTotalSum)] = f[idx(Feature::MemWinoFwdBwdXSum)] + f[idx(Feature::MemWinoFwdBwdWSum)] +
                                     f[idx(Feature::MemWinoBwdWBwdXSum)];

  f[idx(Feature::OpsWinoFwd)] = mul({bs, l.n, mg, in_tiles, in_tiles, filter_tiles, filter_tiles, hadamard});
  f[idx(Feature::OpsWinoBwdX)] = mul({bs, l.m, l.n, out_tiles, out_tiles, filter_tiles, filter_tiles, hadamard});
  // Unlike its siblings this term squares m/g and ceil(op/r).
  f[idx(Feature::OpsWinoBwdW)] =
      mul({bs, l.n, mg, mg, in_tiles, in_tiles, out_filter_tiles, out_filter_tiles, hadamard});
  f[idx(Feature::OpsWinoFwdBwdXSum)] = f[idx(Feature::OpsWinoFwd)] + f[idx(Feature::OpsWinoBwdX)];
  f[idx(Feature::OpsWinoFwdBwdWSum)] = f[idx(Feature::OpsWinoFwd)] + f[idx(Feature::OpsWinoBwdW)];
  f[idx(Feature::OpsWinoBwdXBwdWSum)] = f[idx(Feature::OpsWinoBwdX)] + f[idx(Feature::OpsWinoBwdW)];
  f[idx(Feature::OpsWinoTotalSum)] = f[idx(Feature::OpsWinoFwdBwdXSum)] + f[idx(Feature::OpsWinoFwdBwdWSum)] +
                                     f[idx(Feature::OpsWinoBwdXBwdWSum)];
}

LayerFeatures layer_features(const ConvLayerSpec& layer, std::int64_t bs, WinogradTile tile) {
  LayerFeatures out;
  layer_tensor_features(layer, bs, out);
  layer_matmul_features(layer, bs, out);
  layer_fft_features(layer, bs, out);
  layer_winograd_features(layer, bs, tile, out);
  return out;
}

std::vector<std::string> FeatureLayout::names() const {
  std::vector<std::string> out;
  for (const Column& c : columns(*this)) {
    std::string name(info(c.feature).name);
    if (c.tile >= 0) name += tile_suffix(kWinogradTiles[static_cast<std::size_t>(c.tile)]);
    out.push_back(std::move(name));
  }
  return out;
}

std::string FeatureLayout::schema_tag() const {
  std::string tag(kFeatureSchemaVersion);
  tag += mode == FeatureMode::Training ? "/training" : "/inference";
  tag += winograd == WinogradLayout::Summed ? "/wino-summed" : "/wino-split";
  return tag;
}

std::vector<double> FeatureVector::values() const {
  std::vector<double> out;
  out.reserve(exact.size());
  for (const auto& v : exact) out.push_back(v.to_double());
  return out;
}

FeatureVector extract_features(const NetworkSpec& net, std::int64_t bs, FeatureLayout layout) {
  if (bs < 1) throw ShapeError("batch size must be >= 1");
  validate(net);

  LayerFeatures base{};
  std::array<LayerFeatures, kWinogradTiles.size()> wino{};
  for (const auto& layer : net.layers) {
    const auto* conv = std::get_if<ConvLayerSpec>(&layer);
    if (conv == nullptr) continue;
    LayerFeatures f;
    layer_tensor_features(*conv, bs, f);
    layer_matmul_features(*conv, bs, f);
    layer_fft_features(*conv, bs, f);
    for (std::size_t i = 0; i < kFirstWinogradFeature; ++i) base[i] += f[i];
    for (std::size_t t = 0; t < kWinogradTiles.size(); ++t) {
      layer_winograd_features(*conv, bs, kWinogradTiles[t], f);
      for (std::size_t i = kFirstWinogradFeature; i < kFeatureCount; ++i) wino[t][i] += f[i];
    }
  }

  FeatureVector out;
  out.layout = layout;
  out.bs = bs;
  for (const Column& c : columns(layout)) {
    const auto i = static_cast<std::size_t>(c.feature);
    if (i < kFirstWinogradFeature) {
      out.exact.push_back(base[i]);
    } else if (c.tile >= 0) {
      out.exact.push_back(wino[static_cast<std::size_t>(c.tile)][i]);
    } else {
      ExactCount total;
      for (const auto& w : wino) total += w[i];
      out.exact.push_back(std::move(total));
    }
  }
  return out;
}

std::string_view to_string(Pass pass) {
  switch (pass) {
    case Pass::Fwd: return "fwd";
    case Pass::BwdX: return "bwd_x";
    case Pass::BwdW: return "bwd_w";
    case Pass::Mixed: return "mixed";
  }
  return "mixed";
}

std::string_view to_string(FeatureMode mode) {
  return mode == FeatureMode::Training ? "training" : "inference";
}

FeatureMode feature_mode_from_string(std::string_view text) {
  if (text == "training") return FeatureMode::Training;
  if (text == "inference") return FeatureMode::InferenceOnly;
  throw ShapeError("unknown feature mode '" + std::string(text) + "'");
}

}  // namespace trainperf
