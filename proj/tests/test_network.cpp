#include <doctest.h>

#include <random>
#include <set>

#include "support.hpp"
#include "trainperf/errors.hpp"
#include "trainperf/network.hpp"

using namespace trainperf;
using namespace testing_support;

namespace {

std::string single_layer_doc() {
  return R"({"name": "one", "input": {"channels": 3, "spatial": 224},
             "layers": [{"id": "c", "type": "conv", "n": 64, "m": 3, "k": 7, "s": 2, "p": 3, "g": 1, "ip": 224}],
             "edges": []})";
}

ConvLayerSpec conv(std::string id, std::int64_t n, std::int64_t m, std::int64_t k = 3, std::int64_t g = 1,
                   std::int64_t ip = 8) {
  return ConvLayerSpec{std::move(id), n, m, k, 1, k / 2, g, ip};
}

PruneConfig at_level(double level) {
  PruneConfig cfg;
  cfg.level = level;
  return cfg;
}

std::string rule_of(const NetworkSpec& net) {
  try {
    validate(net);
  } catch (const ValidationError& e) {
    return e.rule() + "@" + e.layer_id();
  }
  return "ok";
}

}  // namespace

TEST_CASE("single-layer document parses to one layer and no edges") {
  const NetworkSpec net = parse_network(single_layer_doc());
  CHECK(net.name == "one");
  REQUIRE(net.layers.size() == 1);
  CHECK(net.edges.empty());
  const auto& c = std::get<ConvLayerSpec>(net.layers[0]);
  CHECK(c.n == 64);
  CHECK(c.m == 3);
  CHECK(c.k == 7);
  CHECK(c.s == 2);
  CHECK(c.p == 3);
  CHECK(c.g == 1);
  CHECK(c.ip == 224);
}

TEST_CASE("edge into a layer with the wrong channel count names the rule and layer") {
  const std::string doc = R"({"name": "x", "input": {"channels": 3, "spatial": 8}, "layers": [
      {"id": "a", "type": "conv", "n": 64, "m": 3, "k": 3, "s": 1, "p": 1, "g": 1, "ip": 8},
      {"id": "b", "type": "conv", "n": 16, "m": 32, "k": 3, "s": 1, "p": 1, "g": 1, "ip": 8}],
      "edges": [{"from": "a", "to": "b", "mode": "passthrough"}]})";
  try {
    parse_network(doc);
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(e.rule() == "channel consistency");
    CHECK(e.layer_id() == "b");
  }
}

TEST_CASE("bundled networks have the expected conv layer counts") {
  CHECK(conv_layers(bundled("resnet18")).size() == 20);
  CHECK(conv_layers(bundled("mobilenetv2")).size() == 52);
  CHECK(conv_layers(bundled("squeezenet")).size() == 26);
  CHECK(conv_layers(bundled("mnasnet")).size() == 52);
}

TEST_CASE("bundled networks survive a JSON round trip") {
  for (const auto& name : bundled_names()) {
    const NetworkSpec net = bundled(name);
    CHECK(parse_network(to_json(net)) == net);
  }
}

TEST_CASE("malformed documents raise SchemaError") {
  CHECK_THROWS_AS(parse_network("{"), SchemaError);
  CHECK_THROWS_AS(parse_network("[]"), SchemaError);
  CHECK_THROWS_AS(parse_network(R"({"name": "x", "layers": [{"id": "a", "type": "conv", "n": 1}]})"),
                  SchemaError);
  CHECK_THROWS_AS(
      parse_network(R"({"name": "x", "layers": [{"id": "a", "type": "conv", "n": 1.5, "m": 1, "k": 1, "s": 1,
                        "p": 0, "g": 1, "ip": 4}]})"),
      SchemaError);
  CHECK_THROWS_AS(parse_network(R"({"name": "x", "layers": [{"id": "a", "type": "pool"}]})"), SchemaError);
  CHECK_THROWS_AS(
      parse_network(R"({"name": "x", "layers": [{"id": "a", "type": "shape", "out_channels": 1, "out_spatial": 1},
                        {"id": "b", "type": "shape", "out_channels": 1, "out_spatial": 1}],
                        "edges": [{"from": "a", "to": "b", "mode": "multiply"}]})"),
      SchemaError);
}

TEST_CASE("edge mode defaults to passthrough") {
  const NetworkSpec net = parse_network(
      R"({"name": "x", "input": {"channels": 2, "spatial": 1},
          "layers": [{"id": "a", "type": "shape", "out_channels": 2, "out_spatial": 1},
          {"id": "b", "type": "shape", "out_channels": 2, "out_spatial": 1}], "edges": [{"from": "a", "to": "b"}]})");
  REQUIRE(net.edges.size() == 1);
  CHECK(net.edges[0].mode == MergeMode::Passthrough);
}

TEST_CASE("validation rules") {
  NetworkSpec net;
  net.layers = {conv("a", 6, 4, 3, 4)};
  CHECK(rule_of(net) == "divisibility@a");
  net.layers = {conv("a", 0, 4)};
  CHECK(rule_of(net) == "positivity@a");
  net.layers = {ConvLayerSpec{"a", 1, 1, 5, 1, 0, 1, 4}};
  CHECK(rule_of(net) == "valid window@a");
  net.layers = {conv("a", 4, 4), conv("a", 4, 4)};
  CHECK(rule_of(net) == "unique id@a");
  net.layers = {conv("a", 4, 4)};
  net.edges = {{"a", "zz", MergeMode::Passthrough}};
  CHECK(rule_of(net) == "unknown endpoint@zz");

  net.layers = {conv("a", 4, 4), conv("b", 4, 4), conv("c", 4, 4)};
  net.edges = {{"a", "c", MergeMode::Passthrough}, {"b", "c", MergeMode::Passthrough}};
  CHECK(rule_of(net) == "merge mode@c");
  net.edges = {{"a", "c", MergeMode::Add}, {"b", "c", MergeMode::Concat}};
  CHECK(rule_of(net) == "merge mode@c");
  net.edges = {{"a", "c", MergeMode::Add}, {"b", "c", MergeMode::Add}};
  CHECK(rule_of(net) == "ok");

  net.layers = {conv("a", 4, 4), conv("b", 2, 4), conv("c", 6, 6)};
  net.edges = {{"a", "c", MergeMode::Concat}, {"b", "c", MergeMode::Concat}};
  CHECK(rule_of(net) == "ok");
  net.edges = {{"a", "c", MergeMode::Add}, {"b", "c", MergeMode::Add}};
  CHECK(rule_of(net) == "channel consistency@c");

  net.layers = {conv("a", 4, 4), conv("b", 4, 4)};
  net.edges = {{"a", "b", MergeMode::Passthrough}, {"b", "a", MergeMode::Passthrough}};
  CHECK(rule_of(net).rfind("acyclic@", 0) == 0);
}

TEST_CASE("ofm_size examples") {
  CHECK(ofm_size(ConvLayerSpec{"x", 1, 1, 1, 1, 0, 1, 32}) == 32);
  CHECK(ofm_size(ConvLayerSpec{"x", 1, 1, 7, 2, 3, 1, 224}) == 112);
  CHECK(ofm_size(ConvLayerSpec{"x", 1, 1, 2, 1, 0, 1, 4}) == 3);
}

TEST_CASE("ofm_size agrees with sliding-window enumeration") {
  int checked = 0;
  for (std::int64_t ip = 1; ip <= 16; ++ip)
    for (std::int64_t k = 1; k <= 5; ++k)
      for (std::int64_t s = 1; s <= 3; ++s)
        for (std::int64_t p = 0; p <= 2; ++p) {
          if (k > ip + 2 * p) continue;
          const auto starts = window_starts(ip, k, s, p);
          CHECK(ofm_size(ConvLayerSpec{"x", 1, 1, k, s, p, 1, ip}) == static_cast<std::int64_t>(starts.size()));
          ++checked;
        }
  CHECK(checked > 600);
}

TEST_CASE("topological order respects every edge") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const NetworkSpec net = random_network(rng);
    const auto order = topological_order(net);
    REQUIRE(order.size() == net.layers.size());
    std::map<std::string, std::size_t> position;
    for (std::size_t i = 0; i < order.size(); ++i) position[layer_id(net.layers[order[i]])] = i;
    for (const auto& e : net.edges) CHECK(position[e.from] < position[e.to]);
  }
}

TEST_CASE("random network generator produces valid networks") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) CHECK_NOTHROW(validate(random_network(rng)));
}

// ---------------------------------------------------------------------------
// Pruning

TEST_CASE("surviving filter rule rounds half up with a floor of one") {
  CHECK(surviving_filters(64, 50) == 32);
  CHECK(surviving_filters(3, 50) == 2);  // 1.5 rounds up
  CHECK(surviving_filters(5, 90) == 1);  // 0.5 rounds up
  CHECK(surviving_filters(4, 90) == 1);  // 0.4 would round to 0
  CHECK(surviving_filters(1, 99) == 1);
  CHECK(surviving_filters(10, 0) == 10);
}

TEST_CASE("level zero is the identity") {
  for (const auto& name : bundled_names()) {
    const NetworkSpec net = bundled(name);
    CHECK(prune_network(net, PruneConfig{}) == net);
    CHECK(prune_network(net, make_prune_config(net, "depth_weighted", 0, 3)) == net);
  }
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const NetworkSpec net = random_network(rng);
    CHECK(prune_network(net, make_prune_config(net, "uniform_random", 0, 9)) == net);
  }
}

TEST_CASE("single layer of 64 filters at 50% keeps 32") {
  NetworkSpec net;
  net.layers = {ConvLayerSpec{"a", 64, 3, 3, 1, 1, 1, 8}};
  const auto pruned = prune_network(net, at_level(50.0));
  CHECK(std::get<ConvLayerSpec>(pruned.layers[0]).n == 32);
}

TEST_CASE("pruning propagates along a chain") {
  NetworkSpec net;
  net.layers = {ConvLayerSpec{"a", 64, 3, 3, 1, 1, 1, 8}, ConvLayerSpec{"b", 128, 64, 3, 1, 1, 1, 8}};
  net.edges = {{"a", "b", MergeMode::Passthrough}};
  const auto pruned = prune_network(net, at_level(50.0));
  const auto& a = std::get<ConvLayerSpec>(pruned.layers[0]);
  const auto& b = std::get<ConvLayerSpec>(pruned.layers[1]);
  CHECK(a.n == 32);
  CHECK(b.m == 32);
  CHECK(b.n == 64);
}

TEST_CASE("add-merged producers share one filter count") {
  const NetworkSpec net = bundled("resnet18");
  const auto pruned = prune_network(net, make_prune_config(net, "depth_weighted", 50, 0));
  auto n_of = [&](const std::string& id) { return std::get<ConvLayerSpec>(*pruned.find(id)).n; };
  CHECK(n_of("layer2.0.conv2") == n_of("layer2.0.downsample"));
  CHECK(n_of("layer2.0.conv2") == n_of("layer2.1.conv2"));
  CHECK(n_of("layer4.0.conv2") == n_of("layer4.1.conv2"));
}

TEST_CASE("depthwise layers follow their input and keep g == m") {
  NetworkSpec net;
  net.layers = {ConvLayerSpec{"pw", 32, 3, 1, 1, 0, 1, 8}, ConvLayerSpec{"dw", 32, 32, 3, 1, 1, 32, 8},
                ConvLayerSpec{"dw2", 64, 32, 3, 1, 1, 32, 8}};
  net.edges = {{"pw", "dw", MergeMode::Passthrough}, {"dw", "dw2", MergeMode::Passthrough}};
  const auto pruned = prune_network(net, at_level(50.0));
  const auto& dw = std::get<ConvLayerSpec>(pruned.layers[1]);
  const auto& dw2 = std::get<ConvLayerSpec>(pruned.layers[2]);
  CHECK(dw.m == 16);
  CHECK(dw.g == 16);
  CHECK(dw.n == 16);
  CHECK(dw2.g == 16);
  CHECK(dw2.n == 32);  // channel multiplier 2 is kept
}

TEST_CASE("grouped layers keep g and stay divisible") {
  NetworkSpec net;
  net.layers = {ConvLayerSpec{"a", 24, 3, 3, 1, 1, 1, 8}, ConvLayerSpec{"b", 36, 24, 3, 1, 1, 4, 8}};
  net.edges = {{"a", "b", MergeMode::Passthrough}};
  for (double level : {10.0, 33.0, 50.0, 75.0, 95.0}) {
    const auto pruned = prune_network(net, at_level(level));
    const auto& a = std::get<ConvLayerSpec>(pruned.layers[0]);
    const auto& b = std::get<ConvLayerSpec>(pruned.layers[1]);
    CHECK(b.g == 4);
    CHECK(a.n % 4 == 0);
    CHECK(b.m == a.n);
    CHECK(b.n % 4 == 0);
    CHECK(b.n >= 4);
  }
}

TEST_CASE("uniform random pruning counts do not depend on the seed") {
  const NetworkSpec net = bundled("mobilenetv2");
  const auto a = prune_network(net, make_prune_config(net, "uniform_random", 40, 1));
  const auto b = prune_network(net, make_prune_config(net, "uniform_random", 40, 987654321));
  CHECK(a == b);
}

TEST_CASE("depth-weighted pruning removes more filters from deeper layers") {
  NetworkSpec net;
  for (int i = 0; i < 5; ++i) {
    net.layers.push_back(ConvLayerSpec{"c" + std::to_string(i), 100, i == 0 ? 3 : 100, 3, 1, 1, 1, 8});
    if (i > 0) net.edges.push_back({"c" + std::to_string(i - 1), "c" + std::to_string(i), MergeMode::Passthrough});
  }
  const auto w = depth_increasing_weights(net);
  CHECK(w.at("c0") == doctest::Approx(0.5));
  CHECK(w.at("c4") == doctest::Approx(1.5));
  const auto pruned = prune_network(net, make_prune_config(net, "depth_weighted", 40, 0));
  std::int64_t previous = 101;
  for (const auto& l : pruned.layers) {
    const auto n = std::get<ConvLayerSpec>(l).n;
    CHECK(n < previous);
    previous = n;
  }
  CHECK(std::get<ConvLayerSpec>(pruned.layers[0]).n == 80);  // 40 * 0.5
  CHECK(std::get<ConvLayerSpec>(pruned.layers[4]).n == 40);  // 40 * 1.5
}

TEST_CASE("invalid pruning configurations raise PruneError") {
  const NetworkSpec net = bundled("resnet18");
  CHECK_THROWS_AS(prune_network(net, at_level(100.0)), PruneError);
  CHECK_THROWS_AS(prune_network(net, at_level(-1.0)), PruneError);
  PruneConfig unknown{30.0, PruneStrategy::LayerWeighted, {{"no.such.layer", 1.0}}, 0};
  CHECK_THROWS_AS(prune_network(net, unknown), PruneError);
  PruneConfig negative{30.0, PruneStrategy::LayerWeighted, {{"conv1", -1.0}}, 0};
  CHECK_THROWS_AS(prune_network(net, negative), PruneError);
  CHECK_THROWS_AS(prune_network_per_layer(net, {{"nope", 10.0}}), PruneError);
  CHECK_THROWS_AS(make_prune_config(net, "l1_magic", 10, 0), PruneError);
}

TEST_CASE("pruning random networks always yields valid, smaller networks") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 400; ++trial) {
    const NetworkSpec net = random_network(rng);
    const double level = static_cast<double>(uniform(rng, 0, 99));
    const auto strategy = chance(rng, 0.5) ? "uniform_random" : "depth_weighted";
    const auto seed = static_cast<std::uint64_t>(rng());
    NetworkSpec pruned;
    REQUIRE_NOTHROW(pruned = prune_network(net, make_prune_config(net, strategy, level, seed)));
    CHECK_NOTHROW(validate(pruned));
    CHECK(pruned == prune_network(net, make_prune_config(net, strategy, level, seed)));
    REQUIRE(pruned.layers.size() == net.layers.size());
    CHECK(pruned.edges == net.edges);
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
      CHECK(layer_id(pruned.layers[i]) == layer_id(net.layers[i]));
      CHECK(output_channels(pruned.layers[i]) >= 1);
      if (const auto* c = std::get_if<ConvLayerSpec>(&net.layers[i])) {
        const auto& p = std::get<ConvLayerSpec>(pruned.layers[i]);
        CHECK(p.k == c->k);
        CHECK(p.s == c->s);
        CHECK(p.p == c->p);
        CHECK(p.ip == c->ip);
        const bool depthwise = c->g > 1 && c->g == c->m;
        if (!depthwise) {
          CHECK(p.g == c->g);
          CHECK(p.n <= c->n);
        }
      }
    }
  }
}

TEST_CASE("pruning bundled networks at every test level stays valid") {
  for (const auto& name : bundled_names()) {
    const NetworkSpec net = bundled(name);
    for (int level = 0; level < 100; level += 5) {
      for (const char* strategy : {"uniform_random", "depth_weighted"}) {
        CHECK_NOTHROW(validate(prune_network(net, make_prune_config(net, strategy, level, 0))));
      }
    }
  }
}
