#include "trainperf/network.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <queue>
#include <set>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "trainperf/errors.hpp"

namespace trainperf {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

const std::string& layer_id(const Layer& layer) {
  return std::visit([](const auto& l) -> const std::string& { return l.layer_id; }, layer);
}

std::int64_t output_channels(const Layer& layer) {
  if (const auto* conv = std::get_if<ConvLayerSpec>(&layer)) return conv->n;
  return std::get<ShapeLayerSpec>(layer).out_channels;
}

namespace {

// Channels a layer consumes. Shape entries are channel-preserving.
std::int64_t input_channels(const Layer& layer) {
  if (const auto* conv = std::get_if<ConvLayerSpec>(&layer)) return conv->m;
  return std::get<ShapeLayerSpec>(layer).out_channels;
}

std::unordered_map<std::string, std::size_t> index_layers(const NetworkSpec& net) {
  std::unordered_map<std::string, std::size_t> index;
  index.reserve(net.layers.size());
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    if (!index.emplace(layer_id(net.layers[i]), i).second) {
      throw ValidationError("unique id", layer_id(net.layers[i]), "duplicate layer id");
    }
  }
  return index;
}

struct Incoming {
  std::size_t producer;
  MergeMode mode;
};

std::vector<std::vector<Incoming>> incoming_edges(
    const NetworkSpec& net, const std::unordered_map<std::string, std::size_t>& index) {
  std::vector<std::vector<Incoming>> in(net.layers.size());
  for (const auto& e : net.edges) {
    auto from = index.find(e.from);
    if (from == index.end()) throw ValidationError("unknown endpoint", e.from, "edge source does not exist");
    auto to = index.find(e.to);
    if (to == index.end()) throw ValidationError("unknown endpoint", e.to, "edge target does not exist");
    in[to->second].push_back({from->second, e.mode});
  }
  return in;
}

void check_layer(const ConvLayerSpec& l) {
  if (l.n < 1 || l.m < 1 || l.k < 1 || l.s < 1 || l.ip < 1 || l.g < 1 || l.p < 0) {
    throw ValidationError("positivity", l.layer_id, "n, m, k, s, ip, g must be >= 1 and p >= 0");
  }
  if (l.m % l.g != 0 || l.n % l.g != 0) {
    throw ValidationError("divisibility", l.layer_id, "m and n must be divisible by g");
  }
  if (l.k > l.ip + 2 * l.p) {
    throw ValidationError("valid window", l.layer_id, "kernel larger than padded input");
  }
}

void check_layer(const ShapeLayerSpec& l) {
  if (l.out_channels < 1 || l.out_spatial < 1) {
    throw ValidationError("positivity", l.layer_id, "out_channels and out_spatial must be >= 1");
  }
}

std::vector<std::size_t> kahn_order(const NetworkSpec& net,
                                    const std::vector<std::vector<Incoming>>& in) {
  const std::size_t count = net.layers.size();
  std::vector<std::vector<std::size_t>> out(count);
  std::vector<std::size_t> pending(count, 0);
  for (std::size_t v = 0; v < count; ++v) {
    pending[v] = in[v].size();
    for (const auto& e : in[v]) out[e.producer].push_back(v);
  }
  std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
  for (std::size_t v = 0; v < count; ++v)
    if (pending[v] == 0) ready.push(v);
  std::vector<std::size_t> order;
  order.reserve(count);
  while (!ready.empty()) {
    std::size_t v = ready.top();
    ready.pop();
    order.push_back(v);
    for (std::size_t w : out[v])
      if (--pending[w] == 0) ready.push(w);
  }
  if (order.size() != count) {
    for (std::size_t v = 0; v < count; ++v) {
      if (pending[v] != 0) throw ValidationError("acyclic", layer_id(net.layers[v]), "dependency cycle");
    }
  }
  return order;
}

}  // namespace

std::string_view to_string(MergeMode mode) {
  switch (mode) {
    case MergeMode::Passthrough: return "passthrough";
    case MergeMode::Concat: return "concat";
    case MergeMode::Add: return "add";
  }
  return "passthrough";
}

MergeMode merge_mode_from_string(std::string_view text) {
  if (text == "passthrough") return MergeMode::Passthrough;
  if (text == "concat") return MergeMode::Concat;
  if (text == "add") return MergeMode::Add;
  throw SchemaError("unknown edge mode '" + std::string(text) + "'");
}

const Layer* NetworkSpec::find(std::string_view id) const {
  for (const auto& l : layers)
    if (layer_id(l) == id) return &l;
  return nullptr;
}

std::int64_t ofm_size(const ConvLayerSpec& layer) {
  return 1 + (layer.ip + 2 * layer.p - layer.k) / layer.s;
}

void validate(const NetworkSpec& net) {
  if (net.input.channels < 1 || net.input.spatial < 1) {
    throw ValidationError("positivity", "input", "input channels and spatial must be >= 1");
  }
  const auto index = index_layers(net);
  for (const auto& layer : net.layers) std::visit([](const auto& l) { check_layer(l); }, layer);

  const auto in = incoming_edges(net, index);
  for (std::size_t v = 0; v < net.layers.size(); ++v) {
    if (in[v].empty()) continue;
    const std::string& id = layer_id(net.layers[v]);
    const MergeMode mode = in[v].front().mode;
    for (const auto& e : in[v]) {
      if (e.producer == v) throw ValidationError("acyclic", id, "self loop");
      if (e.mode != mode) throw ValidationError("merge mode", id, "incoming edges mix merge modes");
    }
    if (mode == MergeMode::Passthrough && in[v].size() != 1) {
      throw ValidationError("merge mode", id, "passthrough requires exactly one producer");
    }
    const std::int64_t want = input_channels(net.layers[v]);
    if (mode == MergeMode::Concat) {
      std::int64_t sum = 0;
      for (const auto& e : in[v]) sum += output_channels(net.layers[e.producer]);
      if (sum != want) {
        throw ValidationError("channel consistency", id,
                              "concat of producers gives " + std::to_string(sum) + " channels, layer expects " +
                                  std::to_string(want));
      }
    } else {
      for (const auto& e : in[v]) {
        const std::int64_t got = output_channels(net.layers[e.producer]);
        if (got != want) {
          throw ValidationError("channel consistency", id,
                                "producer '" + layer_id(net.layers[e.producer]) + "' emits " +
                                    std::to_string(got) + " channels, layer expects " + std::to_string(want));
        }
      }
    }
  }
  kahn_order(net, in);
}

std::vector<std::size_t> topological_order(const NetworkSpec& net) {
  const auto index = index_layers(net);
  return kahn_order(net, incoming_edges(net, index));
}

// ---------------------------------------------------------------------------
// JSON

namespace {

std::int64_t require_int(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw SchemaError(where + ": missing field '" + key + "'");
  if (!it->is_number_integer()) throw SchemaError(where + ": field '" + key + "' must be an integer");
  return it->get<std::int64_t>();
}

std::string require_string(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw SchemaError(where + ": missing field '" + key + "'");
  if (!it->is_string()) throw SchemaError(where + ": field '" + key + "' must be a string");
  return it->get<std::string>();
}

}  // namespace

NetworkSpec parse_network(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw SchemaError(std::string("malformed network document: ") + e.what());
  }
  if (!doc.is_object()) throw SchemaError("network document must be an object");

  NetworkSpec net;
  net.name = require_string(doc, "name", "network");
  if (auto it = doc.find("input"); it != doc.end()) {
    if (!it->is_object()) throw SchemaError("network: 'input' must be an object");
    net.input.channels = require_int(*it, "channels", "input");
    net.input.spatial = require_int(*it, "spatial", "input");
  } else {
    throw SchemaError("network: missing field 'input'");
  }

  auto layers = doc.find("layers");
  if (layers == doc.end() || !layers->is_array()) throw SchemaError("network: 'layers' must be an array");
  for (std::size_t i = 0; i < layers->size(); ++i) {
    const json& entry = (*layers)[i];
    const std::string where = "layers[" + std::to_string(i) + "]";
    if (!entry.is_object()) throw SchemaError(where + ": must be an object");
    const std::string type = require_string(entry, "type", where);
    const std::string id = require_string(entry, "id", where);
    if (type == "conv") {
      ConvLayerSpec c;
      c.layer_id = id;
      c.n = require_int(entry, "n", where);
      c.m = require_int(entry, "m", where);
      c.k = require_int(entry, "k", where);
      c.s = require_int(entry, "s", where);
      c.p = require_int(entry, "p", where);
      c.g = require_int(entry, "g", where);
      c.ip = require_int(entry, "ip", where);
      net.layers.emplace_back(std::move(c));
    } else if (type == "shape") {
      ShapeLayerSpec s;
      s.layer_id = id;
      s.out_channels = require_int(entry, "out_channels", where);
      s.out_spatial = require_int(entry, "out_spatial", where);
      net.layers.emplace_back(std::move(s));
    } else {
      throw SchemaError(where + ": unknown layer type '" + type + "'");
    }
  }

  if (auto edges = doc.find("edges"); edges != doc.end()) {
    if (!edges->is_array()) throw SchemaError("network: 'edges' must be an array");
    for (std::size_t i = 0; i < edges->size(); ++i) {
      const json& entry = (*edges)[i];
      const std::string where = "edges[" + std::to_string(i) + "]";
      if (!entry.is_object()) throw SchemaError(where + ": must be an object");
      Edge e;
      e.from = require_string(entry, "from", where);
      e.to = require_string(entry, "to", where);
      if (entry.contains("mode")) e.mode = merge_mode_from_string(require_string(entry, "mode", where));
      net.edges.push_back(std::move(e));
    }
  }

  validate(net);
  return net;
}

NetworkSpec load_network(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open network file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_network(buf.str());
}

std::string to_json(const NetworkSpec& net) {
  ordered_json doc;
  doc["name"] = net.name;
  doc["input"] = {{"channels", net.input.channels}, {"spatial", net.input.spatial}};
  doc["layers"] = ordered_json::array();
  for (const auto& layer : net.layers) {
    ordered_json entry;
    if (const auto* c = std::get_if<ConvLayerSpec>(&layer)) {
      entry["id"] = c->layer_id;
      entry["type"] = "conv";
      entry["n"] = c->n;
      entry["m"] = c->m;
      entry["k"] = c->k;
      entry["s"] = c->s;
      entry["p"] = c->p;
      entry["g"] = c->g;
      entry["ip"] = c->ip;
    } else {
      const auto& s = std::get<ShapeLayerSpec>(layer);
      entry["id"] = s.layer_id;
      entry["type"] = "shape";
      entry["out_channels"] = s.out_channels;
      entry["out_spatial"] = s.out_spatial;
    }
    doc["layers"].push_back(std::move(entry));
  }
  doc["edges"] = ordered_json::array();
  for (const auto& e : net.edges) {
    doc["edges"].push_back({{"from", e.from}, {"to", e.to}, {"mode", std::string(to_string(e.mode))}});
  }
  return doc.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Pruning

std::int64_t surviving_filters(std::int64_t n, double level) {
  const double clamped = std::clamp(level, 0.0, 100.0);
  const double kept = static_cast<double>(n) * (100.0 - clamped) / 100.0;
  const auto rounded = static_cast<std::int64_t>(std::floor(kept + 0.5));
  return std::max<std::int64_t>(1, rounded);
}

namespace {

bool is_depthwise(const ConvLayerSpec& c) { return c.g > 1 && c.g == c.m; }

enum class OutputKind { Free, Fixed, Tied, Derived };

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }
  std::size_t find(std::size_t v) {
    while (parent_[v] != v) {
      parent_[v] = parent_[parent_[v]];
      v = parent_[v];
    }
    return v;
  }
  // The smaller index becomes the root so representatives follow layer order.
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (b < a) std::swap(a, b);
    parent_[b] = a;
  }

 private:
  std::vector<std::size_t> parent_;
};

class ChannelSolver {
 public:
  ChannelSolver(const NetworkSpec& net, const std::map<std::string, double>& levels)
      : net_(net), sets_(net.layers.size()) {
    const auto index = index_layers(net);
    in_ = incoming_edges(net, index);
    classify();
    for (std::size_t v = 0; v < net.layers.size(); ++v) {
      if (const auto* c = std::get_if<ConvLayerSpec>(&net.layers[v])) {
        auto it = levels.find(c->layer_id);
        level_[v] = it == levels.end() ? 0.0 : it->second;
      }
    }
    freeze_conflicting_sets();
    collect_constraints();
  }

  NetworkSpec solve() {
    NetworkSpec out = net_;
    for (std::size_t v = 0; v < out.layers.size(); ++v) {
      if (auto* c = std::get_if<ConvLayerSpec>(&out.layers[v])) {
        const ConvLayerSpec& orig = std::get<ConvLayerSpec>(net_.layers[v]);
        const std::int64_t m = in_[v].empty() ? orig.m : input_value(v);
        if (is_depthwise(orig)) {
          c->m = m;
          c->g = m;
          c->n = (orig.n / orig.m) * m;
        } else {
          c->m = m;
          c->n = set_value(sets_.find(v));
        }
      } else {
        std::get<ShapeLayerSpec>(out.layers[v]).out_channels = set_value(sets_.find(v));
      }
    }
    try {
      validate(out);
    } catch (const ValidationError& e) {
      throw PruneError(std::string("pruned network is inconsistent: ") + e.what());
    }
    return out;
  }

 private:
  void classify() {
    const std::size_t count = net_.layers.size();
    kind_.assign(count, OutputKind::Free);
    level_.assign(count, 0.0);
    for (std::size_t v = 0; v < count; ++v) {
      const bool sourced = !in_[v].empty();
      const MergeMode mode = sourced ? in_[v].front().mode : MergeMode::Passthrough;
      if (const auto* c = std::get_if<ConvLayerSpec>(&net_.layers[v])) {
        if (!is_depthwise(*c)) {
          kind_[v] = OutputKind::Free;
        } else if (!sourced) {
          kind_[v] = OutputKind::Fixed;
        } else if (c->n == c->m && mode != MergeMode::Concat) {
          kind_[v] = OutputKind::Tied;
        } else {
          kind_[v] = OutputKind::Derived;
        }
      } else {
        if (!sourced) {
          kind_[v] = OutputKind::Fixed;
        } else if (mode == MergeMode::Concat) {
          kind_[v] = OutputKind::Derived;
        } else {
          kind_[v] = OutputKind::Tied;
        }
      }
      if (kind_[v] == OutputKind::Tied) {
        for (const auto& e : in_[v]) sets_.unite(v, e.producer);
      } else if (sourced && mode == MergeMode::Add) {
        for (const auto& e : in_[v]) sets_.unite(in_[v].front().producer, e.producer);
      }
    }
    // Per-set summary, resolved after all unions.
    multiple_.assign(count, 1);
    set_kind_.assign(count, OutputKind::Free);
    representative_.assign(count, count);
    for (std::size_t v = 0; v < count; ++v) {
      const std::size_t root = sets_.find(v);
      if (kind_[v] == OutputKind::Fixed) {
        set_kind_[root] = OutputKind::Fixed;
      } else if (kind_[v] == OutputKind::Derived && set_kind_[root] != OutputKind::Fixed) {
        set_kind_[root] = OutputKind::Derived;
      }
    }
    for (std::size_t v = 0; v < count; ++v) {
      const std::size_t root = sets_.find(v);
      if (representative_[root] != count) continue;
      if ((set_kind_[root] == OutputKind::Free && kind_[v] == OutputKind::Free) ||
          (set_kind_[root] == OutputKind::Derived && kind_[v] == OutputKind::Derived)) {
        representative_[root] = v;
      }
    }
  }

  void collect_constraints() {
    for (std::size_t v = 0; v < net_.layers.size(); ++v) {
      const auto* c = std::get_if<ConvLayerSpec>(&net_.layers[v]);
      if (c == nullptr || c->g == 1 || is_depthwise(*c)) continue;
      require_multiple(v, c->g);
      require_input_multiple(v, c->g);
    }
  }

  void require_multiple(std::size_t v, std::int64_t d) {
    if (d <= 1) return;
    const std::size_t root = sets_.find(v);
    switch (set_kind_[root]) {
      case OutputKind::Fixed:
        return;
      case OutputKind::Free:
        multiple_[root] = std::lcm(multiple_[root], d);
        return;
      default:
        for (std::size_t u = 0; u < net_.layers.size(); ++u) {
          if (kind_[u] != OutputKind::Derived || sets_.find(u) != root) continue;
          std::int64_t need = d;
          if (const auto* c = std::get_if<ConvLayerSpec>(&net_.layers[u])) need = d / std::gcd(d, c->n / c->m);
          require_input_multiple(u, need);
        }
    }
  }

  // Makes the channel count entering v a multiple of d.
  void require_input_multiple(std::size_t v, std::int64_t d) {
    if (d <= 1 || in_[v].empty()) return;
    if (in_[v].front().mode != MergeMode::Concat) {
      for (const auto& e : in_[v]) require_multiple(e.producer, d);
      return;
    }
    // A concatenation only constrains the sum. Rounding every part is sound
    // when every original part is already a multiple; otherwise the parts keep
    // their original counts.
    const bool splittable = std::all_of(in_[v].begin(), in_[v].end(), [&](const Incoming& e) {
      return output_channels(net_.layers[e.producer]) % d == 0;
    });
    for (const auto& e : in_[v]) {
      if (splittable) {
        require_multiple(e.producer, d);
      } else {
        freeze(sets_.find(e.producer));
      }
    }
  }

  void freeze(std::size_t root) {
    switch (set_kind_[root]) {
      case OutputKind::Fixed:
        return;
      case OutputKind::Free:
        set_kind_[root] = OutputKind::Fixed;
        return;
      default:
        freeze_derived_inputs(root);
    }
  }

  void freeze_derived_inputs(std::size_t root) {
    for (std::size_t v = 0; v < net_.layers.size(); ++v) {
      if (kind_[v] != OutputKind::Derived || sets_.find(v) != root) continue;
      for (const auto& e : in_[v]) freeze(sets_.find(e.producer));
    }
  }

  // Add-merged derived layers can only agree if their inputs keep their
  // original counts, so those inputs are exempt from pruning.
  void freeze_conflicting_sets() {
    const std::size_t count = net_.layers.size();
    std::vector<int> derived(count, 0);
    std::vector<bool> fixed(count, false);
    for (std::size_t v = 0; v < count; ++v) {
      const std::size_t root = sets_.find(v);
      if (kind_[v] == OutputKind::Derived) ++derived[root];
      if (kind_[v] == OutputKind::Fixed) fixed[root] = true;
    }
    for (std::size_t root = 0; root < count; ++root) {
      if (derived[root] >= 2 || (derived[root] == 1 && fixed[root])) freeze_derived_inputs(root);
    }
  }

  std::int64_t input_value(std::size_t v) {
    if (in_[v].front().mode == MergeMode::Concat) {
      std::int64_t sum = 0;
      for (const auto& e : in_[v]) sum += set_value(sets_.find(e.producer));
      return sum;
    }
    return set_value(sets_.find(in_[v].front().producer));
  }

  std::int64_t derived_value(std::size_t v) {
    const std::int64_t in = input_value(v);
    if (const auto* c = std::get_if<ConvLayerSpec>(&net_.layers[v])) return (c->n / c->m) * in;
    return in;
  }

  std::int64_t set_value(std::size_t root) {
    if (auto it = memo_.find(root); it != memo_.end()) return it->second;
    std::int64_t value = 0;
    const std::size_t rep = representative_[root];
    switch (set_kind_[root]) {
      case OutputKind::Fixed:
        value = output_channels(net_.layers[root]);
        break;
      case OutputKind::Free: {
        const std::int64_t original = output_channels(net_.layers[rep]);
        const std::int64_t d = multiple_[root];
        const std::int64_t kept = surviving_filters(original, level_[rep]);
        value = std::max<std::int64_t>(d, ((2 * kept + d) / (2 * d)) * d);
        break;
      }
      default: {
        value = derived_value(rep);
        for (std::size_t v = rep + 1; v < net_.layers.size(); ++v) {
          if (kind_[v] == OutputKind::Derived && sets_.find(v) == root && derived_value(v) != value) {
            throw PruneError("layers '" + layer_id(net_.layers[rep]) + "' and '" + layer_id(net_.layers[v]) +
                             "' are add-merged but derive different channel counts");
          }
        }
      }
    }
    memo_.emplace(root, value);
    return value;
  }

  const NetworkSpec& net_;
  DisjointSets sets_;
  std::vector<std::vector<Incoming>> in_;
  std::vector<OutputKind> kind_;
  std::vector<OutputKind> set_kind_;
  std::vector<std::size_t> representative_;
  std::vector<std::int64_t> multiple_;
  std::vector<double> level_;
  std::unordered_map<std::size_t, std::int64_t> memo_;
};

}  // namespace

NetworkSpec prune_network_per_layer(const NetworkSpec& net, const std::map<std::string, double>& levels) {
  for (const auto& [id, level] : levels) {
    const Layer* l = net.find(id);
    if (l == nullptr || !std::holds_alternative<ConvLayerSpec>(*l)) {
      throw PruneError("pruning level references unknown conv layer '" + id + "'");
    }
    if (!std::isfinite(level) || level < 0.0 || level > 100.0) {
      throw PruneError("pruning level for '" + id + "' outside [0, 100]");
    }
  }
  return ChannelSolver(net, levels).solve();
}

NetworkSpec prune_network(const NetworkSpec& net, const PruneConfig& cfg) {
  if (!std::isfinite(cfg.level) || cfg.level < 0.0 || cfg.level >= 100.0) {
    throw PruneError("pruning level must lie in [0, 100)");
  }
  std::map<std::string, double> levels;
  if (cfg.strategy == PruneStrategy::UniformRandom) {
    for (const auto& l : net.layers)
      if (std::holds_alternative<ConvLayerSpec>(l)) levels[layer_id(l)] = cfg.level;
    return prune_network_per_layer(net, levels);
  }

  for (const auto& [id, w] : cfg.weights) {
    const Layer* l = net.find(id);
    if (l == nullptr || !std::holds_alternative<ConvLayerSpec>(*l)) {
      throw PruneError("layer weight references unknown conv layer '" + id + "'");
    }
    if (!std::isfinite(w) || w < 0.0) throw PruneError("layer weight for '" + id + "' must be finite and >= 0");
  }
  double total = 0.0;
  std::size_t convs = 0;
  for (const auto& l : net.layers) {
    if (!std::holds_alternative<ConvLayerSpec>(l)) continue;
    auto it = cfg.weights.find(layer_id(l));
    total += it == cfg.weights.end() ? 1.0 : it->second;
    ++convs;
  }
  const double mean = convs == 0 ? 0.0 : total / static_cast<double>(convs);
  for (const auto& l : net.layers) {
    if (!std::holds_alternative<ConvLayerSpec>(l)) continue;
    auto it = cfg.weights.find(layer_id(l));
    const double w = it == cfg.weights.end() ? 1.0 : it->second;
    levels[layer_id(l)] = mean > 0.0 ? std::min(100.0, cfg.level * w / mean) : 0.0;
  }
  return prune_network_per_layer(net, levels);
}

std::map<std::string, double> depth_increasing_weights(const NetworkSpec& net) {
  std::vector<std::string> ids;
  for (const auto& l : net.layers)
    if (std::holds_alternative<ConvLayerSpec>(l)) ids.push_back(layer_id(l));
  std::map<std::string, double> weights;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    weights[ids[i]] = ids.size() == 1 ? 1.0 : 0.5 + static_cast<double>(i) / static_cast<double>(ids.size() - 1);
  }
  return weights;
}

bool is_known_strategy(std::string_view strategy) {
  return strategy == "uniform_random" || strategy == "depth_weighted";
}

PruneConfig make_prune_config(const NetworkSpec& net, std::string_view strategy, double level,
                              std::uint64_t seed) {
  PruneConfig cfg;
  cfg.level = level;
  cfg.seed = seed;
  if (strategy == "uniform_random") {
    cfg.strategy = PruneStrategy::UniformRandom;
  } else if (strategy == "depth_weighted") {
    cfg.strategy = PruneStrategy::LayerWeighted;
    cfg.weights = depth_increasing_weights(net);
  } else {
    throw PruneError("unknown pruning strategy '" + std::string(strategy) + "'");
  }
  return cfg;
}

}  // namespace trainperf
