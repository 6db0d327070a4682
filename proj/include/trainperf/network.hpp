#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace trainperf {

/// One convolution layer: n filters of shape (m/g) x k x k applied to a square
/// ip x ip input with stride s and padding p.
struct ConvLayerSpec {
  std::string layer_id;
  std::int64_t n = 1;   // filters
  std::int64_t m = 1;   // input channels
  std::int64_t k = 1;   // kernel size
  std::int64_t s = 1;   // stride
  std::int64_t p = 0;   // padding
  std::int64_t g = 1;   // groups
  std::int64_t ip = 1;  // input spatial size

  friend bool operator==(const ConvLayerSpec&, const ConvLayerSpec&) = default;
};

/// Opaque non-convolution entry (pooling, merge junction, ...). It contributes no
/// features; it only carries the channel count and spatial size downstream layers see.
struct ShapeLayerSpec {
  std::string layer_id;
  std::int64_t out_channels = 1;
  std::int64_t out_spatial = 1;

  friend bool operator==(const ShapeLayerSpec&, const ShapeLayerSpec&) = default;
};

using Layer = std::variant<ConvLayerSpec, ShapeLayerSpec>;

const std::string& layer_id(const Layer& layer);
/// Channels a layer emits: n for conv, out_channels for shape entries.
std::int64_t output_channels(const Layer& layer);

enum class MergeMode { Passthrough, Concat, Add };

std::string_view to_string(MergeMode mode);
MergeMode merge_mode_from_string(std::string_view text);

struct Edge {
  std::string from;
  std::string to;
  MergeMode mode = MergeMode::Passthrough;

  friend bool operator==(const Edge&, const Edge&) = default;
};

struct InputShape {
  std::int64_t channels = 3;
  std::int64_t spatial = 224;

  friend bool operator==(const InputShape&, const InputShape&) = default;
};

struct NetworkSpec {
  std::string name;
  InputShape input;
  std::vector<Layer> layers;
  std::vector<Edge> edges;

  const Layer* find(std::string_view id) const;

  friend bool operator==(const NetworkSpec&, const NetworkSpec&) = default;
};

/// op = 1 + floor((ip + 2p - k) / s).
std::int64_t ofm_size(const ConvLayerSpec& layer);

/// Checks every layer and graph invariant. Throws ValidationError naming the rule
/// ("divisibility", "positivity", "valid window", "unique id", "unknown endpoint",
/// "merge mode", "channel consistency", "acyclic") and the layer it failed on.
void validate(const NetworkSpec& net);

/// Parses and validates a network document. Throws SchemaError on malformed input.
NetworkSpec parse_network(std::string_view json_text);
NetworkSpec load_network(const std::filesystem::path& path);
std::string to_json(const NetworkSpec& net);

/// Topological order over layer indices (ties resolved by declaration order).
std::vector<std::size_t> topological_order(const NetworkSpec& net);

// ---------------------------------------------------------------------------
// Structured pruning

enum class PruneStrategy { UniformRandom, LayerWeighted };

struct PruneConfig {
  double level = 0.0;  // percent of filters removed, in [0, 100)
  PruneStrategy strategy = PruneStrategy::UniformRandom;
  /// LayerWeighted only: relative pruning weight per conv layer id; unlisted layers weigh 1.
  std::map<std::string, double> weights;
  std::uint64_t seed = 0;
};

/// Surviving filter count for n filters at a pruning percentage: round-half-up,
/// never below one filter.
std::int64_t surviving_filters(std::int64_t n, double level);

/// Reduces filter counts according to cfg and propagates the new channel counts
/// along every edge so the result satisfies all NetworkSpec invariants.
///
/// Layers whose outputs are merged by an add edge share one count. Depthwise
/// layers (g == m) follow their input and keep g == m. Other grouped layers keep g
/// and have their counts rounded to a multiple of it. Layers whose counts cannot
/// change without breaking a merge (concatenated parts that would not stay
/// divisible, inputs of add-merged depthwise layers) keep their original counts.
NetworkSpec prune_network(const NetworkSpec& net, const PruneConfig& cfg);

/// Lower-level entry point: per-conv pruning percentages (missing ids prune 0%).
NetworkSpec prune_network_per_layer(const NetworkSpec& net,
                                    const std::map<std::string, double>& levels);

/// Weights that grow linearly with depth (0.5 for the first conv, 1.5 for the
/// last). Stands in for L1-norm pruning, which removes more filters from deeper
/// layers but needs weight values this IR does not have.
std::map<std::string, double> depth_increasing_weights(const NetworkSpec& net);

/// Named strategies used by plans and datasets: "uniform_random" and "depth_weighted".
PruneConfig make_prune_config(const NetworkSpec& net, std::string_view strategy, double level,
                              std::uint64_t seed);
bool is_known_strategy(std::string_view strategy);

}  // namespace trainperf
