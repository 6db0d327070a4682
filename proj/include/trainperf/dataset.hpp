#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "trainperf/features.hpp"
#include "trainperf/forest.hpp"
#include "trainperf/network.hpp"

namespace trainperf {

/// Modelled attributes: training memory (MB), mini-batch training latency (ms),
/// and their inference counterparts.
enum class Attribute { Gamma, Phi, SmallGamma, SmallPhi };

inline constexpr std::array<Attribute, 4> kAllAttributes{Attribute::Gamma, Attribute::Phi, Attribute::SmallGamma,
                                                         Attribute::SmallPhi};

std::string_view to_string(Attribute a);
/// Measurement CSV column holding the attribute.
std::string_view column_name(Attribute a);
/// Accepts "gamma", "phi", "small_gamma", "small_phi", the column names, and Γ Φ γ φ.
Attribute attribute_from_string(std::string_view text);
/// Training attributes use every feature; inference ones only the forward subset.
FeatureMode feature_mode_for(Attribute a);

struct ProfileRecord {
  std::string network;
  int pruning_level = 0;
  std::string strategy = "uniform_random";
  std::uint64_t seed = 0;
  std::int64_t bs = 1;
  double gamma_mb = 0.0;
  double phi_ms = 0.0;
  std::optional<double> small_gamma_mb;
  std::optional<double> small_phi_ms;

  std::optional<double> target(Attribute a) const;
  friend bool operator==(const ProfileRecord&, const ProfileRecord&) = default;
};

/// Identity of a measurement: (network, level, strategy, seed, bs).
using RecordKey = std::tuple<std::string, int, std::string, std::uint64_t, std::int64_t>;
RecordKey key_of(const ProfileRecord& r);

inline constexpr std::string_view kDatasetHeader =
    "network,pruning_level,strategy,seed,bs,gamma_mb,phi_ms,small_gamma_mb,small_phi_ms";
inline constexpr std::string_view kPlanHeader = "network,pruning_level,strategy,seed,bs";

std::vector<ProfileRecord> read_dataset(std::istream& in);
std::vector<ProfileRecord> load_dataset(const std::filesystem::path& path);
void write_dataset(std::ostream& out, const std::vector<ProfileRecord>& records);
void save_dataset(const std::filesystem::path& path, const std::vector<ProfileRecord>& records);

/// Shortest decimal text that parses back to the same double.
std::string format_number(double v);

// ---------------------------------------------------------------------------
// Profiling plans

struct PlanEntry {
  std::string network;
  int pruning_level = 0;
  std::string strategy = "uniform_random";
  std::uint64_t seed = 0;
  std::int64_t bs = 1;

  RecordKey key() const { return {network, pruning_level, strategy, seed, bs}; }
  friend bool operator==(const PlanEntry&, const PlanEntry&) = default;
};

struct ProfilingPlan {
  std::vector<PlanEntry> entries;
  std::vector<int> train_levels;
  std::vector<int> test_levels;
  std::vector<std::int64_t> batch_sizes;

  /// Throws PlanError if the entry's key is already present.
  void append(PlanEntry entry);
};

/// The 25 profiled batch sizes between 2 and 256.
std::vector<std::int64_t> default_batch_sizes();
/// {0, 30, 50, 70, 90}
std::vector<int> train_levels();
/// {5x : x in [0, 18]} without the training levels.
std::vector<int> test_levels();

/// Cross product network x level x strategy x seed x bs. Repeated input values are
/// collapsed. Throws PlanError for levels outside [0, 100), unknown strategies,
/// batch sizes < 1, or an empty batch-size list.
ProfilingPlan generate_plan(const std::vector<NetworkSpec>& nets, const std::vector<int>& levels,
                            const std::vector<std::string>& strategies, const std::vector<std::uint64_t>& seeds,
                            const std::vector<std::int64_t>& batch_sizes);

void write_plan(std::ostream& out, const ProfilingPlan& plan);
ProfilingPlan read_plan(std::istream& in);

// ---------------------------------------------------------------------------
// Joining measurements with features

using NetworkCatalog = std::map<std::string, NetworkSpec>;

NetworkCatalog make_catalog(const std::vector<NetworkSpec>& nets);

/// Rebuilds the pruned variant a record was measured on.
NetworkSpec reconstruct_variant(const NetworkCatalog& networks, const std::string& network, int level,
                                const std::string& strategy, std::uint64_t seed);

struct DesignMatrix {
  std::vector<std::string> feature_names;
  std::string feature_schema;
  Matrix rows;
  std::vector<double> targets;
  std::vector<std::size_t> record_index;  // source record of each row
};

/// One row per record that carries the requested target, in record order.
/// Throws JoinError for unknown networks or strategies, or when no record carries
/// the target column at all.
DesignMatrix join(const std::vector<ProfileRecord>& records, const NetworkCatalog& networks, Attribute target,
                  FeatureLayout layout);

}  // namespace trainperf
