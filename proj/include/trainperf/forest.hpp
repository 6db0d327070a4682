#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace trainperf {

/// Row-major feature matrix.
using Matrix = std::vector<std::vector<double>>;

struct FeaturesPerSplit {
  enum class Kind { All, Sqrt, Fraction };
  Kind kind = Kind::All;
  double fraction = 1.0;  // Fraction only, in (0, 1]

  std::size_t count(std::size_t width) const;
  friend bool operator==(const FeaturesPerSplit&, const FeaturesPerSplit&) = default;
};

struct ForestConfig {
  int n_trees = 100;
  std::optional<int> max_depth;  // unset: grow until pure or min_samples_leaf binds
  int min_samples_leaf = 1;
  FeaturesPerSplit features_per_split;
  bool bootstrap = true;
  std::uint64_t seed = 0;
  bool log_target = false;  // fit log(y), predict exp(mean)

  void validate() const;
  friend bool operator==(const ForestConfig&, const ForestConfig&) = default;
};

/// Flat tree node. feature < 0 marks a leaf.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  std::int32_t left = -1;
  std::int32_t right = -1;
  double value = 0.0;       // leaf: mean training target (fit space)
  std::int64_t count = 0;   // training samples that reached the node
  double gain = 0.0;        // internal: decrease in summed squared error

  bool is_leaf() const noexcept { return feature < 0; }
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

struct Tree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  /// Routing: left iff value <= threshold.
  double predict(std::span<const double> row) const;
  std::size_t depth() const;
  friend bool operator==(const Tree&, const Tree&) = default;
};

struct TargetRange {
  double min = 0.0;
  double max = 0.0;
  friend bool operator==(const TargetRange&, const TargetRange&) = default;
};

/// Bagged CART regression trees with variance-reduction splits.
class Forest {
 public:
  Forest() = default;

  double predict(std::span<const double> row) const;
  std::map<std::string, double> feature_importance() const;

  const std::vector<Tree>& trees() const noexcept { return trees_; }
  const ForestConfig& config() const noexcept { return config_; }
  const std::vector<std::string>& feature_names() const noexcept { return feature_names_; }
  const std::string& target_name() const noexcept { return target_name_; }
  const TargetRange& target_range() const noexcept { return target_range_; }
  /// Version tag of the feature extractor the matrix came from (empty if none).
  const std::string& feature_schema() const noexcept { return feature_schema_; }
  void set_feature_schema(std::string tag) { feature_schema_ = std::move(tag); }

  friend Forest fit(const Matrix& x, std::span<const double> y, const ForestConfig& config,
                    std::vector<std::string> feature_names, std::string target_name, unsigned threads);
  friend std::string serialize(const Forest& forest);
  friend Forest deserialize(std::string_view text);
  friend bool operator==(const Forest&, const Forest&) = default;

 private:
  std::vector<Tree> trees_;
  ForestConfig config_;
  std::vector<std::string> feature_names_;
  std::string target_name_;
  TargetRange target_range_;
  std::string feature_schema_;
};

/// Trains one tree per config.n_trees; tree i draws its randomness from
/// seed + i only, so results do not depend on `threads` (0 = hardware concurrency).
/// Throws FitError on empty data, ragged rows, non-finite values, or fewer rows
/// than min_samples_leaf.
Forest fit(const Matrix& x, std::span<const double> y, const ForestConfig& config,
           std::vector<std::string> feature_names = {}, std::string target_name = "target",
           unsigned threads = 0);

inline constexpr int kForestFormatVersion = 1;

/// Versioned JSON document with a checksum over its canonical serialization.
std::string serialize(const Forest& forest);
/// Throws VersionError for unknown formats and ChecksumError for corrupt or truncated input.
Forest deserialize(std::string_view text);

void save(const Forest& forest, const std::filesystem::path& path);
Forest load(const std::filesystem::path& path);

std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace trainperf
