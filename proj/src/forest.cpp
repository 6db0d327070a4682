#include "trainperf/forest.hpp"

#include <algorithm>
#include <atomic>
#include <cassert>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "trainperf/errors.hpp"

namespace trainperf {

using ordered_json = nlohmann::ordered_json;

std::size_t FeaturesPerSplit::count(std::size_t width) const {
  switch (kind) {
    case Kind::All:
      return width;
    case Kind::Sqrt:
      return std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(width)))));
    case Kind::Fraction:
      return std::clamp<std::size_t>(static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(width))), 1,
                                     width);
  }
  return width;
}

void ForestConfig::validate() const {
  if (n_trees < 1) throw FitError("n_trees must be >= 1");
  if (max_depth && *max_depth < 1) throw FitError("max_depth must be >= 1");
  if (min_samples_leaf < 1) throw FitError("min_samples_leaf must be >= 1");
  if (features_per_split.kind == FeaturesPerSplit::Kind::Fraction &&
      !(features_per_split.fraction > 0.0 && features_per_split.fraction <= 1.0)) {
    throw FitError("features_per_split fraction must lie in (0, 1]");
  }
}

double Tree::predict(std::span<const double> row) const {
  std::size_t i = 0;
  while (!nodes[i].is_leaf()) {
    const TreeNode& n = nodes[i];
    i = static_cast<std::size_t>(row[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
  }
  return nodes[i].value;
}

std::size_t Tree::depth() const {
  std::vector<std::pair<std::size_t, std::size_t>> stack{{0, 0}};
  std::size_t deepest = 0;
  while (!stack.empty()) {
    auto [i, d] = stack.back();
    stack.pop_back();
    deepest = std::max(deepest, d);
    if (!nodes[i].is_leaf()) {
      stack.emplace_back(static_cast<std::size_t>(nodes[i].left), d + 1);
      stack.emplace_back(static_cast<std::size_t>(nodes[i].right), d + 1);
    }
  }
  return deepest;
}

namespace {

// Uniform integer in [0, bound) from one 64-bit draw (multiply-shift), so the
// sequence is identical across standard library implementations.
std::size_t draw_below(std::mt19937_64& rng, std::size_t bound) {
  return static_cast<std::size_t>((static_cast<unsigned __int128>(rng()) * bound) >> 64);
}

double mean_of(std::span<const double> y, std::span<const std::size_t> idx) {
  long double sum = 0.0L;
  for (std::size_t i : idx) sum += y[i];
  return static_cast<double>(sum / static_cast<long double>(idx.size()));
}

class TreeBuilder {
 public:
  TreeBuilder(const Matrix& x, std::span<const double> y, const ForestConfig& config,
              std::span<const std::size_t> name_rank, std::uint64_t seed)
      : x_(x), y_(y), config_(config), name_rank_(name_rank), rng_(seed), width_(x.front().size()) {}

  Tree build(std::vector<std::size_t> samples) {
    Tree tree;
    tree.nodes.emplace_back();
    grow(tree, 0, samples, 0);
    return tree;
  }

 private:
  struct Split {
    int feature = -1;
    double threshold = 0.0;
    std::size_t left_count = 0;
    double gain = 0.0;
  };

  void make_leaf(TreeNode& node, std::span<const std::size_t> samples) const {
    node.feature = -1;
    node.count = static_cast<std::int64_t>(samples.size());
    const double first = y_[samples.front()];
    const bool constant = std::all_of(samples.begin(), samples.end(), [&](std::size_t i) { return y_[i] == first; });
    if (constant) {
      node.value = first;
      return;
    }
    double lo = first, hi = first;
    for (std::size_t i : samples) {
      lo = std::min(lo, y_[i]);
      hi = std::max(hi, y_[i]);
    }
    node.value = std::clamp(mean_of(y_, samples), lo, hi);
  }

  std::vector<std::size_t> candidate_features() {
    std::vector<std::size_t> features(width_);
    std::iota(features.begin(), features.end(), 0);
    const std::size_t take = config_.features_per_split.count(width_);
    if (take < width_) {
      for (std::size_t i = 0; i < take; ++i) std::swap(features[i], features[i + draw_below(rng_, width_ - i)]);
      features.resize(take);
      std::sort(features.begin(), features.end());
    }
    return features;
  }

  Split best_split(std::vector<std::size_t>& samples) {
    const std::size_t n = samples.size();
    const auto min_leaf = static_cast<std::size_t>(config_.min_samples_leaf);
    long double total = 0.0L;
    for (std::size_t i : samples) total += y_[i];

    Split best;
    for (std::size_t f : candidate_features()) {
      // Sorting by (value, row) keeps the summation order independent of which
      // feature was scanned before.
      std::sort(samples.begin(), samples.end(), [&](std::size_t a, std::size_t b) {
        return x_[a][f] < x_[b][f] || (x_[a][f] == x_[b][f] && a < b);
      });
      long double left_sum = 0.0L;
      for (std::size_t i = 1; i < n; ++i) {
        left_sum += y_[samples[i - 1]];
        if (i < min_leaf || n - i < min_leaf) continue;
        const double lo = x_[samples[i - 1]][f];
        const double hi = x_[samples[i]][f];
        if (!(lo < hi)) continue;
        const long double nl = static_cast<long double>(i);
        const long double nr = static_cast<long double>(n - i);
        const long double diff = left_sum / nl - (total - left_sum) / nr;
        const auto gain = static_cast<double>(nl * nr / static_cast<long double>(n) * diff * diff);
        assert(gain >= 0.0);
        const bool tie_won = gain == best.gain && best.feature >= 0 &&
                             name_rank_[f] < name_rank_[static_cast<std::size_t>(best.feature)];
        if (gain > best.gain || tie_won) {
          double threshold = lo + (hi - lo) / 2.0;
          if (!(threshold < hi)) threshold = lo;
          best = {static_cast<int>(f), threshold, i, gain};
        }
      }
    }
    return best;
  }

  void grow(Tree& tree, std::size_t node_index, std::vector<std::size_t>& samples, int depth) {
    const double first = y_[samples.front()];
    const bool pure = std::all_of(samples.begin(), samples.end(), [&](std::size_t i) { return y_[i] == first; });
    const bool depth_capped = config_.max_depth && depth >= *config_.max_depth;
    const bool too_small = samples.size() < 2 * static_cast<std::size_t>(config_.min_samples_leaf);
    if (pure || depth_capped || too_small) {
      make_leaf(tree.nodes[node_index], samples);
      return;
    }
    const Split split = best_split(samples);
    if (split.feature < 0) {
      make_leaf(tree.nodes[node_index], samples);
      return;
    }
    std::vector<std::size_t> left, right;
    for (std::size_t i : samples) {
      (x_[i][static_cast<std::size_t>(split.feature)] <= split.threshold ? left : right).push_back(i);
    }
    assert(left.size() == split.left_count);

    const auto left_index = static_cast<std::int32_t>(tree.nodes.size());
    tree.nodes.emplace_back();
    const auto right_index = static_cast<std::int32_t>(tree.nodes.size());
    tree.nodes.emplace_back();
    TreeNode& node = tree.nodes[node_index];
    node.feature = split.feature;
    node.threshold = split.threshold;
    node.left = left_index;
    node.right = right_index;
    node.count = static_cast<std::int64_t>(samples.size());
    node.gain = split.gain;

    samples.clear();
    samples.shrink_to_fit();
    grow(tree, static_cast<std::size_t>(left_index), left, depth + 1);
    grow(tree, static_cast<std::size_t>(right_index), right, depth + 1);
  }

  const Matrix& x_;
  std::span<const double> y_;
  const ForestConfig& config_;
  std::span<const std::size_t> name_rank_;  // equal gains go to the smaller feature name
  std::mt19937_64 rng_;
  std::size_t width_;
};

}  // namespace

Forest fit(const Matrix& x, std::span<const double> y, const ForestConfig& config,
           std::vector<std::string> feature_names, std::string target_name, unsigned threads) {
  config.validate();
  if (x.empty() || y.empty()) throw FitError("cannot fit a forest on empty data");
  if (x.size() != y.size()) throw FitError("matrix rows and target length differ");
  const std::size_t width = x.front().size();
  if (width == 0) throw FitError("feature matrix has no columns");
  for (std::size_t r = 0; r < x.size(); ++r) {
    if (x[r].size() != width) throw FitError("ragged feature matrix at row " + std::to_string(r));
    for (double v : x[r])
      if (!std::isfinite(v)) throw FitError("non-finite feature value at row " + std::to_string(r));
    if (!std::isfinite(y[r])) throw FitError("non-finite target at row " + std::to_string(r));
    if (config.log_target && !(y[r] > 0.0)) throw FitError("log_target requires positive targets");
  }
  if (x.size() < static_cast<std::size_t>(config.min_samples_leaf)) {
    throw FitError("fewer samples than min_samples_leaf");
  }
  if (feature_names.empty()) {
    for (std::size_t i = 0; i < width; ++i) feature_names.push_back("f" + std::to_string(i));
  }
  if (feature_names.size() != width) throw FitError("feature_names length does not match matrix width");

  std::vector<double> fit_y(y.begin(), y.end());
  if (config.log_target) {
    for (double& v : fit_y) v = std::log(v);
  }

  Forest forest;
  forest.config_ = config;
  forest.feature_names_ = std::move(feature_names);
  forest.target_name_ = std::move(target_name);
  const auto [lo, hi] = std::minmax_element(y.begin(), y.end());
  forest.target_range_ = {*lo, *hi};
  forest.trees_.resize(static_cast<std::size_t>(config.n_trees));

  std::vector<std::size_t> by_name(width);
  std::iota(by_name.begin(), by_name.end(), 0);
  std::stable_sort(by_name.begin(), by_name.end(), [&](std::size_t a, std::size_t b) {
    return forest.feature_names_[a] < forest.feature_names_[b];
  });
  std::vector<std::size_t> name_rank(width);
  for (std::size_t r = 0; r < width; ++r) name_rank[by_name[r]] = r;

  const std::size_t rows = x.size();
  auto train_tree = [&](std::size_t t) {
    TreeBuilder builder(x, fit_y, config, name_rank, config.seed + t);
    std::vector<std::size_t> samples(rows);
    if (config.bootstrap) {
      std::mt19937_64 draw(config.seed + t);
      draw.discard(1);  // decorrelate from the builder stream
      for (auto& s : samples) s = draw_below(draw, rows);
    } else {
      std::iota(samples.begin(), samples.end(), 0);
    }
    forest.trees_[t] = builder.build(std::move(samples));
  };

  unsigned workers = threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : threads;
  workers = std::min<unsigned>(workers, static_cast<unsigned>(config.n_trees));
  if (workers <= 1) {
    for (std::size_t t = 0; t < forest.trees_.size(); ++t) train_tree(t);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t t = next++; t < forest.trees_.size(); t = next++) train_tree(t);
      });
    }
  }
  return forest;
}

double Forest::predict(std::span<const double> row) const {
  if (trees_.empty()) throw ShapeError("forest has no trees");
  if (row.size() != feature_names_.size()) {
    throw ShapeError("row has " + std::to_string(row.size()) + " features, forest expects " +
                     std::to_string(feature_names_.size()));
  }
  const double first = trees_.front().predict(row);
  bool agree = true;
  long double sum = 0.0L;
  for (const Tree& t : trees_) {
    const double v = t.predict(row);
    agree = agree && v == first;
    sum += v;
  }
  double fitted = agree ? first : static_cast<double>(sum / static_cast<long double>(trees_.size()));
  if (config_.log_target) fitted = std::exp(fitted);
  return std::clamp(fitted, target_range_.min, target_range_.max);
}

std::map<std::string, double> Forest::feature_importance() const {
  std::vector<long double> acc(feature_names_.size(), 0.0L);
  for (const Tree& t : trees_)
    for (const TreeNode& n : t.nodes)
      if (!n.is_leaf()) acc[static_cast<std::size_t>(n.feature)] += n.gain;
  const long double total = std::accumulate(acc.begin(), acc.end(), 0.0L);
  std::map<std::string, double> out;
  for (std::size_t i = 0; i < acc.size(); ++i) {
    out[feature_names_[i]] = total > 0.0L ? static_cast<double>(acc[i] / total) : 0.0;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Serialization

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {

constexpr const char* kFormatName = "trainperf-forest";

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

ordered_json encode_node(const Tree& tree, std::size_t i) {
  const TreeNode& n = tree.nodes[i];
  ordered_json out;
  if (n.is_leaf()) {
    out["value"] = n.value;
    out["count"] = n.count;
    return out;
  }
  out["feature"] = n.feature;
  out["threshold"] = n.threshold;
  out["gain"] = n.gain;
  out["count"] = n.count;
  out["left"] = encode_node(tree, static_cast<std::size_t>(n.left));
  out["right"] = encode_node(tree, static_cast<std::size_t>(n.right));
  return out;
}

// Mirrors the builder layout: both children are allocated before either subtree.
void decode_node(const ordered_json& j, Tree& tree, std::size_t index, std::size_t width) {
  if (j.contains("value")) {
    tree.nodes[index].value = j.at("value").get<double>();
    tree.nodes[index].count = j.at("count").get<std::int64_t>();
    return;
  }
  const int feature = j.at("feature").get<int>();
  if (feature < 0 || static_cast<std::size_t>(feature) >= width) throw ChecksumError("tree references bad feature");
  const std::size_t left = tree.nodes.size();
  tree.nodes.resize(left + 2);
  TreeNode& node = tree.nodes[index];
  node.feature = feature;
  node.threshold = j.at("threshold").get<double>();
  node.gain = j.at("gain").get<double>();
  node.count = j.at("count").get<std::int64_t>();
  node.left = static_cast<std::int32_t>(left);
  node.right = static_cast<std::int32_t>(left + 1);
  decode_node(j.at("left"), tree, left, width);
  decode_node(j.at("right"), tree, left + 1, width);
}

ordered_json encode_config(const ForestConfig& c) {
  ordered_json out;
  out["n_trees"] = c.n_trees;
  out["max_depth"] = c.max_depth ? ordered_json(*c.max_depth) : ordered_json(nullptr);
  out["min_samples_leaf"] = c.min_samples_leaf;
  switch (c.features_per_split.kind) {
    case FeaturesPerSplit::Kind::All: out["features_per_split"] = "all"; break;
    case FeaturesPerSplit::Kind::Sqrt: out["features_per_split"] = "sqrt"; break;
    case FeaturesPerSplit::Kind::Fraction: out["features_per_split"] = c.features_per_split.fraction; break;
  }
  out["bootstrap"] = c.bootstrap;
  out["seed"] = c.seed;
  out["log_target"] = c.log_target;
  return out;
}

ForestConfig decode_config(const ordered_json& j) {
  ForestConfig c;
  c.n_trees = j.at("n_trees").get<int>();
  if (!j.at("max_depth").is_null()) c.max_depth = j.at("max_depth").get<int>();
  c.min_samples_leaf = j.at("min_samples_leaf").get<int>();
  const auto& fps = j.at("features_per_split");
  if (fps.is_string()) {
    c.features_per_split.kind =
        fps.get<std::string>() == "sqrt" ? FeaturesPerSplit::Kind::Sqrt : FeaturesPerSplit::Kind::All;
  } else {
    c.features_per_split = {FeaturesPerSplit::Kind::Fraction, fps.get<double>()};
  }
  c.bootstrap = j.at("bootstrap").get<bool>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.log_target = j.at("log_target").get<bool>();
  return c;
}

}  // namespace

std::string serialize(const Forest& forest) {
  ordered_json doc;
  doc["format"] = kFormatName;
  doc["version"] = kForestFormatVersion;
  doc["target"] = {{"name", forest.target_name_},
                   {"min", forest.target_range_.min},
                   {"max", forest.target_range_.max}};
  doc["feature_schema"] = forest.feature_schema_;
  doc["feature_names"] = forest.feature_names_;
  doc["config"] = encode_config(forest.config_);
  doc["trees"] = ordered_json::array();
  for (const Tree& t : forest.trees_) doc["trees"].push_back(encode_node(t, 0));
  doc["checksum"] = "fnv1a64:" + hex64(fnv1a64(doc.dump()));
  return doc.dump() + "\n";
}

Forest deserialize(std::string_view text) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(text);
  } catch (const ordered_json::parse_error& e) {
    throw ChecksumError(std::string("model file is truncated or corrupt: ") + e.what());
  }
  if (!doc.is_object() || doc.value("format", std::string{}) != kFormatName) {
    throw VersionError("not a trainperf forest document");
  }
  if (!doc.contains("version") || !doc["version"].is_number_integer() ||
      doc["version"].get<int>() != kForestFormatVersion) {
    throw VersionError("unsupported forest format version " + (doc.contains("version") ? doc["version"].dump() : "?"));
  }
  if (!doc.contains("checksum") || !doc["checksum"].is_string()) throw ChecksumError("model file has no checksum");
  const std::string stored = doc["checksum"].get<std::string>();
  doc.erase("checksum");
  if (stored != "fnv1a64:" + hex64(fnv1a64(doc.dump()))) throw ChecksumError("model checksum mismatch");

  try {
    Forest forest;
    forest.target_name_ = doc.at("target").at("name").get<std::string>();
    forest.target_range_ = {doc.at("target").at("min").get<double>(), doc.at("target").at("max").get<double>()};
    forest.feature_schema_ = doc.at("feature_schema").get<std::string>();
    forest.feature_names_ = doc.at("feature_names").get<std::vector<std::string>>();
    forest.config_ = decode_config(doc.at("config"));
    for (const auto& t : doc.at("trees")) {
      Tree tree;
      tree.nodes.emplace_back();
      decode_node(t, tree, 0, forest.feature_names_.size());
      forest.trees_.push_back(std::move(tree));
    }
    if (forest.trees_.size() != static_cast<std::size_t>(forest.config_.n_trees)) {
      throw ChecksumError("tree count does not match config");
    }
    return forest;
  } catch (const nlohmann::json::exception& e) {
    throw ChecksumError(std::string("model document is malformed: ") + e.what());
  }
}

void save(const Forest& forest, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write model file " + path.string());
  out << serialize(forest);
  if (!out) throw IoError("failed writing model file " + path.string());
}

Forest load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open model file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return deserialize(buf.str());
}

}  // namespace trainperf
