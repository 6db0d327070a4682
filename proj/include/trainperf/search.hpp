#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "trainperf/network.hpp"
#include "trainperf/predictor.hpp"

namespace trainperf {

/// A group of conv layers sharing one filter-count multiplier.
struct WidthKnob {
  std::string name;
  std::vector<std::string> layers;
  std::vector<double> multipliers;  // each in (0, 1]; 1 keeps every filter
};

/// A run of removable blocks. Choice c keeps the first keep[c] blocks and removes
/// the rest; a removed block's producers are wired straight to its consumers.
struct DepthKnob {
  std::string name;
  std::vector<std::vector<std::string>> blocks;  // layer ids per block
  std::vector<std::size_t> keep;
};

/// A candidate is a vector of choice indices: width knobs first, then depth knobs.
using Encoding = std::vector<std::size_t>;

class SearchSpace {
 public:
  /// Throws SchemaError for malformed knobs (no choices, bad multipliers, a layer
  /// in two blocks) and ValidationError if a knob references unknown layers or
  /// a single choice or the all-largest encoding does not decode to a valid network.
  SearchSpace(NetworkSpec base, std::vector<WidthKnob> width, std::vector<DepthKnob> depth);

  const NetworkSpec& base() const noexcept { return base_; }
  const std::vector<WidthKnob>& width_knobs() const noexcept { return width_; }
  const std::vector<DepthKnob>& depth_knobs() const noexcept { return depth_; }

  std::size_t knob_count() const { return width_.size() + depth_.size(); }
  std::size_t choice_count(std::size_t knob) const;
  /// Number of distinct encodings (saturates at SIZE_MAX).
  std::size_t size() const;

  NetworkSpec decode(const Encoding& e) const;
  Encoding random_encoding(std::mt19937_64& rng) const;
  /// Enumeration order used by exhaustive search: mixed radix, last knob fastest.
  Encoding encoding_at(std::size_t index) const;

 private:
  void check(const Encoding& e) const;

  NetworkSpec base_;
  std::vector<WidthKnob> width_;
  std::vector<DepthKnob> depth_;
};

/// {"base": <network object or path relative to the space file>,
///  "width_knobs": [{"name", "layers", "multipliers"}],
///  "depth_knobs": [{"name", "blocks", "keep"}]}
SearchSpace parse_search_space(std::string_view json_text, const std::filesystem::path& base_dir = {});
SearchSpace load_search_space(const std::filesystem::path& path);

/// Hard cutoffs; unset bounds are ignored. gamma is predicted at train_bs, the
/// inference attributes at batch size 1.
struct Constraints {
  std::optional<double> max_gamma_mb;
  std::optional<double> max_small_gamma_mb;
  std::optional<double> max_small_phi_ms;
  std::int64_t train_bs = 32;

  void validate() const;
  std::vector<Attribute> required_attributes() const;
};

struct Candidate {
  Encoding encoding;
  NetworkSpec net;
  std::map<Attribute, double> predictions;
  double fitness = 0.0;
};

/// Deterministic score of a decoded candidate; larger is better.
using Fitness = std::function<double(const Candidate&)>;

/// Total weight parameters of the decoded network. A size proxy for demos and
/// tests only; it says nothing about accuracy.
double parameter_count(const NetworkSpec& net);
Fitness parameter_count_fitness();

/// Checks candidates against constraints, caching predictions per encoding.
class FeasibilityOracle {
 public:
  FeasibilityOracle(const SearchSpace& space, Constraints constraints, Predictor predictor);

  /// Predicts every constrained attribute of e and reports whether all bounds
  /// hold. Fills candidate.predictions; candidate.net is decoded only the first
  /// time an encoding is seen and left empty on later checks.
  bool check(const Encoding& e, Candidate& candidate);
  const Constraints& constraints() const noexcept { return constraints_; }
  std::uint64_t checks() const noexcept { return checks_; }

 private:
  const SearchSpace& space_;
  Constraints constraints_;
  Predictor predictor_;
  std::map<Encoding, std::map<Attribute, double>> cache_;
  std::uint64_t checks_ = 0;
};

struct SampleResult {
  Candidate candidate;
  std::uint64_t rejections = 0;
};

/// Rejection-samples uniformly random encodings. Throws InfeasibleError once
/// `budget` consecutive samples are rejected.
SampleResult sample_feasible(const SearchSpace& space, FeasibilityOracle& oracle, std::mt19937_64& rng,
                             std::uint64_t budget = 10000);

struct EsConfig {
  std::size_t population = 100;
  std::size_t iterations = 500;
  double mutation_rate = 0.1;     // per-knob resample probability
  double mutation_ratio = 0.5;    // share of children made by mutation; the rest by crossover
  double parent_fraction = 0.25;  // share of the population that may reproduce
  std::uint64_t rejection_budget = 10000;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SearchLogEntry {
  std::size_t iter = 0;
  double best_fitness = 0.0;
  std::uint64_t evaluated_total = 0;
  Encoding best_encoding;
};

struct SearchResult {
  Candidate best;
  std::vector<SearchLogEntry> log;  // entry 0 is the initial population
  std::uint64_t evaluated_total = 0;
  std::size_t improvements = 0;  // iterations that raised the best fitness
};

/// Evolutionary search. Every iteration draws `population` children from the top
/// parent_fraction of the population (mutation or uniform crossover), rejects
/// infeasible ones, and keeps the best `population` of parents and children,
/// ordered by fitness and then encoding. Every feasibility check counts as an
/// evaluated candidate.
SearchResult evolve(const SearchSpace& space, const Constraints& constraints, const Predictor& predictor,
                    const Fitness& fitness, const EsConfig& config);

/// Exhaustive reference: best feasible candidate under the same ordering, or
/// nullopt if nothing is feasible.
std::optional<Candidate> exhaustive_search(const SearchSpace& space, const Constraints& constraints,
                                           const Predictor& predictor, const Fitness& fitness);

void write_search_log(std::ostream& out, const std::vector<SearchLogEntry>& log);

/// Nominal candidate count of a search: population x iterations.
std::uint64_t nominal_candidates(const EsConfig& config);
double estimate_search_cost(std::uint64_t candidates, double per_candidate_s);
double estimate_search_cost(const EsConfig& config, double per_candidate_s);

}  // namespace trainperf
