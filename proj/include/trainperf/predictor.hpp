#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "trainperf/dataset.hpp"
#include "trainperf/forest.hpp"

namespace trainperf {

/// One forest per modelled attribute. Each forest remembers the feature schema
/// it was trained on; prediction refuses vectors from any other extractor layout.
class AttributeModelSet {
 public:
  /// The attribute is taken from the forest's target name (a measurement column).
  /// Throws ShapeError if the forest's schema or feature names do not belong to
  /// this extractor.
  void add(Forest forest);

  bool contains(Attribute a) const { return models_.count(a) != 0; }
  const Forest& at(Attribute a) const;
  std::vector<Attribute> attributes() const;
  FeatureLayout layout(Attribute a) const;
  std::size_t size() const { return models_.size(); }

 private:
  std::map<Attribute, Forest> models_;
  std::map<Attribute, FeatureLayout> layouts_;
};

/// Maps a stored schema tag back to its layout. Throws ShapeError if unknown.
FeatureLayout layout_from_schema(std::string_view tag);

AttributeModelSet train_models(const std::vector<ProfileRecord>& records, const NetworkCatalog& networks,
                               const std::vector<Attribute>& attributes, const ForestConfig& config,
                               WinogradLayout winograd = WinogradLayout::Summed, unsigned threads = 0);

double predict_attribute(const AttributeModelSet& models, Attribute a, const NetworkSpec& net, std::int64_t bs);
std::map<Attribute, double> predict_attributes(const AttributeModelSet& models, const NetworkSpec& net,
                                               std::int64_t bs);

/// Anything that maps (attribute, network, batch size) to a value can be evaluated.
using Predictor = std::function<double(Attribute, const NetworkSpec&, std::int64_t)>;
Predictor as_predictor(const AttributeModelSet& models);

struct RecordError {
  std::size_t record_index = 0;
  std::string network;
  int pruning_level = 0;
  std::string strategy;
  std::uint64_t seed = 0;
  std::int64_t bs = 0;
  double actual = 0.0;
  double predicted = 0.0;
  double ape = 0.0;  // percent
};

struct GroupStat {
  double mean_ape = 0.0;
  std::size_t count = 0;
};

struct AttributeReport {
  Attribute attribute = Attribute::Gamma;
  std::vector<RecordError> records;
  double mean_ape = 0.0;
  std::map<int, GroupStat> by_level;
  std::map<std::int64_t, GroupStat> by_bs;
  std::map<std::string, GroupStat> by_network;
  TargetRange actual_range;
  double actual_mean = 0.0;
};

struct EvaluationReport {
  std::vector<AttributeReport> attributes;

  const AttributeReport& at(Attribute a) const;
};

/// APE = 100 |pred - actual| / actual for every record that carries the attribute.
/// Throws EvalError if an actual value is zero or no record carries an attribute.
EvaluationReport evaluate(const Predictor& predictor, const std::vector<ProfileRecord>& records,
                          const NetworkCatalog& networks, const std::vector<Attribute>& attributes);
EvaluationReport evaluate(const AttributeModelSet& models, const std::vector<ProfileRecord>& records,
                          const NetworkCatalog& networks);

/// Per-record errors, one row per (attribute, record).
void write_errors_csv(std::ostream& out, const EvaluationReport& report);
/// Grouped means as a JSON document.
std::string summary_json(const EvaluationReport& report);

}  // namespace trainperf
