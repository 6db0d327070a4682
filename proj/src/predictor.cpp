#include "trainperf/predictor.hpp"

#include <cmath>
#include <ostream>

#include <json.hpp>

#include "trainperf/errors.hpp"

namespace trainperf {

FeatureLayout layout_from_schema(std::string_view tag) {
  for (FeatureMode mode : {FeatureMode::Training, FeatureMode::InferenceOnly}) {
    for (WinogradLayout w : {WinogradLayout::Summed, WinogradLayout::Split}) {
      FeatureLayout layout{mode, w};
      if (layout.schema_tag() == tag) return layout;
    }
  }
  throw ShapeError("model was trained on unknown feature schema '" + std::string(tag) + "'");
}

void AttributeModelSet::add(Forest forest) {
  Attribute a{};
  try {
    a = attribute_from_string(forest.target_name());
  } catch (const JoinError&) {
    throw ShapeError("model target '" + forest.target_name() + "' is not a known attribute");
  }
  const FeatureLayout layout = layout_from_schema(forest.feature_schema());
  if (layout.mode != feature_mode_for(a)) {
    throw ShapeError("model for " + std::string(column_name(a)) + " uses " + std::string(to_string(layout.mode)) +
                     " features");
  }
  if (forest.feature_names() != layout.names()) {
    throw ShapeError("model feature names do not match schema '" + forest.feature_schema() + "'");
  }
  models_.insert_or_assign(a, std::move(forest));
  layouts_.insert_or_assign(a, layout);
}

const Forest& AttributeModelSet::at(Attribute a) const {
  auto it = models_.find(a);
  if (it == models_.end()) throw EvalError("no model for attribute " + std::string(column_name(a)));
  return it->second;
}

std::vector<Attribute> AttributeModelSet::attributes() const {
  std::vector<Attribute> out;
  for (const auto& [a, _] : models_) out.push_back(a);
  return out;
}

FeatureLayout AttributeModelSet::layout(Attribute a) const {
  auto it = layouts_.find(a);
  if (it == layouts_.end()) throw EvalError("no model for attribute " + std::string(column_name(a)));
  return it->second;
}

AttributeModelSet train_models(const std::vector<ProfileRecord>& records, const NetworkCatalog& networks,
                               const std::vector<Attribute>& attributes, const ForestConfig& config,
                               WinogradLayout winograd, unsigned threads) {
  AttributeModelSet set;
  for (Attribute a : attributes) {
    const DesignMatrix dm = join(records, networks, a, FeatureLayout{feature_mode_for(a), winograd});
    Forest forest = fit(dm.rows, dm.targets, config, dm.feature_names, std::string(column_name(a)), threads);
    forest.set_feature_schema(dm.feature_schema);
    set.add(std::move(forest));
  }
  return set;
}

double predict_attribute(const AttributeModelSet& models, Attribute a, const NetworkSpec& net, std::int64_t bs) {
  const Forest& forest = models.at(a);
  const FeatureVector v = extract_features(net, bs, models.layout(a));
  if (v.names() != forest.feature_names()) throw ShapeError("feature vector does not match the model's schema");
  return forest.predict(v.values());
}

std::map<Attribute, double> predict_attributes(const AttributeModelSet& models, const NetworkSpec& net,
                                               std::int64_t bs) {
  std::map<Attribute, double> out;
  for (Attribute a : models.attributes()) out[a] = predict_attribute(models, a, net, bs);
  return out;
}

Predictor as_predictor(const AttributeModelSet& models) {
  return [&models](Attribute a, const NetworkSpec& net, std::int64_t bs) {
    return predict_attribute(models, a, net, bs);
  };
}

const AttributeReport& EvaluationReport::at(Attribute a) const {
  for (const auto& r : attributes)
    if (r.attribute == a) return r;
  throw EvalError("report has no entry for " + std::string(column_name(a)));
}

namespace {

template <typename Key>
void finish_groups(std::map<Key, std::pair<long double, std::size_t>>& acc, std::map<Key, GroupStat>& out) {
  for (const auto& [k, sum] : acc) {
    out[k] = GroupStat{static_cast<double>(sum.first / static_cast<long double>(sum.second)), sum.second};
  }
}

}  // namespace

EvaluationReport evaluate(const Predictor& predictor, const std::vector<ProfileRecord>& records,
                          const NetworkCatalog& networks, const std::vector<Attribute>& attributes) {
  using VariantKey = std::tuple<std::string, int, std::string, std::uint64_t>;
  std::map<VariantKey, NetworkSpec> variants;
  EvaluationReport report;
  for (Attribute a : attributes) {
    AttributeReport ar;
    ar.attribute = a;
    long double total = 0.0L, actual_total = 0.0L;
    std::map<int, std::pair<long double, std::size_t>> by_level;
    std::map<std::int64_t, std::pair<long double, std::size_t>> by_bs;
    std::map<std::string, std::pair<long double, std::size_t>> by_network;
    for (std::size_t i = 0; i < records.size(); ++i) {
      const auto& r = records[i];
      const auto actual = r.target(a);
      if (!actual) continue;
      if (*actual == 0.0) {
        throw EvalError("record " + std::to_string(i + 1) + " has " + std::string(column_name(a)) + " == 0");
      }
      VariantKey vk{r.network, r.pruning_level, r.strategy, r.seed};
      auto it = variants.find(vk);
      if (it == variants.end()) {
        it = variants.emplace(vk, reconstruct_variant(networks, r.network, r.pruning_level, r.strategy, r.seed))
                 .first;
      }
      const double predicted = predictor(a, it->second, r.bs);
      const double ape = 100.0 * std::fabs(predicted - *actual) / *actual;
      ar.records.push_back({i, r.network, r.pruning_level, r.strategy, r.seed, r.bs, *actual, predicted, ape});
      total += ape;
      actual_total += *actual;
      by_level[r.pruning_level].first += ape;
      ++by_level[r.pruning_level].second;
      by_bs[r.bs].first += ape;
      ++by_bs[r.bs].second;
      by_network[r.network].first += ape;
      ++by_network[r.network].second;
      if (ar.records.size() == 1) {
        ar.actual_range = {*actual, *actual};
      } else {
        ar.actual_range.min = std::min(ar.actual_range.min, *actual);
        ar.actual_range.max = std::max(ar.actual_range.max, *actual);
      }
    }
    if (ar.records.empty()) throw EvalError("no test record carries " + std::string(column_name(a)));
    const auto n = static_cast<long double>(ar.records.size());
    ar.mean_ape = static_cast<double>(total / n);
    ar.actual_mean = static_cast<double>(actual_total / n);
    finish_groups(by_level, ar.by_level);
    finish_groups(by_bs, ar.by_bs);
    finish_groups(by_network, ar.by_network);
    report.attributes.push_back(std::move(ar));
  }
  return report;
}

EvaluationReport evaluate(const AttributeModelSet& models, const std::vector<ProfileRecord>& records,
                          const NetworkCatalog& networks) {
  return evaluate(as_predictor(models), records, networks, models.attributes());
}

void write_errors_csv(std::ostream& out, const EvaluationReport& report) {
  out << "attribute,network,pruning_level,strategy,seed,bs,actual,predicted,ape_pct\n";
  for (const auto& ar : report.attributes) {
    for (const auto& e : ar.records) {
      out << column_name(ar.attribute) << ',' << e.network << ',' << e.pruning_level << ',' << e.strategy << ','
          << e.seed << ',' << e.bs << ',' << format_number(e.actual) << ',' << format_number(e.predicted) << ','
          << format_number(e.ape) << '\n';
    }
  }
}

std::string summary_json(const EvaluationReport& report) {
  using nlohmann::ordered_json;
  ordered_json doc = ordered_json::object();
  for (const auto& ar : report.attributes) {
    ordered_json a;
    a["records"] = ar.records.size();
    a["mean_ape_pct"] = ar.mean_ape;
    a["actual"] = {{"min", ar.actual_range.min}, {"max", ar.actual_range.max}, {"mean", ar.actual_mean}};
    auto groups = [](const auto& m) {
      ordered_json g = ordered_json::object();
      for (const auto& [k, s] : m) {
        std::string key;
        if constexpr (std::is_same_v<std::decay_t<decltype(k)>, std::string>) {
          key = k;
        } else {
          key = std::to_string(k);
        }
        g[key] = {{"mean_ape_pct", s.mean_ape}, {"count", s.count}};
      }
      return g;
    };
    a["by_pruning_level"] = groups(ar.by_level);
    a["by_bs"] = groups(ar.by_bs);
    a["by_network"] = groups(ar.by_network);
    doc[std::string(column_name(ar.attribute))] = std::move(a);
  }
  return doc.dump(2);
}

}  // namespace trainperf
