// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "support.hpp"
#include "trainperf/dataset.hpp"
#include "trainperf/features.hpp"
#include "trainperf/forest.hpp"
#include "trainperf/predictor.hpp"
#include "trainperf/search.hpp"
#include "trainperf/synthetic.hpp"

using namespace trainperf;
using namespace testing_support;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) detail = what;
    pass = pass && ok;
  }
};

std::string fmt(double v, int digits = 4) {
  std::ostringstream s;
  s.precision(digits);
  s << v;
  return s.str();
}

const ExactCount& at(const LayerFeatures& f, Feature x) { return f[static_cast<std::size_t>(x)]; }

// 1. Analytical im2col memory and matmul ops against a materialized lowering.
Verdict feature_oracle() {
  Verdict v;
  std::mt19937_64 rng(2024);
  std::size_t compared = 0;
  for (int trial = 0; trial < 200; ++trial) {
    ConvLayerSpec l;
    l.layer_id = "probe";
    const double kind = std::uniform_real_distribution<double>(0, 1)(rng);
    const std::int64_t base = uniform(rng, 1, 4);
    if (kind < 0.2) {
      l.m = base;
      l.g = base;
      l.n = base * uniform(rng, 1, 2);
    } else if (kind < 0.4) {
      l.g = uniform(rng, 1, 3);
      l.m = l.g * base;
      l.n = l.g * uniform(rng, 1, 3);
    } else {
      l.m = base;
      l.n = uniform(rng, 1, 6);
    }
    l.k = uniform(rng, 1, 3);
    l.s = uniform(rng, 1, 2);
    l.p = uniform(rng, 0, 1);
    l.ip = uniform(rng, std::max<std::int64_t>(1, l.k - 2 * l.p), 8);
    const std::int64_t bs = uniform(rng, 1, 4);

    const LoweringCounts o = brute_force_lowering(l, bs);
    LayerFeatures f{};
    layer_matmul_features(l, bs, f);
    const std::vector<std::pair<Feature, std::int64_t>> expected{
        {Feature::MemI2cFwdTotal, o.fwd_total},
        {Feature::MemI2cBwdWTotal, o.bwd_w_total},
        {Feature::MemI2cFwdIndex, o.fwd_index},
        {Feature::MemI2cBwdXTotal, o.bwd_x_total},
        {Feature::MemI2cBwdXIndex, o.bwd_x_index},
        {Feature::MemI2cTotalSum, o.fwd_total + o.bwd_w_total + o.bwd_x_total},
        {Feature::MemI2cIndexSum, 2 * o.fwd_index + o.bwd_x_index},
        {Feature::OpsMmFwd, o.ops_fwd},
        {Feature::OpsMmBwdX, o.ops_bwd_x},
        {Feature::OpsMmSum, 2 * o.ops_fwd + o.ops_bwd_x},
    };
    v.require(ofm_size(l) == o.op, "output size differs from the enumerated window count");
    for (const auto& [feature, want] : expected) {
      ++compared;
      v.require(at(f, feature) == ExactCount(want), std::string(info(feature).name) + " differs from the oracle");
    }
  }
  if (v.pass) v.detail = "200 layers, " + std::to_string(compared) + " counts equal";
  return v;
}

// 2. Every feature is affine in the batch size.
Verdict batch_size_linearity() {
  Verdict v;
  std::size_t checks = 0;
  for (const auto& name : bundled_names()) {
    const NetworkSpec net = bundled(name);
    for (const auto& [b1, b2, b3] : std::vector<std::array<std::int64_t, 3>>{{2, 4, 6}, {64, 128, 192}}) {
      const auto f1 = extract_features(net, b1).exact;
      const auto f2 = extract_features(net, b2).exact;
      const auto f3 = extract_features(net, b3).exact;
      v.require(f1.size() == kFeatureCount, name + ": feature vector has the wrong width");
      for (std::size_t i = 0; i < f1.size(); ++i) {
        ++checks;
        v.require(f1[i] + f3[i] == f2[i] * 2, name + ": " + FeatureLayout{}.names()[i] + " is not linear in bs");
      }
    }
  }
  if (v.pass) v.detail = std::to_string(checks) + " exact identities";
  return v;
}

// 3. Network features are the sum of per-layer features.
Verdict layer_additivity() {
  Verdict v;
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    const NetworkSpec net = random_network(rng, 20);
    const std::int64_t bs = uniform(rng, 1, 16);
    std::vector<ExactCount> sum(kFeatureCount);
    for (const ConvLayerSpec& l : conv_layers(net)) {
      const LayerFeatures a = layer_features(l, bs, kWinogradTiles[0]);
      const LayerFeatures b = layer_features(l, bs, kWinogradTiles[1]);
      for (std::size_t i = 0; i < kFeatureCount; ++i) {
        sum[i] += a[i];
        if (i >= kFirstWinogradFeature) sum[i] += b[i];
      }
    }
    v.require(extract_features(net, bs).exact == sum, "network " + std::to_string(trial) + " is not additive");
  }
  if (v.pass) v.detail = "50 random networks";
  return v;
}

std::vector<ProfileRecord> synthetic_records(const NetworkCatalog& catalog, const std::vector<int>& levels,
                                             std::uint64_t seed) {
  std::vector<NetworkSpec> nets;
  for (const auto& [name, net] : catalog) nets.push_back(net);
  SyntheticDeviceConfig device;
  device.seed = seed;
  return synthesize_dataset(generate_plan(nets, levels, {"uniform_random"}, {0}, default_batch_sizes()), catalog,
                            device);
}

NetworkCatalog bundled_catalog() {
  std::vector<NetworkSpec> nets;
  for (const auto& name : bundled_names()) nets.push_back(bundled(name));
  return make_catalog(nets);
}

// 4. Interpolation, boundedness, and reproducible model files.
Verdict forest_correctness() {
  Verdict v;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1000.0, 1000.0);
  Matrix x(500, std::vector<double>(12));
  std::vector<double> y(500);
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (auto& c : x[i]) c = u(rng);
    y[i] = u(rng);
  }
  ForestConfig interp;
  interp.bootstrap = false;
  interp.n_trees = 10;
  const Forest exact = fit(x, y, interp);
  std::size_t residuals = 0;
  for (std::size_t i = 0; i < x.size(); ++i) residuals += exact.predict(x[i]) != y[i];

  const NetworkCatalog catalog = bundled_catalog();
  const auto records = synthetic_records(catalog, train_levels(), 0);
  const DesignMatrix m = join(records, catalog, Attribute::Gamma, FeatureLayout{});
  const Forest exact_features = fit(m.rows, m.targets, interp, m.feature_names, "gamma_mb");
  for (std::size_t i = 0; i < m.rows.size(); ++i) residuals += exact_features.predict(m.rows[i]) != m.targets[i];
  v.require(residuals == 0, std::to_string(residuals) + " nonzero training residuals");

  ForestConfig cfg;
  cfg.seed = 17;
  const Forest model = fit(m.rows, m.targets, cfg, m.feature_names, "gamma_mb");
  std::vector<double> col_max(m.feature_names.size(), 0.0);
  for (const auto& row : m.rows)
    for (std::size_t j = 0; j < row.size(); ++j) col_max[j] = std::max(col_max[j], row[j]);
  std::size_t out_of_range = 0;
  for (int probe = 0; probe < 10000; ++probe) {
    std::vector<double> row(col_max.size());
    for (std::size_t j = 0; j < row.size(); ++j) {
      const double scale = std::uniform_real_distribution<double>(-1.0, 3.0)(rng);
      row[j] = col_max[j] * scale + std::uniform_real_distribution<double>(-1e6, 1e6)(rng);
    }
    const double p = model.predict(row);
    out_of_range += p < model.target_range().min || p > model.target_range().max;
  }
  v.require(out_of_range == 0, std::to_string(out_of_range) + " of 10000 probes outside the target range");

  const auto dir = std::filesystem::temp_directory_path() / "trainperf_acceptance";
  std::filesystem::create_directories(dir);
  save(model, dir / "a.json");
  save(fit(m.rows, m.targets, cfg, m.feature_names, "gamma_mb"), dir / "b.json");
  auto bytes = [](const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  const bool identical = bytes(dir / "a.json") == bytes(dir / "b.json") && !bytes(dir / "a.json").empty();
  std::filesystem::remove_all(dir);
  v.require(identical, "model files differ between runs");
  if (v.pass) v.detail = "0 residuals, 10000 probes in range, identical model files";
  return v;
}

// 5. Synthetic train/test protocol over the bundled networks.
Verdict synthetic_end_to_end() {
  Verdict v;
  const NetworkCatalog catalog = bundled_catalog();
  const auto train = synthetic_records(catalog, train_levels(), 0);
  const auto test = synthetic_records(catalog, test_levels(), 1);
  const auto models = train_models(train, catalog, {Attribute::Gamma, Attribute::Phi}, ForestConfig{});
  const auto report = evaluate(models, test, catalog);
  const double gamma = report.at(Attribute::Gamma).mean_ape;
  const double phi = report.at(Attribute::Phi).mean_ape;
  v.require(train.size() == 4 * 5 * 25 && test.size() == 4 * 14 * 25, "unexpected dataset sizes");
  v.require(gamma <= 10.0, "gamma MAPE " + fmt(gamma) + "% > 10%");
  v.require(phi <= 12.0, "phi MAPE " + fmt(phi) + "% > 12%");
  v.detail = "gamma MAPE " + fmt(gamma) + "%, phi MAPE " + fmt(phi) + "% (" + std::to_string(test.size()) +
             " held-out records)" + (v.pass ? "" : "; " + v.detail);
  return v;
}

// 6. Evolution on the bundled 4096-candidate space against brute force.
Verdict evolution_quality() {
  Verdict v;
  const SearchSpace space = load_search_space(networks_dir() / "resnet18_space.json");
  v.require(space.size() <= 4096, "space is not enumerable");

  const NetworkCatalog catalog = make_catalog({space.base()});
  const auto records = synthetic_records(catalog, train_levels(), 0);
  const auto models =
      train_models(records, catalog, {Attribute::Gamma, Attribute::SmallGamma, Attribute::SmallPhi}, ForestConfig{});
  const Predictor predictor = as_predictor(models);

  // Additive fitness: a per-knob score for every choice, deeper stages worth more.
  const Fitness fitness = [&space](const Candidate& c) {
    double total = 0.0;
    const std::size_t widths = space.width_knobs().size();
    for (std::size_t k = 0; k < c.encoding.size(); ++k) {
      const double stage = static_cast<double>(k % widths + 1);
      if (k < widths) {
        total += stage * space.width_knobs()[k].multipliers[c.encoding[k]];
      } else {
        total += 0.6 * stage * static_cast<double>(space.depth_knobs()[k - widths].keep[c.encoding[k]]);
      }
    }
    return total;
  };

  // Brute force over every encoding; bounds are set from the predicted values
  // so that roughly the larger half of the space is infeasible.
  struct Row {
    double fitness, gamma, small_gamma, small_phi;
  };
  std::vector<Row> rows;
  for (std::size_t i = 0; i < space.size(); ++i) {
    Candidate c;
    c.encoding = space.encoding_at(i);
    c.net = space.decode(c.encoding);
    rows.push_back({fitness(c), predictor(Attribute::Gamma, c.net, 32), predictor(Attribute::SmallGamma, c.net, 1),
                    predictor(Attribute::SmallPhi, c.net, 1)});
  }
  auto quantile = [&](double Row::*field, double q) {
    std::vector<double> values;
    for (const auto& r : rows) values.push_back(r.*field);
    std::sort(values.begin(), values.end());
    return values[static_cast<std::size_t>(q * static_cast<double>(values.size() - 1))];
  };
  Constraints cons;
  cons.train_bs = 32;
  cons.max_gamma_mb = quantile(&Row::gamma, 0.5);
  cons.max_small_gamma_mb = quantile(&Row::small_gamma, 0.7);
  cons.max_small_phi_ms = quantile(&Row::small_phi, 0.6);
  double optimum = -INFINITY, unconstrained = -INFINITY;
  std::size_t feasible = 0;
  for (const auto& r : rows) {
    unconstrained = std::max(unconstrained, r.fitness);
    if (r.gamma <= *cons.max_gamma_mb && r.small_gamma <= *cons.max_small_gamma_mb &&
        r.small_phi <= *cons.max_small_phi_ms) {
      ++feasible;
      optimum = std::max(optimum, r.fitness);
    }
  }
  v.require(feasible > 0 && optimum < unconstrained, "constraints are not active");

  int good = 0, infeasible = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    EsConfig cfg;
    cfg.seed = seed;
    const SearchResult result = evolve(space, cons, predictor, fitness, cfg);
    const NetworkSpec& net = result.best.net;
    const bool ok = predictor(Attribute::Gamma, net, 32) <= *cons.max_gamma_mb &&
                    predictor(Attribute::SmallGamma, net, 1) <= *cons.max_small_gamma_mb &&
                    predictor(Attribute::SmallPhi, net, 1) <= *cons.max_small_phi_ms;
    infeasible += !ok;
    good += ok && result.best.fitness >= 0.95 * optimum;
  }
  v.require(good >= 18, std::to_string(good) + "/20 seeds reached 95% of the optimum");
  v.require(infeasible == 0, std::to_string(infeasible) + " infeasible results");
  v.detail = std::to_string(good) + "/20 seeds >= 95% of optimum " + fmt(optimum) + " (" +
             std::to_string(feasible) + "/" + std::to_string(space.size()) + " feasible), " +
             std::to_string(infeasible) + " infeasible" + (v.pass ? "" : "; " + v.detail);
  return v;
}

// 7. Search cost with the default population and iteration count.
Verdict search_cost() {
  Verdict v;
  const EsConfig defaults;
  const std::uint64_t candidates = nominal_candidates(defaults);
  const double slow = estimate_search_cost(defaults, 20.0);
  const double fast = estimate_search_cost(defaults, 0.1);
  const double days = slow / 86400.0;
  const double hours = fast / 3600.0;
  v.require(candidates == 50000, "default search covers " + std::to_string(candidates) + " candidates");
  v.require(slow == 1e6, "20 s per candidate gives " + fmt(slow) + " s");
  v.require(std::fabs(fast - 5000.0) < 1e-9, "0.1 s per candidate gives " + fmt(fast) + " s");
  // Two significant figures: within one unit of the second digit of the stated values.
  v.require(std::fabs(days - 11.0) < 1.0, fmt(days) + " days is not about 11 days");
  v.require(std::fabs(hours - 1.4) < 0.1 && std::round(hours * 10.0) / 10.0 == 1.4,
            fmt(hours) + " hours is not about 1.4 hours");
  v.require(estimate_search_cost(0, 20.0) == 0.0, "zero candidates cost something");
  if (v.pass) v.detail = fmt(days) + " days at 20 s, " + fmt(hours) + " hours at 0.1 s";
  return v;
}

// 8. Plan defaults.
Verdict plan_defaults() {
  Verdict v;
  const auto bs = default_batch_sizes();
  v.require(bs.size() == 25, std::to_string(bs.size()) + " batch sizes");
  v.require(!bs.empty() && bs.front() == 2 && bs.back() == 256, "batch size endpoints are not 2 and 256");
  v.require(std::is_sorted(bs.begin(), bs.end()) && std::set<std::int64_t>(bs.begin(), bs.end()).size() == bs.size(),
            "batch sizes are not strictly increasing");
  v.require(train_levels() == std::vector<int>{0, 30, 50, 70, 90}, "train levels differ");
  const auto train = train_levels();
  std::vector<int> expected;
  for (int x = 0; x <= 18; ++x) {
    if (std::find(train.begin(), train.end(), 5 * x) == train.end()) expected.push_back(5 * x);
  }
  v.require(test_levels() == expected && expected.size() == 14, "test levels differ");
  const auto plan = generate_plan({bundled("resnet18")}, train_levels(), {"uniform_random"}, {0}, bs);
  v.require(plan.entries.size() == 125, std::to_string(plan.entries.size()) + " plan entries");
  if (v.pass) v.detail = "25 batch sizes 2..256, 5 train levels, 14 test levels, 125-entry plan";
  return v;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double limit_s;  // 0: no runtime bound
    std::function<Verdict()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "feature oracle equivalence", 60.0, feature_oracle},
      {2, "batch-size linearity", 10.0, batch_size_linearity},
      {3, "layer additivity", 10.0, layer_additivity},
      {4, "forest correctness", 0.0, forest_correctness},
      {5, "synthetic end-to-end", 300.0, synthetic_end_to_end},
      {6, "evolutionary search quality", 120.0, evolution_quality},
      {7, "search cost arithmetic", 0.0, search_cost},
      {8, "plan defaults", 0.0, plan_defaults},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.limit_s > 0.0 && seconds > c.limit_s) {
      v.pass = false;
      v.detail += "; runtime over " + fmt(c.limit_s) + " s";
    }
    failures += !v.pass;
    std::printf("%s criterion %d (%s): %s [%.2f s]\n", v.pass ? "PASS" : "FAIL", c.id, c.name, v.detail.c_str(),
                seconds);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
