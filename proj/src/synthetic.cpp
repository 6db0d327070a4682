#include "trainperf/synthetic.hpp"

#include <map>
#include <random>

#include "trainperf/errors.hpp"

namespace trainperf {

namespace {

double feature(const FeatureVector& v, Feature f) { return v.exact[static_cast<std::size_t>(f)].to_double(); }

std::uint64_t record_seed(std::uint64_t seed, const PlanEntry& e) {
  std::string text = std::to_string(seed) + '\x1f' + e.network + '\x1f' + std::to_string(e.pruning_level) + '\x1f' +
                     e.strategy + '\x1f' + std::to_string(e.seed) + '\x1f' + std::to_string(e.bs);
  return fnv1a64(text);
}

}  // namespace

SyntheticTargets synthetic_ground_truth(const NetworkSpec& net, std::int64_t bs) {
  const auto f = extract_features(net, bs);
  SyntheticTargets t{};
  t.gamma_mb = 350.0 + 4e-6 * (3.0 * feature(f, Feature::MemW) + 2.0 * feature(f, Feature::MemOfmGrad) +
                               feature(f, Feature::MemIfmGrad));
  t.phi_ms = 12.0 + feature(f, Feature::OpsMmSum) / 4e8 + feature(f, Feature::MemTensorSum) / 2e6;
  t.small_gamma_mb = 150.0 + 4e-6 * (feature(f, Feature::MemW) + 2.0 * feature(f, Feature::MemOfmGrad));
  t.small_phi_ms = 3.0 + feature(f, Feature::OpsMmFwd) / 5e8 + feature(f, Feature::MemOfmGrad) / 4e6;
  return t;
}

std::vector<ProfileRecord> synthesize_dataset(const ProfilingPlan& plan, const NetworkCatalog& networks,
                                              const SyntheticDeviceConfig& config) {
  if (!(config.gamma_noise >= 0.0 && config.gamma_noise < 1.0) ||
      !(config.phi_noise >= 0.0 && config.phi_noise < 1.0)) {
    throw PlanError("synthetic noise must lie in [0, 1)");
  }
  using VariantKey = std::tuple<std::string, int, std::string, std::uint64_t>;
  std::map<VariantKey, NetworkSpec> variants;
  std::vector<ProfileRecord> out;
  out.reserve(plan.entries.size());
  for (const auto& e : plan.entries) {
    VariantKey vk{e.network, e.pruning_level, e.strategy, e.seed};
    auto it = variants.find(vk);
    if (it == variants.end()) {
      it = variants.emplace(vk, reconstruct_variant(networks, e.network, e.pruning_level, e.strategy, e.seed)).first;
    }
    const auto t = synthetic_ground_truth(it->second, e.bs);
    std::mt19937_64 rng(record_seed(config.seed, e));
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    const double n_gamma = unit(rng), n_phi = unit(rng), n_sgamma = unit(rng), n_sphi = unit(rng);

    ProfileRecord r;
    r.network = e.network;
    r.pruning_level = e.pruning_level;
    r.strategy = e.strategy;
    r.seed = e.seed;
    r.bs = e.bs;
    r.gamma_mb = t.gamma_mb * (1.0 + config.gamma_noise * n_gamma);
    r.phi_ms = t.phi_ms * (1.0 + config.phi_noise * n_phi);
    if (config.inference_columns) {
      r.small_gamma_mb = t.small_gamma_mb * (1.0 + config.gamma_noise * n_sgamma);
      r.small_phi_ms = t.small_phi_ms * (1.0 + config.phi_noise * n_sphi);
    }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace trainperf
