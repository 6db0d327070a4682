#pragma once

#include <cstdint>

#include "trainperf/dataset.hpp"

// Test scaffolding only. The synthetic device stands in for a profiled board so
// the train/evaluate pipeline can be exercised without hardware. Its numbers are
// not measurements of anything.

namespace trainperf {

struct SyntheticDeviceConfig {
  double gamma_noise = 0.01;  // half-width of the multiplicative uniform noise on memory
  double phi_noise = 0.01;    // same for latency
  bool inference_columns = true;
  std::uint64_t seed = 0;
};

struct SyntheticTargets {
  double gamma_mb;
  double phi_ms;
  double small_gamma_mb;
  double small_phi_ms;
};

/// Noise-free targets. Each is affine in the network's features at batch size bs:
///   gamma = 350 + 4e-6 (3 mem_w + 2 mem_ofm_grad + mem_ifm_grad)
///   phi   = 12 + ops_mm_sum / 4e8 + mem_tensor_sum / 2e6
///   small_gamma = 150 + 4e-6 (mem_w + 2 mem_ofm_grad)
///   small_phi   = 3 + ops_mm_fwd / 5e8 + mem_ofm_grad / 4e6
SyntheticTargets synthetic_ground_truth(const NetworkSpec& net, std::int64_t bs);

/// One record per plan entry, with noise drawn from a generator seeded by
/// (config.seed, record key), so a record's value does not depend on plan order.
std::vector<ProfileRecord> synthesize_dataset(const ProfilingPlan& plan, const NetworkCatalog& networks,
                                              const SyntheticDeviceConfig& config = {});

}  // namespace trainperf
