#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "trainperf/network.hpp"

namespace testing_support {

using namespace trainperf;

inline std::filesystem::path networks_dir() { return TRAINPERF_NETWORKS_DIR; }

inline NetworkSpec bundled(const std::string& name) { return load_network(networks_dir() / (name + ".json")); }

inline const std::vector<std::string>& bundled_names() {
  static const std::vector<std::string> names{"resnet18", "mobilenetv2", "squeezenet", "mnasnet"};
  return names;
}

inline std::int64_t uniform(std::mt19937_64& rng, std::int64_t lo, std::int64_t hi) {
  return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng);
}

inline bool chance(std::mt19937_64& rng, double p) { return std::uniform_real_distribution<double>(0, 1)(rng) < p; }

inline ConvLayerSpec random_conv(std::mt19937_64& rng, std::int64_t m, const std::string& id) {
  ConvLayerSpec c;
  c.layer_id = id;
  c.m = m;
  const double kind = std::uniform_real_distribution<double>(0, 1)(rng);
  if (kind < 0.15) {
    c.g = m;
    c.n = m * uniform(rng, 1, 2);
  } else if (kind < 0.3) {
    std::vector<std::int64_t> divisors;
    for (std::int64_t d = 2; d <= m; ++d)
      if (m % d == 0) divisors.push_back(d);
    c.g = divisors.empty() ? 1 : divisors[static_cast<std::size_t>(uniform(rng, 0, divisors.size() - 1))];
    c.n = c.g * uniform(rng, 1, 4);
  } else {
    c.n = uniform(rng, 1, 32);
  }
  c.k = uniform(rng, 1, 3);
  c.s = uniform(rng, 1, 2);
  c.p = uniform(rng, 0, 1);
  c.ip = uniform(rng, c.k, 16);
  return c;
}

/// Random valid DAG mixing conv and shape entries with passthrough, add, and concat merges.
inline NetworkSpec random_network(std::mt19937_64& rng, int max_layers = 12) {
  NetworkSpec net;
  net.name = "random";
  const int count = static_cast<int>(uniform(rng, 1, max_layers));
  for (int i = 0; i < count; ++i) {
    const std::string id = "L" + std::to_string(i);
    std::vector<std::size_t> producers;
    MergeMode mode = MergeMode::Passthrough;
    std::int64_t in_ch = uniform(rng, 1, 16);
    if (i > 0 && !chance(rng, 0.1)) {
      const auto pick = [&] { return static_cast<std::size_t>(uniform(rng, 0, i - 1)); };
      const double r = std::uniform_real_distribution<double>(0, 1)(rng);
      const std::size_t first = pick();
      producers = {first};
      in_ch = output_channels(net.layers[first]);
      if (r < 0.25) {
        for (std::size_t j = 0; j < static_cast<std::size_t>(i); ++j) {
          if (j != first && output_channels(net.layers[j]) == in_ch && producers.size() < 3) producers.push_back(j);
        }
        if (producers.size() > 1) mode = MergeMode::Add;
      } else if (r < 0.45 && i > 1) {
        std::size_t second = pick();
        if (second != first) {
          producers.push_back(second);
          in_ch += output_channels(net.layers[second]);
          mode = MergeMode::Concat;
        }
      }
    }
    if (chance(rng, 0.2)) {
      net.layers.push_back(ShapeLayerSpec{id, in_ch, uniform(rng, 1, 16)});
    } else {
      net.layers.push_back(random_conv(rng, in_ch, id));
    }
    for (std::size_t p : producers) net.edges.push_back({layer_id(net.layers[p]), id, mode});
  }
  return net;
}

inline std::vector<ConvLayerSpec> conv_layers(const NetworkSpec& net) {
  std::vector<ConvLayerSpec> out;
  for (const auto& l : net.layers)
    if (const auto* c = std::get_if<ConvLayerSpec>(&l)) out.push_back(*c);
  return out;
}

/// Window start offsets along one axis, found by sliding over the padded input.
inline std::vector<std::int64_t> window_starts(std::int64_t ip, std::int64_t k, std::int64_t s, std::int64_t p) {
  std::vector<std::int64_t> starts;
  for (std::int64_t t = -p; t + k <= ip + p; t += s) starts.push_back(t);
  return starts;
}

/// Counts obtained by materializing the lowered matrices of a convolution.
struct LoweringCounts {
  std::int64_t op = 0;
  std::int64_t fwd_total = 0;    // elements of the forward lowered input
  std::int64_t fwd_index = 0;    // rows of the forward lowered input
  std::int64_t bwd_w_total = 0;  // elements of one group's lowered input
  std::int64_t bwd_x_total = 0;  // elements of the input-gradient lowered matrix
  std::int64_t bwd_x_index = 0;  // rows of the input-gradient lowered matrix
  std::int64_t ops_fwd = 0;      // multiply-accumulates of the forward product
  std::int64_t ops_bwd_x = 0;    // multiply-accumulates of the input-gradient product
};

inline LoweringCounts brute_force_lowering(const ConvLayerSpec& l, std::int64_t bs) {
  LoweringCounts c;
  const auto starts = window_starts(l.ip, l.k, l.s, l.p);
  c.op = static_cast<std::int64_t>(starts.size());
  const std::int64_t mg = l.m / l.g, ng = l.n / l.g;
  auto pixel = [&](std::int64_t b, std::int64_t ch, std::int64_t y, std::int64_t x) -> std::int64_t {
    if (y < 0 || x < 0 || y >= l.ip || x >= l.ip) return -1;  // padding
    return ((b * l.m + ch) * l.ip + y) * l.ip + x;
  };
  for (std::int64_t b = 0; b < bs; ++b) {
    for (std::int64_t ty : starts) {
      for (std::int64_t tx : starts) {
        std::vector<std::int64_t> row;
        for (std::int64_t ch = 0; ch < l.m; ++ch)
          for (std::int64_t dy = 0; dy < l.k; ++dy)
            for (std::int64_t dx = 0; dx < l.k; ++dx) row.push_back(pixel(b, ch, ty + dy, tx + dx));
        ++c.fwd_index;
        c.fwd_total += static_cast<std::int64_t>(row.size());
        // one group's slice of the row
        c.bwd_w_total += mg * l.k * l.k;
        for (std::int64_t grp = 0; grp < l.g; ++grp) {
          const std::size_t lo = static_cast<std::size_t>(grp * mg * l.k * l.k);
          const std::size_t hi = static_cast<std::size_t>((grp + 1) * mg * l.k * l.k);
          // one multiply-accumulate per (filter of the group, element of its slice)
          for (std::int64_t f = 0; f < ng; ++f)
            for (std::size_t e = lo; e < hi && e < row.size(); ++e) ++c.ops_fwd;
        }
      }
    }
    // Input-gradient lowering: one row per input pixel holding a k x k
    // neighbourhood for each of the m channels.
    for (std::int64_t y = 0; y < l.ip; ++y)
      for (std::int64_t x = 0; x < l.ip; ++x) {
        std::vector<std::int64_t> row;
        for (std::int64_t ch = 0; ch < l.m; ++ch)
          for (std::int64_t dy = 0; dy < l.k; ++dy)
            for (std::int64_t dx = 0; dx < l.k; ++dx) row.push_back(pixel(b, ch, y + dy, x + dx));
        ++c.bwd_x_index;
        c.bwd_x_total += static_cast<std::int64_t>(row.size());
      }
    // Input-gradient product: every input pixel of every channel gathers a
    // k x k neighbourhood from each of the n output-gradient maps.
    for (std::int64_t ch = 0; ch < l.m; ++ch)
      for (std::int64_t y = 0; y < l.ip; ++y)
        for (std::int64_t x = 0; x < l.ip; ++x)
          for (std::int64_t dy = 0; dy < l.k; ++dy)
            for (std::int64_t dx = 0; dx < l.k; ++dx) c.ops_bwd_x += l.n;
  }
  return c;
}

}  // namespace testing_support
