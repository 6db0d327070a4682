#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "trainperf/exact_count.hpp"
#include "trainperf/network.hpp"

namespace trainperf {

/// Which computation of a convolution layer a feature models.
enum class Pass { Fwd, BwdX, BwdW, Mixed };

enum class FeatureMode { Training, InferenceOnly };

/// How the Winograd features for the (4,3) and (3,2) tilings enter the vector.
/// Summed keeps one column per feature (42 in total); Split keeps a column per
/// tiling (56 in total).
enum class WinogradLayout { Summed, Split };

/// Every analytical feature of one conv layer, in canonical order. Names are
/// stable: serialized forests store them and refuse mismatching vectors.
enum class Feature : std::size_t {
  // tensor allocations
  MemW,
  MemWGrad,
  MemIfmGrad,
  MemOfmGrad,
  MemTensorSum,
  // im2col + matrix multiplication
  MemI2cFwdTotal,
  MemI2cBwdWTotal,
  MemI2cFwdIndex,
  MemI2cBwdXTotal,
  MemI2cBwdXIndex,
  MemI2cTotalSum,
  MemI2cIndexSum,
  OpsMmFwd,
  OpsMmBwdX,
  OpsMmSum,
  // FFT
  MemFftWFwd,
  MemFftIfmFwd,
  MemFftOfmBwdW,
  MemFftWBwdX,
  MemFftOfmBwdX,
  MemFftFwdSum,
  MemFftOfmSum,
  MemFftOfmIfmSum,
  MemFftTotalSum,
  OpsFftFwd,
  OpsFftBwdX,
  OpsFftBwdW,
  OpsFftSum,
  // Winograd
  MemWinoFwd,
  MemWinoBwdX,
  MemWinoBwdW,
  MemWinoFwdBwdXSum,
  MemWinoFwdBwdWSum,
  MemWinoBwdWBwdXSum,
  MemWinoTotalSum,
  OpsWinoFwd,
  OpsWinoBwdX,
  OpsWinoBwdW,
  OpsWinoFwdBwdXSum,
  OpsWinoFwdBwdWSum,
  OpsWinoBwdXBwdWSum,
  OpsWinoTotalSum,
};

inline constexpr std::size_t kFeatureCount = 42;
inline constexpr std::size_t kFirstWinogradFeature = static_cast<std::size_t>(Feature::MemWinoFwd);

struct FeatureInfo {
  std::string_view name;
  Pass pass;
};

const std::array<FeatureInfo, kFeatureCount>& feature_table();
inline const FeatureInfo& info(Feature f) { return feature_table()[static_cast<std::size_t>(f)]; }

/// Per-layer feature values indexed by Feature.
using LayerFeatures = std::array<ExactCount, kFeatureCount>;

struct WinogradTile {
  std::int64_t q;  // output tile
  std::int64_t r;  // filter tile
};
inline constexpr std::array<WinogradTile, 2> kWinogradTiles{{{4, 3}, {3, 2}}};

// Each group writes its own slice of `out`; other entries are left untouched.
void layer_tensor_features(const ConvLayerSpec& layer, std::int64_t bs, LayerFeatures& out);
void layer_matmul_features(const ConvLayerSpec& layer, std::int64_t bs, LayerFeatures& out);
void layer_fft_features(const ConvLayerSpec& layer, std::int64_t bs, LayerFeatures& out);
void layer_winograd_features(const ConvLayerSpec& layer, std::int64_t bs, WinogradTile tile,
                             LayerFeatures& out);

/// All four groups, Winograd evaluated for a single tiling.
LayerFeatures layer_features(const ConvLayerSpec& layer, std::int64_t bs, WinogradTile tile);

/// Column layout of a feature vector.
struct FeatureLayout {
  FeatureMode mode = FeatureMode::Training;
  WinogradLayout winograd = WinogradLayout::Summed;

  std::vector<std::string> names() const;
  /// Version tag stored next to serialized models.
  std::string schema_tag() const;
  std::size_t width() const { return names().size(); }

  friend bool operator==(const FeatureLayout&, const FeatureLayout&) = default;
};

inline constexpr std::string_view kFeatureSchemaVersion = "trainperf-features-1";

/// Features summed over the conv layers of one network at one batch size.
struct FeatureVector {
  FeatureLayout layout;
  std::int64_t bs = 1;
  std::vector<ExactCount> exact;

  std::vector<double> values() const;
  std::vector<std::string> names() const { return layout.names(); }
  std::size_t size() const { return exact.size(); }
};

/// Evaluates every layer formula per conv layer and accumulates in layer order.
FeatureVector extract_features(const NetworkSpec& net, std::int64_t bs,
                               FeatureLayout layout = {});

std::string_view to_string(Pass pass);
std::string_view to_string(FeatureMode mode);
FeatureMode feature_mode_from_string(std::string_view text);

}  // namespace trainperf
