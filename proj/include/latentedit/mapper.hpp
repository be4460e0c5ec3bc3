#pragma once

// Inference-only feed-forward mapper predicting an edit direction from a
// latent code.
//
// Weight file layout (little-endian throughout):
//
//   magic        6 bytes  "LFMAP1"
//   group_count  u32      at most 3
//   per group:
//     assigned_count  u32
//     layer indices   u32 x assigned_count   (0..17, disjoint across groups)
//     layer_count     u32                    (>= 1)
//     per affine layer:
//       rows          u32                    output width
//       cols          u32                    input width
//       activation    u8                     0 linear, 1 relu, 2 leaky-relu(0.2)
//       weights       f64 x rows*cols        row-major
//       bias          f64 x rows
//
// Each assigned latent row (512 wide) runs through its group's chain
// y = act(W x + b); unassigned rows map to zero.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "latentedit/latent.hpp"

namespace latentedit {

enum class Activation : std::uint8_t { kLinear = 0, kRelu = 1, kLeakyRelu = 2 };

inline constexpr double kLeakyReluSlope = 0.2;
inline constexpr std::size_t kMaxMapperGroups = 3;

struct AffineLayer {
  std::size_t rows = 0;
  std::size_t cols = 0;
  Activation activation = Activation::kLinear;
  std::vector<double> weights;  // rows x cols, row-major
  std::vector<double> bias;     // rows
};

struct MapperGroup {
  std::vector<std::size_t> layers;
  std::vector<AffineLayer> network;
};

class MapperModel {
 public:
  /// Validates dimensions, group assignment and finiteness.
  static MapperModel create(std::vector<MapperGroup> groups);

  const std::vector<MapperGroup>& groups() const { return groups_; }

  /// Index of the group processing `layer`, if any.
  std::optional<std::size_t> group_of(std::size_t layer) const;

 private:
  MapperModel() = default;

  std::vector<MapperGroup> groups_;
  std::array<int, kNumLayers> group_of_layer_{};
};

MapperModel load_mapper(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> serialize_mapper(const MapperModel& model);

EditDirection mapper_forward(const MapperModel& model, const LatentCode& w,
                             Execution exec = Execution::kParallel);

/// Forward pass over many codes; output order follows input order.
std::vector<EditDirection> mapper_forward_batch(const MapperModel& model,
                                                std::span<const LatentCode> codes,
                                                Execution exec = Execution::kParallel);

}  // namespace latentedit
