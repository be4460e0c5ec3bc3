#pragma once

#include <array>
#include <bitset>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "latentedit/error.hpp"

namespace latentedit {

// W+ geometry: one 512-wide style vector per synthesis layer.
inline constexpr std::size_t kNumLayers = 18;
inline constexpr std::size_t kChannels = 512;
inline constexpr std::size_t kEntries = kNumLayers * kChannels;

using LayerValues = std::array<double, kNumLayers>;

/// Selects between the OpenMP kernels and the serial reference path. Both
/// produce bit-identical results; the serial path exists for testing and
/// benchmarking.
enum class Execution { kParallel, kSerial };

/// Throws kNonFinite naming the first offending layer/channel.
void require_finite(std::span<const double> grid, std::string_view what);

namespace detail {

/// Immutable 18x512 grid of finite doubles, row-major by layer.
template <typename Tag>
class LayerGrid {
 public:
  static LayerGrid zeros() { return LayerGrid(std::vector<double>(kEntries, 0.0)); }

  static LayerGrid filled(double value) {
    return from_values(std::vector<double>(kEntries, value));
  }

  static LayerGrid from_values(std::vector<double> values) {
    if (values.size() != kEntries) {
      throw Error(ErrorCode::kShapeMismatch,
                  "expected " + std::to_string(kEntries) + " entries (18x512), got " +
                      std::to_string(values.size()));
    }
    require_finite(values, Tag::kName);
    return LayerGrid(std::move(values));
  }

  static LayerGrid from_values(std::span<const double> values) {
    return from_values(std::vector<double>(values.begin(), values.end()));
  }

  double at(std::size_t layer, std::size_t channel) const {
    return values_.at(layer * kChannels + channel);
  }

  std::span<const double> row(std::size_t layer) const {
    if (layer >= kNumLayers) {
      throw Error(ErrorCode::kInvalidArgument, "layer index out of range",
                  {.layer = layer});
    }
    return std::span<const double>(values_).subspan(layer * kChannels, kChannels);
  }

  std::span<const double> values() const { return values_; }

  /// Moves the storage out; the grid is left empty and must not be used.
  std::vector<double> release() && { return std::move(values_); }

  bool operator==(const LayerGrid&) const = default;

 private:
  explicit LayerGrid(std::vector<double> values) : values_(std::move(values)) {}

  std::vector<double> values_;
};

struct LatentTag {
  static constexpr const char* kName = "latent code";
};
struct DirectionTag {
  static constexpr const char* kName = "edit direction";
};

}  // namespace detail

/// A point w in W+.
using LatentCode = detail::LayerGrid<detail::LatentTag>;
/// An edit direction, same geometry as LatentCode.
using EditDirection = detail::LayerGrid<detail::DirectionTag>;

/// True when the two rows hold the same bit patterns (distinguishes -0.0).
bool rows_bitwise_equal(std::span<const double> a, std::span<const double> b);

/// c * d, entrywise.
EditDirection scale_direction(const EditDirection& d, double c);

/// Partition of the 18 layers into active and locked sets.
class LayerMask {
 public:
  /// Layers 4-7 active; 0-3 and 8-17 locked.
  static LayerMask ultra_strict();
  static LayerMask all_active();
  static LayerMask from_active(std::span<const std::size_t> layers);
  static LayerMask from_active(std::initializer_list<std::size_t> layers);

  /// Parses comma-separated inclusive ranges of active layers, e.g. "4-7"
  /// or "0-3,9,12-13". Whitespace around tokens is ignored.
  static LayerMask parse(std::string_view spec);

  bool is_active(std::size_t layer) const;
  bool is_locked(std::size_t layer) const { return !is_active(layer); }
  std::vector<std::size_t> active_layers() const;
  std::vector<std::size_t> locked_layers() const;
  std::size_t active_count() const { return active_.count(); }

  /// Canonical range form ("4-7"); parse(to_string()) round-trips.
  std::string to_string() const;

  bool operator==(const LayerMask&) const = default;

 private:
  std::bitset<kNumLayers> active_;
};

/// Row i of the result is row i of d if i is active, zeros otherwise.
EditDirection mask_direction(const EditDirection& d, const LayerMask& mask);

struct DenseStrategy {
  bool operator==(const DenseStrategy&) const = default;
};
struct L1ProxStrategy {
  double lambda = 0.0;
  bool operator==(const L1ProxStrategy&) const = default;
};
struct HardMaskStrategy {
  LayerMask mask = LayerMask::ultra_strict();
  bool operator==(const HardMaskStrategy&) const = default;
};

using EditStrategy = std::variant<DenseStrategy, L1ProxStrategy, HardMaskStrategy>;

std::string strategy_name(const EditStrategy& strategy);

struct EditConfig {
  double alpha = 0.1;
  double edit_factor = 3.0;
  EditStrategy strategy = DenseStrategy{};

  /// Throws kInvalidArgument unless alpha > 0, edit_factor is finite and any
  /// prox threshold is >= 0.
  void validate() const;

  /// The combined step alpha * edit_factor applied to the direction.
  double scale() const { return alpha * edit_factor; }
};

/// The strategy's transform of a raw direction: identity for dense,
/// soft-thresholding for l1-prox, row masking for hard-mask.
EditDirection transform_direction(const EditDirection& d, const EditStrategy& strategy);

/// w + alpha * edit_factor * transform(d). Rows the strategy zeroes are copied
/// from w unchanged, so locked layers are bitwise preserved.
LatentCode apply_edit(const LatentCode& w, const EditDirection& d, const EditConfig& cfg);

/// apply_edit over paired codes and directions, fanned out across codes.
std::vector<LatentCode> apply_edit_batch(std::span<const LatentCode> codes,
                                         std::span<const EditDirection> directions,
                                         const EditConfig& cfg,
                                         Execution exec = Execution::kParallel);

}  // namespace latentedit
