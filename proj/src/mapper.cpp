#include "latentedit/mapper.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <exception>
#include <string>

#include "latentedit/kernels.hpp"

namespace latentedit {

namespace {

constexpr char kMagic[] = "LFMAP1";
constexpr std::size_t kMagicSize = 6;
// No single affine layer in a mapper needs to be wider than this.
constexpr std::size_t kMaxLayerWidth = 1 << 16;

[[noreturn]] void dimension_mismatch(const std::string& what) {
  throw Error(ErrorCode::kDimensionMismatch, what);
}

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::size_t remaining() const { return bytes_.size() - pos_; }

  void need(std::size_t n, const char* what) {
    if (n > remaining()) {
      throw Error(ErrorCode::kTruncated, std::string("weight file ends inside ") + what +
                                             " (need " + std::to_string(n) + " bytes, " +
                                             std::to_string(remaining()) + " left)");
    }
  }

  std::uint8_t u8(const char* what) {
    need(1, what);
    return bytes_[pos_++];
  }

  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | bytes_[pos_ + static_cast<std::size_t>(i)];
    pos_ += 4;
    return v;
  }

  void f64_array(std::size_t count, std::vector<double>& out, const char* what) {
    need(count * 8, what);
    out.resize(count);
    for (std::size_t k = 0; k < count; ++k) {
      std::uint64_t bits = 0;
      for (int i = 7; i >= 0; --i) bits = (bits << 8) | bytes_[pos_ + static_cast<std::size_t>(i)];
      out[k] = std::bit_cast<double>(bits);
      pos_ += 8;
    }
  }

  std::span<const std::uint8_t> take(std::size_t n, const char* what) {
    need(n, what);
    auto out = bytes_.subspan(pos_, n);
    pos_ += n;
    return out;
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

void put_u32(std::vector<std::uint8_t>& out, std::size_t value) {
  auto v = static_cast<std::uint32_t>(value);
  for (int i = 0; i < 4; ++i, v >>= 8) out.push_back(static_cast<std::uint8_t>(v & 0xff));
}

void put_f64(std::vector<std::uint8_t>& out, double value) {
  auto bits = std::bit_cast<std::uint64_t>(value);
  for (int i = 0; i < 8; ++i, bits >>= 8) out.push_back(static_cast<std::uint8_t>(bits & 0xff));
}

inline void activate(std::span<double> values, Activation act) {
  switch (act) {
    case Activation::kLinear:
      return;
    case Activation::kRelu:
      for (double& v : values) v = v > 0.0 ? v : 0.0;
      return;
    case Activation::kLeakyRelu:
      for (double& v : values) v = v > 0.0 ? v : kLeakyReluSlope * v;
      return;
  }
}

void forward_row(const MapperGroup& group, std::span<const double> input, std::span<double> output,
                 std::size_t latent_layer, Execution exec) {
  std::vector<double> current(input.begin(), input.end());
  std::vector<double> next;
  for (std::size_t k = 0; k < group.network.size(); ++k) {
    const AffineLayer& layer = group.network[k];
    next.assign(layer.rows, 0.0);
    kernels::affine(layer.weights, layer.bias, current, next, exec);
    activate(next, layer.activation);
    for (std::size_t r = 0; r < next.size(); ++r) {
      if (!std::isfinite(next[r])) {
        throw Error(ErrorCode::kNonFinite,
                    "mapper activation overflowed in affine layer " + std::to_string(k),
                    {.layer = latent_layer, .channel = r});
      }
    }
    current.swap(next);
  }
  std::copy(current.begin(), current.end(), output.begin());
}

EditDirection forward_impl(const MapperModel& model, const LatentCode& w, Execution exec) {
  std::vector<double> out(kEntries, 0.0);
  for (std::size_t i = 0; i < kNumLayers; ++i) {
    const auto g = model.group_of(i);
    if (!g) continue;
    forward_row(model.groups()[*g], w.row(i),
                std::span<double>(out).subspan(i * kChannels, kChannels), i, exec);
  }
  return EditDirection::from_values(std::move(out));
}

}  // namespace

MapperModel MapperModel::create(std::vector<MapperGroup> groups) {
  if (groups.size() > kMaxMapperGroups) {
    dimension_mismatch("mapper declares " + std::to_string(groups.size()) +
                       " groups; at most 3 are allowed");
  }
  MapperModel model;
  model.group_of_layer_.fill(-1);
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const MapperGroup& group = groups[g];
    const std::string where = "group " + std::to_string(g);
    for (std::size_t layer : group.layers) {
      if (layer >= kNumLayers) {
        dimension_mismatch(where + " assigns latent layer " + std::to_string(layer) +
                           " (valid range 0-17)");
      }
      if (model.group_of_layer_[layer] != -1) {
        dimension_mismatch(where + " reassigns latent layer " + std::to_string(layer));
      }
      model.group_of_layer_[layer] = static_cast<int>(g);
    }
    if (group.network.empty()) dimension_mismatch(where + " has no affine layers");

    std::size_t width = kChannels;
    for (std::size_t k = 0; k < group.network.size(); ++k) {
      const AffineLayer& layer = group.network[k];
      const std::string at = where + " layer " + std::to_string(k);
      if (layer.cols != width) {
        dimension_mismatch(at + " expects input width " + std::to_string(layer.cols) +
                           " but receives " + std::to_string(width));
      }
      if (layer.rows == 0 || layer.weights.size() != layer.rows * layer.cols ||
          layer.bias.size() != layer.rows) {
        dimension_mismatch(at + " weight/bias sizes disagree with " + std::to_string(layer.rows) +
                           "x" + std::to_string(layer.cols));
      }
      if (layer.activation > Activation::kLeakyRelu) {
        throw Error(ErrorCode::kUnknownActivation,
                    at + " activation tag " +
                        std::to_string(static_cast<unsigned>(layer.activation)));
      }
      for (double v : layer.weights) {
        if (!std::isfinite(v)) throw Error(ErrorCode::kNonFinite, at + " has non-finite weights");
      }
      for (double v : layer.bias) {
        if (!std::isfinite(v)) throw Error(ErrorCode::kNonFinite, at + " has non-finite bias");
      }
      width = layer.rows;
    }
    if (width != kChannels) {
      dimension_mismatch(where + " outputs width " + std::to_string(width) + ", expected 512");
    }
  }
  model.groups_ = std::move(groups);
  return model;
}

std::optional<std::size_t> MapperModel::group_of(std::size_t layer) const {
  if (layer >= kNumLayers || group_of_layer_[layer] < 0) return std::nullopt;
  return static_cast<std::size_t>(group_of_layer_[layer]);
}

MapperModel load_mapper(std::span<const std::uint8_t> bytes) {
  ByteReader in(bytes);
  const std::size_t probe = std::min(bytes.size(), kMagicSize);
  if (probe > 0 && std::memcmp(bytes.data(), kMagic, probe) != 0) {
    throw Error(ErrorCode::kInvalidArgument, "not an LFMAP1 weight file");
  }
  in.take(kMagicSize, "magic");

  const std::uint32_t group_count = in.u32("group count");
  if (group_count > kMaxMapperGroups) {
    dimension_mismatch("mapper declares " + std::to_string(group_count) +
                       " groups; at most 3 are allowed");
  }
  std::vector<MapperGroup> groups(group_count);
  for (auto& group : groups) {
    const std::uint32_t assigned = in.u32("assigned layer count");
    if (assigned > kNumLayers) {
      dimension_mismatch("group assigns " + std::to_string(assigned) + " latent layers");
    }
    for (std::uint32_t k = 0; k < assigned; ++k) group.layers.push_back(in.u32("layer index"));

    const std::uint32_t layer_count = in.u32("affine layer count");
    // Every affine layer needs at least its 9-byte descriptor.
    in.need(static_cast<std::size_t>(layer_count) * 9, "affine layer table");
    group.network.resize(layer_count);
    for (auto& layer : group.network) {
      layer.rows = in.u32("rows");
      layer.cols = in.u32("cols");
      if (layer.rows == 0 || layer.cols == 0 || layer.rows > kMaxLayerWidth ||
          layer.cols > kMaxLayerWidth) {
        dimension_mismatch("affine layer of " + std::to_string(layer.rows) + "x" +
                           std::to_string(layer.cols));
      }
      const std::uint8_t tag = in.u8("activation tag");
      if (tag > static_cast<std::uint8_t>(Activation::kLeakyRelu)) {
        throw Error(ErrorCode::kUnknownActivation,
                    "activation tag " + std::to_string(static_cast<unsigned>(tag)));
      }
      layer.activation = static_cast<Activation>(tag);
      in.f64_array(layer.rows * layer.cols, layer.weights, "weights");
      in.f64_array(layer.rows, layer.bias, "bias");
    }
  }
  if (in.remaining() != 0) {
    throw Error(ErrorCode::kDimensionMismatch,
                std::to_string(in.remaining()) + " trailing bytes after the last group");
  }
  return MapperModel::create(std::move(groups));
}

std::vector<std::uint8_t> serialize_mapper(const MapperModel& model) {
  std::vector<std::uint8_t> out(kMagic, kMagic + kMagicSize);
  put_u32(out, model.groups().size());
  for (const auto& group : model.groups()) {
    put_u32(out, group.layers.size());
    for (std::size_t layer : group.layers) put_u32(out, layer);
    put_u32(out, group.network.size());
    for (const auto& layer : group.network) {
      put_u32(out, layer.rows);
      put_u32(out, layer.cols);
      out.push_back(static_cast<std::uint8_t>(layer.activation));
      for (double v : layer.weights) put_f64(out, v);
      for (double v : layer.bias) put_f64(out, v);
    }
  }
  return out;
}

EditDirection mapper_forward(const MapperModel& model, const LatentCode& w, Execution exec) {
  return forward_impl(model, w, exec);
}

std::vector<EditDirection> mapper_forward_batch(const MapperModel& model,
                                                std::span<const LatentCode> codes,
                                                Execution exec) {
  std::vector<EditDirection> out(codes.size(), EditDirection::zeros());
  std::vector<std::exception_ptr> failures(codes.size());
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(codes.size());
  const bool parallel = exec == Execution::kParallel;
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      out[i] = forward_impl(model, codes[i], Execution::kSerial);
    } catch (...) {
      failures[i] = std::current_exception();
    }
  }
  for (const auto& f : failures)
    if (f) std::rethrow_exception(f);
  return out;
}

}  // namespace latentedit
