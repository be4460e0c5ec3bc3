#include "latentedit/latent.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstring>
#include <exception>

#include "latentedit/kernels.hpp"
#include "latentedit/regularizers.hpp"

namespace latentedit {

void require_finite(std::span<const double> grid, std::string_view what) {
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!std::isfinite(grid[i])) {
      throw Error(ErrorCode::kNonFinite, std::string(what) + " contains a non-finite entry",
                  {.layer = i / kChannels, .channel = i % kChannels});
    }
  }
}

bool rows_bitwise_equal(std::span<const double> a, std::span<const double> b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size_bytes()) == 0;
}

EditDirection scale_direction(const EditDirection& d, double c) {
  std::vector<double> out(d.values().begin(), d.values().end());
  for (double& v : out) v *= c;
  return EditDirection::from_values(std::move(out));
}

// ---------------------------------------------------------------------------
// LayerMask

LayerMask LayerMask::ultra_strict() { return from_active({4, 5, 6, 7}); }

LayerMask LayerMask::all_active() {
  LayerMask m;
  m.active_.set();
  return m;
}

LayerMask LayerMask::from_active(std::span<const std::size_t> layers) {
  LayerMask m;
  for (std::size_t layer : layers) {
    if (layer >= kNumLayers) {
      throw Error(ErrorCode::kInvalidArgument, "mask layer index out of range",
                  {.layer = layer});
    }
    m.active_.set(layer);
  }
  return m;
}

LayerMask LayerMask::from_active(std::initializer_list<std::size_t> layers) {
  return from_active(std::span<const std::size_t>(layers.begin(), layers.size()));
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::size_t parse_layer_index(std::string_view token, std::string_view spec) {
  token = trim(token);
  std::size_t value = 0;
  const auto* first = token.data();
  const auto* last = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (token.empty() || ec != std::errc() || ptr != last) {
    throw Error(ErrorCode::kInvalidArgument,
                "bad layer index '" + std::string(token) + "' in mask spec '" +
                    std::string(spec) + "'");
  }
  if (value >= kNumLayers) {
    throw Error(ErrorCode::kInvalidArgument,
                "layer " + std::to_string(value) + " out of range 0-17 in mask spec '" +
                    std::string(spec) + "'");
  }
  return value;
}

}  // namespace

LayerMask LayerMask::parse(std::string_view spec) {
  if (trim(spec).empty()) {
    throw Error(ErrorCode::kInvalidArgument, "empty mask spec");
  }
  LayerMask m;
  std::string_view rest = spec;
  while (true) {
    const auto comma = rest.find(',');
    const std::string_view token = trim(rest.substr(0, comma));
    const auto dash = token.find('-');
    if (dash == std::string_view::npos) {
      m.active_.set(parse_layer_index(token, spec));
    } else {
      const std::size_t lo = parse_layer_index(token.substr(0, dash), spec);
      const std::size_t hi = parse_layer_index(token.substr(dash + 1), spec);
      if (lo > hi) {
        throw Error(ErrorCode::kInvalidArgument,
                    "descending range '" + std::string(token) + "' in mask spec");
      }
      for (std::size_t i = lo; i <= hi; ++i) m.active_.set(i);
    }
    if (comma == std::string_view::npos) break;
    rest.remove_prefix(comma + 1);
  }
  return m;
}

bool LayerMask::is_active(std::size_t layer) const {
  return layer < kNumLayers && active_.test(layer);
}

std::vector<std::size_t> LayerMask::active_layers() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < kNumLayers; ++i)
    if (active_.test(i)) out.push_back(i);
  return out;
}

std::vector<std::size_t> LayerMask::locked_layers() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < kNumLayers; ++i)
    if (!active_.test(i)) out.push_back(i);
  return out;
}

std::string LayerMask::to_string() const {
  std::string out;
  std::size_t i = 0;
  while (i < kNumLayers) {
    if (!active_.test(i)) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j + 1 < kNumLayers && active_.test(j + 1)) ++j;
    if (!out.empty()) out += ',';
    out += std::to_string(i);
    if (j > i) out += '-' + std::to_string(j);
    i = j + 1;
  }
  return out.empty() ? "none" : out;
}

EditDirection mask_direction(const EditDirection& d, const LayerMask& mask) {
  std::vector<double> out(kEntries, 0.0);
  for (std::size_t i = 0; i < kNumLayers; ++i) {
    if (!mask.is_active(i)) continue;
    const auto row = d.row(i);
    std::copy(row.begin(), row.end(), out.begin() + static_cast<std::ptrdiff_t>(i * kChannels));
  }
  return EditDirection::from_values(std::move(out));
}

// ---------------------------------------------------------------------------
// Edit rule

std::string strategy_name(const EditStrategy& strategy) {
  struct Visitor {
    std::string operator()(const DenseStrategy&) const { return "dense"; }
    std::string operator()(const L1ProxStrategy&) const { return "l1_prox"; }
    std::string operator()(const HardMaskStrategy&) const { return "hard_mask"; }
  };
  return std::visit(Visitor{}, strategy);
}

void EditConfig::validate() const {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw Error(ErrorCode::kInvalidArgument, "alpha must be finite and > 0");
  }
  if (!std::isfinite(edit_factor)) {
    throw Error(ErrorCode::kInvalidArgument, "edit factor must be finite");
  }
  if (const auto* prox = std::get_if<L1ProxStrategy>(&strategy)) {
    if (!(prox->lambda >= 0.0) || !std::isfinite(prox->lambda)) {
      throw Error(ErrorCode::kInvalidArgument, "l1-prox lambda must be finite and >= 0");
    }
  }
}

EditDirection transform_direction(const EditDirection& d, const EditStrategy& strategy) {
  struct Visitor {
    const EditDirection& d;
    EditDirection operator()(const DenseStrategy&) const { return d; }
    EditDirection operator()(const L1ProxStrategy& s) const { return soft_threshold(d, s.lambda); }
    EditDirection operator()(const HardMaskStrategy& s) const { return mask_direction(d, s.mask); }
  };
  return std::visit(Visitor{d}, strategy);
}

namespace {

std::bitset<kNumLayers> rows_to_update(const EditStrategy& strategy, double scale) {
  std::bitset<kNumLayers> rows;
  if (scale == 0.0) return rows;
  if (const auto* hard = std::get_if<HardMaskStrategy>(&strategy)) {
    for (std::size_t i : hard->mask.active_layers()) rows.set(i);
  } else {
    rows.set();
  }
  return rows;
}

LatentCode apply_edit_impl(const LatentCode& w, const EditDirection& d, const EditConfig& cfg,
                           Execution exec) {
  const EditDirection transformed = transform_direction(d, cfg.strategy);
  const double scale = cfg.scale();
  const auto rows = rows_to_update(cfg.strategy, scale);

  std::vector<double> out(kEntries);
  if (exec == Execution::kSerial) {
    kernels::serial::scaled_add_rows(w.values(), transformed.values(), scale, rows, out);
  } else {
    kernels::parallel::scaled_add_rows(w.values(), transformed.values(), scale, rows, out);
  }
  try {
    return LatentCode::from_values(std::move(out));
  } catch (const Error& e) {
    throw Error(ErrorCode::kNonFinite, "edited latent overflowed", e.where());
  }
}

}  // namespace

LatentCode apply_edit(const LatentCode& w, const EditDirection& d, const EditConfig& cfg) {
  cfg.validate();
  return apply_edit_impl(w, d, cfg, Execution::kParallel);
}

std::vector<LatentCode> apply_edit_batch(std::span<const LatentCode> codes,
                                         std::span<const EditDirection> directions,
                                         const EditConfig& cfg, Execution exec) {
  if (codes.size() != directions.size()) {
    throw Error(ErrorCode::kShapeMismatch,
                "batch has " + std::to_string(codes.size()) + " codes but " +
                    std::to_string(directions.size()) + " directions");
  }
  cfg.validate();
  std::vector<LatentCode> out(codes.size(), LatentCode::zeros());
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(codes.size());
  const bool parallel = exec == Execution::kParallel;

  // Per-code failures are collected and the lowest index rethrown so error
  // reporting does not depend on thread scheduling.
  std::vector<std::exception_ptr> failures(codes.size());
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      out[i] = apply_edit_impl(codes[i], directions[i], cfg, Execution::kSerial);
    } catch (...) {
      failures[i] = std::current_exception();
    }
  }
  for (const auto& f : failures)
    if (f) std::rethrow_exception(f);
  return out;
}

}  // namespace latentedit
