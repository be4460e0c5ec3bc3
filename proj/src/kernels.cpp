#include "latentedit/kernels.hpp"

#include <cassert>
#include <cmath>

namespace latentedit::kernels {

namespace {

// Below this many multiply-adds an affine layer is not worth a parallel region.
constexpr std::size_t kAffineParallelThreshold = 1 << 15;

inline double layer_abs_sum(const double* row) {
  double acc = 0.0;
  for (std::size_t c = 0; c < kChannels; ++c) acc += std::abs(row[c]);
  return acc;
}

inline double layer_square_sum(const double* row) {
  double acc = 0.0;
  for (std::size_t c = 0; c < kChannels; ++c) acc += row[c] * row[c];
  return acc;
}

inline double layer_dot(const double* a, const double* b) {
  double acc = 0.0;
  for (std::size_t c = 0; c < kChannels; ++c) acc += a[c] * b[c];
  return acc;
}

inline void add_row(const double* w, const double* d, double scale, bool active, double* out) {
  if (active) {
    for (std::size_t c = 0; c < kChannels; ++c) out[c] = w[c] + scale * d[c];
  } else {
    for (std::size_t c = 0; c < kChannels; ++c) out[c] = w[c];
  }
}

inline double affine_row(const double* weights_row, double bias, const double* input,
                         std::size_t cols) {
  double acc = bias;
  for (std::size_t j = 0; j < cols; ++j) acc += weights_row[j] * input[j];
  return acc;
}

}  // namespace

double sum_layers(const LayerValues& partials) {
  double total = 0.0;
  for (double p : partials) total += p;
  return total;
}

namespace serial {

LayerValues layer_abs_sums(std::span<const double> grid) {
  assert(grid.size() == kEntries);
  LayerValues out{};
  for (std::size_t i = 0; i < kNumLayers; ++i) out[i] = layer_abs_sum(grid.data() + i * kChannels);
  return out;
}

LayerValues layer_square_sums(std::span<const double> grid) {
  assert(grid.size() == kEntries);
  LayerValues out{};
  for (std::size_t i = 0; i < kNumLayers; ++i) {
    out[i] = layer_square_sum(grid.data() + i * kChannels);
  }
  return out;
}

LayerValues layer_dots(std::span<const double> a, std::span<const double> b) {
  assert(a.size() == kEntries && b.size() == kEntries);
  LayerValues out{};
  for (std::size_t i = 0; i < kNumLayers; ++i) {
    out[i] = layer_dot(a.data() + i * kChannels, b.data() + i * kChannels);
  }
  return out;
}

void scaled_add_rows(std::span<const double> w, std::span<const double> d, double scale,
                     const std::bitset<kNumLayers>& rows, std::span<double> out) {
  assert(w.size() == kEntries && d.size() == kEntries && out.size() == kEntries);
  for (std::size_t i = 0; i < kNumLayers; ++i) {
    const std::size_t off = i * kChannels;
    add_row(w.data() + off, d.data() + off, scale, rows.test(i), out.data() + off);
  }
}

void affine(std::span<const double> weights, std::span<const double> bias,
            std::span<const double> input, std::span<double> output) {
  const std::size_t rows = output.size();
  const std::size_t cols = input.size();
  assert(weights.size() == rows * cols && bias.size() == rows);
  for (std::size_t r = 0; r < rows; ++r) {
    output[r] = affine_row(weights.data() + r * cols, bias[r], input.data(), cols);
  }
}

}  // namespace serial

namespace parallel {

LayerValues layer_abs_sums(std::span<const double> grid) {
  assert(grid.size() == kEntries);
  LayerValues out{};
  const double* data = grid.data();
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < kNumLayers; ++i) out[i] = layer_abs_sum(data + i * kChannels);
  return out;
}

LayerValues layer_square_sums(std::span<const double> grid) {
  assert(grid.size() == kEntries);
  LayerValues out{};
  const double* data = grid.data();
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < kNumLayers; ++i) out[i] = layer_square_sum(data + i * kChannels);
  return out;
}

LayerValues layer_dots(std::span<const double> a, std::span<const double> b) {
  assert(a.size() == kEntries && b.size() == kEntries);
  LayerValues out{};
  const double* pa = a.data();
  const double* pb = b.data();
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < kNumLayers; ++i) {
    out[i] = layer_dot(pa + i * kChannels, pb + i * kChannels);
  }
  return out;
}

void scaled_add_rows(std::span<const double> w, std::span<const double> d, double scale,
                     const std::bitset<kNumLayers>& rows, std::span<double> out) {
  assert(w.size() == kEntries && d.size() == kEntries && out.size() == kEntries);
  const double* pw = w.data();
  const double* pd = d.data();
  double* po = out.data();
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < kNumLayers; ++i) {
    const std::size_t off = i * kChannels;
    add_row(pw + off, pd + off, scale, rows.test(i), po + off);
  }
}

void affine(std::span<const double> weights, std::span<const double> bias,
            std::span<const double> input, std::span<double> output) {
  const std::size_t rows = output.size();
  const std::size_t cols = input.size();
  assert(weights.size() == rows * cols && bias.size() == rows);
  const double* pw = weights.data();
  const double* pb = bias.data();
  const double* px = input.data();
  double* py = output.data();
#pragma omp parallel for schedule(static) if (rows * cols >= kAffineParallelThreshold)
  for (std::size_t r = 0; r < rows; ++r) py[r] = affine_row(pw + r * cols, pb[r], px, cols);
}

}  // namespace parallel

LayerValues layer_abs_sums(std::span<const double> grid, Execution exec) {
  return exec == Execution::kSerial ? serial::layer_abs_sums(grid)
                                    : parallel::layer_abs_sums(grid);
}

LayerValues layer_square_sums(std::span<const double> grid, Execution exec) {
  return exec == Execution::kSerial ? serial::layer_square_sums(grid)
                                    : parallel::layer_square_sums(grid);
}

LayerValues layer_dots(std::span<const double> a, std::span<const double> b, Execution exec) {
  return exec == Execution::kSerial ? serial::layer_dots(a, b) : parallel::layer_dots(a, b);
}

void affine(std::span<const double> weights, std::span<const double> bias,
            std::span<const double> input, std::span<double> output, Execution exec) {
  if (exec == Execution::kSerial) {
    serial::affine(weights, bias, input, output);
  } else {
    parallel::affine(weights, bias, input, output);
  }
}

}  // namespace latentedit::kernels
