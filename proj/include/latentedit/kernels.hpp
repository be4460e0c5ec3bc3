#pragma once

// Inner loops over 18x512 grids and dense affine layers.
//
// `parallel::` is the OpenMP implementation used by the library; `serial::`
// is the plain-loop reference kept for tests and benchmarks. Every reduction
// is accumulated per layer in channel order and the layer partials are summed
// in layer order, so the two namespaces agree bit for bit regardless of the
// thread count.

#include <bitset>
#include <cstddef>
#include <span>

#include "latentedit/latent.hpp"

namespace latentedit::kernels {

/// Sum of the 18 per-layer partials in layer order.
double sum_layers(const LayerValues& partials);

namespace serial {

LayerValues layer_abs_sums(std::span<const double> grid);
LayerValues layer_square_sums(std::span<const double> grid);
LayerValues layer_dots(std::span<const double> a, std::span<const double> b);

/// out = w; then out[row] += scale * d[row] for every row set in `rows`.
void scaled_add_rows(std::span<const double> w, std::span<const double> d, double scale,
                     const std::bitset<kNumLayers>& rows, std::span<double> out);

/// output = weights * input + bias, weights row-major (output.size() x input.size()).
void affine(std::span<const double> weights, std::span<const double> bias,
            std::span<const double> input, std::span<double> output);

}  // namespace serial

namespace parallel {

LayerValues layer_abs_sums(std::span<const double> grid);
LayerValues layer_square_sums(std::span<const double> grid);
LayerValues layer_dots(std::span<const double> a, std::span<const double> b);
void scaled_add_rows(std::span<const double> w, std::span<const double> d, double scale,
                     const std::bitset<kNumLayers>& rows, std::span<double> out);
void affine(std::span<const double> weights, std::span<const double> bias,
            std::span<const double> input, std::span<double> output);

}  // namespace parallel

// Dispatch helpers.
LayerValues layer_abs_sums(std::span<const double> grid, Execution exec = Execution::kParallel);
LayerValues layer_square_sums(std::span<const double> grid,
                              Execution exec = Execution::kParallel);
LayerValues layer_dots(std::span<const double> a, std::span<const double> b,
                       Execution exec = Execution::kParallel);
void affine(std::span<const double> weights, std::span<const double> bias,
            std::span<const double> input, std::span<double> output,
            Execution exec = Execution::kParallel);

}  // namespace latentedit::kernels
