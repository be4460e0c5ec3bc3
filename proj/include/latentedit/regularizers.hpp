#pragma once

#include "latentedit/latent.hpp"

namespace latentedit {

/// Proximal operator of lambda * |.|: sign(x) * max(|x| - lambda, 0).
double soft_threshold(double x, double lambda);

/// Entrywise soft-thresholding. Throws kInvalidArgument for lambda < 0.
EditDirection soft_threshold(const EditDirection& d, double lambda);

/// In-place variant used inside the optimizer loop.
void soft_threshold_inplace(std::span<double> values, double lambda);

}  // namespace latentedit
