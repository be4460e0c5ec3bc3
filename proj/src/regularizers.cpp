#include "latentedit/regularizers.hpp"

#include <cmath>

namespace latentedit {

namespace {

void require_threshold(double lambda) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw Error(ErrorCode::kInvalidArgument,
                "soft threshold requires a finite lambda >= 0, got " + std::to_string(lambda));
  }
}

}  // namespace

double soft_threshold(double x, double lambda) {
  require_threshold(lambda);
  const double shrunk = std::abs(x) - lambda;
  if (shrunk <= 0.0) return 0.0;
  return std::copysign(shrunk, x);
}

void soft_threshold_inplace(std::span<double> values, double lambda) {
  require_threshold(lambda);
  if (lambda == 0.0) return;
  for (double& v : values) {
    const double shrunk = std::abs(v) - lambda;
    v = shrunk <= 0.0 ? 0.0 : std::copysign(shrunk, v);
  }
}

EditDirection soft_threshold(const EditDirection& d, double lambda) {
  require_threshold(lambda);
  std::vector<double> values(d.values().begin(), d.values().end());
  soft_threshold_inplace(values, lambda);
  return EditDirection::from_values(std::move(values));
}

}  // namespace latentedit
