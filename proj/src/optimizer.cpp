#include "latentedit/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>

#include "latentedit/kernels.hpp"
#include "latentedit/random.hpp"
#include "latentedit/regularizers.hpp"

namespace latentedit {

std::string strategy_name(const RegularizerStrategy& strategy) {
  struct Visitor {
    std::string operator()(const L2PenaltyStrategy&) const { return "l2_penalty"; }
    std::string operator()(const L1ProxStrategy&) const { return "l1_prox"; }
    std::string operator()(const HardMaskStrategy&) const { return "hard_mask"; }
  };
  return std::visit(Visitor{}, strategy);
}

void OptimizerConfig::validate() const {
  if (!(step_size > 0.0) || !std::isfinite(step_size)) {
    throw Error(ErrorCode::kInvalidArgument, "step size must be finite and > 0");
  }
  if (!(init_scale >= 0.0) || !std::isfinite(init_scale)) {
    throw Error(ErrorCode::kInvalidArgument, "init scale must be finite and >= 0");
  }
  if (const auto* l2 = std::get_if<L2PenaltyStrategy>(&strategy)) {
    if (!(l2->mu >= 0.0) || !std::isfinite(l2->mu)) {
      throw Error(ErrorCode::kInvalidArgument, "l2 penalty mu must be finite and >= 0");
    }
  }
  if (const auto* l1 = std::get_if<L1ProxStrategy>(&strategy)) {
    if (!(l1->lambda >= 0.0) || !std::isfinite(l1->lambda)) {
      throw Error(ErrorCode::kInvalidArgument, "l1 prox lambda must be finite and >= 0");
    }
  }
}

EditDirection initial_direction(const OptimizerConfig& cfg) {
  cfg.validate();
  if (cfg.init_scale == 0.0) return EditDirection::zeros();
  Rng rng(cfg.seed);
  std::vector<double> values(kEntries);
  for (double& v : values) v = cfg.init_scale * rng.normal();
  return EditDirection::from_values(std::move(values));
}

namespace {

void zero_locked_rows(std::span<double> values, const LayerMask& mask) {
  for (std::size_t i : mask.locked_layers()) {
    std::fill_n(values.begin() + static_cast<std::ptrdiff_t>(i * kChannels), kChannels, 0.0);
  }
}

Evaluation evaluate_at(const Objective& objective, const EditDirection& d, std::size_t iteration) {
  Evaluation ev;
  try {
    ev = objective.evaluate(d);
  } catch (const Error& e) {
    ErrorLocation where = e.where();
    where.iteration = iteration;
    throw Error(e.code(), "objective '" + objective.description + "' failed", where);
  }
  if (!std::isfinite(ev.loss)) {
    throw Error(ErrorCode::kNonFinite, "objective '" + objective.description + "' returned a non-finite loss",
                {.iteration = iteration});
  }
  return ev;
}

TraceEntry make_entry(std::size_t iteration, double loss, const LayerValues& abs_sums, const LayerValues& square_sums) {
  TraceEntry entry;
  entry.iteration = iteration;
  entry.loss = loss;
  entry.l1 = kernels::sum_layers(abs_sums) / static_cast<double>(kEntries);
  entry.l2 = std::sqrt(kernels::sum_layers(square_sums));
  for (std::size_t i = 0; i < kNumLayers; ++i) {
    entry.layer_mean_abs[i] = abs_sums[i] / static_cast<double>(kChannels);
  }
  return entry;
}

}  // namespace

OptimizationResult optimize_direction(const Objective& objective, const OptimizerConfig& cfg,
                                      const EditDirection& init) {
  cfg.validate();
  if (!objective.evaluate) {
    throw Error(ErrorCode::kInvalidArgument, "objective has no evaluate function");
  }

  std::vector<double> d(init.values().begin(), init.values().end());
  const auto* hard = std::get_if<HardMaskStrategy>(&cfg.strategy);
  const auto* l1 = std::get_if<L1ProxStrategy>(&cfg.strategy);
  const auto* l2 = std::get_if<L2PenaltyStrategy>(&cfg.strategy);
  if (hard) zero_locked_rows(d, hard->mask);

  OptimizationResult result;
  result.trace.reserve(cfg.iterations + 1);
  const double eta = cfg.step_size;

  for (std::size_t k = 0;; ++k) {
    const EditDirection current = EditDirection::from_values(d);
    const Evaluation ev = evaluate_at(objective, current, k);

    const LayerValues abs_sums = kernels::layer_abs_sums(d);
    const LayerValues square_sums = kernels::layer_square_sums(d);
    double penalty = 0.0;
    if (l2) penalty = l2->mu * kernels::sum_layers(square_sums);
    if (l1) penalty = l1->lambda * kernels::sum_layers(abs_sums);
    result.trace.push_back(make_entry(k, ev.loss + penalty, abs_sums, square_sums));

    if (k == cfg.iterations) {
      result.direction = current;
      break;
    }

    const auto grad = ev.gradient.values();
    if (l2) {
      const double decay = 2.0 * l2->mu;
      for (std::size_t i = 0; i < kEntries; ++i) d[i] -= eta * (grad[i] + decay * d[i]);
    } else {
      for (std::size_t i = 0; i < kEntries; ++i) d[i] -= eta * grad[i];
    }
    if (l1) soft_threshold_inplace(d, eta * l1->lambda);
    if (hard) zero_locked_rows(d, hard->mask);

    for (std::size_t i = 0; i < kEntries; ++i) {
      if (!std::isfinite(d[i])) {
        throw Error(ErrorCode::kNonFinite, "iterate diverged",
                    {.layer = i / kChannels, .channel = i % kChannels, .iteration = k + 1});
      }
    }
  }
  return result;
}

EditDirection finite_difference_gradient(const Objective& objective, const EditDirection& d,
                                         double h, std::span<const std::size_t> coordinates,
                                         Execution exec) {
  if (!(h > 0.0) || !std::isfinite(h)) {
    throw Error(ErrorCode::kInvalidArgument, "finite-difference step must be finite and > 0");
  }
  for (std::size_t j : coordinates) {
    if (j >= kEntries) {
      throw Error(ErrorCode::kInvalidArgument,
                  "coordinate " + std::to_string(j) + " outside the 18x512 grid");
    }
  }

  std::vector<double> gradient(kEntries, 0.0);
  std::vector<std::exception_ptr> failures(coordinates.size());
  const auto base = d.values();
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(coordinates.size());
  const bool parallel = exec == Execution::kParallel;

#pragma omp parallel if (parallel)
  {
    std::vector<double> probe(base.begin(), base.end());
#pragma omp for schedule(dynamic, 8)
    for (std::ptrdiff_t k = 0; k < n; ++k) {
      const std::size_t j = coordinates[static_cast<std::size_t>(k)];
      try {
        probe[j] = base[j] + h;
        const double up = objective.evaluate(EditDirection::from_values(probe)).loss;
        probe[j] = base[j] - h;
        const double down = objective.evaluate(EditDirection::from_values(probe)).loss;
        probe[j] = base[j];
        gradient[j] = (up - down) / (2.0 * h);
      } catch (...) {
        probe[j] = base[j];
        failures[static_cast<std::size_t>(k)] = std::current_exception();
      }
    }
  }
  for (const auto& f : failures)
    if (f) std::rethrow_exception(f);
  return EditDirection::from_values(std::move(gradient));
}

EditDirection finite_difference_gradient(const Objective& objective, const EditDirection& d,
                                         double h, Execution exec) {
  std::vector<std::size_t> all(kEntries);
  std::iota(all.begin(), all.end(), std::size_t{0});
  return finite_difference_gradient(objective, d, h, all, exec);
}

std::vector<std::size_t> sample_coordinates(std::size_t count, std::uint64_t seed) {
  if (count > kEntries) {
    throw Error(ErrorCode::kInvalidArgument, "cannot sample more than 9216 coordinates");
  }
  // Partial Fisher-Yates with the platform-stable generator.
  std::vector<std::size_t> pool(kEntries);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + rng.index(kEntries - i);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(count);
  std::sort(pool.begin(), pool.end());
  return pool;
}

}  // namespace latentedit
