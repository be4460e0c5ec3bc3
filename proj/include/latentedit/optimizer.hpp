#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "latentedit/latent.hpp"

namespace latentedit {

struct Evaluation {
  double loss = 0.0;
  EditDirection gradient = EditDirection::zeros();
};

/// A differentiable loss over edit directions. `evaluate` must be
/// deterministic and safe to call concurrently.
struct Objective {
  std::function<Evaluation(const EditDirection&)> evaluate;
  std::string description;
};

/// Gradient step on loss + mu * ||d||_2^2.
struct L2PenaltyStrategy {
  double mu = 0.0;
  bool operator==(const L2PenaltyStrategy&) const = default;
};

/// l2_penalty: dense shrinkage; l1_prox: proximal gradient with
/// soft-thresholding; hard_mask: projected gradient onto the active layers.
using RegularizerStrategy = std::variant<L2PenaltyStrategy, L1ProxStrategy, HardMaskStrategy>;

std::string strategy_name(const RegularizerStrategy& strategy);

struct OptimizerConfig {
  double step_size = 0.05;
  std::size_t iterations = 500;
  RegularizerStrategy strategy = L2PenaltyStrategy{};
  std::uint64_t seed = 0;
  /// Standard deviation of the seeded random initialization; 0 means the
  /// zero direction.
  double init_scale = 0.0;

  void validate() const;
};

struct TraceEntry {
  std::size_t iteration = 0;
  double loss = 0.0;  // objective plus the strategy's penalty term
  double l1 = 0.0;    // mean |d|
  double l2 = 0.0;    // Euclidean norm of d
  LayerValues layer_mean_abs{};
};

struct OptimizationResult {
  EditDirection direction = EditDirection::zeros();
  /// Entry k describes the iterate after k updates; size is iterations + 1.
  std::vector<TraceEntry> trace;
};

/// The initial direction implied by cfg.seed / cfg.init_scale.
EditDirection initial_direction(const OptimizerConfig& cfg);

/// Runs plain (proximal / projected) gradient descent. Non-finite losses,
/// gradients or iterates raise kNonFinite carrying the iteration index.
OptimizationResult optimize_direction(const Objective& objective, const OptimizerConfig& cfg,
                                      const EditDirection& init);

/// Central differences on the listed flat coordinates (layer * 512 + channel);
/// other coordinates are left at zero.
EditDirection finite_difference_gradient(const Objective& objective, const EditDirection& d,
                                         double h, std::span<const std::size_t> coordinates,
                                         Execution exec = Execution::kParallel);

/// Central differences on every coordinate.
EditDirection finite_difference_gradient(const Objective& objective, const EditDirection& d,
                                         double h, Execution exec = Execution::kParallel);

/// `count` distinct flat coordinates drawn with `seed`, sorted ascending.
std::vector<std::size_t> sample_coordinates(std::size_t count, std::uint64_t seed);

}  // namespace latentedit
