#pragma once

// Sparsity and magnitude of edit directions, and side-by-side comparison of
// regularization strategies.
//
// Conventions: "L1" is the mean absolute value over all 9216 entries; "L2"
// is the plain Euclidean norm over all entries.

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "latentedit/latent.hpp"
#include "latentedit/optimizer.hpp"
#include "latentedit/toy_oracle.hpp"

namespace latentedit {

struct EditMetrics {
  double l1_mean_abs = 0.0;
  double l2_euclidean = 0.0;
  LayerValues per_layer_mean_abs{};
  std::optional<AttributeScores> leakage;
};

EditMetrics compute_metrics(const EditDirection& d, Execution exec = Execution::kParallel);

/// Also scores the edit apply_edit(w, d, cfg) against the toy generator.
EditMetrics compute_metrics(const EditDirection& d, const ToyGenerator& oracle,
                            const LatentCode& w, const EditConfig& cfg);

std::vector<EditMetrics> compute_metrics_batch(std::span<const EditDirection> directions,
                                               Execution exec = Execution::kParallel);

/// Reference numbers reported for the original and the layer-masked mapper
/// on the real StyleGAN2 pipeline. Carried for display only.
struct ReferenceValues {
  double baseline_l1 = 0.152;
  double improved_l1 = 0.041;
  double baseline_l2 = 23.10;
  double improved_l2 = 13.20;
};

struct StrategyOutcome {
  EditDirection direction = EditDirection::zeros();
  std::vector<TraceEntry> trace;
};

struct TraceSummary {
  std::size_t iterations = 0;
  double initial_loss = 0.0;
  double final_loss = 0.0;
};

struct StrategyRow {
  std::string strategy;
  EditMetrics metrics;
  std::optional<TraceSummary> trace;
  /// Sum of |delta| over non-target attributes, when leakage was scored.
  std::optional<double> non_target_leakage;
};

/// Strategies ordered by one metric, ascending. `best` lists every strategy
/// tied for the minimum; `tie` means all strategies share the same value.
struct MetricRanking {
  std::string metric;
  std::vector<std::string> ascending;
  std::vector<std::string> best;
  bool tie = false;
};

enum class CheckStatus { kPass, kFail, kSkipped };

struct OrderingCheck {
  std::string name;
  CheckStatus status = CheckStatus::kSkipped;
  std::string detail;
};

struct ComparisonReport {
  std::vector<StrategyRow> rows;
  std::vector<MetricRanking> rankings;
  std::vector<OrderingCheck> checks;
  /// Every ranking is a tie (e.g. zero iterations from a shared init).
  bool degenerate = false;
  std::optional<ReferenceValues> reference;
  std::optional<std::string> target_attribute;

  const StrategyRow* row(std::string_view strategy) const;
  bool all_checks_hold() const;
  std::vector<std::string> failed_checks() const;
};

struct LeakageContext {
  const ToyGenerator* generator = nullptr;
  const LatentCode* base = nullptr;
  EditConfig config;
  std::string target_attribute = "hair";
};

struct ComparisonOptions {
  std::optional<LeakageContext> leakage;
  std::optional<ReferenceValues> reference;
};

/// Ranks at least two strategies on l1, l2 and (if scored) non-target
/// leakage. When the canonical labels "hard_mask", "l1_prox" and
/// "l2_penalty" are present, the sparsity-ordering and zero-leakage checks
/// are evaluated and embedded; they are skipped for degenerate reports.
ComparisonReport compare_strategies(const std::map<std::string, StrategyOutcome>& results,
                                    const ComparisonOptions& options = {});

}  // namespace latentedit
