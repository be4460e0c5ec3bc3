#include "latentedit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <sstream>

#include "latentedit/kernels.hpp"

namespace latentedit {

EditMetrics compute_metrics(const EditDirection& d, Execution exec) {
  const LayerValues abs_sums = kernels::layer_abs_sums(d.values(), exec);
  const LayerValues square_sums = kernels::layer_square_sums(d.values(), exec);
  EditMetrics m;
  m.l1_mean_abs = kernels::sum_layers(abs_sums) / static_cast<double>(kEntries);
  m.l2_euclidean = std::sqrt(kernels::sum_layers(square_sums));
  for (std::size_t i = 0; i < kNumLayers; ++i) {
    m.per_layer_mean_abs[i] = abs_sums[i] / static_cast<double>(kChannels);
  }
  return m;
}

EditMetrics compute_metrics(const EditDirection& d, const ToyGenerator& oracle,
                            const LatentCode& w, const EditConfig& cfg) {
  EditMetrics m = compute_metrics(d);
  m.leakage = leakage_report(oracle, w, d, cfg);
  return m;
}

std::vector<EditMetrics> compute_metrics_batch(std::span<const EditDirection> directions,
                                               Execution exec) {
  std::vector<EditMetrics> out(directions.size());
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(directions.size());
  const bool parallel = exec == Execution::kParallel;
#pragma omp parallel for schedule(static) if (parallel)
  for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = compute_metrics(directions[i], Execution::kSerial);
  return out;
}

// ---------------------------------------------------------------------------
// Comparison

const StrategyRow* ComparisonReport::row(std::string_view strategy) const {
  for (const auto& r : rows)
    if (r.strategy == strategy) return &r;
  return nullptr;
}

bool ComparisonReport::all_checks_hold() const {
  return std::none_of(checks.begin(), checks.end(),
                      [](const OrderingCheck& c) { return c.status == CheckStatus::kFail; });
}

std::vector<std::string> ComparisonReport::failed_checks() const {
  std::vector<std::string> out;
  for (const auto& c : checks)
    if (c.status == CheckStatus::kFail) out.push_back(c.name);
  return out;
}

namespace {

MetricRanking rank(const std::string& metric, const std::vector<StrategyRow>& rows,
                   double (*value)(const StrategyRow&)) {
  std::vector<const StrategyRow*> order;
  for (const auto& r : rows) order.push_back(&r);
  std::stable_sort(order.begin(), order.end(),
                   [&](const StrategyRow* a, const StrategyRow* b) { return value(*a) < value(*b); });
  MetricRanking ranking;
  ranking.metric = metric;
  for (const auto* r : order) ranking.ascending.push_back(r->strategy);
  const double best = value(*order.front());
  for (const auto* r : order)
    if (value(*r) == best) ranking.best.push_back(r->strategy);
  ranking.tie = ranking.best.size() == rows.size();
  return ranking;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

OrderingCheck strictly_less(const std::string& metric, const StrategyRow& lo, const StrategyRow& hi,
                            double lo_value, double hi_value) {
  OrderingCheck check;
  check.name = metric + ": " + lo.strategy + " < " + hi.strategy;
  check.status = lo_value < hi_value ? CheckStatus::kPass : CheckStatus::kFail;
  check.detail = fmt(lo_value) + " vs " + fmt(hi_value);
  return check;
}

}  // namespace

ComparisonReport compare_strategies(const std::map<std::string, StrategyOutcome>& results,
                                    const ComparisonOptions& options) {
  if (results.size() < 2) {
    throw Error(ErrorCode::kInvalidArgument, "comparison needs at least two strategies");
  }
  if (options.leakage && (!options.leakage->generator || !options.leakage->base)) {
    throw Error(ErrorCode::kInvalidArgument, "leakage context needs a generator and a base code");
  }

  ComparisonReport report;
  report.reference = options.reference;
  if (options.leakage) report.target_attribute = options.leakage->target_attribute;

  for (const auto& [name, outcome] : results) {
    StrategyRow row;
    row.strategy = name;
    if (options.leakage) {
      const auto& ctx = *options.leakage;
      row.metrics = compute_metrics(outcome.direction, *ctx.generator, *ctx.base, ctx.config);
      double leak = 0.0;
      for (const auto& [attr, delta] : *row.metrics.leakage)
        if (attr != ctx.target_attribute) leak += std::abs(delta);
      row.non_target_leakage = leak;
    } else {
      row.metrics = compute_metrics(outcome.direction);
    }
    if (!outcome.trace.empty()) {
      row.trace = TraceSummary{outcome.trace.back().iteration, outcome.trace.front().loss,
                               outcome.trace.back().loss};
    }
    report.rows.push_back(std::move(row));
  }

  report.rankings.push_back(rank("l1_mean_abs", report.rows,
                                 [](const StrategyRow& r) { return r.metrics.l1_mean_abs; }));
  report.rankings.push_back(rank("l2_euclidean", report.rows,
                                 [](const StrategyRow& r) { return r.metrics.l2_euclidean; }));
  if (options.leakage) {
    report.rankings.push_back(rank("non_target_leakage", report.rows,
                                   [](const StrategyRow& r) { return *r.non_target_leakage; }));
  }
  report.degenerate = std::all_of(report.rankings.begin(), report.rankings.end(),
                                  [](const MetricRanking& r) { return r.tie; });

  const StrategyRow* hard = report.row("hard_mask");
  const StrategyRow* l1 = report.row("l1_prox");
  const StrategyRow* l2 = report.row("l2_penalty");
  if (hard && l1 && l2) {
    report.checks.push_back(strictly_less("l1_mean_abs", *hard, *l1, hard->metrics.l1_mean_abs,
                                          l1->metrics.l1_mean_abs));
    report.checks.push_back(strictly_less("l1_mean_abs", *l1, *l2, l1->metrics.l1_mean_abs,
                                          l2->metrics.l1_mean_abs));
    report.checks.push_back(strictly_less("l2_euclidean", *hard, *l2, hard->metrics.l2_euclidean,
                                          l2->metrics.l2_euclidean));
    if (hard->non_target_leakage) {
      OrderingCheck check;
      check.name = "non_target_leakage: hard_mask == 0";
      check.status = *hard->non_target_leakage == 0.0 ? CheckStatus::kPass : CheckStatus::kFail;
      check.detail = fmt(*hard->non_target_leakage);
      report.checks.push_back(check);
    }
    if (report.degenerate) {
      for (auto& c : report.checks) {
        c.status = CheckStatus::kSkipped;
        c.detail += " (degenerate: all strategies tie)";
      }
    }
  }
  return report;
}

}  // namespace latentedit
