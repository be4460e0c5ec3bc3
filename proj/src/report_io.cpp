#include "latentedit/report_io.hpp"

#include <cstdio>

namespace latentedit {

namespace {

const char* kL1Convention = "mean absolute value over all 18x512 entries";
const char* kL2Convention = "Euclidean norm over all 18x512 entries";

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string to_string(CheckStatus status) {
  switch (status) {
    case CheckStatus::kPass: return "pass";
    case CheckStatus::kFail: return "fail";
    case CheckStatus::kSkipped: return "skipped";
  }
  return "unknown";
}

nlohmann::json to_json(const EditMetrics& metrics) {
  nlohmann::json j;
  j["l1_mean_abs"] = metrics.l1_mean_abs;
  j["l2_euclidean"] = metrics.l2_euclidean;
  j["per_layer_mean_abs"] = metrics.per_layer_mean_abs;
  if (metrics.leakage) j["attribute_deltas"] = *metrics.leakage;
  return j;
}

nlohmann::json to_json(const ReferenceValues& reference) {
  return {
      {"note", "reported on the full StyleGAN2 pipeline; display only, not produced here"},
      {"baseline", {{"l1_mean_abs", reference.baseline_l1}, {"l2_euclidean", reference.baseline_l2}}},
      {"improved", {{"l1_mean_abs", reference.improved_l1}, {"l2_euclidean", reference.improved_l2}}},
  };
}

nlohmann::json to_json(const ComparisonReport& report) {
  nlohmann::json j;
  j["conventions"] = {{"l1_mean_abs", kL1Convention}, {"l2_euclidean", kL2Convention}};
  if (report.target_attribute) j["target_attribute"] = *report.target_attribute;

  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : report.rows) {
    nlohmann::json row = to_json(r.metrics);
    row["strategy"] = r.strategy;
    if (r.non_target_leakage) row["non_target_leakage"] = *r.non_target_leakage;
    if (r.trace) {
      row["trace"] = {{"iterations", r.trace->iterations},
                      {"initial_loss", r.trace->initial_loss},
                      {"final_loss", r.trace->final_loss}};
    }
    rows.push_back(std::move(row));
  }
  j["strategies"] = std::move(rows);

  nlohmann::json rankings = nlohmann::json::array();
  for (const auto& r : report.rankings) {
    rankings.push_back({{"metric", r.metric},
                        {"ascending", r.ascending},
                        {"best", r.best},
                        {"tie", r.tie}});
  }
  j["rankings"] = std::move(rankings);

  nlohmann::json checks = nlohmann::json::array();
  for (const auto& c : report.checks) {
    checks.push_back({{"name", c.name}, {"status", to_string(c.status)}, {"detail", c.detail}});
  }
  j["checks"] = std::move(checks);
  j["degenerate"] = report.degenerate;
  if (report.reference) j["reference"] = to_json(*report.reference);
  return j;
}

void write_trace_csv(std::ostream& out, std::span<const TraceEntry> trace) {
  out << "iteration,loss,l1,l2\n";
  for (const auto& e : trace) {
    out << e.iteration << ',' << num(e.loss) << ',' << num(e.l1) << ',' << num(e.l2) << '\n';
  }
}

void write_per_layer_csv(std::ostream& out, const ComparisonReport& report) {
  out << "layer";
  for (const auto& r : report.rows) out << ',' << r.strategy;
  out << '\n';
  for (std::size_t i = 0; i < kNumLayers; ++i) {
    out << i;
    for (const auto& r : report.rows) out << ',' << num(r.metrics.per_layer_mean_abs[i]);
    out << '\n';
  }
}

void write_sample_metrics_csv(std::ostream& out, std::span<const EditMetrics> metrics) {
  out << "sample,l1,l2";
  for (std::size_t i = 0; i < kNumLayers; ++i) out << ",layer_" << i;
  out << '\n';
  for (std::size_t n = 0; n < metrics.size(); ++n) {
    out << n << ',' << num(metrics[n].l1_mean_abs) << ',' << num(metrics[n].l2_euclidean);
    for (double v : metrics[n].per_layer_mean_abs) out << ',' << num(v);
    out << '\n';
  }
}

}  // namespace latentedit
