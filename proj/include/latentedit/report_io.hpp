#pragma once

#include <ostream>
#include <span>

#include <json.hpp>

#include "latentedit/metrics.hpp"
#include "latentedit/optimizer.hpp"

namespace latentedit {

nlohmann::json to_json(const EditMetrics& metrics);
nlohmann::json to_json(const ReferenceValues& reference);
nlohmann::json to_json(const ComparisonReport& report);

std::string to_string(CheckStatus status);

/// Optimizer trace, one row per iteration: iteration,loss,l1,l2
void write_trace_csv(std::ostream& out, std::span<const TraceEntry> trace);

/// Per-layer mean |d| for every strategy: layer,<strategy>...
void write_per_layer_csv(std::ostream& out, const ComparisonReport& report);

/// Batch metrics indexed by sample: sample,l1,l2,layer_0..layer_17
void write_sample_metrics_csv(std::ostream& out, std::span<const EditMetrics> metrics);

}  // namespace latentedit
