#pragma once

#include <json.hpp>

#include "nlflow/config.hpp"
#include "nlflow/metrics.hpp"
#include "nlflow/phantom.hpp"
#include "nlflow/pipeline.hpp"
#include "nlflow/solver_explicit.hpp"

namespace nlflow::report {

using nlohmann::json;

/// Empty optionals become null.
json optional_number(const std::optional<double>& v);

json params_json(const FlowParams& params);
json config_json(const Config& config);
json metrics_json(const MetricsReport& m);
json aggregate_json(const AggregateMetrics& a);
json phantom_json(const PhantomSpec& spec);
json shape_json(const Shape& shape);

/// Iteration counts and violation norms; wall-clock values go to stats_timings_json.
json stats_json(const RunStats& stats);
json stats_timings_json(const RunStats& stats);

/// Per-run deltas, iterations and violations; timings kept under a separate key.
json segment_json(const SegmentResult& result);
json segment_timings_json(const SegmentResult& result);

json comparison_json(const SchemeComparison& c);
json bench_json(const std::vector<BenchRecord>& records);

}  // namespace nlflow::report
