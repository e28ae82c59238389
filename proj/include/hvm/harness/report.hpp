#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hvm/harness/stats.hpp"

namespace hvm::harness {

/// Nested JSON document with sections trace_id, mode, aggregate, processes,
/// system and config. Key names are listed in the README.
std::string report_json(const StatsReport& report);

/// Flat `metric,value` CSV of every numeric leaf of the JSON document, with
/// dotted paths as metric names. The config section is omitted.
std::string report_csv(const StatsReport& report);

/// Dotted-path numeric leaves of a report document, in document order,
/// excluding the config section. Throws Error on malformed JSON.
std::vector<std::pair<std::string, double>> report_metrics(std::string_view json);

struct Delta {
    std::string metric;
    double a = 0;
    double b = 0;
    double difference = 0;
    /// b / a; empty when a is zero.
    std::optional<double> ratio;
};

/// Per-metric comparison of two report documents. Throws Error when they
/// were produced from different traces or do not share a schema.
std::vector<Delta> compare_reports(std::string_view json_a, std::string_view json_b);

/// `metric,a,b,difference,ratio` rows; a zero denominator prints "undefined".
std::string delta_csv(const std::vector<Delta>& deltas);

/// Shortest text that reads back to the same double.
std::string format_number(double v);

}  // namespace hvm::harness
