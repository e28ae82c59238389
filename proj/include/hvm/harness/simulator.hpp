#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hvm/core/trace.hpp"
#include "hvm/harness/config.hpp"
#include "hvm/harness/stats.hpp"

namespace hvm::harness {

struct RunOptions {
    /// Runs the OS invariant checks after every n records; 0 disables them.
    std::uint64_t check_invariants_every = 0;
    /// Sees every record with its translation, in simulation order.
    std::function<void(const TraceRecord&, const mmu::TranslationOutcome&)> observer;
};

/// Simulates `trace` under `cfg`. Processes run round-robin in order of first
/// appearance; each record advances the clock by its instruction count, its
/// translation latency and its data-access latency.
StatsReport run(const SimConfig& cfg, const Trace& trace, const RunOptions& options = {});

/// The trace described by the workload.* keys.
Trace workload_trace(const SimConfig& cfg);

/// One swept key and its values. Parsed from `key=v1,v2,...`; when a value
/// itself contains commas, separate the values with '|' instead.
struct SweepAxis {
    std::string key;
    std::vector<std::string> values;
};
SweepAxis parse_axis(std::string_view text);

using SweepPoint = std::vector<std::pair<std::string, std::string>>;
/// Cartesian product of the axes; the last axis varies fastest.
std::vector<SweepPoint> sweep_points(const std::vector<SweepAxis>& axes);

/// Runs every point of the grid. Without a trace, each point simulates its
/// own workload.* trace. Up to `jobs` points run concurrently; results are
/// returned in point order.
std::vector<StatsReport> sweep(const SimConfig& base, const Trace* trace, const std::vector<SweepAxis>& axes,
                               unsigned jobs = 1);

}  // namespace hvm::harness
