#include "hvm/harness/report.hpp"

#include <charconv>
#include <cstdio>

#include "hvm/core/error.hpp"
#include "json.hpp"

namespace hvm::harness {
namespace {

using Json = nlohmann::ordered_json;

Json rows_json(const RowCounts& r) {
    return Json{{"hits", r.hits}, {"conflicts", r.conflicts}, {"activations", r.activations}};
}

Json process_json(const ProcessStats& p) {
    Json j;
    j["records"] = p.records;
    j["instructions"] = p.instructions;
    j["accesses"] = Json{{"reads", p.reads}, {"writes", p.writes}, {"fetches", p.fetches}};
    j["l1_tlb"] = Json{{"lookups", p.l1_tlb_hits + p.l1_tlb_misses},
                       {"hits", p.l1_tlb_hits},
                       {"misses", p.l1_tlb_misses},
                       {"mpki", p.l1_tlb_mpki()}};
    j["l2_tlb"] = Json{{"lookups", p.l2_tlb_hits + p.l2_tlb_misses},
                       {"hits", p.l2_tlb_hits},
                       {"misses", p.l2_tlb_misses},
                       {"mpki", p.l2_tlb_mpki()}};
    Json resolved;
    for (std::size_t i = 0; i < p.resolved.size(); ++i) {
        resolved[mmu::to_string(static_cast<mmu::ResolvedBy>(i))] = p.resolved[i];
    }
    j["resolved_by"] = resolved;
    j["walks"] = Json{{"ptw", p.ptws}, {"rsw", p.rsws}, {"rsw_tar_probes", p.rsw_tar_probes}, {"faults", p.faults}};
    j["translation"] = Json{{"count", p.translations},
                            {"latency_cycles", p.translation_cycles},
                            {"mean_latency", p.mean_translation_latency()},
                            {"stall_cycles", p.stall_cycles},
                            {"fault_cycles", p.fault_cycles}};
    Json buckets;
    for (std::size_t b = 0; b < LatencyHistogram::kBuckets; ++b) {
        buckets[LatencyHistogram::label(b)] = p.walk_latency.counts()[b];
    }
    j["walk_latency"] = Json{{"count", p.walk_latency.total()}, {"cycles", p.walk_cycles}, {"buckets", buckets}};
    j["metadata"] = Json{{"accesses", p.metadata_accesses},
                         {"serviced", Json{{"l2", p.metadata_serviced[0]},
                                           {"llc", p.metadata_serviced[1]},
                                           {"dram", p.metadata_serviced[2]}}},
                         {"dram_by_kind", Json{{"pt_node", p.metadata_dram_by_kind[0]},
                                               {"tar", p.metadata_dram_by_kind[1]},
                                               {"sf", p.metadata_dram_by_kind[2]}}}};
    j["data"] = Json{{"latency_cycles", p.data_cycles},
                     {"serviced", Json{{"l1d", p.data_serviced[0]},
                                       {"l2", p.data_serviced[1]},
                                       {"llc", p.data_serviced[2]},
                                       {"dram", p.data_serviced[3]}}}};
    j["dram_rows"] = Json{{"metadata", rows_json(p.metadata_rows)}, {"data", rows_json(p.data_rows)}};
    j["context_switch_cycles"] = p.context_switch_cycles;
    return j;
}

Json system_json(const StatsReport& r) {
    const SystemStats& s = r.system;
    Json j;
    j["cycles"] = s.cycles;
    j["epochs_sampled"] = s.epochs_sampled;
    j["metadata_occupancy"] =
        Json{{"l1d", s.metadata_occupancy[0]}, {"l2", s.metadata_occupancy[1]}, {"llc", s.metadata_occupancy[2]}};
    j["swap"] = Json{{"ins", s.swap_ins}, {"outs", s.swap_outs}, {"accesses", r.swap_accesses()}};
    j["allocation"] = Json{{"page_faults", s.page_faults},
                           {"restseg", s.restseg_allocations},
                           {"flexseg", s.flexseg_allocations},
                           {"restseg_swap_evictions", s.restseg_swap_evictions}};
    j["migrations"] = Json{{"count", s.migrations_flex_to_rest + s.migrations_rest_to_flex},
                           {"flex_to_rest", s.migrations_flex_to_rest},
                           {"rest_to_flex", s.migrations_rest_to_flex},
                           {"stalled_accesses", s.migration_stalled_accesses},
                           {"stalled_fraction", r.stalled_access_fraction()},
                           {"stall_cycles", s.migration_stall_cycles},
                           {"flushed_lines", s.migration_flushed_lines}};
    j["restseg_reuse"] = Json{{"0", s.restseg_reuse[0]},
                              {"1_5", s.restseg_reuse[1]},
                              {"6_20", s.restseg_reuse[2]},
                              {"21_inf", s.restseg_reuse[3]}};
    j["context_switches"] = s.context_switches;
    j["quantum_expiries"] = s.quantum_expiries;
    j["pwc"] = Json{{"hits", s.pwc_hits}, {"lookups", s.pwc_lookups}};
    j["tar_cache"] = Json{{"hits", s.tar_cache_hits}, {"lookups", s.tar_cache_lookups}};
    j["sf_cache"] = Json{{"hits", s.sf_cache_hits}, {"lookups", s.sf_cache_lookups}};
    j["dirty_lines_flushed"] = s.dirty_lines_flushed;
    return j;
}

std::string hex64(std::uint64_t v) {
    char buf[19];
    std::snprintf(buf, sizeof buf, "0x%016llx", static_cast<unsigned long long>(v));
    return buf;
}

Json document(const StatsReport& r) {
    Json j;
    j["trace_id"] = hex64(r.trace_id);
    j["mode"] = r.mode;
    j["aggregate"] = process_json(r.aggregate);
    Json procs = Json::object();
    for (const auto& [pid, p] : r.processes) procs[std::to_string(pid)] = process_json(p);
    j["processes"] = procs;
    j["system"] = system_json(r);
    Json cfg = Json::object();
    for (const auto& [k, v] : r.config) cfg[k] = v;
    j["config"] = cfg;
    return j;
}

void flatten(const Json& j, const std::string& prefix, std::vector<std::pair<std::string, double>>& out) {
    if (j.is_object()) {
        for (const auto& [k, v] : j.items()) {
            if (prefix.empty() && k == "config") continue;
            flatten(v, prefix.empty() ? k : prefix + "." + k, out);
        }
    } else if (j.is_number()) {
        out.emplace_back(prefix, j.get<double>());
    }
}

Json parse(std::string_view text) {
    try {
        return Json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("malformed report: ") + e.what());
    }
}

}  // namespace

std::string format_number(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

std::string report_json(const StatsReport& report) { return document(report).dump(2) + "\n"; }

std::string report_csv(const StatsReport& report) {
    const Json doc = document(report);
    std::string out = "metric,value\n";
    out += "trace_id," + doc["trace_id"].get<std::string>() + "\n";
    out += "mode," + report.mode + "\n";
    // Leaves go through the JSON serializer so integers keep full precision.
    auto walk = [&](auto&& self, const Json& j, const std::string& prefix) -> void {
        if (j.is_object()) {
            for (const auto& [k, v] : j.items()) {
                if (prefix.empty() && (k == "config" || k == "trace_id" || k == "mode")) continue;
                self(self, v, prefix.empty() ? k : prefix + "." + k);
            }
        } else if (j.is_number()) {
            out += prefix + "," + j.dump() + "\n";
        }
    };
    walk(walk, doc, "");
    return out;
}

std::vector<std::pair<std::string, double>> report_metrics(std::string_view json) {
    std::vector<std::pair<std::string, double>> out;
    flatten(parse(json), "", out);
    return out;
}

std::vector<Delta> compare_reports(std::string_view json_a, std::string_view json_b) {
    const Json a = parse(json_a);
    const Json b = parse(json_b);
    if (!a.contains("trace_id") || !b.contains("trace_id")) throw Error("report lacks a trace_id");
    if (a["trace_id"] != b["trace_id"]) {
        throw Error("reports come from different traces (" + a["trace_id"].dump() + " vs " + b["trace_id"].dump() + ")");
    }
    std::vector<std::pair<std::string, double>> ma, mb;
    flatten(a, "", ma);
    flatten(b, "", mb);
    if (ma.size() != mb.size()) throw Error("reports do not share a schema");
    std::vector<Delta> out;
    out.reserve(ma.size());
    for (std::size_t i = 0; i < ma.size(); ++i) {
        if (ma[i].first != mb[i].first) throw Error("reports do not share a schema at " + ma[i].first);
        Delta d{ma[i].first, ma[i].second, mb[i].second, mb[i].second - ma[i].second, std::nullopt};
        if (d.a != 0.0) d.ratio = d.b / d.a;
        out.push_back(std::move(d));
    }
    return out;
}

std::string delta_csv(const std::vector<Delta>& deltas) {
    std::string out = "metric,a,b,difference,ratio\n";
    for (const auto& d : deltas) {
        out += d.metric + "," + format_number(d.a) + "," + format_number(d.b) + "," + format_number(d.difference) + "," +
               (d.ratio ? format_number(*d.ratio) : std::string("undefined")) + "\n";
    }
    return out;
}

}  // namespace hvm::harness
