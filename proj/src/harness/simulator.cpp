#include "hvm/harness/simulator.hpp"

#include <atomic>
#include <exception>
#include <map>
#include <thread>

#include "hvm/core/error.hpp"
#include "hvm/memsys/memsys.hpp"
#include "hvm/mmu/mmu.hpp"
#include "hvm/os/os.hpp"
#include "hvm/os/scheduler.hpp"
#include "hvm/workload/generator.hpp"

namespace hvm::harness {
namespace {

std::uint64_t sum(const std::vector<std::uint64_t>& v) {
    std::uint64_t s = 0;
    for (auto x : v) s += x;
    return s;
}

class Sampler {
public:
    explicit Sampler(std::uint64_t epoch) : epoch_(epoch), next_(epoch) {}

    void advance(std::uint64_t instructions, const memsys::MemorySystem& mem) {
        retired_ += instructions;
        while (retired_ >= next_) {
            take(mem);
            next_ += epoch_;
        }
    }

    void finish(const memsys::MemorySystem& mem, SystemStats& out) {
        if (samples_ == 0) take(mem);
        out.epochs_sampled = samples_;
        for (std::size_t i = 0; i < 3; ++i) out.metadata_occupancy[i] = sums_[i] / static_cast<double>(samples_);
    }

private:
    void take(const memsys::MemorySystem& mem) {
        const auto occ = mem.occupancy_sample();
        for (std::size_t i = 0; i < 3; ++i) sums_[i] += occ.metadata_fraction[i];
        ++samples_;
    }

    std::uint64_t epoch_;
    std::uint64_t next_;
    std::uint64_t retired_ = 0;
    std::uint64_t samples_ = 0;
    std::array<double, 3> sums_{};
};

}  // namespace

Trace workload_trace(const SimConfig& cfg) {
    return workload::generate_processes(cfg.workload, cfg.workload_processes);
}

StatsReport run(const SimConfig& cfg, const Trace& trace, const RunOptions& options) {
    cfg.validate();
    if (trace.records.empty()) throw ConfigError("trace has no records");

    std::vector<Pid> order;
    std::map<Pid, std::vector<std::size_t>> per_process;
    for (std::size_t i = 0; i < trace.records.size(); ++i) {
        auto& list = per_process[trace.records[i].pid];
        if (list.empty()) order.push_back(trace.records[i].pid);
        list.push_back(i);
    }

    os::OsConfig os_cfg = cfg.os;
    os_cfg.flush_line_latency = cfg.memory.llc.latency;
    mmu::MmuConfig mmu_cfg = cfg.mmu;
    mmu_cfg.perfect_tlb = cfg.os.mode == os::MappingMode::PerfectTlb;
    mmu_cfg.flex_walks = cfg.os.mode != os::MappingMode::RestrictiveOnly;

    memsys::MemorySystem memory(cfg.memory, os::Os::addressable_bytes(os_cfg));
    os::Os system(os_cfg, memory);
    mmu::Mmu mmu(mmu_cfg, memory, system.segments(), system);
    system.attach(mmu);
    for (Pid pid : order) {
        const auto it = trace.huge_regions.find(pid);
        system.add_process(pid, it == trace.huge_regions.end() ? std::vector<HugeRegion>{} : it->second);
    }

    StatsReport report;
    report.mode = os::to_string(cfg.os.mode);
    report.trace_id = trace_fingerprint(trace);
    report.config = dump(cfg);
    for (Pid pid : order) report.processes[pid];

    os::Scheduler scheduler(order, cfg.quantum_cycles);
    std::map<Pid, std::size_t> cursor;
    Sampler sampler(cfg.epoch_instructions);
    Cycles now = 0;
    std::uint64_t done = 0;

    while (!scheduler.done()) {
        const Pid pid = scheduler.current();
        ProcessStats& stats = report.processes[pid];
        const Cycles switch_cost = mmu.context_switch(pid);
        now += switch_cost;
        stats.context_switch_cycles += switch_cost;

        const auto& indices = per_process[pid];
        std::size_t& pos = cursor[pid];
        const TraceRecord& rec = trace.records[indices[pos]];

        now += rec.icount;
        system.run_pending_migrations(now);
        const mmu::TranslationOutcome t = mmu.translate(rec.vaddr, pid, rec.op, now);
        now += t.latency;
        const std::uint64_t offset = split_vaddr(rec.vaddr, t.pfn.size).offset;
        const memsys::AccessResult data =
            memory.access(t.pfn.paddr() + offset, memsys::BlockKind::Data, rec.op == AccessOp::Write);
        now += data.latency;

        stats.account(rec, t, data);
        if (options.observer) options.observer(rec, t);
        sampler.advance(rec.icount, memory);
        ++done;
        if (options.check_invariants_every != 0 && done % options.check_invariants_every == 0) {
            system.check_invariants();
        }

        if (++pos == indices.size()) {
            scheduler.retire();
        } else {
            scheduler.tick(now);
        }
    }

    system.finalize_reuse();
    if (options.check_invariants_every != 0) system.check_invariants();

    for (const auto& [pid, stats] : report.processes) report.aggregate.merge(stats);

    SystemStats& s = report.system;
    s.cycles = now;
    sampler.finish(memory, s);
    s.swap_ins = system.swap().swap_ins();
    s.swap_outs = system.swap().swap_outs();
    const os::OsStats& o = system.stats();
    s.page_faults = o.page_faults;
    s.restseg_allocations = o.restseg_allocations;
    s.flexseg_allocations = o.flexseg_allocations;
    s.restseg_swap_evictions = o.restseg_swap_evictions;
    s.migrations_flex_to_rest = o.migrations_flex_to_rest;
    s.migrations_rest_to_flex = o.migrations_rest_to_flex;
    s.migration_stalled_accesses = o.stalled_accesses;
    s.migration_stall_cycles = o.stall_cycles;
    for (const auto& m : system.migrations()) s.migration_flushed_lines += m.flushed_lines;
    s.restseg_reuse = o.reuse;
    const mmu::MmuStats& m = mmu.stats();
    s.context_switches = m.context_switches;
    s.quantum_expiries = scheduler.switches();
    s.pwc_hits = m.pwc_hits;
    s.pwc_lookups = m.pwc_lookups;
    s.tar_cache_hits = sum(m.tar_cache_hits);
    s.tar_cache_lookups = sum(m.tar_cache_lookups);
    s.sf_cache_hits = sum(m.sf_cache_hits);
    s.sf_cache_lookups = sum(m.sf_cache_lookups);
    s.dirty_lines_flushed = memory.stats().flushed_dirty_lines;
    return report;
}

SweepAxis parse_axis(std::string_view text) {
    auto [key, values] = split_assignment(text);
    if (key.empty()) throw ConfigError("sweep axis needs a key: '" + std::string(text) + "'");
    SweepAxis axis{key, {}};
    const char sep = values.find('|') != std::string::npos ? '|' : ',';
    std::size_t start = 0;
    for (;;) {
        const auto end = values.find(sep, start);
        std::string v = values.substr(start, end == std::string::npos ? std::string::npos : end - start);
        const auto b = v.find_first_not_of(" \t");
        const auto e = v.find_last_not_of(" \t");
        if (b == std::string::npos) throw ConfigError("empty value in sweep axis '" + std::string(text) + "'");
        axis.values.push_back(v.substr(b, e - b + 1));
        if (end == std::string::npos) break;
        start = end + 1;
    }
    SimConfig probe;
    for (const auto& v : axis.values) set_key(probe, axis.key, v);
    return axis;
}

std::vector<SweepPoint> sweep_points(const std::vector<SweepAxis>& axes) {
    std::vector<SweepPoint> points{{}};
    for (const auto& axis : axes) {
        std::vector<SweepPoint> next;
        next.reserve(points.size() * axis.values.size());
        for (const auto& p : points) {
            for (const auto& v : axis.values) {
                SweepPoint q = p;
                q.emplace_back(axis.key, v);
                next.push_back(std::move(q));
            }
        }
        points = std::move(next);
    }
    return points;
}

std::vector<StatsReport> sweep(const SimConfig& base, const Trace* trace, const std::vector<SweepAxis>& axes,
                               unsigned jobs) {
    const auto points = sweep_points(axes);
    std::vector<SimConfig> configs;
    configs.reserve(points.size());
    for (const auto& p : points) {
        SimConfig c = base;
        for (const auto& [k, v] : p) set_key(c, k, v);
        c.validate();
        configs.push_back(std::move(c));
    }

    std::vector<StatsReport> results(points.size());
    std::vector<std::exception_ptr> errors(points.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < points.size(); i = next++) {
            try {
                results[i] = trace ? run(configs[i], *trace) : run(configs[i], workload_trace(configs[i]));
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const unsigned threads = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(points.size())));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return results;
}

}  // namespace hvm::harness
