#include "hvm/harness/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <istream>
#include <ostream>
#include <sstream>

#include "hvm/core/error.hpp"

namespace hvm::harness {
namespace {

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view expected) {
    throw ConfigError("bad value '" + std::string(value) + "' for " + std::string(key) + ": expected " +
                      std::string(expected));
}

std::uint64_t parse_u64(std::string_view key, std::string_view text) {
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size()) bad_value(key, text, "an unsigned integer");
    return v;
}

std::uint64_t parse_size(std::string_view key, std::string_view text) {
    std::size_t digits = 0;
    while (digits < text.size() && text[digits] >= '0' && text[digits] <= '9') ++digits;
    if (digits == 0) bad_value(key, text, "a size such as 4096, 64KB or 2GB");
    const std::uint64_t n = parse_u64(key, text.substr(0, digits));
    std::string unit(text.substr(digits));
    for (auto& c : unit) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    std::uint64_t mult = 1;
    if (unit.empty() || unit == "B") {
        mult = 1;
    } else if (unit == "KB" || unit == "KIB" || unit == "K") {
        mult = 1ull << 10;
    } else if (unit == "MB" || unit == "MIB" || unit == "M") {
        mult = 1ull << 20;
    } else if (unit == "GB" || unit == "GIB" || unit == "G") {
        mult = 1ull << 30;
    } else if (unit == "TB" || unit == "TIB" || unit == "T") {
        mult = 1ull << 40;
    } else {
        bad_value(key, text, "a size unit of B, KB, MB, GB or TB");
    }
    if (n != 0 && mult > ~std::uint64_t{0} / n) bad_value(key, text, "a size that fits in 64 bits");
    return n * mult;
}

std::string format_size(std::uint64_t bytes) {
    static constexpr std::pair<std::uint64_t, const char*> kUnits[] = {
        {1ull << 40, "TB"}, {1ull << 30, "GB"}, {1ull << 20, "MB"}, {1ull << 10, "KB"}};
    if (bytes != 0) {
        for (const auto& [mult, name] : kUnits) {
            if (bytes % mult == 0) return std::to_string(bytes / mult) + name;
        }
    }
    return std::to_string(bytes);
}

double parse_double(std::string_view key, std::string_view text) {
    double v = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size()) bad_value(key, text, "a number");
    return v;
}

std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

bool parse_bool(std::string_view key, std::string_view text) {
    if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
    if (text == "false" || text == "0" || text == "no" || text == "off") return false;
    bad_value(key, text, "true or false");
}

std::string format_bool(bool b) { return b ? "true" : "false"; }

PageSize parse_page_size(std::string_view key, std::string_view text) {
    if (text == "4KB" || text == "4kb" || text == "4K") return PageSize::Small;
    if (text == "2MB" || text == "2mb" || text == "2M") return PageSize::Large;
    bad_value(key, text, "4KB or 2MB");
}

struct Key {
    std::string name;
    std::string description;
    std::function<void(SimConfig&, std::string_view)> set;
    std::function<std::string(const SimConfig&)> get;
};

template <typename Field>
void add_u64(std::vector<Key>& keys, std::string name, std::string description, Field field) {
    keys.push_back({name, std::move(description),
                    [field, name](SimConfig& c, std::string_view v) { field(c) = static_cast<std::remove_reference_t<decltype(field(c))>>(parse_u64(name, v)); },
                    [field](const SimConfig& c) { return std::to_string(field(const_cast<SimConfig&>(c))); }});
}

template <typename Field>
void add_size(std::vector<Key>& keys, std::string name, std::string description, Field field) {
    keys.push_back({name, std::move(description),
                    [field, name](SimConfig& c, std::string_view v) { field(c) = parse_size(name, v); },
                    [field](const SimConfig& c) { return format_size(field(const_cast<SimConfig&>(c))); }});
}

template <typename Field>
void add_double(std::vector<Key>& keys, std::string name, std::string description, Field field) {
    keys.push_back({name, std::move(description),
                    [field, name](SimConfig& c, std::string_view v) { field(c) = parse_double(name, v); },
                    [field](const SimConfig& c) { return format_double(field(const_cast<SimConfig&>(c))); }});
}

template <typename Field>
void add_bool(std::vector<Key>& keys, std::string name, std::string description, Field field) {
    keys.push_back({name, std::move(description),
                    [field, name](SimConfig& c, std::string_view v) { field(c) = parse_bool(name, v); },
                    [field](const SimConfig& c) { return format_bool(field(const_cast<SimConfig&>(c))); }});
}

void add_table(std::vector<Key>& keys, const std::string& prefix, const std::string& what,
               mmu::TableConfig& (*field)(SimConfig&)) {
    add_u64(keys, prefix + ".entries", what + " entries", [field](SimConfig& c) -> unsigned& { return field(c).entries; });
    add_u64(keys, prefix + ".ways", what + " associativity", [field](SimConfig& c) -> unsigned& { return field(c).ways; });
    add_u64(keys, prefix + ".latency", what + " latency (cycles)", [field](SimConfig& c) -> Cycles& { return field(c).latency; });
}

/// Metadata caches are sized in bytes of 64B lines.
void add_line_table(std::vector<Key>& keys, const std::string& prefix, const std::string& what,
                    mmu::TableConfig& (*field)(SimConfig&)) {
    const std::string name = prefix + ".bytes";
    keys.push_back({name, what + " capacity",
                    [field, name](SimConfig& c, std::string_view v) {
                        const std::uint64_t bytes = parse_size(name, v);
                        if (bytes == 0 || bytes % kLineBytes != 0) bad_value(name, v, "a positive multiple of 64 bytes");
                        field(c).entries = static_cast<unsigned>(bytes / kLineBytes);
                    },
                    [field](const SimConfig& c) {
                        return format_size(std::uint64_t{field(const_cast<SimConfig&>(c)).entries} * kLineBytes);
                    }});
    add_u64(keys, prefix + ".ways", what + " associativity", [field](SimConfig& c) -> unsigned& { return field(c).ways; });
    add_u64(keys, prefix + ".latency", what + " latency (cycles)", [field](SimConfig& c) -> Cycles& { return field(c).latency; });
}

void add_cache(std::vector<Key>& keys, const std::string& prefix, const std::string& what,
               memsys::CacheConfig& (*field)(SimConfig&)) {
    add_size(keys, prefix + ".bytes", what + " capacity", [field](SimConfig& c) -> std::uint64_t& { return field(c).bytes; });
    add_u64(keys, prefix + ".ways", what + " associativity", [field](SimConfig& c) -> unsigned& { return field(c).ways; });
    add_u64(keys, prefix + ".latency", what + " latency (cycles)", [field](SimConfig& c) -> Cycles& { return field(c).latency; });
    const std::string name = prefix + ".replacement";
    keys.push_back({name, what + " replacement policy (lru or srrip)",
                    [field, name](SimConfig& c, std::string_view v) {
                        if (v == "lru") {
                            field(c).replacement = memsys::Replacement::Lru;
                        } else if (v == "srrip") {
                            field(c).replacement = memsys::Replacement::Srrip;
                        } else {
                            bad_value(name, v, "lru or srrip");
                        }
                    },
                    [field](const SimConfig& c) {
                        return std::string(field(const_cast<SimConfig&>(c)).replacement == memsys::Replacement::Lru ? "lru" : "srrip");
                    }});
}

std::vector<Key> build_registry() {
    std::vector<Key> k;
    k.push_back({"mode", "mapping mode: radix, restrictive, hybrid or perfect",
                 [](SimConfig& c, std::string_view v) { c.os.mode = os::parse_mapping_mode(v); },
                 [](const SimConfig& c) { return std::string(os::to_string(c.os.mode)); }});

    add_size(k, "os.memory_bytes", "physical memory", [](SimConfig& c) -> std::uint64_t& { return c.os.memory_bytes; });
    add_size(k, "os.swap_bytes", "swap space", [](SimConfig& c) -> std::uint64_t& { return c.os.swap_bytes; });
    add_size(k, "os.kernel_bytes", "kernel region for tag-array and set-filter images",
             [](SimConfig& c) -> std::uint64_t& { return c.os.kernel_bytes; });
    add_u64(k, "os.page_fault_cycles", "fixed page-fault cost", [](SimConfig& c) -> Cycles& { return c.os.page_fault_latency; });
    add_u64(k, "os.swap_cycles", "cost of one swap-in or swap-out", [](SimConfig& c) -> Cycles& { return c.os.swap_latency; });
    add_u64(k, "os.migration_cycles", "page copy cost of one migration",
            [](SimConfig& c) -> Cycles& { return c.os.migration_copy_latency; });
    add_bool(k, "os.migrations", "walk-tracking migration into restricted segments",
             [](SimConfig& c) -> bool& { return c.os.migrations; });
    add_u64(k, "os.ptw_freq_threshold", "walk frequency threshold",
            [](SimConfig& c) -> unsigned& { return c.os.thresholds.frequency; });
    add_u64(k, "os.ptw_cost_threshold", "walk DRAM-cost threshold", [](SimConfig& c) -> unsigned& { return c.os.thresholds.cost; });
    add_u64(k, "os.quantum_cycles", "scheduling quantum (0 runs processes to completion)",
            [](SimConfig& c) -> Cycles& { return c.quantum_cycles; });
    add_u64(k, "os.context_switch_cycles", "cost charged per context switch",
            [](SimConfig& c) -> Cycles& { return c.mmu.context_switch_cost; });

    k.push_back({"restseg.segments", "restricted segments as size:page list, e.g. 512MB:4KB,512MB:2MB",
                 [](SimConfig& c, std::string_view v) {
                     std::vector<os::SegmentSpec> segs;
                     std::string_view rest = v;
                     while (!rest.empty()) {
                         const auto comma = rest.find(',');
                         const std::string_view item = trim(rest.substr(0, comma));
                         rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
                         if (item.empty()) continue;
                         const auto colon = item.find(':');
                         if (colon == std::string_view::npos) bad_value("restseg.segments", v, "size:page items");
                         segs.push_back({parse_size("restseg.segments", trim(item.substr(0, colon))),
                                         parse_page_size("restseg.segments", trim(item.substr(colon + 1)))});
                     }
                     c.os.segments = std::move(segs);
                 },
                 [](const SimConfig& c) {
                     std::string out;
                     for (const auto& s : c.os.segments) {
                         if (!out.empty()) out += ',';
                         out += format_size(s.bytes) + ":" + to_string(s.page_size);
                     }
                     return out;
                 }});
    add_u64(k, "restseg.associativity", "ways per restricted-segment set",
            [](SimConfig& c) -> unsigned& { return c.os.associativity; });
    k.push_back({"restseg.hash", "set-index hash: mod, xor, prime or mersenne",
                 [](SimConfig& c, std::string_view v) { c.os.hash = restseg::parse_hash_fn(v); },
                 [](const SimConfig& c) { return std::string(restseg::to_string(c.os.hash)); }});

    add_table(k, "tlb.l1i", "L1 instruction TLB", [](SimConfig& c) -> mmu::TableConfig& { return c.mmu.l1i; });
    add_table(k, "tlb.l1d_4k", "L1 data TLB for 4KB pages", [](SimConfig& c) -> mmu::TableConfig& { return c.mmu.l1d_small; });
    add_table(k, "tlb.l1d_2m", "L1 data TLB for 2MB pages", [](SimConfig& c) -> mmu::TableConfig& { return c.mmu.l1d_large; });
    add_table(k, "tlb.l2", "unified L2 TLB", [](SimConfig& c) -> mmu::TableConfig& { return c.mmu.l2; });
    add_table(k, "pwc", "each page-walk cache", [](SimConfig& c) -> mmu::TableConfig& { return c.mmu.pwc; });
    add_line_table(k, "tar_cache", "tag-array cache (per segment)", [](SimConfig& c) -> mmu::TableConfig& { return c.mmu.tar_cache; });
    add_line_table(k, "sf_cache", "set-filter cache (per segment)", [](SimConfig& c) -> mmu::TableConfig& { return c.mmu.sf_cache; });
    add_bool(k, "mmu.walk_parallel", "overlap restricted walks with the L2 TLB lookup",
             [](SimConfig& c) -> bool& { return c.mmu.walk_parallel; });

    add_cache(k, "cache.l1d", "L1 data cache", [](SimConfig& c) -> memsys::CacheConfig& { return c.memory.l1d; });
    add_cache(k, "cache.l2", "L2 cache", [](SimConfig& c) -> memsys::CacheConfig& { return c.memory.l2; });
    add_cache(k, "cache.llc", "last-level cache", [](SimConfig& c) -> memsys::CacheConfig& { return c.memory.llc; });

    add_u64(k, "dram.banks", "DRAM banks", [](SimConfig& c) -> unsigned& { return c.memory.dram.banks; });
    add_size(k, "dram.row_bytes", "DRAM row size", [](SimConfig& c) -> std::uint64_t& { return c.memory.dram.row_bytes; });
    add_u64(k, "dram.row_hit_cycles", "row-buffer hit latency", [](SimConfig& c) -> Cycles& { return c.memory.dram.row_hit; });
    add_u64(k, "dram.row_conflict_cycles", "row-buffer conflict latency",
            [](SimConfig& c) -> Cycles& { return c.memory.dram.row_conflict; });
    add_u64(k, "dram.row_idle_cycles", "activation latency of an idle bank",
            [](SimConfig& c) -> Cycles& { return c.memory.dram.row_idle; });

    add_u64(k, "sim.epoch_instructions", "instructions between occupancy samples",
            [](SimConfig& c) -> std::uint64_t& { return c.epoch_instructions; });

    k.push_back({"workload.pattern", "generated access pattern: uniform, zipf, stride or mix",
                 [](SimConfig& c, std::string_view v) { c.workload.pattern = workload::parse_pattern(v); },
                 [](const SimConfig& c) { return std::string(workload::to_string(c.workload.pattern)); }});
    add_double(k, "workload.zipf_s", "zipf exponent", [](SimConfig& c) -> double& { return c.workload.zipf_s; });
    add_size(k, "workload.stride_bytes", "stride step", [](SimConfig& c) -> std::uint64_t& { return c.workload.stride_bytes; });
    k.push_back({"workload.mix_weights", "uniform,zipf,stride weights of a mix",
                 [](SimConfig& c, std::string_view v) {
                     std::array<std::uint32_t, 3> w{};
                     std::string_view rest = v;
                     for (std::size_t i = 0; i < 3; ++i) {
                         const auto comma = rest.find(',');
                         if ((i < 2) == (comma == std::string_view::npos)) bad_value("workload.mix_weights", v, "three comma-separated weights");
                         const std::uint64_t x = parse_u64("workload.mix_weights", trim(rest.substr(0, comma)));
                         if (x > 0xffffffffull) bad_value("workload.mix_weights", v, "weights below 2^32");
                         w[i] = static_cast<std::uint32_t>(x);
                         rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
                     }
                     c.workload.mix_weights = w;
                 },
                 [](const SimConfig& c) {
                     const auto& w = c.workload.mix_weights;
                     return std::to_string(w[0]) + "," + std::to_string(w[1]) + "," + std::to_string(w[2]);
                 }});
    add_size(k, "workload.footprint_bytes", "bytes touched by each generated process",
             [](SimConfig& c) -> std::uint64_t& { return c.workload.footprint_bytes; });
    add_double(k, "workload.huge_fraction", "share of 2MB chunks backed by huge pages",
               [](SimConfig& c) -> double& { return c.workload.huge_fraction; });
    add_u64(k, "workload.accesses", "records per generated process",
            [](SimConfig& c) -> std::uint64_t& { return c.workload.accesses; });
    add_u64(k, "workload.seed", "generator seed", [](SimConfig& c) -> std::uint64_t& { return c.workload.seed; });
    add_u64(k, "workload.pid", "pid of the first generated process", [](SimConfig& c) -> Pid& { return c.workload.pid; });
    add_u64(k, "workload.processes", "generated processes", [](SimConfig& c) -> unsigned& { return c.workload_processes; });
    add_double(k, "workload.write_fraction", "share of data accesses that write",
               [](SimConfig& c) -> double& { return c.workload.write_fraction; });
    add_double(k, "workload.fetch_fraction", "share of records that are instruction fetches",
               [](SimConfig& c) -> double& { return c.workload.fetch_fraction; });
    add_u64(k, "workload.icount", "instructions per record", [](SimConfig& c) -> std::uint32_t& { return c.workload.icount; });
    return k;
}

const std::vector<Key>& registry() {
    static const std::vector<Key> keys = build_registry();
    return keys;
}

const Key& find_key(std::string_view name) {
    for (const Key& k : registry()) {
        if (k.name == name) return k;
    }
    throw ConfigError("unknown config key '" + std::string(name) + "'");
}

}  // namespace

void SimConfig::validate() const {
    os.validate();
    workload.validate();
    if (workload_processes == 0) throw ConfigError("workload.processes must be at least 1");
    if (epoch_instructions == 0) throw ConfigError("sim.epoch_instructions must be positive");
    if (os.mode == os::MappingMode::Hybrid && os.segments.empty()) {
        throw ConfigError("hybrid mode needs at least one restricted segment");
    }
}

std::vector<std::string> config_keys() {
    std::vector<std::string> out;
    for (const Key& k : registry()) out.push_back(k.name);
    return out;
}

std::string describe_key(std::string_view key) { return find_key(key).description; }

void set_key(SimConfig& cfg, std::string_view key, std::string_view value) {
    find_key(trim(key)).set(cfg, trim(value));
}

std::string get_key(const SimConfig& cfg, std::string_view key) { return find_key(key).get(cfg); }

std::vector<std::pair<std::string, std::string>> dump(const SimConfig& cfg) {
    std::vector<std::pair<std::string, std::string>> out;
    for (const Key& k : registry()) out.emplace_back(k.name, k.get(cfg));
    return out;
}

std::pair<std::string, std::string> split_assignment(std::string_view text) {
    const auto eq = text.find('=');
    if (eq == std::string_view::npos) throw ConfigError("expected key=value, got '" + std::string(text) + "'");
    return {std::string(trim(text.substr(0, eq))), std::string(trim(text.substr(eq + 1)))};
}

void load_config(SimConfig& cfg, std::istream& in) {
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        std::string_view view = line;
        if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
        view = trim(view);
        if (view.empty()) continue;
        try {
            const auto [key, value] = split_assignment(view);
            set_key(cfg, key, value);
        } catch (const ConfigError& e) {
            throw ConfigError("config line " + std::to_string(number) + ": " + e.what());
        }
    }
}

void load_config_file(SimConfig& cfg, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    try {
        load_config(cfg, in);
    } catch (const ConfigError& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

void write_config(const SimConfig& cfg, std::ostream& out) {
    for (const auto& [key, value] : dump(cfg)) out << key << " = " << value << '\n';
}

}  // namespace hvm::harness
