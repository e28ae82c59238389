#include "hvm/core/error.hpp"
#include "hvm/memsys/memsys.hpp"

namespace hvm::memsys {

const char* to_string(RowOutcome r) {
    switch (r) {
        case RowOutcome::None: return "none";
        case RowOutcome::Hit: return "hit";
        case RowOutcome::Conflict: return "conflict";
        case RowOutcome::Activate: return "activate";
    }
    return "unknown";
}

Dram::Dram(const DramConfig& cfg) : cfg_(cfg), open_(cfg.banks, -1) {
    if (cfg.banks == 0 || cfg.row_bytes == 0) throw ConfigError("DRAM needs at least one bank and a row size");
}

RowOutcome Dram::access(PhysAddr paddr) {
    const auto row = static_cast<std::int64_t>(row_of(paddr));
    std::int64_t& open = open_[bank_of(paddr)];
    RowOutcome r = RowOutcome::Activate;
    if (open == row) {
        r = RowOutcome::Hit;
    } else if (open >= 0) {
        r = RowOutcome::Conflict;
    }
    open = row;
    return r;
}

Cycles Dram::latency_of(RowOutcome r) const {
    switch (r) {
        case RowOutcome::Hit: return cfg_.row_hit;
        case RowOutcome::Conflict: return cfg_.row_conflict;
        case RowOutcome::Activate: return cfg_.row_idle;
        case RowOutcome::None: return 0;
    }
    return 0;
}

}  // namespace hvm::memsys
