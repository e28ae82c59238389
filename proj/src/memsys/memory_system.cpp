#include <sstream>

#include "hvm/core/error.hpp"
#include "hvm/memsys/memsys.hpp"

namespace hvm::memsys {

MemorySystem::MemorySystem(const MemoryConfig& cfg, PhysAddr addressable_bytes)
    : levels_{CacheLevel("l1d", cfg.l1d), CacheLevel("l2", cfg.l2), CacheLevel("llc", cfg.llc)},
      dram_(cfg.dram),
      limit_(addressable_bytes) {}

AccessResult MemorySystem::access(PhysAddr paddr, BlockKind kind, bool is_write) {
    if (paddr >= limit_) {
        std::ostringstream os;
        os << "physical address 0x" << std::hex << paddr << " beyond addressable range 0x" << limit_;
        throw Error(os.str());
    }
    if (kind == BlockKind::Invalid) throw Error("access kind must not be Invalid");
    const std::uint64_t line = paddr / kLineBytes;
    const int first = kind == BlockKind::Data ? 0 : 1;

    AccessResult r;
    int hit_level = 3;
    for (int l = first; l < 3; ++l) {
        r.latency += levels_[l].latency();
        if (levels_[l].probe(line, is_write && l == first)) {
            hit_level = l;
            break;
        }
    }
    if (hit_level == 3) {
        r.row = dram_.access(paddr);
        r.latency += dram_.latency_of(r.row);
        stats_.rows[is_metadata(kind) ? 1 : 0][static_cast<int>(r.row)] += 1;
    }
    for (int l = first; l < hit_level; ++l) levels_[l].fill(line, kind, is_write && l == first);
    r.serviced_at = static_cast<Level>(hit_level);
    stats_.serviced[static_cast<int>(kind)][hit_level] += 1;
    return r;
}

unsigned MemorySystem::flush_range(PhysAddr base, std::uint64_t bytes) {
    unsigned dirty = 0;
    for (std::uint64_t line = base / kLineBytes; line < (base + bytes + kLineBytes - 1) / kLineBytes; ++line) {
        bool any_dirty = false;
        for (auto& level : levels_) any_dirty = level.invalidate(line) || any_dirty;
        dirty += any_dirty;
    }
    stats_.flushed_dirty_lines += dirty;
    return dirty;
}

Occupancy MemorySystem::occupancy_sample() const {
    Occupancy o;
    for (int l = 0; l < 3; ++l) o.metadata_fraction[l] = levels_[l].metadata_fraction();
    return o;
}

}  // namespace hvm::memsys
