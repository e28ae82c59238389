#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>

#include "hvm/flexseg/frame_allocator.hpp"
#include "hvm/flexseg/radix_table.hpp"
#include "hvm/flexseg/swap.hpp"

namespace hvm::flexseg {

/// Called after a resident page has been pushed to swap to make room.
using EvictionSink = std::function<void(const Vpn& victim, std::uint64_t slot)>;

/// The flexible segment: per-process radix tables over the shared frame pool,
/// with clock-driven swapping when the pool runs dry.
class FlexSegment {
public:
    FlexSegment(FrameAllocator frames, SwapSpace swap);

    /// Creates the process's table; the root takes a frame.
    void add_process(Pid pid, const EvictionSink& on_evict);
    bool has_process(Pid pid) const { return tables_.contains(pid); }
    RadixPageTable& table(Pid pid);
    const RadixPageTable& table(Pid pid) const;

    std::optional<Pfn> alloc_frame(PageSize size, FrameUse use = FrameUse::Data) {
        return frames_.alloc(size, use);
    }
    /// Allocates a frame, swapping out clock victims until one is available.
    /// Throws OutOfMemoryError when nothing is left to evict.
    Pfn obtain_frame(PageSize size, FrameUse use, const EvictionSink& on_evict);

    /// Backs `vpn` with a fresh data frame and maps it. Replaces a swapped marker.
    Pfn map_new(const Vpn& vpn, const EvictionSink& on_evict);
    /// Maps `vpn` to an already-allocated data frame.
    void map(const Vpn& vpn, Pfn pfn, const EvictionSink& on_evict);
    /// Unmaps `vpn` and returns its frame to the pool.
    Pfn unmap(const Vpn& vpn);

    /// Writes a resident page to swap, leaving a swapped marker in the table.
    std::uint64_t swap_out(const Vpn& vpn);
    /// Brings a swapped page back into a fresh frame.
    Pfn swap_in(const Vpn& vpn, const EvictionSink& on_evict);
    /// Reads a swapped page back for placement outside this segment and
    /// clears its marker. Returns the released slot.
    std::uint64_t take_swapped(const Vpn& vpn);

    /// Sets the clock reference bit, as the hardware walker does.
    void reference(const Vpn& vpn) { clock_.reference(vpn); }
    bool resident(const Vpn& vpn) const { return clock_.contains(vpn); }

    FrameAllocator& frames() { return frames_; }
    const FrameAllocator& frames() const { return frames_; }
    SwapSpace& swap() { return swap_; }
    const SwapSpace& swap() const { return swap_; }
    std::size_t resident_pages() const { return clock_.size(); }

private:
    RadixPageTable::NodeAllocator node_allocator(const EvictionSink& on_evict);
    void evict_one(const EvictionSink& on_evict);

    FrameAllocator frames_;
    SwapSpace swap_;
    ClockReplacer clock_;
    std::map<Pid, RadixPageTable> tables_;
};

}  // namespace hvm::flexseg
