#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "hvm/core/address.hpp"

namespace hvm::flexseg {

inline constexpr unsigned kPtwFreqBits = 4;
inline constexpr unsigned kPtwCostBits = 5;
static_assert(kPtwFreqBits + kPtwCostBits == 9, "walk counters must fit the 9 free PTE bits");
inline constexpr std::uint8_t kPtwFreqMax = (1u << kPtwFreqBits) - 1;
inline constexpr std::uint8_t kPtwCostMax = (1u << kPtwCostBits) - 1;
inline constexpr std::uint64_t kNoSwapSlot = ~std::uint64_t{0};
inline constexpr std::uint64_t kPteBytes = 8;

struct Pte {
    bool present = false;
    bool huge = false;
    std::uint64_t frame = 0;  // in units of the mapped page size
    std::uint64_t swap_slot = kNoSwapSlot;
    std::uint8_t ptw_freq = 0;
    std::uint8_t ptw_cost = 0;

    bool swapped() const { return !present && swap_slot != kNoSwapSlot; }
    Pfn pfn() const { return {frame, huge ? PageSize::Large : PageSize::Small}; }
};

struct PtwThresholds {
    unsigned frequency = 4;
    unsigned cost = 8;
};

/// Accounts one completed walk against the leaf. Returns true once both the
/// frequency and the cost counter have reached their thresholds.
bool record_walk_cost(Pte& pte, unsigned dram_accesses, const PtwThresholds& thresholds);

enum class WalkStatus : std::uint8_t { Mapped, NotMapped, Swapped };

struct WalkResult {
    WalkStatus status = WalkStatus::NotMapped;
    Pfn pfn;
    PageSize size = PageSize::Small;
    std::uint64_t swap_slot = kNoSwapSlot;
    /// Physical addresses of the entries read, root first.
    std::array<PhysAddr, 4> accesses{};
    unsigned access_count = 0;
    /// Number of leading accesses that read a pointer to a further table.
    unsigned pointer_count = 0;

    std::span<const PhysAddr> node_accesses() const { return {accesses.data(), access_count}; }
};

/// x86-64 style four-level table whose nodes each occupy one 4KB frame.
class RadixPageTable {
public:
    using NodeAllocator = std::function<std::uint64_t()>;

    explicit RadixPageTable(std::uint64_t root_frame);

    std::uint64_t root_frame() const { return nodes_.front().frame; }

    /// Walks the table the way the hardware walker does, from the root with
    /// 4KB index fields, stopping at a huge leaf or the first absent entry.
    WalkResult walk(VirtAddr va) const;

    /// Installs a present leaf. Intermediate nodes come from `alloc_node`
    /// (frame numbers). Throws StateError if the page is already present.
    void map(const Vpn& vpn, Pfn pfn, const NodeAllocator& alloc_node);
    /// Clears a present leaf, returning its frame. Throws StateError if absent.
    Pfn unmap(const Vpn& vpn);
    /// Turns a present leaf into a swapped one. Returns the frame it held.
    Pfn mark_swapped(const Vpn& vpn, std::uint64_t slot);
    /// Removes a swapped marker. Throws StateError if the leaf is not swapped.
    void clear_swapped(const Vpn& vpn);

    Pte* leaf(const Vpn& vpn);
    const Pte* leaf(const Vpn& vpn) const;

    std::size_t node_count() const { return nodes_.size(); }
    std::vector<std::uint64_t> node_frames() const;

private:
    struct Slot {
        std::int32_t child = -1;
        Pte pte;
    };
    struct Node {
        std::uint64_t frame;
        std::array<Slot, kRadixFanout> slots;
    };

    const Slot* find_leaf_slot(const Vpn& vpn) const;

    std::vector<Node> nodes_;
};

}  // namespace hvm::flexseg
