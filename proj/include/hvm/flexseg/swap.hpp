#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <unordered_map>
#include <vector>

#include "hvm/core/address.hpp"

namespace hvm::flexseg {

/// Storage-side backing for evicted pages. Capacity is counted in 4KB slots;
/// a 2MB page takes 512 of them.
class SwapSpace {
public:
    explicit SwapSpace(std::uint64_t capacity_slots) : capacity_(capacity_slots) {}

    /// Throws OutOfMemoryError when the page does not fit.
    std::uint64_t swap_out(const Vpn& vpn);
    /// Releases the page's slot and returns it. Throws StateError if absent.
    std::uint64_t swap_in(const Vpn& vpn);

    bool contains(const Vpn& vpn) const { return slots_.contains(pack_vpn(vpn)); }
    std::optional<std::uint64_t> slot_of(const Vpn& vpn) const;

    std::uint64_t swap_ins() const { return swap_ins_; }
    std::uint64_t swap_outs() const { return swap_outs_; }
    std::uint64_t used_slots() const { return used_; }
    std::uint64_t capacity_slots() const { return capacity_; }
    std::size_t pages() const { return slots_.size(); }

private:
    std::uint64_t capacity_;
    std::uint64_t used_ = 0;
    std::uint64_t next_slot_ = 0;
    std::vector<std::uint64_t> free_small_;
    std::vector<std::uint64_t> free_large_;
    std::unordered_map<std::uint64_t, std::uint64_t> slots_;
    std::uint64_t swap_ins_ = 0;
    std::uint64_t swap_outs_ = 0;
};

/// Second-chance clock over resident pages, ordered by physical frame.
class ClockReplacer {
public:
    /// `frame` is the page's first 4KB frame; the page starts referenced.
    void insert(const Vpn& vpn, std::uint64_t frame);
    void erase(const Vpn& vpn);
    void reference(const Vpn& vpn);
    bool contains(const Vpn& vpn) const { return frame_of_.contains(pack_vpn(vpn)); }

    /// Next page without a second chance; clears reference bits on the way.
    std::optional<Vpn> victim();

    std::size_t size() const { return ring_.size(); }

private:
    struct Entry {
        std::uint64_t key;
        bool referenced;
    };
    std::map<std::uint64_t, Entry> ring_;
    std::unordered_map<std::uint64_t, std::uint64_t> frame_of_;
    std::uint64_t hand_ = 0;
};

}  // namespace hvm::flexseg
