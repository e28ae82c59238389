#include "hvm/flexseg/swap.hpp"

#include <string>

#include "hvm/core/error.hpp"

namespace hvm::flexseg {
namespace {
std::uint64_t slots_for(PageSize size) { return page_bytes(size) / kSmallPageBytes; }
}  // namespace

std::uint64_t SwapSpace::swap_out(const Vpn& vpn) {
    const std::uint64_t key = pack_vpn(vpn);
    if (slots_.contains(key)) throw StateError("page is already in swap");
    const std::uint64_t need = slots_for(vpn.size);
    if (used_ + need > capacity_) {
        throw OutOfMemoryError("swap space exhausted (" + std::to_string(capacity_) + " slots)");
    }
    auto& free_list = vpn.size == PageSize::Small ? free_small_ : free_large_;
    std::uint64_t slot = 0;
    if (!free_list.empty()) {
        slot = free_list.back();
        free_list.pop_back();
    } else {
        slot = next_slot_;
        next_slot_ += need;
    }
    used_ += need;
    slots_.emplace(key, slot);
    ++swap_outs_;
    return slot;
}

std::uint64_t SwapSpace::swap_in(const Vpn& vpn) {
    const auto it = slots_.find(pack_vpn(vpn));
    if (it == slots_.end()) throw StateError("page is not in swap");
    const std::uint64_t slot = it->second;
    slots_.erase(it);
    (vpn.size == PageSize::Small ? free_small_ : free_large_).push_back(slot);
    used_ -= slots_for(vpn.size);
    ++swap_ins_;
    return slot;
}

std::optional<std::uint64_t> SwapSpace::slot_of(const Vpn& vpn) const {
    const auto it = slots_.find(pack_vpn(vpn));
    if (it == slots_.end()) return std::nullopt;
    return it->second;
}

void ClockReplacer::insert(const Vpn& vpn, std::uint64_t frame) {
    const std::uint64_t key = pack_vpn(vpn);
    if (frame_of_.contains(key)) throw StateError("page already tracked by the clock");
    if (!ring_.emplace(frame, Entry{key, true}).second) {
        throw StateError("frame already tracked by the clock");
    }
    frame_of_.emplace(key, frame);
}

void ClockReplacer::erase(const Vpn& vpn) {
    const auto it = frame_of_.find(pack_vpn(vpn));
    if (it == frame_of_.end()) return;
    ring_.erase(it->second);
    frame_of_.erase(it);
}

void ClockReplacer::reference(const Vpn& vpn) {
    const auto it = frame_of_.find(pack_vpn(vpn));
    if (it != frame_of_.end()) ring_.at(it->second).referenced = true;
}

std::optional<Vpn> ClockReplacer::victim() {
    if (ring_.empty()) return std::nullopt;
    auto it = ring_.lower_bound(hand_);
    // Two sweeps are enough: the first clears every reference bit.
    for (std::size_t steps = 0; steps <= 2 * ring_.size(); ++steps) {
        if (it == ring_.end()) it = ring_.begin();
        if (!it->second.referenced) {
            hand_ = it->first + 1;
            return unpack_vpn(it->second.key);
        }
        it->second.referenced = false;
        ++it;
    }
    return std::nullopt;
}

}  // namespace hvm::flexseg
