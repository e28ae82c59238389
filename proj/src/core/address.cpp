#include "hvm/core/address.hpp"

namespace hvm {

const char* to_string(PageSize size) { return size == PageSize::Small ? "4KB" : "2MB"; }

Vpn vpn_of(Pid pid, VirtAddr va, PageSize size) {
    return {pid, split_vaddr(va, size).vpn_number, size};
}

VirtAddr base_of(const Vpn& vpn) { return VirtAddr(vpn.number << offset_bits(vpn.size)); }

RadixIndices radix_indices(std::uint64_t vpn_number, PageSize size) {
    RadixIndices out;
    out.levels = size == PageSize::Small ? 4 : 3;
    // Index fields sit directly above the page offset; the lowest field of a
    // small-page VPN is the PT index, of a large-page VPN the PD index.
    for (unsigned i = 0; i < out.levels; ++i) {
        const unsigned shift = kRadixIndexBits * (out.levels - 1 - i);
        out.index[i] = static_cast<unsigned>((vpn_number >> shift) & (kRadixFanout - 1));
    }
    return out;
}

}  // namespace hvm
