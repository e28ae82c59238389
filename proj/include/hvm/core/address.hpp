#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>

namespace hvm {

using Pid = std::uint32_t;
using Cycles = std::uint64_t;
using PhysAddr = std::uint64_t;

inline constexpr unsigned kVirtAddrBits = 48;
inline constexpr std::uint64_t kVirtAddrMask = (std::uint64_t{1} << kVirtAddrBits) - 1;
inline constexpr unsigned kRadixIndexBits = 9;
inline constexpr unsigned kRadixFanout = 1u << kRadixIndexBits;
inline constexpr std::uint64_t kSmallPageBytes = 4096;
inline constexpr std::uint64_t kLargePageBytes = 2 * 1024 * 1024;
inline constexpr std::uint64_t kLineBytes = 64;

enum class PageSize : std::uint8_t { Small = 0, Large = 1 };

constexpr unsigned offset_bits(PageSize size) { return size == PageSize::Small ? 12u : 21u; }
constexpr std::uint64_t page_bytes(PageSize size) { return std::uint64_t{1} << offset_bits(size); }
const char* to_string(PageSize size);

/// Canonical 48-bit virtual address. Bits above 47 are dropped on construction.
class VirtAddr {
public:
    constexpr VirtAddr() = default;
    constexpr explicit VirtAddr(std::uint64_t raw) : value_(raw & kVirtAddrMask) {}

    constexpr std::uint64_t value() const { return value_; }
    friend constexpr bool operator==(VirtAddr, VirtAddr) = default;

private:
    std::uint64_t value_ = 0;
};

struct Vpn {
    Pid pid = 0;
    std::uint64_t number = 0;
    PageSize size = PageSize::Small;

    friend constexpr bool operator==(const Vpn&, const Vpn&) = default;
};

Vpn vpn_of(Pid pid, VirtAddr va, PageSize size);
VirtAddr base_of(const Vpn& vpn);

/// Physical frame number in units of the frame's own page size.
struct Pfn {
    std::uint64_t number = 0;
    PageSize size = PageSize::Small;

    constexpr PhysAddr paddr() const { return number << offset_bits(size); }
    friend constexpr bool operator==(const Pfn&, const Pfn&) = default;
};

struct SplitAddr {
    std::uint64_t vpn_number = 0;
    std::uint64_t offset = 0;
    friend constexpr bool operator==(const SplitAddr&, const SplitAddr&) = default;
};

constexpr SplitAddr split_vaddr(VirtAddr va, PageSize size) {
    const unsigned bits = offset_bits(size);
    return {va.value() >> bits, va.value() & ((std::uint64_t{1} << bits) - 1)};
}

/// Radix table indices from the root (PML4) downward. Small pages use four
/// levels; large pages stop at the PD level.
struct RadixIndices {
    std::array<unsigned, 4> index{};
    unsigned levels = 0;

    std::span<const unsigned> view() const { return {index.data(), levels}; }
};

RadixIndices radix_indices(std::uint64_t vpn_number, PageSize size);

/// Packs (pid, vpn, size) into one word; used as a hash-map key and TLB tag.
/// pid must fit in 26 bits and vpn in 36 bits.
constexpr std::uint64_t pack_vpn(const Vpn& v) {
    return (v.number << 27) | (std::uint64_t{v.pid & 0x3ffffffu} << 1) |
           static_cast<std::uint64_t>(v.size);
}

constexpr Vpn unpack_vpn(std::uint64_t key) {
    return {static_cast<Pid>((key >> 1) & 0x3ffffffu), key >> 27,
            static_cast<PageSize>(key & 1)};
}

inline constexpr Pid kMaxPid = 0x3ffffffu;

}  // namespace hvm

template <>
struct std::hash<hvm::Vpn> {
    std::size_t operator()(const hvm::Vpn& v) const noexcept {
        return std::hash<std::uint64_t>{}(hvm::pack_vpn(v));
    }
};
