#pragma once

// Data-parallel inner loops of the simulator: way matching in set-associative
// arrays (TLBs, caches, tag arrays), SRRIP victim search and aging, and block
// classification counts. Each kernel has a scalar reference implementation and
// vector variants; the active variant is picked once at startup from the CPU's
// capabilities and can be overridden with HVM_SIMD=scalar|avx2|neon.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace hvm::simd {

enum class Isa : std::uint8_t { Scalar, Avx2, Neon };

std::string_view to_string(Isa isa);

struct KernelTable {
    Isa isa;
    /// Index of the first element equal to key, or -1.
    int (*find_u64)(const std::uint64_t* data, std::size_t n, std::uint64_t key);
    int (*find_u8)(const std::uint8_t* data, std::size_t n, std::uint8_t key);
    std::size_t (*count_u8)(const std::uint8_t* data, std::size_t n, std::uint8_t key);
    /// data[i] = min(data[i] + 1, limit)
    void (*increment_saturate_u8)(std::uint8_t* data, std::size_t n, std::uint8_t limit);
};

bool isa_supported(Isa isa);
Isa best_isa();

/// Kernels for a specific ISA. Throws hvm::Error if the ISA is not usable here.
const KernelTable& kernels_for(Isa isa);

/// Currently selected kernels.
const KernelTable& active();
void select(Isa isa);

inline int find(std::span<const std::uint64_t> data, std::uint64_t key) {
    return active().find_u64(data.data(), data.size(), key);
}
inline int find(std::span<const std::uint8_t> data, std::uint8_t key) {
    return active().find_u8(data.data(), data.size(), key);
}
inline std::size_t count(std::span<const std::uint8_t> data, std::uint8_t key) {
    return active().count_u8(data.data(), data.size(), key);
}
inline void increment_saturate(std::span<std::uint8_t> data, std::uint8_t limit) {
    active().increment_saturate_u8(data.data(), data.size(), limit);
}

namespace detail {
extern const KernelTable kScalarKernels;
#if defined(HVM_HAVE_AVX2_KERNELS)
extern const KernelTable kAvx2Kernels;
#endif
#if defined(HVM_HAVE_NEON_KERNELS)
extern const KernelTable kNeonKernels;
#endif
}  // namespace detail

}  // namespace hvm::simd
