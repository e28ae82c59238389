#include <arm_neon.h>

#include "hvm/simd/kernels.hpp"

namespace hvm::simd {
namespace {

int find_u64_neon(const std::uint64_t* data, std::size_t n, std::uint64_t key) {
    const uint64x2_t k = vdupq_n_u64(key);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const uint64x2_t eq = vceqq_u64(vld1q_u64(data + i), k);
        if (vgetq_lane_u64(eq, 0) != 0) return static_cast<int>(i);
        if (vgetq_lane_u64(eq, 1) != 0) return static_cast<int>(i + 1);
    }
    for (; i < n; ++i) {
        if (data[i] == key) return static_cast<int>(i);
    }
    return -1;
}

int find_u8_neon(const std::uint8_t* data, std::size_t n, std::uint8_t key) {
    const uint8x16_t k = vdupq_n_u8(key);
    std::size_t i = 0;
    for (; i + 16 <= n; i += 16) {
        if (vmaxvq_u8(vceqq_u8(vld1q_u8(data + i), k)) != 0) {
            for (std::size_t j = i; j < i + 16; ++j) {
                if (data[j] == key) return static_cast<int>(j);
            }
        }
    }
    for (; i < n; ++i) {
        if (data[i] == key) return static_cast<int>(i);
    }
    return -1;
}

std::size_t count_u8_neon(const std::uint8_t* data, std::size_t n, std::uint8_t key) {
    const uint8x16_t k = vdupq_n_u8(key);
    const uint8x16_t one = vdupq_n_u8(1);
    std::size_t c = 0;
    std::size_t i = 0;
    for (; i + 16 <= n; i += 16) {
        c += vaddvq_u8(vandq_u8(vceqq_u8(vld1q_u8(data + i), k), one));
    }
    for (; i < n; ++i) c += data[i] == key;
    return c;
}

void increment_saturate_u8_neon(std::uint8_t* data, std::size_t n, std::uint8_t limit) {
    const uint8x16_t lim = vdupq_n_u8(limit);
    const uint8x16_t one = vdupq_n_u8(1);
    std::size_t i = 0;
    for (; i + 16 <= n; i += 16) {
        const uint8x16_t v = vld1q_u8(data + i);
        vst1q_u8(data + i, vaddq_u8(v, vandq_u8(vcltq_u8(v, lim), one)));
    }
    for (; i < n; ++i) {
        if (data[i] < limit) ++data[i];
    }
}

}  // namespace

namespace detail {
const KernelTable kNeonKernels{Isa::Neon, find_u64_neon, find_u8_neon, count_u8_neon,
                               increment_saturate_u8_neon};
}

}  // namespace hvm::simd
