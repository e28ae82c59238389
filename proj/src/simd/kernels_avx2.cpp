// Compiled with -mavx2; only reached after a runtime CPU check.

#include <immintrin.h>

#include <bit>

#include "hvm/simd/kernels.hpp"

namespace hvm::simd {
namespace {

int find_u64_avx2(const std::uint64_t* data, std::size_t n, std::uint64_t key) {
    const __m256i k = _mm256_set1_epi64x(static_cast<long long>(key));
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256i v = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(data + i));
        const int mask = _mm256_movemask_pd(_mm256_castsi256_pd(_mm256_cmpeq_epi64(v, k)));
        if (mask != 0) return static_cast<int>(i) + std::countr_zero(static_cast<unsigned>(mask));
    }
    for (; i < n; ++i) {
        if (data[i] == key) return static_cast<int>(i);
    }
    return -1;
}

int find_u8_avx2(const std::uint8_t* data, std::size_t n, std::uint8_t key) {
    const __m256i k = _mm256_set1_epi8(static_cast<char>(key));
    std::size_t i = 0;
    for (; i + 32 <= n; i += 32) {
        const __m256i v = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(data + i));
        const auto mask = static_cast<unsigned>(_mm256_movemask_epi8(_mm256_cmpeq_epi8(v, k)));
        if (mask != 0) return static_cast<int>(i) + std::countr_zero(mask);
    }
    if (i + 16 <= n) {
        const __m128i v = _mm_loadu_si128(reinterpret_cast<const __m128i*>(data + i));
        const auto mask = static_cast<unsigned>(
            _mm_movemask_epi8(_mm_cmpeq_epi8(v, _mm256_castsi256_si128(k))));
        if (mask != 0) return static_cast<int>(i) + std::countr_zero(mask);
        i += 16;
    }
    for (; i < n; ++i) {
        if (data[i] == key) return static_cast<int>(i);
    }
    return -1;
}

std::size_t count_u8_avx2(const std::uint8_t* data, std::size_t n, std::uint8_t key) {
    const __m256i k = _mm256_set1_epi8(static_cast<char>(key));
    std::size_t c = 0;
    std::size_t i = 0;
    for (; i + 32 <= n; i += 32) {
        const __m256i v = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(data + i));
        c += std::popcount(static_cast<unsigned>(_mm256_movemask_epi8(_mm256_cmpeq_epi8(v, k))));
    }
    for (; i < n; ++i) c += data[i] == key;
    return c;
}

void increment_saturate_u8_avx2(std::uint8_t* data, std::size_t n, std::uint8_t limit) {
    const __m256i one = _mm256_set1_epi8(1);
    const __m256i lim = _mm256_set1_epi8(static_cast<char>(limit));
    std::size_t i = 0;
    for (; i + 32 <= n; i += 32) {
        auto* p = reinterpret_cast<__m256i*>(data + i);
        const __m256i v = _mm256_loadu_si256(p);
        // v < limit  <=>  max(v, limit) != v
        const __m256i at_limit = _mm256_cmpeq_epi8(_mm256_max_epu8(v, lim), v);
        _mm256_storeu_si256(p, _mm256_add_epi8(v, _mm256_andnot_si256(at_limit, one)));
    }
    for (; i < n; ++i) {
        if (data[i] < limit) ++data[i];
    }
}

}  // namespace

namespace detail {
const KernelTable kAvx2Kernels{Isa::Avx2, find_u64_avx2, find_u8_avx2, count_u8_avx2,
                               increment_saturate_u8_avx2};
}

}  // namespace hvm::simd
