#include "hvm/simd/kernels.hpp"

namespace hvm::simd {
namespace {

int find_u64_scalar(const std::uint64_t* data, std::size_t n, std::uint64_t key) {
    for (std::size_t i = 0; i < n; ++i) {
        if (data[i] == key) return static_cast<int>(i);
    }
    return -1;
}

int find_u8_scalar(const std::uint8_t* data, std::size_t n, std::uint8_t key) {
    for (std::size_t i = 0; i < n; ++i) {
        if (data[i] == key) return static_cast<int>(i);
    }
    return -1;
}

std::size_t count_u8_scalar(const std::uint8_t* data, std::size_t n, std::uint8_t key) {
    std::size_t c = 0;
    for (std::size_t i = 0; i < n; ++i) c += data[i] == key;
    return c;
}

void increment_saturate_u8_scalar(std::uint8_t* data, std::size_t n, std::uint8_t limit) {
    for (std::size_t i = 0; i < n; ++i) {
        if (data[i] < limit) ++data[i];
    }
}

}  // namespace

namespace detail {
const KernelTable kScalarKernels{Isa::Scalar, find_u64_scalar, find_u8_scalar, count_u8_scalar,
                                 increment_saturate_u8_scalar};
}

}  // namespace hvm::simd
