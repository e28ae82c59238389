#include <atomic>
#include <cstdlib>
#include <string>

#include "hvm/core/error.hpp"
#include "hvm/simd/kernels.hpp"

namespace hvm::simd {
namespace {

const KernelTable* initial_table() {
    if (const char* forced = std::getenv("HVM_SIMD")) {
        const std::string name(forced);
        if (name == "scalar") return &kernels_for(Isa::Scalar);
        if (name == "avx2") return &kernels_for(Isa::Avx2);
        if (name == "neon") return &kernels_for(Isa::Neon);
        throw Error("HVM_SIMD must be one of scalar, avx2, neon; got '" + name + "'");
    }
    return &kernels_for(best_isa());
}

std::atomic<const KernelTable*>& slot() {
    static std::atomic<const KernelTable*> table{initial_table()};
    return table;
}

}  // namespace

std::string_view to_string(Isa isa) {
    switch (isa) {
        case Isa::Scalar: return "scalar";
        case Isa::Avx2: return "avx2";
        case Isa::Neon: return "neon";
    }
    return "unknown";
}

bool isa_supported(Isa isa) {
    switch (isa) {
        case Isa::Scalar: return true;
        case Isa::Avx2:
#if defined(HVM_HAVE_AVX2_KERNELS)
            return __builtin_cpu_supports("avx2");
#else
            return false;
#endif
        case Isa::Neon:
#if defined(HVM_HAVE_NEON_KERNELS)
            return true;
#else
            return false;
#endif
    }
    return false;
}

Isa best_isa() {
    if (isa_supported(Isa::Avx2)) return Isa::Avx2;
    if (isa_supported(Isa::Neon)) return Isa::Neon;
    return Isa::Scalar;
}

const KernelTable& kernels_for(Isa isa) {
    if (!isa_supported(isa)) {
        throw Error("SIMD kernels '" + std::string(to_string(isa)) + "' unavailable on this CPU");
    }
    switch (isa) {
#if defined(HVM_HAVE_AVX2_KERNELS)
        case Isa::Avx2: return detail::kAvx2Kernels;
#endif
#if defined(HVM_HAVE_NEON_KERNELS)
        case Isa::Neon: return detail::kNeonKernels;
#endif
        default: return detail::kScalarKernels;
    }
}

const KernelTable& active() { return *slot().load(std::memory_order_relaxed); }

void select(Isa isa) { slot().store(&kernels_for(isa), std::memory_order_relaxed); }

}  // namespace hvm::simd
