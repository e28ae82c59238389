#include <bit>
#include <string>

#include "hvm/core/error.hpp"
#include "hvm/restseg/restseg.hpp"

namespace hvm::restseg {

std::string_view to_string(HashFn fn) {
    switch (fn) {
        case HashFn::Mod: return "mod";
        case HashFn::XorFold: return "xor";
        case HashFn::PrimeDisp: return "prime";
        case HashFn::MersenneMod: return "mersenne";
    }
    return "unknown";
}

HashFn parse_hash_fn(std::string_view name) {
    if (name == "mod") return HashFn::Mod;
    if (name == "xor") return HashFn::XorFold;
    if (name == "prime") return HashFn::PrimeDisp;
    if (name == "mersenne") return HashFn::MersenneMod;
    throw ConfigError("unknown hash function '" + std::string(name) +
                      "' (expected mod, xor, prime, mersenne)");
}

std::uint64_t set_index(std::uint64_t vpn, std::uint64_t num_sets, HashFn fn) {
    const std::uint64_t mask = num_sets - 1;
    const unsigned k = static_cast<unsigned>(std::countr_zero(num_sets));
    switch (fn) {
        case HashFn::Mod:
            return vpn & mask;
        case HashFn::XorFold: {
            if (k == 0) return 0;
            std::uint64_t folded = 0;
            for (std::uint64_t rest = vpn; rest != 0; rest = k < 64 ? rest >> k : 0) {
                folded ^= rest & mask;
            }
            return folded;
        }
        case HashFn::PrimeDisp: {
            const std::uint64_t high = k < 64 ? vpn >> k : 0;
            // Wrapping arithmetic is exact here: num_sets divides 2^64.
            return (vpn + kPrimeDisplacement * high) & mask;
        }
        case HashFn::MersenneMod: {
            // Largest 2^j - 1 not above num_sets; for a power of two that is num_sets - 1,
            // except num_sets == 1 where it is 1.
            const std::uint64_t m = num_sets == 1 ? 1 : num_sets - 1;
            return (vpn % m) & mask;
        }
    }
    return 0;
}

}  // namespace hvm::restseg
