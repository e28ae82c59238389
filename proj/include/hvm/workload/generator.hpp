#pragma once

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

#include "hvm/core/address.hpp"
#include "hvm/core/trace.hpp"

namespace hvm::workload {

/// SplitMix64: state += 0x9e3779b97f4a7c15, then two xor-shift-multiply rounds.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next();
    /// Unbiased value in [0, bound); bound must be positive.
    std::uint64_t below(std::uint64_t bound);
    /// True with probability numerator / 2^32.
    bool chance(std::uint32_t numerator) { return (next() >> 32) < numerator; }

private:
    std::uint64_t state_;
};

/// Converts a probability to the 32-bit threshold used by SplitMix64::chance.
std::uint32_t probability_threshold(double p);

enum class Pattern : std::uint8_t { Uniform, Zipf, Stride, Mix };
std::string_view to_string(Pattern p);
Pattern parse_pattern(std::string_view name);

struct GeneratorSpec {
    Pattern pattern = Pattern::Uniform;
    double zipf_s = 0.8;
    std::uint64_t stride_bytes = kSmallPageBytes;
    /// Relative weights of the uniform, zipf and stride components of a mix.
    std::array<std::uint32_t, 3> mix_weights{1, 1, 1};
    std::uint64_t footprint_bytes = 64 * 1024 * 1024;
    /// Share of the footprint's whole 2MB chunks backed by huge pages.
    double huge_fraction = 0.0;
    std::uint64_t accesses = 1'000'000;
    std::uint64_t seed = 1;
    Pid pid = 1;
    double write_fraction = 0.3;
    double fetch_fraction = 0.0;
    /// Instructions retired per record.
    std::uint32_t icount = 3;

    /// Throws ConfigError on an unusable spec.
    void validate() const;
};

/// Largest page population the exact Zipf sampler accepts.
inline constexpr std::uint64_t kMaxZipfPages = std::uint64_t{1} << 24;

/// Exact inverse-CDF sampler over ranks 0..n-1 with weight 1/(rank+1)^s,
/// quantized once to integer cumulative weights.
class ZipfSampler {
public:
    ZipfSampler(std::uint64_t n, double s);
    std::uint64_t sample(SplitMix64& rng) const;
    std::uint64_t size() const { return cumulative_.size(); }

private:
    std::vector<std::uint64_t> cumulative_;
};

/// Deterministic for a given spec; every address lies in [0, footprint).
Trace generate(const GeneratorSpec& spec);

/// `processes` copies of `spec` with pids pid, pid+1, ... and seeds seed,
/// seed+1, ..., interleaved one record at a time.
Trace generate_processes(const GeneratorSpec& spec, unsigned processes);

/// 2MB-aligned huge regions chosen for `spec` (merged, ascending).
std::vector<HugeRegion> huge_regions(const GeneratorSpec& spec);

}  // namespace hvm::workload
