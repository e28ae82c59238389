#include <map>
#include <set>
#include <sstream>

#include "doctest.h"
#include "hvm/core/error.hpp"
#include "hvm/workload/generator.hpp"

using namespace hvm;
using namespace hvm::workload;

namespace {

GeneratorSpec spec_of(Pattern p, std::uint64_t footprint, std::uint64_t accesses, std::uint64_t seed = 1) {
    GeneratorSpec s;
    s.pattern = p;
    s.footprint_bytes = footprint;
    s.accesses = accesses;
    s.seed = seed;
    return s;
}

}  // namespace

TEST_CASE("SplitMix64 reference values") {
    // Published outputs of splitmix64 seeded with 0.
    SplitMix64 rng(0);
    CHECK(rng.next() == 0xe220a8397b1dcdafull);
    CHECK(rng.next() == 0x6e789e6aa1b965f4ull);
    CHECK(rng.next() == 0x06c45d188009454full);
}

TEST_CASE("SplitMix64::below stays in range") {
    SplitMix64 rng(9);
    for (std::uint64_t bound : {1ull, 2ull, 3ull, 1000ull, (1ull << 63) + 5}) {
        for (int i = 0; i < 1000; ++i) CHECK(rng.below(bound) < bound);
    }
    CHECK_THROWS(rng.below(0));
}

TEST_CASE("same seed gives a byte-identical trace") {
    for (Pattern p : {Pattern::Uniform, Pattern::Zipf, Pattern::Stride, Pattern::Mix}) {
        auto s = spec_of(p, 8 * 1024 * 1024, 20000, 77);
        s.huge_fraction = 0.5;
        s.fetch_fraction = 0.1;
        std::ostringstream a, b;
        write_trace(a, generate(s));
        write_trace(b, generate(s));
        CHECK(a.str() == b.str());
        auto other = s;
        other.seed = 78;
        std::ostringstream c;
        write_trace(c, generate(other));
        CHECK(a.str() != c.str());
    }
}

TEST_CASE("addresses stay inside the footprint") {
    for (Pattern p : {Pattern::Uniform, Pattern::Zipf, Pattern::Stride, Pattern::Mix}) {
        auto s = spec_of(p, 3 * kSmallPageBytes + 4 * kSmallPageBytes, 5000, 3);
        s.stride_bytes = 3000;
        for (const auto& r : generate(s).records) CHECK(r.vaddr.value() < s.footprint_bytes);
    }
}

TEST_CASE("stride over three pages cycles 0,1,2") {
    auto s = spec_of(Pattern::Stride, 3 * kSmallPageBytes, 10);
    s.stride_bytes = 4096;
    const Trace t = generate(s);
    for (std::size_t i = 0; i < t.records.size(); ++i) {
        CHECK(t.records[i].vaddr.value() / kSmallPageBytes == i % 3);
    }
}

TEST_CASE("zipf with exponent 0 is uniform (chi-square, alpha 0.01)") {
    constexpr std::uint64_t kPages = 256;
    constexpr std::uint64_t kSamples = 1'048'576;
    auto s = spec_of(Pattern::Zipf, kPages * kSmallPageBytes, kSamples, 2024);
    s.zipf_s = 0.0;
    std::vector<std::uint64_t> counts(kPages);
    for (const auto& r : generate(s).records) ++counts[r.vaddr.value() / kSmallPageBytes];
    const double expected = static_cast<double>(kSamples) / kPages;
    double chi2 = 0;
    for (auto c : counts) chi2 += (c - expected) * (c - expected) / expected;
    // scipy.stats.chi2.ppf(0.99, 255)
    constexpr double kCritical = 310.45738822;
    CHECK(chi2 < kCritical);
}

TEST_CASE("zipf favours low ranks") {
    ZipfSampler z(1000, 1.0);
    SplitMix64 rng(4);
    std::vector<std::uint64_t> counts(1000);
    for (int i = 0; i < 200000; ++i) ++counts[z.sample(rng)];
    CHECK(counts[0] > counts[1]);
    CHECK(counts[1] > counts[9]);
    CHECK(counts[9] > counts[999]);
    // Harmonic number H_1000 = 7.4854708606; rank 0 has probability 1/H.
    CHECK(static_cast<double>(counts[0]) / 200000 == doctest::Approx(1.0 / 7.4854708606).epsilon(0.03));
}

TEST_CASE("huge regions are 2MB aligned whole chunks") {
    auto s = spec_of(Pattern::Uniform, 64 * kLargePageBytes, 10, 5);
    s.huge_fraction = 0.25;
    const auto regions = huge_regions(s);
    std::uint64_t covered = 0;
    for (const auto& r : regions) {
        CHECK(r.begin % kLargePageBytes == 0);
        CHECK(r.end % kLargePageBytes == 0);
        CHECK(r.end > r.begin);
        CHECK(r.end <= s.footprint_bytes);
        covered += r.end - r.begin;
    }
    CHECK(covered == 16 * kLargePageBytes);
    for (std::size_t i = 1; i < regions.size(); ++i) CHECK(regions[i - 1].end < regions[i].begin);
}

TEST_CASE("operation mix follows the configured fractions") {
    auto s = spec_of(Pattern::Uniform, 1024 * kSmallPageBytes, 100000, 12);
    s.write_fraction = 0.25;
    s.fetch_fraction = 0.1;
    std::map<AccessOp, int> ops;
    for (const auto& r : generate(s).records) ++ops[r.op];
    CHECK(ops[AccessOp::InstrFetch] / 100000.0 == doctest::Approx(0.1).epsilon(0.05));
    CHECK(ops[AccessOp::Write] / 90000.0 == doctest::Approx(0.25).epsilon(0.05));
}

TEST_CASE("multi-process generation interleaves distinct streams") {
    auto s = spec_of(Pattern::Uniform, 64 * kSmallPageBytes, 100, 1);
    s.pid = 10;
    const Trace t = generate_processes(s, 3);
    REQUIRE(t.records.size() == 300);
    for (std::size_t i = 0; i < t.records.size(); ++i) CHECK(t.records[i].pid == 10 + i % 3);
    auto s1 = s;
    s1.pid = 11;
    s1.seed = 2;
    const Trace single = generate(s1);
    for (std::size_t i = 0; i < 100; ++i) CHECK(t.records[3 * i + 1] == single.records[i]);
}

TEST_CASE("invalid specs are rejected") {
    auto s = spec_of(Pattern::Uniform, 100, 10);
    CHECK_THROWS_AS(s.validate(), ConfigError);
    s = spec_of(Pattern::Zipf, (kMaxZipfPages + 1) * kSmallPageBytes, 10);
    CHECK_THROWS_AS(s.validate(), ConfigError);
    s = spec_of(Pattern::Uniform, kSmallPageBytes, 10);
    s.huge_fraction = 1.5;
    CHECK_THROWS_AS(s.validate(), ConfigError);
    s.huge_fraction = 0;
    s.icount = 0;
    CHECK_THROWS_AS(s.validate(), ConfigError);
    CHECK_THROWS_AS(parse_pattern("gaussian"), ConfigError);
}
