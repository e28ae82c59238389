#include "hvm/workload/generator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "hvm/core/error.hpp"

namespace hvm::workload {
namespace {

constexpr std::uint64_t kRankSeedSalt = 0x5a17'0000'0000'0001ull;
constexpr std::uint64_t kHugeSeedSalt = 0x6a7e'0000'0000'0002ull;
constexpr std::uint64_t kLinesPerPage = kSmallPageBytes / kLineBytes;

std::vector<std::uint64_t> permutation(std::uint64_t n, std::uint64_t seed) {
    std::vector<std::uint64_t> p(n);
    std::iota(p.begin(), p.end(), 0);
    SplitMix64 rng(seed);
    for (std::uint64_t i = n; i > 1; --i) std::swap(p[i - 1], p[rng.below(i)]);
    return p;
}

class Stream {
public:
    explicit Stream(const GeneratorSpec& spec)
        : spec_(spec),
          rng_(spec.seed),
          pages_(spec.footprint_bytes / kSmallPageBytes),
          write_(probability_threshold(spec.write_fraction)),
          fetch_(probability_threshold(spec.fetch_fraction)) {
        const bool zipf = spec.pattern == Pattern::Zipf || (spec.pattern == Pattern::Mix && spec.mix_weights[1] > 0);
        if (zipf) {
            zipf_ = ZipfSampler(pages_, spec.zipf_s);
            rank_to_page_ = permutation(pages_, spec.seed ^ kRankSeedSalt);
        }
        mix_total_ = std::uint64_t{spec.mix_weights[0]} + spec.mix_weights[1] + spec.mix_weights[2];
    }

    TraceRecord next() {
        TraceRecord r;
        r.pid = spec_.pid;
        r.icount = spec_.icount;
        Pattern p = spec_.pattern;
        if (p == Pattern::Mix) {
            std::uint64_t pick = rng_.below(mix_total_);
            p = pick < spec_.mix_weights[0] ? Pattern::Uniform
                : pick < spec_.mix_weights[0] + std::uint64_t{spec_.mix_weights[1]} ? Pattern::Zipf
                                                                                   : Pattern::Stride;
        }
        std::uint64_t addr = 0;
        switch (p) {
            case Pattern::Uniform:
                addr = rng_.below(pages_) * kSmallPageBytes + rng_.below(kLinesPerPage) * kLineBytes;
                break;
            case Pattern::Zipf:
                addr = rank_to_page_[zipf_.sample(rng_)] * kSmallPageBytes + rng_.below(kLinesPerPage) * kLineBytes;
                break;
            case Pattern::Stride:
                addr = stride_pos_;
                stride_pos_ = (stride_pos_ + spec_.stride_bytes) % spec_.footprint_bytes;
                break;
            case Pattern::Mix:
                break;
        }
        r.vaddr = VirtAddr(addr);
        if (rng_.chance(fetch_)) {
            r.op = AccessOp::InstrFetch;
        } else {
            r.op = rng_.chance(write_) ? AccessOp::Write : AccessOp::Read;
        }
        return r;
    }

private:
    const GeneratorSpec& spec_;
    SplitMix64 rng_;
    std::uint64_t pages_;
    std::uint32_t write_;
    std::uint32_t fetch_;
    ZipfSampler zipf_{1, 0.0};
    std::vector<std::uint64_t> rank_to_page_;
    std::uint64_t mix_total_ = 0;
    std::uint64_t stride_pos_ = 0;
};

}  // namespace

std::uint64_t SplitMix64::next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

std::uint64_t SplitMix64::below(std::uint64_t bound) {
    if (bound == 0) throw Error("SplitMix64::below needs a positive bound");
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
        const std::uint64_t r = next();
        if (r >= threshold) return r % bound;
    }
}

std::uint32_t probability_threshold(double p) {
    if (p <= 0.0) return 0;
    if (p >= 1.0) return 0xffffffffu;
    return static_cast<std::uint32_t>(std::llround(p * 4294967296.0));
}

std::string_view to_string(Pattern p) {
    switch (p) {
        case Pattern::Uniform: return "uniform";
        case Pattern::Zipf: return "zipf";
        case Pattern::Stride: return "stride";
        case Pattern::Mix: return "mix";
    }
    return "unknown";
}

Pattern parse_pattern(std::string_view name) {
    for (auto p : {Pattern::Uniform, Pattern::Zipf, Pattern::Stride, Pattern::Mix}) {
        if (to_string(p) == name) return p;
    }
    throw ConfigError("unknown access pattern '" + std::string(name) + "' (expected uniform, zipf, stride or mix)");
}

void GeneratorSpec::validate() const {
    if (footprint_bytes < kSmallPageBytes || footprint_bytes % kSmallPageBytes != 0) {
        throw ConfigError("footprint must be a positive multiple of 4KB");
    }
    if (footprint_bytes > kVirtAddrMask) throw ConfigError("footprint exceeds the 48-bit address space");
    if (!(huge_fraction >= 0.0 && huge_fraction <= 1.0)) throw ConfigError("huge fraction must lie in [0, 1]");
    if (!(write_fraction >= 0.0 && write_fraction <= 1.0)) throw ConfigError("write fraction must lie in [0, 1]");
    if (!(fetch_fraction >= 0.0 && fetch_fraction <= 1.0)) throw ConfigError("fetch fraction must lie in [0, 1]");
    if (icount == 0) throw ConfigError("icount must be at least 1");
    if (pid > kMaxPid) throw ConfigError("pid out of range");
    const bool zipf = pattern == Pattern::Zipf || (pattern == Pattern::Mix && mix_weights[1] > 0);
    if (zipf && footprint_bytes / kSmallPageBytes > kMaxZipfPages) {
        throw ConfigError("zipf sampling supports at most 2^24 pages");
    }
    if (zipf && !(zipf_s >= 0.0 && std::isfinite(zipf_s))) throw ConfigError("zipf exponent must be finite and >= 0");
    if (pattern == Pattern::Stride && stride_bytes == 0) throw ConfigError("stride must be positive");
    if (pattern == Pattern::Mix) {
        if (mix_weights[0] + std::uint64_t{mix_weights[1]} + mix_weights[2] == 0) {
            throw ConfigError("mix weights must not all be zero");
        }
        if (mix_weights[2] > 0 && stride_bytes == 0) throw ConfigError("stride must be positive");
    }
}

ZipfSampler::ZipfSampler(std::uint64_t n, double s) {
    if (n == 0 || n > kMaxZipfPages) throw ConfigError("zipf population must lie in [1, 2^24]");
    std::vector<double> w(n);
    double total = 0.0;
    for (std::uint64_t i = 0; i < n; ++i) {
        w[i] = s == 0.0 ? 1.0 : 1.0 / std::pow(static_cast<double>(i + 1), s);
        total += w[i];
    }
    // 2^52 total leaves every cumulative value exact in both double and integer form.
    const double scale = 4503599627370496.0 / total;
    cumulative_.resize(n);
    std::uint64_t acc = 0;
    for (std::uint64_t i = 0; i < n; ++i) {
        acc += std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(w[i] * scale)));
        cumulative_[i] = acc;
    }
}

std::uint64_t ZipfSampler::sample(SplitMix64& rng) const {
    const std::uint64_t r = rng.below(cumulative_.back());
    return static_cast<std::uint64_t>(std::upper_bound(cumulative_.begin(), cumulative_.end(), r) -
                                      cumulative_.begin());
}

std::vector<HugeRegion> huge_regions(const GeneratorSpec& spec) {
    const std::uint64_t chunks = spec.footprint_bytes / kLargePageBytes;
    const auto wanted = static_cast<std::uint64_t>(std::llround(spec.huge_fraction * static_cast<double>(chunks)));
    if (wanted == 0) return {};
    std::vector<std::uint64_t> chosen = permutation(chunks, spec.seed ^ kHugeSeedSalt);
    chosen.resize(std::min(wanted, chunks));
    std::sort(chosen.begin(), chosen.end());
    std::vector<HugeRegion> out;
    for (std::uint64_t c : chosen) {
        const std::uint64_t begin = c * kLargePageBytes;
        if (!out.empty() && out.back().end == begin) {
            out.back().end += kLargePageBytes;
        } else {
            out.push_back({begin, begin + kLargePageBytes});
        }
    }
    return out;
}

Trace generate(const GeneratorSpec& spec) {
    return generate_processes(spec, 1);
}

Trace generate_processes(const GeneratorSpec& spec, unsigned processes) {
    spec.validate();
    if (processes == 0) throw ConfigError("need at least one process");
    if (spec.pid + std::uint64_t{processes} - 1 > kMaxPid) throw ConfigError("pid range out of bounds");
    std::vector<GeneratorSpec> specs(processes, spec);
    std::vector<Stream> streams;
    streams.reserve(processes);
    Trace trace;
    for (unsigned i = 0; i < processes; ++i) {
        specs[i].pid = spec.pid + i;
        specs[i].seed = spec.seed + i;
        streams.emplace_back(specs[i]);
        auto regions = huge_regions(specs[i]);
        if (!regions.empty()) trace.huge_regions[specs[i].pid] = std::move(regions);
    }
    trace.records.reserve(spec.accesses * processes);
    for (std::uint64_t n = 0; n < spec.accesses; ++n) {
        for (auto& s : streams) trace.records.push_back(s.next());
    }
    return trace;
}

}  // namespace hvm::workload
