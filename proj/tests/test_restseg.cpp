#include <bit>
#include <map>
#include <optional>
#include <random>
#include <set>

#include "doctest.h"
#include "hvm/core/error.hpp"
#include "hvm/restseg/restseg.hpp"

using namespace hvm;
using namespace hvm::restseg;

namespace {

Config make(std::uint64_t bytes, PageSize size, unsigned ways, HashFn fn = HashFn::Mod, std::uint64_t base = 0) {
    Config c;
    c.base_frame = {base, size};
    c.total_bytes = bytes;
    c.page_size = size;
    c.associativity = ways;
    c.hash = fn;
    c.validate();
    return c;
}

constexpr std::uint64_t KB = 1024;
constexpr std::uint64_t MB = 1024 * KB;

struct Fixture {
    Config cfg;
    GlobalTar global;
    std::map<Pid, std::pair<TagArray, SetFilter>> procs;

    explicit Fixture(const Config& c) : cfg(c), global(c) {}
    TagArray& tar(Pid p) { return slot(p).first; }
    SetFilter& sf(Pid p) { return slot(p).second; }
    std::pair<TagArray, SetFilter>& slot(Pid p) {
        auto it = procs.find(p);
        if (it == procs.end()) it = procs.emplace(p, std::make_pair(TagArray(cfg), SetFilter(cfg))).first;
        return it->second;
    }
};

}  // namespace

TEST_CASE("tag array and set filter sizes") {
    CHECK(tar_size_bits(make(16 * KB, PageSize::Small, 2)) == 180);
    CHECK(sf_size_bits(make(16 * KB, PageSize::Small, 2)) == 4);
    CHECK(tar_size_bits(make(512 * MB, PageSize::Small, 16)) == 4'325'376);
    CHECK(tar_size_bits(make(512 * MB, PageSize::Small, 16)) / 8 == 528 * KB);
    CHECK(tar_size_bits(make(8 * KB, PageSize::Small, 2)) == 92);
    CHECK(sf_size_bits(make(4 * KB, PageSize::Small, 1)) == 1);
    CHECK(sf_size_bits(make(512 * MB, PageSize::Small, 16)) == 40'960);
}

TEST_CASE("size formulas match a bit-accurate serialization") {
    std::mt19937_64 rng(99);
    for (int i = 0; i < 24; ++i) {
        const unsigned ways = 1u << (rng() % 5);
        const std::uint64_t sets = 1ull << (rng() % 8);
        const PageSize size = (rng() % 4 == 0) ? PageSize::Large : PageSize::Small;
        const Config cfg = make(sets * ways * page_bytes(size), size, ways);
        GlobalTar g(cfg);
        TagArray tar(cfg);
        SetFilter sf(cfg);
        for (int n = 0; n < 50; ++n) {
            const std::uint64_t vpn = rng() & ((1ull << (48 - offset_bits(size))) - 1);
            const auto set = cfg.set_of(vpn);
            const int way = g.free_way(set);
            if (way >= 0) insert(g, tar, sf, cfg, {1, vpn, size}, set, static_cast<unsigned>(way));
        }
        const auto ti = tar.pack();
        const auto si = sf.pack();
        CHECK(ti.bit_length == tar_size_bits(cfg));
        CHECK(si.bit_length == sf_size_bits(cfg));
        CHECK(ti.bytes.size() == image_bytes(ti.bit_length));
        CHECK(cfg.tag_bits() == 48 - offset_bits(size) - std::countr_zero(sets));
    }
}

TEST_CASE("tag array serialization reproduces tags and metadata") {
    const Config cfg = make(16 * KB, PageSize::Small, 2);
    GlobalTar g(cfg);
    TagArray tar(cfg);
    SetFilter sf(cfg);
    insert(g, tar, sf, cfg, {1, 0b1011, PageSize::Small}, 1, 1, meta::kValid | meta::kDirty);
    const auto img = tar.pack();
    auto bit = [&](std::uint64_t i) { return (img.bytes[i / 8] >> (i % 8)) & 1u; };
    // Entry (1,1) is the fourth 45-bit entry: 35-bit tag then 10 metadata bits.
    const std::uint64_t start = 3 * 45;
    std::uint64_t tag = 0;
    for (unsigned b = 0; b < 35; ++b) tag |= std::uint64_t{bit(start + b)} << b;
    std::uint64_t m = 0;
    for (unsigned b = 0; b < 10; ++b) m |= std::uint64_t{bit(start + 35 + b)} << b;
    CHECK(tag == 0b101);
    CHECK(m == (meta::kValid | meta::kDirty));
    for (std::uint64_t i = 0; i < start; ++i) CHECK(bit(i) == 0);
    const auto sfi = sf.pack();
    CHECK(sfi.bytes[0] == 0b0100);
}

TEST_CASE("set index examples") {
    for (HashFn fn : {HashFn::Mod, HashFn::XorFold, HashFn::PrimeDisp, HashFn::MersenneMod}) {
        CHECK(set_index(0, 8192, fn) == 0);
        std::mt19937_64 rng(static_cast<unsigned>(fn));
        for (int i = 0; i < 1000; ++i) {
            const std::uint64_t sets = 1ull << (rng() % 20);
            CHECK(set_index(rng() >> 16, sets, fn) < sets);
        }
    }
    CHECK(set_index(8193, 8192, HashFn::Mod) == 1);
    CHECK(set_index(0b101'011, 8, HashFn::XorFold) == 0b110);
    CHECK(set_index(7, 8, HashFn::MersenneMod) == 0);
    CHECK(set_index(9, 8, HashFn::MersenneMod) == 2);
    CHECK(set_index(17, 16, HashFn::PrimeDisp) == ((17 + kPrimeDisplacement * 1) % 16));
    CHECK(parse_hash_fn("xor") == HashFn::XorFold);
    CHECK_THROWS_AS(parse_hash_fn("crc"), ConfigError);
}

TEST_CASE("segment geometry is validated") {
    Config c;
    c.total_bytes = 12 * KB;
    c.associativity = 1;
    CHECK_THROWS_AS(c.validate(), ConfigError);  // 3 sets
    c.total_bytes = 16 * KB;
    c.associativity = 3;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c.associativity = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c.associativity = 2;
    c.total_bytes = 5000;
    CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("rsw examples") {
    const Config cfg = make(16 * KB, PageSize::Small, 2);
    Fixture f(cfg);
    const Vpn v{1, 4, PageSize::Small};  // set 0

    auto r = rsw(f.tar(1), f.sf(1), cfg, v);
    CHECK_FALSE(r.hit);
    CHECK_FALSE(r.probed_tar);

    insert(f.global, f.tar(1), f.sf(1), cfg, v, 0, 0);
    r = rsw(f.tar(1), f.sf(1), cfg, v);
    CHECK(r.hit);
    CHECK(r.pfn == Pfn{0, PageSize::Small});
    CHECK(r.pfn.paddr() == 0);

    r = rsw(f.tar(1), f.sf(1), cfg, {1, 6, PageSize::Small});
    CHECK_FALSE(r.hit);
    CHECK(r.probed_tar);

    // The same vpn number in another process is not visible.
    r = rsw(f.tar(2), f.sf(2), cfg, {2, 4, PageSize::Small});
    CHECK_FALSE(r.hit);
}

TEST_CASE("insert and remove maintain the set filter") {
    const Config cfg = make(16 * KB, PageSize::Small, 2);
    Fixture f(cfg);
    const Vpn a{1, 0, PageSize::Small}, b{1, 2, PageSize::Small};
    insert(f.global, f.tar(1), f.sf(1), cfg, a, 0, 0);
    CHECK(f.sf(1).count(0) == 1);
    CHECK(f.global.rrpv(0, 0) == kRrpvInsert);
    insert(f.global, f.tar(1), f.sf(1), cfg, b, 0, 1);
    CHECK(f.sf(1).count(0) == 2);
    CHECK(f.sf(1).count(0) == 0b11 - 1);
    CHECK_THROWS_AS(insert(f.global, f.tar(2), f.sf(2), cfg, {2, 0, PageSize::Small}, 0, 0), StateError);
    remove(f.global, f.tar(1), f.sf(1), cfg, b, 0, 1);
    CHECK(f.sf(1).count(0) == 1);
    remove(f.global, f.tar(1), f.sf(1), cfg, a, 0, 0);
    CHECK(f.sf(1).count(0) == 0);
    CHECK(f.tar(1).metadata(0, 0) == 0);
    CHECK_THROWS_AS(remove(f.global, f.tar(1), f.sf(1), cfg, a, 0, 0), StateError);
}

TEST_CASE("SRRIP victim selection") {
    const Config cfg = make(16 * KB, PageSize::Small, 2);
    Fixture f(cfg);
    insert(f.global, f.tar(1), f.sf(1), cfg, {1, 0, PageSize::Small}, 0, 0);
    insert(f.global, f.tar(1), f.sf(1), cfg, {1, 2, PageSize::Small}, 0, 1);

    // [2,2] ages once to [3,3]; lowest way wins.
    CHECK(select_victim(f.global, 0) == 0);
    CHECK(f.global.rrpv(0, 0) == 3);
    CHECK(f.global.rrpv(0, 1) == 3);

    f.global.set_rrpv(0, 0, 2);
    CHECK(select_victim(f.global, 0) == 1);

    touch(f.global, 0, 1);
    CHECK(f.global.rrpv(0, 1) == 0);
    CHECK(f.global.hits(0, 1) == 1);
    CHECK(select_victim(f.global, 0) == 0);
    CHECK(f.global.rrpv(0, 1) == 1);

    f.global.set_rrpv(0, 0, 3);
    f.global.set_rrpv(0, 1, 3);
    CHECK(select_victim(f.global, 0) == 0);
}

TEST_CASE("rsw agrees with a brute-force scan of the global table") {
    for (HashFn fn : {HashFn::Mod, HashFn::XorFold, HashFn::PrimeDisp, HashFn::MersenneMod}) {
        const Config cfg = make(64 * 4 * KB, PageSize::Small, 4, fn, 100);
        Fixture f(cfg);
        std::mt19937_64 rng(1234 + static_cast<unsigned>(fn));
        std::vector<Vpn> resident;
        std::uint64_t mismatches = 0;
        for (int op = 0; op < 25000; ++op) {
            const Pid pid = 1 + rng() % 3;
            const Vpn v{pid, rng() % 256, PageSize::Small};
            const auto kind = rng() % 3;
            if (kind == 0) {
                const auto set = cfg.set_of(v.number);
                const auto hit = rsw(f.tar(pid), f.sf(pid), cfg, v);
                const int way = f.global.free_way(set);
                if (!hit.hit && way >= 0) {
                    insert(f.global, f.tar(pid), f.sf(pid), cfg, v, set, static_cast<unsigned>(way));
                    resident.push_back(v);
                }
            } else if (kind == 1 && !resident.empty()) {
                const std::size_t i = rng() % resident.size();
                const Vpn victim = resident[i];
                const auto r = rsw(f.tar(victim.pid), f.sf(victim.pid), cfg, victim);
                REQUIRE(r.hit);
                remove(f.global, f.tar(victim.pid), f.sf(victim.pid), cfg, victim, r.set, r.way);
                resident.erase(resident.begin() + static_cast<std::ptrdiff_t>(i));
            } else {
                const auto r = rsw(f.tar(pid), f.sf(pid), cfg, v);
                std::optional<Pfn> expect;
                for (std::uint64_t s = 0; s < cfg.num_sets(); ++s) {
                    for (unsigned w = 0; w < cfg.associativity; ++w) {
                        if (f.global.occupied(s, w) && f.global.owner(s, w) == pid && f.global.vpn(s, w) == v.number) {
                            expect = cfg.frame_of(s, w);
                        }
                    }
                }
                if (r.hit != expect.has_value() || (r.hit && r.pfn != *expect)) ++mismatches;
                if (f.sf(pid).count(r.set) == 0 && r.probed_tar) ++mismatches;
            }
            // Set filter exactness.
            if (op % 500 == 0) {
                for (auto& [p, ts] : f.procs) {
                    for (std::uint64_t s = 0; s < cfg.num_sets(); ++s) {
                        unsigned valid = 0;
                        for (unsigned w = 0; w < cfg.associativity; ++w) valid += ts.first.valid(s, w);
                        CHECK(ts.second.count(s) == valid);
                    }
                }
            }
        }
        CHECK(mismatches == 0);
    }
}

TEST_CASE("occupied slots map to distinct frames inside the segment") {
    const Config cfg = make(32 * 2 * MB, PageSize::Large, 8, HashFn::Mod, 7);
    std::set<std::uint64_t> frames;
    for (std::uint64_t s = 0; s < cfg.num_sets(); ++s) {
        for (unsigned w = 0; w < cfg.associativity; ++w) {
            const Pfn p = cfg.frame_of(s, w);
            CHECK(p.number >= 7);
            CHECK(p.number < 7 + cfg.num_pages());
            CHECK(frames.insert(p.number).second);
        }
    }
}

TEST_CASE("tag-array rows and set-filter counters map into their images") {
    const Config cfg = make(512 * MB, PageSize::Small, 16);
    CHECK(tar_row_addr(cfg, 0x1000, 0) == 0x1000);
    // 16 entries of 33 bits = 528 bits = 66 bytes per row.
    CHECK(cfg.entry_bits() == 33);
    CHECK(tar_row_addr(cfg, 0, 1) == 66);
    CHECK(tar_row_last_addr(cfg, 0, 0) == 65);
    CHECK(tar_row_last_addr(cfg, 0, cfg.num_sets() - 1) == image_bytes(tar_size_bits(cfg)) - 1);
    CHECK(sf_counter_addr(cfg, 0, 8) == 5);
    CHECK(sf_counter_addr(cfg, 0, cfg.num_sets() - 1) < image_bytes(sf_size_bits(cfg)));
}
