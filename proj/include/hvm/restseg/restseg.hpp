#pragma once

// Restrictive segment: a contiguous physical range whose pages are placed
// set-associatively by a hash of the virtual page number. Translation data:
//  - TagArray (per process): virtual tag + 10 metadata bits per (set, way)
//  - SetFilter (per process): occupancy counter per set, lets a walk skip the
//    tag compare for empty sets
//  - GlobalTar (OS-owned): owner and SRRIP state for every way

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "hvm/core/address.hpp"

namespace hvm::restseg {

enum class HashFn : std::uint8_t { Mod, XorFold, PrimeDisp, MersenneMod };

std::string_view to_string(HashFn fn);
HashFn parse_hash_fn(std::string_view name);

/// Multiplier of the prime-displacement hash.
inline constexpr std::uint64_t kPrimeDisplacement = 2654435761ull;

/// Set index of `vpn_number` among `num_sets` (a power of two).
std::uint64_t set_index(std::uint64_t vpn_number, std::uint64_t num_sets, HashFn fn);

struct Config {
    Pfn base_frame;  // first frame, in units of page_size
    std::uint64_t total_bytes = 0;
    PageSize page_size = PageSize::Small;
    unsigned associativity = 16;
    HashFn hash = HashFn::Mod;

    /// Throws ConfigError unless sizes divide evenly and the set count is a
    /// power of two.
    void validate() const;

    std::uint64_t num_pages() const { return total_bytes / page_bytes(page_size); }
    std::uint64_t num_sets() const { return num_pages() / associativity; }
    unsigned set_bits() const;
    /// 48 - log2(page) - log2(sets)
    unsigned tag_bits() const;
    /// Tag plus metadata.
    unsigned entry_bits() const;
    /// log2(assoc) + 1 for power-of-two associativity.
    unsigned counter_bits() const;

    std::uint64_t set_of(std::uint64_t vpn_number) const {
        return set_index(vpn_number, num_sets(), hash);
    }
    Pfn frame_of(std::uint64_t set, unsigned way) const {
        return {base_frame.number + set * associativity + way, page_size};
    }
};

std::uint64_t tar_size_bits(const Config& cfg);
std::uint64_t sf_size_bits(const Config& cfg);

inline constexpr unsigned kMetaBits = 10;

/// Metadata layout of a tag-array entry, low bit first. Bits 6..9 reserved.
namespace meta {
inline constexpr std::uint16_t kValid = 1u << 0;
inline constexpr std::uint16_t kRead = 1u << 1;
inline constexpr std::uint16_t kWrite = 1u << 2;
inline constexpr std::uint16_t kExecute = 1u << 3;
inline constexpr std::uint16_t kDirty = 1u << 4;
inline constexpr std::uint16_t kAccessed = 1u << 5;
inline constexpr std::uint16_t kMask = (1u << kMetaBits) - 1;
inline constexpr std::uint16_t kDefault = kValid | kRead | kWrite;
}  // namespace meta

/// Bit-packed image of a translation structure as it sits in kernel memory.
struct PackedImage {
    std::vector<std::uint8_t> bytes;
    std::uint64_t bit_length = 0;
};

class TagArray {
public:
    explicit TagArray(const Config& cfg);

    /// Way holding `vpn_number` in `set`, or -1.
    int match(std::uint64_t set, std::uint64_t vpn_number) const;

    bool valid(std::uint64_t set, unsigned way) const;
    std::uint64_t vpn(std::uint64_t set, unsigned way) const { return vpns_[slot(set, way)]; }
    /// The stored virtual tag: the VPN bits above the set-index field.
    std::uint64_t vtag(std::uint64_t set, unsigned way) const;
    std::uint16_t metadata(std::uint64_t set, unsigned way) const { return meta_[slot(set, way)]; }

    void fill(std::uint64_t set, unsigned way, std::uint64_t vpn_number, std::uint16_t metadata);
    void clear(std::uint64_t set, unsigned way);

    /// Entries in (set, way) order, each vtag followed by the metadata bits.
    PackedImage pack() const;

    std::uint64_t sets() const { return sets_; }
    unsigned ways() const { return ways_; }

private:
    std::size_t slot(std::uint64_t set, unsigned way) const { return set * ways_ + way; }

    // Entries keep the full VPN so that matching stays exact for every hash
    // function; the modeled tag width applies to vtag() and pack().
    std::vector<std::uint64_t> vpns_;
    std::vector<std::uint16_t> meta_;
    std::uint64_t sets_;
    unsigned ways_;
    unsigned set_bits_;
    unsigned tag_bits_;
};

class SetFilter {
public:
    explicit SetFilter(const Config& cfg);

    unsigned count(std::uint64_t set) const { return counters_[set]; }
    void increment(std::uint64_t set);
    void decrement(std::uint64_t set);

    PackedImage pack() const;

    std::uint64_t sets() const { return counters_.size(); }
    unsigned width() const { return width_; }

private:
    std::vector<std::uint8_t> counters_;
    unsigned associativity_;
    unsigned width_;
};

inline constexpr std::uint8_t kRrpvMax = 3;
inline constexpr std::uint8_t kRrpvInsert = 2;
inline constexpr Pid kNoOwner = 0xffffffffu;

class GlobalTar {
public:
    explicit GlobalTar(const Config& cfg);

    bool occupied(std::uint64_t set, unsigned way) const { return owner_[slot(set, way)] != kNoOwner; }
    Pid owner(std::uint64_t set, unsigned way) const { return owner_[slot(set, way)]; }
    std::uint64_t vpn(std::uint64_t set, unsigned way) const { return vpn_[slot(set, way)]; }
    std::uint8_t rrpv(std::uint64_t set, unsigned way) const { return rrpv_[slot(set, way)]; }
    std::uint32_t hits(std::uint64_t set, unsigned way) const { return hits_[slot(set, way)]; }

    /// Lowest free way in `set`, or -1 when the set is full.
    int free_way(std::uint64_t set) const;
    std::span<std::uint8_t> rrpv_row(std::uint64_t set) {
        return {rrpv_.data() + set * ways_, ways_};
    }
    std::span<const std::uint8_t> rrpv_row(std::uint64_t set) const {
        return {rrpv_.data() + set * ways_, ways_};
    }
    void set_rrpv(std::uint64_t set, unsigned way, std::uint8_t v) { rrpv_[slot(set, way)] = v; }

    std::uint64_t occupied_count() const { return occupied_; }
    std::uint64_t sets() const { return sets_; }
    unsigned ways() const { return ways_; }

private:
    friend void insert(GlobalTar&, TagArray&, SetFilter&, const Config&, const Vpn&,
                       std::uint64_t, unsigned, std::uint16_t);
    friend void remove(GlobalTar&, TagArray&, SetFilter&, const Config&, const Vpn&,
                       std::uint64_t, unsigned);
    friend void touch(GlobalTar&, std::uint64_t, unsigned);

    std::size_t slot(std::uint64_t set, unsigned way) const { return set * ways_ + way; }

    std::vector<Pid> owner_;
    std::vector<std::uint64_t> vpn_;
    std::vector<std::uint8_t> rrpv_;
    std::vector<std::uint32_t> hits_;
    std::uint64_t sets_;
    unsigned ways_;
    std::uint64_t occupied_ = 0;
};

struct RswResult {
    bool hit = false;
    /// False when the set filter reported an empty set and no tag was compared.
    bool probed_tar = false;
    std::uint64_t set = 0;
    unsigned way = 0;
    Pfn pfn;
    std::uint16_t metadata = 0;
};

RswResult rsw(const TagArray& tar, const SetFilter& sf, const Config& cfg, const Vpn& vpn);

/// Places `vpn` at (set, way). Throws StateError if the way is occupied.
void insert(GlobalTar& global, TagArray& tar, SetFilter& sf, const Config& cfg, const Vpn& vpn,
            std::uint64_t set, unsigned way, std::uint16_t metadata = meta::kDefault);

/// Removes `vpn` from (set, way). Throws StateError unless it lives there.
void remove(GlobalTar& global, TagArray& tar, SetFilter& sf, const Config& cfg, const Vpn& vpn,
            std::uint64_t set, unsigned way);

/// SRRIP victim of a full set: lowest way at the maximum re-reference value,
/// aging the whole set until one exists.
unsigned select_victim(GlobalTar& global, std::uint64_t set);

/// Records a translation hit: re-reference value to 0, reuse counter + 1.
void touch(GlobalTar& global, std::uint64_t set, unsigned way);

/// Per-process view of one restrictive segment and where its images live.
struct ProcessTables {
    TagArray tar;
    SetFilter sf;
    PhysAddr tar_base = 0;
    PhysAddr sf_base = 0;

    ProcessTables(const Config& cfg, PhysAddr tar_at, PhysAddr sf_at)
        : tar(cfg), sf(cfg), tar_base(tar_at), sf_base(sf_at) {}
};

/// Byte address of the first tag of `set` in a tag-array image. A set's row
/// is fetched as one request addressed here.
PhysAddr tar_row_addr(const Config& cfg, PhysAddr tar_base, std::uint64_t set);
/// Last byte of the row; differs in line from tar_row_addr when a row straddles.
PhysAddr tar_row_last_addr(const Config& cfg, PhysAddr tar_base, std::uint64_t set);
PhysAddr sf_counter_addr(const Config& cfg, PhysAddr sf_base, std::uint64_t set);

inline std::uint64_t image_bytes(std::uint64_t bits) { return (bits + 7) / 8; }

/// One restrictive segment: geometry plus the OS-owned occupancy table.
struct Segment {
    Config cfg;
    GlobalTar global;

    explicit Segment(const Config& c) : cfg(c), global(c) {}
};

}  // namespace hvm::restseg
