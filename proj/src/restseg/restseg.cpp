#include "hvm/restseg/restseg.hpp"

#include <bit>
#include <string>

#include "hvm/core/error.hpp"
#include "hvm/simd/kernels.hpp"

namespace hvm::restseg {
namespace {

constexpr std::uint64_t kEmptyVpn = ~std::uint64_t{0};

class BitWriter {
public:
    void put(std::uint64_t value, unsigned width) {
        for (unsigned i = 0; i < width; ++i) {
            if (bits_ % 8 == 0) image_.bytes.push_back(0);
            if ((value >> i) & 1) image_.bytes.back() |= static_cast<std::uint8_t>(1u << (bits_ % 8));
            ++bits_;
        }
    }
    PackedImage finish() {
        image_.bit_length = bits_;
        return std::move(image_);
    }

private:
    PackedImage image_;
    std::uint64_t bits_ = 0;
};

}  // namespace

void Config::validate() const {
    const std::uint64_t page = page_bytes(page_size);
    if (associativity == 0) throw ConfigError("restricted segment associativity must be >= 1");
    if (total_bytes == 0 || total_bytes % page != 0) {
        throw ConfigError("restricted segment size " + std::to_string(total_bytes) +
                          " is not a positive multiple of the " + to_string(page_size) + " page");
    }
    if (num_pages() % associativity != 0) {
        throw ConfigError("restricted segment of " + std::to_string(num_pages()) +
                          " pages does not divide into " + std::to_string(associativity) + " ways");
    }
    if (!std::has_single_bit(num_sets())) {
        throw ConfigError("restricted segment set count " + std::to_string(num_sets()) +
                          " is not a power of two");
    }
    if (associativity > 128) throw ConfigError("restricted segment associativity above 128");
}

unsigned Config::set_bits() const { return static_cast<unsigned>(std::countr_zero(num_sets())); }

unsigned Config::tag_bits() const { return kVirtAddrBits - offset_bits(page_size) - set_bits(); }

unsigned Config::entry_bits() const { return tag_bits() + kMetaBits; }

unsigned Config::counter_bits() const {
    // floor(log2(assoc)) + 1 == bit width of assoc
    return static_cast<unsigned>(std::bit_width(associativity));
}

std::uint64_t tar_size_bits(const Config& cfg) { return cfg.num_pages() * cfg.entry_bits(); }

std::uint64_t sf_size_bits(const Config& cfg) { return cfg.num_sets() * cfg.counter_bits(); }

// --- TagArray --------------------------------------------------------------

TagArray::TagArray(const Config& cfg)
    : vpns_(cfg.num_pages(), kEmptyVpn),
      meta_(cfg.num_pages(), 0),
      sets_(cfg.num_sets()),
      ways_(cfg.associativity),
      set_bits_(cfg.set_bits()),
      tag_bits_(cfg.tag_bits()) {}

int TagArray::match(std::uint64_t set, std::uint64_t vpn_number) const {
    return simd::find(std::span<const std::uint64_t>(vpns_.data() + set * ways_, ways_), vpn_number);
}

bool TagArray::valid(std::uint64_t set, unsigned way) const {
    return (meta_[slot(set, way)] & meta::kValid) != 0;
}

std::uint64_t TagArray::vtag(std::uint64_t set, unsigned way) const {
    if (!valid(set, way)) return 0;
    return (vpns_[slot(set, way)] >> set_bits_) & ((std::uint64_t{1} << tag_bits_) - 1);
}

void TagArray::fill(std::uint64_t set, unsigned way, std::uint64_t vpn_number,
                    std::uint16_t metadata) {
    vpns_[slot(set, way)] = vpn_number;
    meta_[slot(set, way)] = static_cast<std::uint16_t>((metadata | meta::kValid) & meta::kMask);
}

void TagArray::clear(std::uint64_t set, unsigned way) {
    vpns_[slot(set, way)] = kEmptyVpn;
    meta_[slot(set, way)] = 0;
}

PackedImage TagArray::pack() const {
    BitWriter w;
    for (std::uint64_t s = 0; s < sets_; ++s) {
        for (unsigned way = 0; way < ways_; ++way) {
            w.put(vtag(s, way), tag_bits_);
            w.put(meta_[slot(s, way)], kMetaBits);
        }
    }
    return w.finish();
}

// --- SetFilter -------------------------------------------------------------

SetFilter::SetFilter(const Config& cfg)
    : counters_(cfg.num_sets(), 0), associativity_(cfg.associativity), width_(cfg.counter_bits()) {}

void SetFilter::increment(std::uint64_t set) {
    if (counters_[set] >= associativity_) {
        throw StateError("set filter counter of set " + std::to_string(set) + " already at " +
                         std::to_string(associativity_));
    }
    ++counters_[set];
}

void SetFilter::decrement(std::uint64_t set) {
    if (counters_[set] == 0) {
        throw StateError("set filter counter of set " + std::to_string(set) + " already zero");
    }
    --counters_[set];
}

PackedImage SetFilter::pack() const {
    BitWriter w;
    for (std::uint8_t c : counters_) w.put(c, width_);
    return w.finish();
}

// --- GlobalTar -------------------------------------------------------------

GlobalTar::GlobalTar(const Config& cfg)
    : owner_(cfg.num_pages(), kNoOwner),
      vpn_(cfg.num_pages(), 0),
      rrpv_(cfg.num_pages(), kRrpvMax),
      hits_(cfg.num_pages(), 0),
      sets_(cfg.num_sets()),
      ways_(cfg.associativity) {}

int GlobalTar::free_way(std::uint64_t set) const {
    for (unsigned way = 0; way < ways_; ++way) {
        if (owner_[slot(set, way)] == kNoOwner) return static_cast<int>(way);
    }
    return -1;
}

// --- Operations ------------------------------------------------------------

RswResult rsw(const TagArray& tar, const SetFilter& sf, const Config& cfg, const Vpn& vpn) {
    RswResult r;
    r.set = cfg.set_of(vpn.number);
    if (sf.count(r.set) == 0) return r;
    r.probed_tar = true;
    const int way = tar.match(r.set, vpn.number);
    if (way < 0) return r;
    r.hit = true;
    r.way = static_cast<unsigned>(way);
    r.pfn = cfg.frame_of(r.set, r.way);
    r.metadata = tar.metadata(r.set, r.way);
    return r;
}

void insert(GlobalTar& global, TagArray& tar, SetFilter& sf, const Config& cfg, const Vpn& vpn,
            std::uint64_t set, unsigned way, std::uint16_t metadata) {
    if (vpn.size != cfg.page_size) throw StateError("page size does not match the segment");
    if (set >= global.sets_ || way >= global.ways_) throw StateError("(set, way) out of range");
    const std::size_t s = global.slot(set, way);
    if (global.owner_[s] != kNoOwner) {
        throw StateError("way " + std::to_string(way) + " of set " + std::to_string(set) +
                         " is already occupied");
    }
    global.owner_[s] = vpn.pid;
    global.vpn_[s] = vpn.number;
    global.rrpv_[s] = kRrpvInsert;
    global.hits_[s] = 0;
    ++global.occupied_;
    tar.fill(set, way, vpn.number, metadata);
    sf.increment(set);
}

void remove(GlobalTar& global, TagArray& tar, SetFilter& sf, const Config& cfg, const Vpn& vpn,
            std::uint64_t set, unsigned way) {
    if (vpn.size != cfg.page_size || set >= global.sets_ || way >= global.ways_) {
        throw StateError("page is not present in the restricted segment");
    }
    const std::size_t s = global.slot(set, way);
    if (global.owner_[s] != vpn.pid || global.vpn_[s] != vpn.number || !tar.valid(set, way)) {
        throw StateError("vpn 0x" + std::to_string(vpn.number) + " of pid " +
                         std::to_string(vpn.pid) + " is not present at the given way");
    }
    global.owner_[s] = kNoOwner;
    global.vpn_[s] = 0;
    global.rrpv_[s] = kRrpvMax;
    global.hits_[s] = 0;
    --global.occupied_;
    tar.clear(set, way);
    sf.decrement(set);
}

unsigned select_victim(GlobalTar& global, std::uint64_t set) {
    auto row = global.rrpv_row(set);
    for (;;) {
        const int way = simd::find(std::span<const std::uint8_t>(row), kRrpvMax);
        if (way >= 0) return static_cast<unsigned>(way);
        simd::increment_saturate(row, kRrpvMax);
    }
}

void touch(GlobalTar& global, std::uint64_t set, unsigned way) {
    const std::size_t s = global.slot(set, way);
    global.rrpv_[s] = 0;
    ++global.hits_[s];
}

PhysAddr tar_row_addr(const Config& cfg, PhysAddr tar_base, std::uint64_t set) {
    return tar_base + (set * cfg.associativity * cfg.entry_bits()) / 8;
}

PhysAddr tar_row_last_addr(const Config& cfg, PhysAddr tar_base, std::uint64_t set) {
    return tar_base + ((set + 1) * cfg.associativity * cfg.entry_bits() - 1) / 8;
}

PhysAddr sf_counter_addr(const Config& cfg, PhysAddr sf_base, std::uint64_t set) {
    return sf_base + (set * cfg.counter_bits()) / 8;
}

}  // namespace hvm::restseg
