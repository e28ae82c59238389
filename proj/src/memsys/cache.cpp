#include <algorithm>

#include "hvm/core/error.hpp"
#include "hvm/memsys/memsys.hpp"
#include "hvm/simd/kernels.hpp"

namespace hvm::memsys {
namespace {
constexpr std::uint64_t kNoLine = ~std::uint64_t{0};
constexpr std::uint8_t kRrpvMax = 3;
constexpr std::uint8_t kRrpvInsert = 2;
}  // namespace

const char* to_string(BlockKind k) {
    switch (k) {
        case BlockKind::Invalid: return "invalid";
        case BlockKind::Data: return "data";
        case BlockKind::PtNode: return "pt_node";
        case BlockKind::TarLine: return "tar_line";
        case BlockKind::SfLine: return "sf_line";
    }
    return "unknown";
}

const char* to_string(Level level) {
    switch (level) {
        case Level::L1D: return "l1d";
        case Level::L2: return "l2";
        case Level::LLC: return "llc";
        case Level::Dram: return "dram";
    }
    return "unknown";
}

CacheLevel::CacheLevel(std::string name, const CacheConfig& cfg) : name_(std::move(name)), cfg_(cfg) {
    if (cfg.ways == 0 || cfg.bytes < kLineBytes * cfg.ways || cfg.bytes % (kLineBytes * cfg.ways) != 0) {
        throw ConfigError("cache " + name_ + ": capacity must be a positive multiple of ways x 64B");
    }
    sets_ = cfg.bytes / (kLineBytes * cfg.ways);
    const std::size_t blocks = sets_ * cfg.ways;
    tags_.assign(blocks, kNoLine);
    kinds_.assign(blocks, static_cast<std::uint8_t>(BlockKind::Invalid));
    dirty_.assign(blocks, 0);
    if (cfg.replacement == Replacement::Srrip) {
        rrpv_.assign(blocks, kRrpvMax);
    } else {
        stamps_.assign(blocks, 0);
    }
}

int CacheLevel::find_way(std::uint64_t set, std::uint64_t line) const {
    return simd::find(std::span<const std::uint64_t>(tags_.data() + set * cfg_.ways, cfg_.ways), line);
}

void CacheLevel::touch(std::size_t slot) {
    if (cfg_.replacement == Replacement::Srrip) {
        rrpv_[slot] = 0;
    } else {
        stamps_[slot] = ++clock_;
    }
}

bool CacheLevel::probe(std::uint64_t line, bool is_write) {
    const std::uint64_t set = line % sets_;
    const int way = find_way(set, line);
    if (way < 0) return false;
    const std::size_t slot = set * cfg_.ways + static_cast<unsigned>(way);
    touch(slot);
    if (is_write) dirty_[slot] = 1;
    return true;
}

unsigned CacheLevel::pick_victim(std::uint64_t set) {
    const std::size_t base = set * cfg_.ways;
    const int empty = simd::find(std::span<const std::uint8_t>(kinds_.data() + base, cfg_.ways),
                                 static_cast<std::uint8_t>(BlockKind::Invalid));
    if (empty >= 0) return static_cast<unsigned>(empty);
    if (cfg_.replacement == Replacement::Srrip) {
        std::span<std::uint8_t> row(rrpv_.data() + base, cfg_.ways);
        for (;;) {
            const int way = simd::find(std::span<const std::uint8_t>(row), kRrpvMax);
            if (way >= 0) return static_cast<unsigned>(way);
            simd::increment_saturate(row, kRrpvMax);
        }
    }
    const auto first = stamps_.begin() + static_cast<std::ptrdiff_t>(base);
    return static_cast<unsigned>(std::min_element(first, first + cfg_.ways) - first);
}

void CacheLevel::fill(std::uint64_t line, BlockKind kind, bool dirty) {
    const std::uint64_t set = line % sets_;
    int way = find_way(set, line);
    if (way < 0) way = static_cast<int>(pick_victim(set));
    const std::size_t slot = set * cfg_.ways + static_cast<unsigned>(way);
    const bool resident = tags_[slot] == line;
    tags_[slot] = line;
    kinds_[slot] = static_cast<std::uint8_t>(kind);
    dirty_[slot] = (resident && dirty_[slot]) || dirty ? 1 : 0;
    if (cfg_.replacement == Replacement::Srrip) {
        rrpv_[slot] = resident ? 0 : kRrpvInsert;
    } else {
        stamps_[slot] = ++clock_;
    }
}

bool CacheLevel::invalidate(std::uint64_t line, bool* was_present) {
    const std::uint64_t set = line % sets_;
    const int way = find_way(set, line);
    if (was_present != nullptr) *was_present = way >= 0;
    if (way < 0) return false;
    const std::size_t slot = set * cfg_.ways + static_cast<unsigned>(way);
    const bool dirty = dirty_[slot] != 0;
    tags_[slot] = kNoLine;
    kinds_[slot] = static_cast<std::uint8_t>(BlockKind::Invalid);
    dirty_[slot] = 0;
    if (cfg_.replacement == Replacement::Srrip) {
        rrpv_[slot] = kRrpvMax;
    } else {
        stamps_[slot] = 0;
    }
    return dirty;
}

bool CacheLevel::contains(std::uint64_t line) const { return find_way(line % sets_, line) >= 0; }

BlockKind CacheLevel::kind_of(std::uint64_t line) const {
    const std::uint64_t set = line % sets_;
    const int way = find_way(set, line);
    if (way < 0) return BlockKind::Invalid;
    return static_cast<BlockKind>(kinds_[set * cfg_.ways + static_cast<unsigned>(way)]);
}

std::size_t CacheLevel::valid_blocks() const {
    return kinds_.size() - simd::count(std::span<const std::uint8_t>(kinds_),
                                       static_cast<std::uint8_t>(BlockKind::Invalid));
}

std::size_t CacheLevel::metadata_blocks() const {
    return valid_blocks() -
           simd::count(std::span<const std::uint8_t>(kinds_), static_cast<std::uint8_t>(BlockKind::Data));
}

double CacheLevel::metadata_fraction() const {
    const std::size_t valid = valid_blocks();
    return valid == 0 ? 0.0 : static_cast<double>(metadata_blocks()) / static_cast<double>(valid);
}

}  // namespace hvm::memsys
