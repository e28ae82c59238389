#include "hvm/mmu/assoc_table.hpp"

#include <algorithm>

#include "hvm/core/error.hpp"
#include "hvm/simd/kernels.hpp"

namespace hvm::mmu {
namespace {
constexpr std::uint64_t kEmpty = ~std::uint64_t{0};
}

AssocTable::AssocTable(std::string name, const TableConfig& cfg) : name_(std::move(name)), cfg_(cfg) {
    if (cfg.ways == 0 || cfg.entries == 0 || cfg.entries % cfg.ways != 0) {
        throw ConfigError(name_ + ": entries must be a positive multiple of ways");
    }
    sets_ = cfg.entries / cfg.ways;
    keys_.assign(cfg.entries, kEmpty);
    values_.assign(cfg.entries, 0);
    stamps_.assign(cfg.entries, 0);
}

std::optional<std::uint64_t> AssocTable::lookup(std::uint64_t key, std::uint64_t index) {
    const std::uint64_t set = index % sets_;
    const int way = simd::find(std::span<const std::uint64_t>(keys_.data() + set * cfg_.ways, cfg_.ways), key);
    if (way < 0) return std::nullopt;
    const std::size_t s = slot(set, static_cast<unsigned>(way));
    stamps_[s] = ++clock_;
    return values_[s];
}

bool AssocTable::contains(std::uint64_t key, std::uint64_t index) const {
    const std::uint64_t set = index % sets_;
    return simd::find(std::span<const std::uint64_t>(keys_.data() + set * cfg_.ways, cfg_.ways), key) >= 0;
}

std::optional<std::uint64_t> AssocTable::insert(std::uint64_t key, std::uint64_t index, std::uint64_t value) {
    const std::uint64_t set = index % sets_;
    const std::span<const std::uint64_t> row(keys_.data() + set * cfg_.ways, cfg_.ways);
    int way = simd::find(row, key);
    std::optional<std::uint64_t> evicted;
    if (way < 0) way = simd::find(row, kEmpty);
    if (way < 0) {
        const auto first = stamps_.begin() + static_cast<std::ptrdiff_t>(set * cfg_.ways);
        way = static_cast<int>(std::min_element(first, first + cfg_.ways) - first);
        evicted = keys_[slot(set, static_cast<unsigned>(way))];
    } else if (keys_[slot(set, static_cast<unsigned>(way))] == kEmpty) {
        ++size_;
    }
    const std::size_t s = slot(set, static_cast<unsigned>(way));
    keys_[s] = key;
    values_[s] = value;
    stamps_[s] = ++clock_;
    return evicted;
}

bool AssocTable::erase(std::uint64_t key, std::uint64_t index) {
    const std::uint64_t set = index % sets_;
    const int way = simd::find(std::span<const std::uint64_t>(keys_.data() + set * cfg_.ways, cfg_.ways), key);
    if (way < 0) return false;
    const std::size_t s = slot(set, static_cast<unsigned>(way));
    keys_[s] = kEmpty;
    stamps_[s] = 0;
    --size_;
    return true;
}

void AssocTable::clear() {
    std::fill(keys_.begin(), keys_.end(), kEmpty);
    std::fill(stamps_.begin(), stamps_.end(), 0);
    size_ = 0;
}

std::optional<Pfn> Tlb::lookup(const Vpn& vpn) {
    const auto v = table_.lookup(pack_vpn(vpn), vpn.number);
    if (!v) return std::nullopt;
    return Pfn{*v, vpn.size};
}

}  // namespace hvm::mmu
