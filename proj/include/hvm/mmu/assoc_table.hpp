#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hvm/core/address.hpp"

namespace hvm::mmu {

struct TableConfig {
    unsigned entries = 1;
    unsigned ways = 1;
    Cycles latency = 1;
};

/// Set-associative LRU table of unique 64-bit keys with a payload word.
/// The caller supplies the index value; the set is index % sets.
class AssocTable {
public:
    AssocTable(std::string name, const TableConfig& cfg);

    /// Hit refreshes the entry's LRU position.
    std::optional<std::uint64_t> lookup(std::uint64_t key, std::uint64_t index);
    bool contains(std::uint64_t key, std::uint64_t index) const;
    /// Inserts or refreshes. Returns the evicted key, if any.
    std::optional<std::uint64_t> insert(std::uint64_t key, std::uint64_t index, std::uint64_t value);
    bool erase(std::uint64_t key, std::uint64_t index);
    void clear();

    std::size_t size() const { return size_; }
    unsigned capacity() const { return cfg_.entries; }
    unsigned ways() const { return cfg_.ways; }
    std::uint64_t sets() const { return sets_; }
    Cycles latency() const { return cfg_.latency; }
    const std::string& name() const { return name_; }

private:
    std::size_t slot(std::uint64_t set, unsigned way) const { return set * cfg_.ways + way; }

    std::string name_;
    TableConfig cfg_;
    std::uint64_t sets_;
    std::vector<std::uint64_t> keys_;
    std::vector<std::uint64_t> values_;
    std::vector<std::uint64_t> stamps_;
    std::uint64_t clock_ = 0;
    std::size_t size_ = 0;
};

/// ASID-tagged TLB: entries for different processes coexist.
class Tlb {
public:
    Tlb(std::string name, const TableConfig& cfg) : table_(std::move(name), cfg) {}

    std::optional<Pfn> lookup(const Vpn& vpn);
    bool contains(const Vpn& vpn) const { return table_.contains(pack_vpn(vpn), vpn.number); }
    void insert(const Vpn& vpn, Pfn pfn) { table_.insert(pack_vpn(vpn), vpn.number, pfn.number); }
    bool invalidate(const Vpn& vpn) { return table_.erase(pack_vpn(vpn), vpn.number); }

    Cycles latency() const { return table_.latency(); }
    const AssocTable& table() const { return table_; }

private:
    AssocTable table_;
};

}  // namespace hvm::mmu
