#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hvm/memsys/memsys.hpp"
#include "hvm/mmu/mmu.hpp"
#include "hvm/os/os.hpp"
#include "hvm/workload/generator.hpp"

namespace hvm::harness {

struct SimConfig {
    os::OsConfig os;
    mmu::MmuConfig mmu;
    memsys::MemoryConfig memory;
    workload::GeneratorSpec workload;
    unsigned workload_processes = 1;
    std::uint64_t epoch_instructions = 1'000'000;
    /// 20ms at 2.6GHz.
    Cycles quantum_cycles = 52'000'000;

    /// Throws ConfigError on inconsistent parameters.
    void validate() const;
};

/// Every configurable key, in documentation order.
std::vector<std::string> config_keys();
std::string describe_key(std::string_view key);

/// Sets one key from its text form. Throws ConfigError for unknown keys or
/// malformed values. Sizes accept KB/MB/GB (and KiB/MiB/GiB) suffixes.
void set_key(SimConfig& cfg, std::string_view key, std::string_view value);
/// Canonical text form of a key's value.
std::string get_key(const SimConfig& cfg, std::string_view key);

/// All keys with canonical values, in config_keys() order.
std::vector<std::pair<std::string, std::string>> dump(const SimConfig& cfg);

/// Applies `key = value` lines; `#` starts a comment. Errors name the line.
void load_config(SimConfig& cfg, std::istream& in);
void load_config_file(SimConfig& cfg, const std::string& path);
/// Writes a file load_config reads back to the same configuration.
void write_config(const SimConfig& cfg, std::ostream& out);

/// Parses `key=value`; throws ConfigError if there is no '='.
std::pair<std::string, std::string> split_assignment(std::string_view text);

}  // namespace hvm::harness
