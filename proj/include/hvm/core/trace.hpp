#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "hvm/core/address.hpp"

namespace hvm {

enum class AccessOp : std::uint8_t { InstrFetch, Read, Write };

char op_letter(AccessOp op);

struct TraceRecord {
    Pid pid = 0;
    AccessOp op = AccessOp::Read;
    VirtAddr vaddr;
    std::uint64_t icount = 1;

    friend bool operator==(const TraceRecord&, const TraceRecord&) = default;
};

/// Half-open virtual range [begin, end) backed by 2MB pages.
struct HugeRegion {
    std::uint64_t begin = 0;
    std::uint64_t end = 0;
    friend bool operator==(const HugeRegion&, const HugeRegion&) = default;
};

/// Records plus the per-process huge-page layout that travels with them.
struct Trace {
    std::vector<TraceRecord> records;
    std::map<Pid, std::vector<HugeRegion>> huge_regions;

    friend bool operator==(const Trace&, const Trace&) = default;
};

/// Parses one record line. Returns false for blank and comment lines.
/// Throws TraceParseError naming `line_no` on malformed input.
bool parse_trace_line(std::string_view line, std::size_t line_no, TraceRecord& out);

std::string format_trace_record(const TraceRecord& rec);

Trace read_trace(std::istream& in);
Trace read_trace(const std::string& path);
void write_trace(std::ostream& out, const Trace& trace);
void write_trace(const std::string& path, const Trace& trace);

/// 64-bit FNV-1a over the canonical text form; identifies a trace in reports.
std::uint64_t trace_fingerprint(const Trace& trace);

}  // namespace hvm
