#include "hvm/core/trace.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "hvm/core/error.hpp"

namespace hvm {
namespace {

constexpr std::string_view kHugeDirective = "#@huge";

std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
        const std::size_t start = i;
        while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
        if (i > start) out.push_back(line.substr(start, i - start));
    }
    return out;
}

template <typename T>
bool parse_uint(std::string_view s, int base, T& out) {
    if (base == 16 && (s.starts_with("0x") || s.starts_with("0X"))) s.remove_prefix(2);
    if (s.empty()) return false;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out, base);
    return ec == std::errc{} && ptr == s.data() + s.size();
}

HugeRegion parse_huge(std::string_view line, std::size_t line_no, Pid& pid) {
    const auto tok = split_ws(line);
    HugeRegion r;
    if (tok.size() != 4 || !parse_uint(tok[1], 10, pid) || !parse_uint(tok[2], 16, r.begin) ||
        !parse_uint(tok[3], 16, r.end)) {
        throw TraceParseError(line_no, "malformed huge-region directive: '" + std::string(line) + "'");
    }
    if (r.begin % kLargePageBytes != 0 || r.end % kLargePageBytes != 0 || r.end < r.begin) {
        throw TraceParseError(line_no, "huge region must be 2MB-aligned and non-empty");
    }
    return r;
}

}  // namespace

char op_letter(AccessOp op) {
    switch (op) {
        case AccessOp::InstrFetch: return 'I';
        case AccessOp::Read: return 'R';
        case AccessOp::Write: return 'W';
    }
    return '?';
}

bool parse_trace_line(std::string_view line, std::size_t line_no, TraceRecord& out) {
    const auto tok = split_ws(line);
    if (tok.empty() || tok[0].front() == '#') return false;
    if (tok.size() < 3 || tok.size() > 4) {
        throw TraceParseError(line_no, "expected '<pid> <I|R|W> <hex vaddr> [icount]', got '" +
                                           std::string(line) + "'");
    }
    TraceRecord rec;
    if (!parse_uint(tok[0], 10, rec.pid) || rec.pid > kMaxPid) {
        throw TraceParseError(line_no, "bad pid '" + std::string(tok[0]) + "'");
    }
    if (tok[1] == "I") {
        rec.op = AccessOp::InstrFetch;
    } else if (tok[1] == "R") {
        rec.op = AccessOp::Read;
    } else if (tok[1] == "W") {
        rec.op = AccessOp::Write;
    } else {
        throw TraceParseError(line_no, "bad operation '" + std::string(tok[1]) + "'");
    }
    std::uint64_t va = 0;
    if (!parse_uint(tok[2], 16, va)) {
        throw TraceParseError(line_no, "bad virtual address '" + std::string(tok[2]) + "'");
    }
    rec.vaddr = VirtAddr(va);
    if (tok.size() == 4 && (!parse_uint(tok[3], 10, rec.icount) || rec.icount == 0)) {
        throw TraceParseError(line_no, "icount must be an integer >= 1, got '" +
                                           std::string(tok[3]) + "'");
    }
    out = rec;
    return true;
}

std::string format_trace_record(const TraceRecord& rec) {
    std::ostringstream os;
    os << rec.pid << ' ' << op_letter(rec.op) << " 0x" << std::hex << rec.vaddr.value()
       << std::dec;
    if (rec.icount != 1) os << ' ' << rec.icount;
    return os.str();
}

Trace read_trace(std::istream& in) {
    Trace trace;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view view(line);
        if (view.starts_with(kHugeDirective) &&
            (view.size() == kHugeDirective.size() || view[kHugeDirective.size()] == ' ')) {
            Pid pid = 0;
            const HugeRegion r = parse_huge(view, line_no, pid);
            trace.huge_regions[pid].push_back(r);
            continue;
        }
        TraceRecord rec;
        if (parse_trace_line(view, line_no, rec)) trace.records.push_back(rec);
    }
    return trace;
}

Trace read_trace(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open trace file '" + path + "'");
    return read_trace(in);
}

void write_trace(std::ostream& out, const Trace& trace) {
    for (const auto& [pid, regions] : trace.huge_regions) {
        for (const auto& r : regions) {
            out << kHugeDirective << ' ' << pid << " 0x" << std::hex << r.begin << " 0x" << r.end
                << std::dec << '\n';
        }
    }
    for (const auto& rec : trace.records) out << format_trace_record(rec) << '\n';
}

void write_trace(const std::string& path, const Trace& trace) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write trace file '" + path + "'");
    write_trace(out, trace);
    if (!out) throw Error("write failed for '" + path + "'");
}

std::uint64_t trace_fingerprint(const Trace& trace) {
    std::ostringstream os;
    write_trace(os, trace);
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : os.str()) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

}  // namespace hvm
