// Command-line front end: trace generation, simulation, report comparison and
// parameter sweeps.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hvm/core/error.hpp"
#include "hvm/core/trace.hpp"
#include "hvm/harness/config.hpp"
#include "hvm/harness/report.hpp"
#include "hvm/harness/simulator.hpp"
#include "hvm/simd/kernels.hpp"

namespace {

using namespace hvm;
using namespace hvm::harness;

struct ConfigArgs {
    std::string config_file;
    std::string mode;
    std::vector<std::string> overrides;
};

void add_config_options(CLI::App& cmd, ConfigArgs& args) {
    cmd.add_option("-c,--config", args.config_file, "config file of key = value lines")->check(CLI::ExistingFile);
    cmd.add_option("-s,--set", args.overrides, "override one config key (key=value); repeatable");
}

/// Defaults, then the config file, then --mode, then --set overrides.
SimConfig build_config(const ConfigArgs& args) {
    SimConfig cfg;
    if (!args.config_file.empty()) load_config_file(cfg, args.config_file);
    if (!args.mode.empty()) set_key(cfg, "mode", args.mode);
    for (const auto& o : args.overrides) {
        const auto [k, v] = split_assignment(o);
        set_key(cfg, k, v);
    }
    cfg.validate();
    return cfg;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void emit(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path + "'");
    out << text;
    if (!out) throw Error("write failed for '" + path + "'");
}

std::string point_name(std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "point_%03zu", i);
    return buf;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Trace-driven simulator of hybrid virtual-memory translation"};
    app.require_subcommand(1);
    std::string simd_choice;
    app.add_option("--simd", simd_choice, "kernel variant: scalar, avx2 or neon (default: best available)");

    ConfigArgs gen_args;
    std::string gen_out;
    auto* gen = app.add_subcommand("gen", "write the trace described by the workload.* keys");
    add_config_options(*gen, gen_args);
    gen->add_option("-o,--out", gen_out, "trace file (default: stdout)");

    ConfigArgs run_args;
    std::string run_trace, run_out, run_csv;
    auto* run_cmd = app.add_subcommand("run", "simulate a trace and write a JSON report");
    add_config_options(*run_cmd, run_args);
    run_cmd->add_option("-m,--mode", run_args.mode, "radix, restrictive, hybrid or perfect");
    run_cmd->add_option("-t,--trace", run_trace, "trace file (default: generate from workload.* keys)")
        ->check(CLI::ExistingFile);
    run_cmd->add_option("-o,--out", run_out, "JSON report (default: stdout)");
    run_cmd->add_option("--csv", run_csv, "also write the flat CSV export here");

    std::string cmp_a, cmp_b, cmp_out;
    auto* cmp = app.add_subcommand("compare", "per-metric ratios of report B over report A as CSV");
    cmp->add_option("a", cmp_a, "baseline report")->required()->check(CLI::ExistingFile);
    cmp->add_option("b", cmp_b, "compared report")->required()->check(CLI::ExistingFile);
    cmp->add_option("-o,--out", cmp_out, "delta CSV (default: stdout)");

    ConfigArgs sweep_args;
    std::string sweep_trace, sweep_dir;
    std::vector<std::string> sweep_axes;
    unsigned sweep_jobs = 1;
    auto* sweep_cmd = app.add_subcommand("sweep", "run every point of a parameter grid");
    add_config_options(*sweep_cmd, sweep_args);
    sweep_cmd->add_option("-m,--mode", sweep_args.mode, "radix, restrictive, hybrid or perfect");
    sweep_cmd->add_option("-t,--trace", sweep_trace, "trace file (default: generate per point)")
        ->check(CLI::ExistingFile);
    sweep_cmd->add_option("-a,--axis", sweep_axes, "swept key and values: key=v1,v2 (or key=v1|v2)")->required();
    sweep_cmd->add_option("-o,--out-dir", sweep_dir, "directory for point reports and index.csv")->required();
    sweep_cmd->add_option("-j,--jobs", sweep_jobs, "points simulated concurrently")->check(CLI::PositiveNumber);

    ConfigArgs keys_args;
    bool keys_describe = false;
    auto* keys = app.add_subcommand("config", "print the effective configuration as a config file");
    add_config_options(*keys, keys_args);
    keys->add_option("-m,--mode", keys_args.mode, "radix, restrictive, hybrid or perfect");
    keys->add_flag("--describe", keys_describe, "list every key with its meaning instead");

    CLI11_PARSE(app, argc, argv);

    try {
        if (!simd_choice.empty()) {
            if (simd_choice == "scalar") {
                simd::select(simd::Isa::Scalar);
            } else if (simd_choice == "avx2") {
                simd::select(simd::Isa::Avx2);
            } else if (simd_choice == "neon") {
                simd::select(simd::Isa::Neon);
            } else {
                throw ConfigError("unknown --simd variant '" + simd_choice + "'");
            }
        }

        if (*gen) {
            const SimConfig cfg = build_config(gen_args);
            const Trace trace = workload_trace(cfg);
            if (gen_out.empty() || gen_out == "-") {
                write_trace(std::cout, trace);
            } else {
                write_trace(gen_out, trace);
            }
        } else if (*run_cmd) {
            const SimConfig cfg = build_config(run_args);
            const Trace trace = run_trace.empty() ? workload_trace(cfg) : read_trace(run_trace);
            const StatsReport report = run(cfg, trace);
            emit(run_out, report_json(report));
            if (!run_csv.empty()) emit(run_csv, report_csv(report));
        } else if (*cmp) {
            emit(cmp_out, delta_csv(compare_reports(slurp(cmp_a), slurp(cmp_b))));
        } else if (*sweep_cmd) {
            const SimConfig cfg = build_config(sweep_args);
            std::vector<SweepAxis> axes;
            for (const auto& a : sweep_axes) axes.push_back(parse_axis(a));
            Trace trace;
            if (!sweep_trace.empty()) trace = read_trace(sweep_trace);
            const auto reports = sweep(cfg, sweep_trace.empty() ? nullptr : &trace, axes, sweep_jobs);
            const auto points = sweep_points(axes);
            std::filesystem::create_directories(sweep_dir);
            std::string index = "point";
            for (const auto& a : axes) index += "," + csv_field(a.key);
            index += ",report\n";
            for (std::size_t i = 0; i < reports.size(); ++i) {
                const std::string file = point_name(i) + ".json";
                emit((std::filesystem::path(sweep_dir) / file).string(), report_json(reports[i]));
                index += std::to_string(i);
                for (const auto& [k, v] : points[i]) index += "," + csv_field(v);
                index += "," + file + "\n";
            }
            emit((std::filesystem::path(sweep_dir) / "index.csv").string(), index);
        } else if (*keys) {
            const SimConfig cfg = build_config(keys_args);
            if (keys_describe) {
                for (const auto& k : config_keys()) std::cout << k << "  " << describe_key(k) << '\n';
            } else {
                write_config(cfg, std::cout);
            }
        }
    } catch (const std::exception& e) {
        std::cerr << "hvmsim: error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
