#pragma once

#include <sys/utsname.h>

#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <CLI11.hpp>

#include "rpss/engine.hpp"
#include "rpss/io.hpp"
#include "rpss/statistics.hpp"

namespace rpss::cli {

namespace fs = std::filesystem;

// Exit codes: 0 success, 1 usage error, 2 engine failure, 3 validation failure.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitEngine = 2;
inline constexpr int kExitValidation = 3;

// ---------------------------------------------------------------------------
// Flag parsing helpers
// ---------------------------------------------------------------------------

// Seeds are hexadecimal on the command line, with or without a 0x prefix.
inline std::uint64_t parse_seed(const std::string& text) {
    std::string t = text;
    if (t.size() > 2 && t[0] == '0' && (t[1] == 'x' || t[1] == 'X')) t = t.substr(2);
    if (t.empty()) throw std::invalid_argument("seed: empty value");
    std::size_t used = 0;
    std::uint64_t v = 0;
    try {
        v = std::stoull(t, &used, 16);
    } catch (const std::exception&) {
        throw std::invalid_argument("seed: not a hexadecimal value: " + text);
    }
    if (used != t.size()) throw std::invalid_argument("seed: not a hexadecimal value: " + text);
    return v;
}

// Probabilities accept "1/24" style rationals as well as plain decimals.
inline double parse_probability(const std::string& text) {
    const auto slash = text.find('/');
    double v = 0.0;
    try {
        if (slash == std::string::npos) {
            v = std::stod(text);
        } else {
            v = std::stod(text.substr(0, slash)) / std::stod(text.substr(slash + 1));
        }
    } catch (const std::exception&) {
        throw std::invalid_argument("probability: cannot parse: " + text);
    }
    if (!(v > 0.0) || v > 1.0) throw std::invalid_argument("probability: must be in (0, 1]: " + text);
    return v;
}

// Model grammar: "constant:C", "geom:P,OFFSET", "empirical:T=P,T=P,...".
inline RuntimeModel parse_model(const std::string& text) {
    const auto colon = text.find(':');
    const std::string kind = text.substr(0, colon);
    const std::string args = colon == std::string::npos ? "" : text.substr(colon + 1);
    try {
        if (kind == "constant") {
            RuntimeModel m = ConstantModel{std::stoull(args)};
            validate_runtime_model(m);
            return m;
        }
        if (kind == "geom" || kind == "geometric-shifted") {
            const auto comma = args.find(',');
            if (comma == std::string::npos) throw std::invalid_argument("geom needs P,OFFSET");
            RuntimeModel m = GeometricShiftedModel{parse_probability(args.substr(0, comma)),
                                                   std::stoull(args.substr(comma + 1))};
            validate_runtime_model(m);
            return m;
        }
        if (kind == "empirical") {
            EmpiricalModel e;
            std::istringstream is(args);
            std::string item;
            while (std::getline(is, item, ',')) {
                const auto eq = item.find('=');
                if (eq == std::string::npos) throw std::invalid_argument("empirical needs T=P pairs");
                e.table.emplace_back(std::stoull(item.substr(0, eq)), std::stod(item.substr(eq + 1)));
            }
            std::sort(e.table.begin(), e.table.end());
            RuntimeModel m = e;
            validate_runtime_model(m);
            return m;
        }
    } catch (const std::invalid_argument&) {
        throw;
    } catch (const std::exception&) {
        throw std::invalid_argument("runtime model: cannot parse: " + text);
    }
    throw std::invalid_argument("runtime model: unknown kind in: " + text);
}

inline EngineMode parse_mode(const std::string& mode) {
    if (mode == "hardware" || mode == "hw") return EngineMode::hardware;
    if (mode == "sim" || mode == "simulated") return EngineMode::simulated;
    throw std::invalid_argument("mode: must be hardware or sim, got: " + mode);
}

inline std::string timestamp_utc() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline std::string platform_string() {
    utsname u{};
    if (uname(&u) != 0) return "unknown";
    return std::string(u.sysname) + " " + u.release + " " + u.machine;
}

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

// ---------------------------------------------------------------------------
// Run manifests: every command records what it ran and what it wrote, even on
// partial failure, so any simulated run can be reproduced bit for bit.
// ---------------------------------------------------------------------------

struct RunManifest {
    std::string command;
    std::vector<std::string> argv;
    io::json config = io::json::object();
    std::string seed;
    std::string mode;
    std::uint64_t trials = 0;
    std::vector<std::string> outputs;
    std::string started;
    std::string finished;
    std::string platform;
    std::string status = "ok";
};

inline io::json manifest_to_json(const RunManifest& m) {
    return io::json{{"command", m.command}, {"argv", m.argv},       {"config", m.config},
                    {"seed", m.seed},       {"mode", m.mode},       {"trials", m.trials},
                    {"outputs", m.outputs}, {"started", m.started}, {"finished", m.finished},
                    {"platform", m.platform}, {"status", m.status}};
}

// Shared engine flags; subcommands bind the subset they use.
struct CommonOpts {
    int n = 4;
    std::uint64_t m = 4;
    unsigned bits = 4;
    unsigned k_shift = 7;
    std::string seed = "1";
    std::string mode = "sim";
    std::string model;  // empty keeps the default empirical table
    std::uint64_t trials = 1'000'000;
    std::uint64_t draw_cap = 1'000'000'000;
    std::string out_dir;
};

inline EngineConfig build_config(const CommonOpts& o) {
    EngineConfig cfg;
    cfg.N = o.n;
    cfg.m = o.m;
    cfg.n_bits = o.bits;
    cfg.k_shift = o.k_shift;
    cfg.disordered = default_disordered(o.n);
    cfg.mode = parse_mode(o.mode);
    if (!o.model.empty()) cfg.runtime_model = parse_model(o.model);
    cfg.draw_cap = o.draw_cap;
    cfg.validate();
    if (cfg.convergence_warning()) {
        std::cerr << "warning: M = " << cfg.M() << " has log2(M) <= n_bits + 2; "
                  << "residues cannot be uniform at width " << cfg.n_bits << "\n";
    }
    return cfg;
}

inline std::string resolve_out_dir(const std::string& flag_value) {
    if (!flag_value.empty()) return flag_value;
    if (const char* env = std::getenv("RPSS_OUT_DIR"); env && *env) return env;
    return ".";
}

inline std::string out_path(const std::string& dir, const std::string& name) {
    return (fs::path(dir) / name).string();
}

// Body does the work and returns an exit code; exceptions are mapped to exit
// codes and the manifest is written on every path.
inline int execute(const std::string& command, const std::vector<std::string>& argv,
                   const std::string& out_dir, RunManifest& man,
                   const std::function<int(RunManifest&)>& body) {
    man.command = command;
    man.argv = argv;
    man.started = timestamp_utc();
    man.platform = platform_string();
    int code = kExitOk;
    try {
        fs::create_directories(out_dir);
        code = body(man);
        if (code == kExitValidation && man.status == "ok") man.status = "validation failed";
    } catch (const std::invalid_argument& e) {
        man.status = std::string("error: ") + e.what();
        std::cerr << "error: " << e.what() << "\n";
        code = kExitUsage;
    } catch (const std::exception& e) {
        man.status = std::string("error: ") + e.what();
        std::cerr << "error: " << e.what() << "\n";
        code = kExitEngine;
    }
    man.finished = timestamp_utc();
    try {
        io::write_text_file(out_path(out_dir, command + "_manifest.json"),
                            manifest_to_json(man).dump(2) + "\n");
    } catch (const std::exception& e) {
        std::cerr << "error: cannot write manifest: " << e.what() << "\n";
        if (code == kExitOk) code = kExitEngine;
    }
    return code;
}

inline void require_working_clock() {
    TickSource probe = TickSource::system();
    const std::uint64_t start = probe.now();
    for (int i = 0; i < 1'000'000; ++i) {
        if (probe.now() != start) return;
    }
    throw EngineError("monotonic clock unavailable: counter does not advance");
}

// ---------------------------------------------------------------------------
// Subcommand bodies
// ---------------------------------------------------------------------------

struct GenOpts : CommonOpts {
    std::uint64_t bytes = 0;
    std::string out;  // empty writes to stdout
};

inline int cmd_gen(const GenOpts& o, RunManifest& man) {
    const EngineConfig cfg = build_config(o);
    const std::uint64_t seed = parse_seed(o.seed);
    man.config = io::config_to_json(cfg);
    man.seed = io::hex_u64(seed);
    man.mode = cfg.mode == EngineMode::hardware ? "hardware" : "simulated";
    man.trials = o.bytes * (8 / cfg.n_bits);
    if (cfg.mode == EngineMode::hardware) require_working_clock();
    TurngEngine engine(cfg, seed);
    const std::vector<std::uint8_t> bytes = engine.byte_stream(o.bytes);
    if (o.out.empty()) {
        std::fwrite(bytes.data(), 1, bytes.size(), stdout);
        std::fflush(stdout);
        man.outputs.push_back("stdout");
    } else {
        std::ofstream os(o.out, std::ios::binary);
        if (!os) throw std::runtime_error("cannot open for writing: " + o.out);
        os.write(reinterpret_cast<const char*>(bytes.data()),
                 static_cast<std::streamsize>(bytes.size()));
        if (!os) throw std::runtime_error("write failed: " + o.out);
        man.outputs.push_back(o.out);
    }
    return kExitOk;
}

struct SummaryStats {
    double mean = 0.0;
    double variance = 0.0;
    std::uint64_t mode = 0;
};

inline SummaryStats summarize(const Histogram& h) {
    long double sum = 0.0L, sum2 = 0.0L;
    std::uint64_t mode_value = 0, mode_count = 0;
    for (const auto& [value, count] : h.bins) {
        const long double v = static_cast<long double>(value);
        sum += v * static_cast<long double>(count);
        sum2 += v * v * static_cast<long double>(count);
        if (count > mode_count) {
            mode_count = count;
            mode_value = value;
        }
    }
    const long double n = static_cast<long double>(h.total);
    const long double mean = sum / n;
    return {static_cast<double>(mean), static_cast<double>(sum2 / n - mean * mean), mode_value};
}

inline int cmd_dist(const CommonOpts& o, RunManifest& man) {
    const EngineConfig cfg = build_config(o);
    const std::uint64_t seed = parse_seed(o.seed);
    man.config = io::config_to_json(cfg);
    man.seed = io::hex_u64(seed);
    man.mode = cfg.mode == EngineMode::hardware ? "hardware" : "simulated";
    man.trials = o.trials;
    if (cfg.mode == EngineMode::hardware) require_working_clock();
    LcgState lcg(seed);
    TickSource clock = TickSource::system();
    Histogram np_hist, t_hist;
    for (std::uint64_t i = 0; i < o.trials; ++i) {
        const CycleResult r = run_cycle(cfg, lcg, clock);
        np_hist.add(r.n_p);
        t_hist.add(r.t.ticks);
    }
    const std::string np_path = out_path(o.out_dir, "dist_np.csv");
    const std::string t_path = out_path(o.out_dir, "dist_ticks.csv");
    const std::string summary_path = out_path(o.out_dir, "dist_summary.json");
    {
        std::ofstream os(np_path);
        io::write_histogram_csv(np_hist, os);
    }
    {
        std::ofstream os(t_path);
        io::write_histogram_csv(t_hist, os);
    }
    const SummaryStats np_stats = summarize(np_hist);
    const SummaryStats t_stats = summarize(t_hist);
    const io::json summary{
        {"trials", o.trials},
        {"n_p", {{"mean", np_stats.mean}, {"variance", np_stats.variance}, {"mode", np_stats.mode}}},
        {"ticks", {{"mean", t_stats.mean}, {"variance", t_stats.variance}, {"mode", t_stats.mode}}}};
    io::write_text_file(summary_path, summary.dump(2) + "\n");
    man.outputs = {np_path, t_path, summary_path};
    std::cout << "n_p mean " << format_double(np_stats.mean) << " variance "
              << format_double(np_stats.variance) << " mode " << np_stats.mode << "\n";
    std::cout << "ticks mean " << format_double(t_stats.mean) << " variance "
              << format_double(t_stats.variance) << " mode " << t_stats.mode << "\n";
    return kExitOk;
}

inline int cmd_mod(const CommonOpts& o, RunManifest& man) {
    const EngineConfig cfg = build_config(o);
    const std::uint64_t seed = parse_seed(o.seed);
    man.config = io::config_to_json(cfg);
    man.seed = io::hex_u64(seed);
    man.mode = cfg.mode == EngineMode::hardware ? "hardware" : "simulated";
    man.trials = o.trials;
    if (cfg.mode == EngineMode::hardware) require_working_clock();
    TurngEngine engine(cfg, seed);
    Histogram np_mod, t_mod;
    long double residue_sum = 0.0L;
    for (std::uint64_t i = 0; i < o.trials; ++i) {
        const CycleResult r = engine.next_cycle();
        np_mod.add(r.n_p_mod);
        t_mod.add(r.t_mod);
        residue_sum += r.n_p_mod;
    }
    const double residue_mean = static_cast<double>(residue_sum / static_cast<long double>(o.trials));
    const std::uint32_t R = 1u << cfg.n_bits;
    const std::string np_path = out_path(o.out_dir, "mod_np.csv");
    const std::string t_path = out_path(o.out_dir, "mod_t.csv");
    const std::string report_path = out_path(o.out_dir, "mod_report.json");
    {
        std::ofstream os(np_path);
        io::write_histogram_csv(np_mod, os, R);
    }
    {
        std::ofstream os(t_path);
        io::write_histogram_csv(t_mod, os, R);
    }
    const io::json report{{"trials", o.trials},
                          {"n_bits", cfg.n_bits},
                          {"n_p_mod_mean", residue_mean},
                          {"n_p_mod_report", io::report_to_json(uniformity_report(np_mod, cfg.n_bits))},
                          {"t_mod_report", io::report_to_json(uniformity_report(t_mod, cfg.n_bits))}};
    io::write_text_file(report_path, report.dump(2) + "\n");
    man.outputs = {np_path, t_path, report_path};
    std::cout << "residue arithmetic mean " << format_double(residue_mean) << " (ideal "
              << format_double((static_cast<double>(R) - 1.0) / 2.0) << ")\n";
    return kExitOk;
}

inline const std::vector<std::tuple<int, std::uint64_t, unsigned>>& default_grid() {
    static const std::vector<std::tuple<int, std::uint64_t, unsigned>> rows{
        {3, 15, 4}, {3, 20, 4}, {4, 3, 4}, {4, 4, 4}, {5, 2, 4}, {5, 4, 8}, {5, 5, 8}};
    return rows;
}

inline std::string verdict_for(const UniformityReport& r, unsigned bits) {
    const double n = static_cast<double>(bits);
    if (r.p_value > 0.01 && r.min_entropy_bits >= n - 0.1) return "Excellent";
    if (r.p_value > 0.001 && r.min_entropy_bits >= n - 0.25) return "Good";
    return "Fail";
}

struct ConvergenceOpts : CommonOpts {
    std::vector<std::string> grid;  // "N,m,bits" triples; empty uses the default grid
};

inline int cmd_convergence(const ConvergenceOpts& o, RunManifest& man) {
    std::vector<std::tuple<int, std::uint64_t, unsigned>> grid;
    if (o.grid.empty()) {
        grid = default_grid();
    } else {
        for (const std::string& row : o.grid) {
            int n = 0;
            std::uint64_t m = 0;
            unsigned bits = 0;
            char c1 = 0, c2 = 0;
            std::istringstream is(row);
            if (!(is >> n >> c1 >> m >> c2 >> bits) || c1 != ',' || c2 != ',') {
                throw std::invalid_argument("convergence grid: expected N,m,bits got: " + row);
            }
            grid.emplace_back(n, m, bits);
        }
    }
    const std::uint64_t seed = parse_seed(o.seed);
    man.seed = io::hex_u64(seed);
    man.mode = o.mode;
    man.trials = o.trials;
    io::json rows_json = io::json::array();
    std::ostringstream csv;
    csv << "N,m,bits,M,trials,chi_square,p_value,min_entropy_bits,clt_within_3,verdict\n";
    for (const auto& [n, m, bits] : grid) {
        CommonOpts row_opts = o;
        row_opts.n = n;
        row_opts.m = m;
        row_opts.bits = bits;
        io::json row{{"N", n}, {"m", m}, {"n_bits", bits}};
        std::string verdict;
        try {
            const EngineConfig cfg = build_config(row_opts);
            row["M"] = cfg.M();
            if (cfg.mode == EngineMode::hardware) require_working_clock();
            TurngEngine engine(cfg, seed);
            Histogram h;
            for (std::uint64_t i = 0; i < o.trials; ++i) h.add(engine.next_symbol());
            const UniformityReport rep = uniformity_report(h, bits);
            verdict = verdict_for(rep, bits);
            row["report"] = io::report_to_json(rep);
            row["verdict"] = verdict;
            csv << n << ',' << m << ',' << bits << ',' << cfg.M() << ',' << o.trials << ','
                << format_double(rep.chi_square) << ',' << format_double(rep.p_value) << ','
                << format_double(rep.min_entropy_bits) << ','
                << format_double(rep.clt_fraction_within.within_3) << ',' << verdict << '\n';
        } catch (const std::exception& e) {
            // Row failures are recorded and the sweep continues.
            verdict = "Error";
            row["error"] = e.what();
            row["verdict"] = verdict;
            csv << n << ',' << m << ',' << bits << ",,,,,,," << verdict << '\n';
        }
        rows_json.push_back(row);
        std::cout << "(" << n << ", " << m << ", " << bits << ") -> " << verdict << "\n";
    }
    const std::string csv_path = out_path(o.out_dir, "convergence.csv");
    const std::string json_path = out_path(o.out_dir, "convergence.json");
    io::write_text_file(csv_path, csv.str());
    const io::json doc{{"trials", o.trials}, {"rows", rows_json}};
    io::write_text_file(json_path, doc.dump(2) + "\n");
    man.outputs = {csv_path, json_path};
    return kExitOk;
}

struct ConjugateOpts : CommonOpts {
    std::uint64_t pads = 26;
    std::uint64_t runs = 5;
};

inline int cmd_conjugate(const ConjugateOpts& o, RunManifest& man) {
    CommonOpts base = o;
    base.mode = "hardware";  // repeated timing of deterministic pads needs the real counter
    EngineConfig cfg = build_config(base);
    const std::uint64_t seed = parse_seed(o.seed);
    man.config = io::config_to_json(cfg);
    man.seed = io::hex_u64(seed);
    man.mode = "hardware";
    man.trials = o.pads * o.runs;
    require_working_clock();
    TickSource clock = TickSource::system();
    std::vector<std::uint64_t> n_p(o.pads, 0);
    std::vector<std::vector<std::uint64_t>> ticks(o.pads, std::vector<std::uint64_t>(o.runs, 0));
    for (std::uint64_t run = 0; run < o.runs; ++run) {
        LcgState lcg(seed);  // identical pad sequence each run; only the timing varies
        for (std::uint64_t pad = 0; pad < o.pads; ++pad) {
            const CycleResult r = run_cycle(cfg, lcg, clock);
            if (run == 0) {
                n_p[pad] = r.n_p;
            } else if (n_p[pad] != r.n_p) {
                throw EngineError("conjugate: pad sequence diverged across runs");
            }
            ticks[pad][run] = r.t.ticks;
        }
    }
    std::ostringstream raw, mod;
    raw << "pad,n_p";
    mod << "pad,n_p_mod";
    for (std::uint64_t run = 0; run < o.runs; ++run) {
        raw << ",t_run" << run + 1;
        mod << ",t_mod_run" << run + 1;
    }
    raw << '\n';
    mod << '\n';
    for (std::uint64_t pad = 0; pad < o.pads; ++pad) {
        raw << pad + 1 << ',' << n_p[pad];
        mod << pad + 1 << ',' << modular_reduce(n_p[pad], cfg.n_bits);
        for (std::uint64_t run = 0; run < o.runs; ++run) {
            raw << ',' << ticks[pad][run];
            mod << ',' << modular_reduce(ticks[pad][run], cfg.n_bits);
        }
        raw << '\n';
        mod << '\n';
    }
    const std::string raw_path = out_path(o.out_dir, "conjugate_raw.csv");
    const std::string mod_path = out_path(o.out_dir, "conjugate_mod.csv");
    io::write_text_file(raw_path, raw.str());
    io::write_text_file(mod_path, mod.str());
    man.outputs = {raw_path, mod_path};
    std::cout << "measured " << o.pads << " pads over " << o.runs << " runs\n";
    return kExitOk;
}

struct OracleOpts {
    std::string dist;
    std::uint64_t m = 1;
    std::string p = "1/24";
    std::uint32_t r = 16;
    std::uint64_t kmax = 0;  // 0 defaults to m + 63
    double mu = 1.0;
    double var = 0.0;
    std::string out;
    std::string out_dir;
};

inline int cmd_oracle(const OracleOpts& o, RunManifest& man) {
    const double p = parse_probability(o.p);
    io::json result;
    if (o.dist == "negbin") {
        const std::uint64_t kmax = o.kmax == 0 ? o.m + 63 : o.kmax;
        if (kmax < o.m) throw std::invalid_argument("oracle: kmax must be >= m");
        io::json pmf = io::json::object();
        for (std::uint64_t k = o.m; k <= kmax; ++k) pmf[std::to_string(k)] = negbin_pmf(k, o.m, p);
        const Moments mom = negbin_moments(o.m, p);
        result = io::json{{"dist", "negbin"}, {"m", o.m},        {"p", p},
                          {"pmf", pmf},       {"mean", mom.mean}, {"variance", mom.variance}};
    } else if (o.dist == "wrapped") {
        const std::vector<double> s = wrapped_residue_pmf(o.m, p, o.r);
        result = io::json{{"dist", "wrapped"}, {"m", o.m}, {"p", p}, {"R", o.r}, {"pmf", s}};
    } else if (o.dist == "compound") {
        const Moments mom = compound_time_moments(o.m, p, o.mu, o.var);
        result = io::json{{"dist", "compound"}, {"m", o.m},         {"p", p},
                          {"mu_x", o.mu},       {"var_x", o.var},   {"mean", mom.mean},
                          {"variance", mom.variance}};
    } else {
        throw std::invalid_argument("oracle: --dist must be negbin, wrapped, or compound");
    }
    man.trials = 0;
    man.mode = "exact";
    const std::string text = result.dump(2) + "\n";
    std::cout << text;
    if (!o.out.empty()) {
        io::write_text_file(o.out, text);
        man.outputs.push_back(o.out);
    }
    return kExitOk;
}

struct ValidateOpts {
    std::string file;
    unsigned bits = 4;
    std::string out_dir;
};

// Unpacks symbols little end first and applies the Good-level thresholds:
// chi-square p > 0.001, min-entropy >= n - 0.25 bits, >= 99% of cell
// z-scores within 3 sigma.
inline int cmd_validate(const ValidateOpts& o, RunManifest& man) {
    if (o.bits != 1 && o.bits != 2 && o.bits != 4 && o.bits != 8) {
        throw std::invalid_argument("validate: --bits must be one of {1, 2, 4, 8}");
    }
    std::ifstream is(o.file, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open for reading: " + o.file);
    Histogram h;
    char byte = 0;
    const unsigned mask = (1u << o.bits) - 1;
    while (is.get(byte)) {
        const auto b = static_cast<unsigned char>(byte);
        for (unsigned shift = 0; shift < 8; shift += o.bits) {
            h.add((b >> shift) & mask);
        }
    }
    man.mode = "validate";
    man.trials = h.total;
    const UniformityReport rep = uniformity_report(h, o.bits);
    const bool pass = rep.p_value > 0.001 &&
                      rep.min_entropy_bits >= static_cast<double>(o.bits) - 0.25 &&
                      rep.clt_fraction_within.within_3 >= 0.99;
    const io::json out{{"file", o.file},
                       {"n_bits", o.bits},
                       {"symbols", h.total},
                       {"report", io::report_to_json(rep)},
                       {"pass", pass}};
    const std::string report_path = out_path(o.out_dir, "validate_report.json");
    io::write_text_file(report_path, out.dump(2) + "\n");
    man.outputs = {report_path};
    std::cout << out.dump(2) << "\n";
    return pass ? kExitOk : kExitValidation;
}

int run(int argc, const char* const* argv);

struct RerunOpts {
    std::string manifest;
    std::string out_dir;
};

// Replays the argv recorded in a manifest; simulated runs reproduce their
// outputs exactly. An --out-dir here overrides the recorded one.
inline int cmd_rerun(const RerunOpts& o) {
    const io::json man = io::json::parse(io::read_text_file(o.manifest));
    std::vector<std::string> argv = man.at("argv").get<std::vector<std::string>>();
    if (argv.empty()) throw std::invalid_argument("rerun: manifest has an empty argv");
    if (argv.front() == "rerun") throw std::invalid_argument("rerun: refusing to rerun a rerun");
    argv.insert(argv.begin(), "rpss");
    if (!o.out_dir.empty()) {
        argv.push_back("--out-dir");
        argv.push_back(o.out_dir);
    }
    std::vector<const char*> cargv;
    cargv.reserve(argv.size());
    for (const std::string& a : argv) cargv.push_back(a.c_str());
    return run(static_cast<int>(cargv.size()), cargv.data());
}

// ---------------------------------------------------------------------------
// Top-level dispatch
// ---------------------------------------------------------------------------

inline void add_common(CLI::App* sub, CommonOpts& o, bool with_trials) {
    sub->add_option("--n", o.n, "array size N")->capture_default_str();
    sub->add_option("--m", o.m, "required sorting successes per cycle")->capture_default_str();
    sub->add_option("--bits", o.bits, "output symbol width in bits")->capture_default_str();
    sub->add_option("--k-shift", o.k_shift, "reseed shift amount")->capture_default_str();
    sub->add_option("--seed", o.seed, "initial LCG seed, hexadecimal")->capture_default_str();
    sub->add_option("--mode", o.mode, "hardware or sim")->capture_default_str();
    sub->add_option("--model", o.model,
                    "sim runtime model: constant:C | geom:P,OFF | empirical:T=P,...");
    sub->add_option("--draw-cap", o.draw_cap, "per-cycle draw safety cap")->capture_default_str();
    if (with_trials) sub->add_option("--trials", o.trials, "cycle count")->capture_default_str();
    sub->add_option("--out-dir", o.out_dir, "output directory (default $RPSS_OUT_DIR or .)")
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
}

inline int run(int argc, const char* const* argv) {
    CLI::App app{"random permutation sorting entropy engine"};
    app.require_subcommand(1);

    GenOpts gen_opts;
    auto* gen = app.add_subcommand("gen", "generate raw random bytes");
    add_common(gen, gen_opts, false);
    gen->add_option("--bytes", gen_opts.bytes, "number of bytes to emit")->required();
    gen->add_option("--out", gen_opts.out, "output file (default stdout)");

    CommonOpts dist_opts;
    auto* dist = app.add_subcommand("dist", "raw n_p and tick histograms");
    add_common(dist, dist_opts, true);

    CommonOpts mod_opts;
    auto* mod = app.add_subcommand("mod", "modular residue histograms and uniformity report");
    add_common(mod, mod_opts, true);

    ConvergenceOpts conv_opts;
    auto* conv = app.add_subcommand("convergence", "verdict table over (N, m, bits) rows");
    add_common(conv, conv_opts, true);
    conv->add_option("--grid", conv_opts.grid,
                     "N,m,bits triples (repeatable; default grid of 7 rows)");

    ConjugateOpts conj_opts;
    conj_opts.m = 1;
    auto* conj = app.add_subcommand("conjugate", "repeated timing of a fixed pad sequence");
    add_common(conj, conj_opts, false);
    conj->add_option("--pads", conj_opts.pads, "number of pads")->capture_default_str();
    conj->add_option("--runs", conj_opts.runs, "timing runs per pad")->capture_default_str();

    OracleOpts oracle_opts;
    auto* oracle = app.add_subcommand("oracle", "exact pmf and moment queries");
    oracle->add_option("--dist", oracle_opts.dist, "negbin | wrapped | compound")->required();
    oracle->add_option("--m", oracle_opts.m, "successes")->capture_default_str();
    oracle->add_option("--p", oracle_opts.p, "success probability, decimal or A/B")->capture_default_str();
    oracle->add_option("--r", oracle_opts.r, "modulus R, power of two")->capture_default_str();
    oracle->add_option("--kmax", oracle_opts.kmax, "largest k for negbin (default m + 63)");
    oracle->add_option("--mu", oracle_opts.mu, "runtime mean for compound")->capture_default_str();
    oracle->add_option("--var", oracle_opts.var, "runtime variance for compound")->capture_default_str();
    oracle->add_option("--out", oracle_opts.out, "also write the JSON here");
    oracle->add_option("--out-dir", oracle_opts.out_dir, "output directory")
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

    ValidateOpts val_opts;
    auto* val = app.add_subcommand("validate", "uniformity-check a byte file");
    val->add_option("file", val_opts.file, "byte file to validate")->required();
    val->add_option("--bits", val_opts.bits, "symbol width the file was packed with")
        ->capture_default_str();
    val->add_option("--out-dir", val_opts.out_dir, "output directory")
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

    RerunOpts rerun_opts;
    auto* rerun = app.add_subcommand("rerun", "replay a recorded run manifest");
    rerun->add_option("manifest", rerun_opts.manifest, "manifest json to replay")->required();
    rerun->add_option("--out-dir", rerun_opts.out_dir, "override the recorded output directory")
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    std::vector<std::string> tail;
    for (int i = 1; i < argc; ++i) tail.emplace_back(argv[i]);

    RunManifest man;
    if (gen->parsed()) {
        gen_opts.out_dir = resolve_out_dir(gen_opts.out_dir);
        return execute("gen", tail, gen_opts.out_dir, man,
                       [&](RunManifest& m) { return cmd_gen(gen_opts, m); });
    }
    if (dist->parsed()) {
        dist_opts.out_dir = resolve_out_dir(dist_opts.out_dir);
        return execute("dist", tail, dist_opts.out_dir, man,
                       [&](RunManifest& m) { return cmd_dist(dist_opts, m); });
    }
    if (mod->parsed()) {
        mod_opts.out_dir = resolve_out_dir(mod_opts.out_dir);
        return execute("mod", tail, mod_opts.out_dir, man,
                       [&](RunManifest& m) { return cmd_mod(mod_opts, m); });
    }
    if (conv->parsed()) {
        conv_opts.out_dir = resolve_out_dir(conv_opts.out_dir);
        return execute("convergence", tail, conv_opts.out_dir, man,
                       [&](RunManifest& m) { return cmd_convergence(conv_opts, m); });
    }
    if (conj->parsed()) {
        conj_opts.out_dir = resolve_out_dir(conj_opts.out_dir);
        return execute("conjugate", tail, conj_opts.out_dir, man,
                       [&](RunManifest& m) { return cmd_conjugate(conj_opts, m); });
    }
    if (oracle->parsed()) {
        oracle_opts.out_dir = resolve_out_dir(oracle_opts.out_dir);
        return execute("oracle", tail, oracle_opts.out_dir, man,
                       [&](RunManifest& m) { return cmd_oracle(oracle_opts, m); });
    }
    if (val->parsed()) {
        val_opts.out_dir = resolve_out_dir(val_opts.out_dir);
        return execute("validate", tail, val_opts.out_dir, man,
                       [&](RunManifest& m) { return cmd_validate(val_opts, m); });
    }
    if (rerun->parsed()) {
        try {
            return cmd_rerun(rerun_opts);
        } catch (const std::invalid_argument& e) {
            std::cerr << "error: " << e.what() << "\n";
            return kExitUsage;
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << "\n";
            return kExitEngine;
        }
    }
    return kExitUsage;
}

}  // namespace rpss::cli
