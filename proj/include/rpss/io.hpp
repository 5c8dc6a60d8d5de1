#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "rpss/engine.hpp"
#include "rpss/statistics.hpp"
#include "rpss/timing.hpp"

namespace rpss::io {

using nlohmann::json;

// ---------------------------------------------------------------------------
// CSV histograms: header "value,count", values ascending. When a residue
// domain [0, R) is given, missing residues are written with count 0 so plots
// and diffs are stable.
// ---------------------------------------------------------------------------

inline void write_histogram_csv(const Histogram& h, std::ostream& os) {
    os << "value,count\n";
    for (const auto& [value, count] : h.bins) os << value << ',' << count << '\n';
}

inline void write_histogram_csv(const Histogram& h, std::ostream& os, std::uint64_t R) {
    os << "value,count\n";
    for (std::uint64_t r = 0; r < R; ++r) os << r << ',' << h.count(r) << '\n';
}

inline Histogram read_histogram_csv(std::istream& is) {
    Histogram h;
    std::string line;
    if (!std::getline(is, line) || line != "value,count") {
        throw std::invalid_argument("histogram csv: missing value,count header");
    }
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw std::invalid_argument("histogram csv: malformed row");
        const std::uint64_t value = std::stoull(line.substr(0, comma));
        const std::uint64_t count = std::stoull(line.substr(comma + 1));
        if (count > 0) h.add(value, count);
    }
    return h;
}

// ---------------------------------------------------------------------------
// JSON encodings. Histogram bins are string-keyed counts.
// ---------------------------------------------------------------------------

inline json histogram_to_json(const Histogram& h) {
    json bins = json::object();
    for (const auto& [value, count] : h.bins) bins[std::to_string(value)] = count;
    return json{{"bins", bins}, {"total", h.total}};
}

inline Histogram histogram_from_json(const json& j) {
    Histogram h;
    for (const auto& [key, count] : j.at("bins").items()) {
        h.add(std::stoull(key), count.get<std::uint64_t>());
    }
    if (j.contains("total") && j.at("total").get<std::uint64_t>() != h.total) {
        throw std::invalid_argument("histogram json: total does not match bin counts");
    }
    return h;
}

inline json report_to_json(const UniformityReport& r) {
    return json{{"chi_square", r.chi_square},
                {"degrees_of_freedom", r.degrees_of_freedom},
                {"p_value", r.p_value},
                {"min_entropy_bits", r.min_entropy_bits},
                {"clt_fraction_within",
                 {{"1_sigma", r.clt_fraction_within.within_1},
                  {"2_sigma", r.clt_fraction_within.within_2},
                  {"3_sigma", r.clt_fraction_within.within_3}}}};
}

inline json runtime_model_to_json(const RuntimeModel& model) {
    if (const auto* c = std::get_if<ConstantModel>(&model)) {
        return json{{"kind", "constant"}, {"ticks", c->ticks}};
    }
    if (const auto* g = std::get_if<GeometricShiftedModel>(&model)) {
        return json{{"kind", "geometric-shifted"}, {"p", g->p}, {"offset", g->offset}};
    }
    const auto& e = std::get<EmpiricalModel>(model);
    json table = json::object();
    for (const auto& [ticks, prob] : e.table) table[std::to_string(ticks)] = prob;
    return json{{"kind", "empirical"}, {"table", table}};
}

inline RuntimeModel runtime_model_from_json(const json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    RuntimeModel model;
    if (kind == "constant") {
        model = ConstantModel{j.at("ticks").get<std::uint64_t>()};
    } else if (kind == "geometric-shifted") {
        model = GeometricShiftedModel{j.at("p").get<double>(), j.at("offset").get<std::uint64_t>()};
    } else if (kind == "empirical") {
        EmpiricalModel e;
        for (const auto& [key, prob] : j.at("table").items()) {
            e.table.emplace_back(std::stoull(key), prob.get<double>());
        }
        std::sort(e.table.begin(), e.table.end());
        model = e;
    } else {
        throw std::invalid_argument("runtime model json: unknown kind " + kind);
    }
    validate_runtime_model(model);
    return model;
}

inline json config_to_json(const EngineConfig& cfg) {
    return json{{"N", cfg.N},
                {"m", cfg.m},
                {"n_bits", cfg.n_bits},
                {"k_shift", cfg.k_shift},
                {"disordered", cfg.disordered.values()},
                {"mode", cfg.mode == EngineMode::hardware ? "hardware" : "simulated"},
                {"runtime_model", runtime_model_to_json(cfg.runtime_model)},
                {"draw_cap", cfg.draw_cap}};
}

inline EngineConfig config_from_json(const json& j) {
    EngineConfig cfg;
    cfg.N = j.at("N").get<int>();
    cfg.m = j.at("m").get<std::uint64_t>();
    cfg.n_bits = j.at("n_bits").get<unsigned>();
    cfg.k_shift = j.at("k_shift").get<unsigned>();
    cfg.disordered = DataArray(j.at("disordered").get<std::vector<int>>());
    const std::string mode = j.at("mode").get<std::string>();
    if (mode == "hardware") {
        cfg.mode = EngineMode::hardware;
    } else if (mode == "simulated") {
        cfg.mode = EngineMode::simulated;
    } else {
        throw std::invalid_argument("config json: unknown mode " + mode);
    }
    cfg.runtime_model = runtime_model_from_json(j.at("runtime_model"));
    cfg.draw_cap = j.at("draw_cap").get<std::uint64_t>();
    cfg.validate();
    return cfg;
}

// Mock schedules replay recorded jitter: a plain JSON array of tick costs.
inline std::vector<std::uint64_t> schedule_from_json(const json& j) {
    if (!j.is_array()) throw std::invalid_argument("schedule json: expected an array of tick costs");
    std::vector<std::uint64_t> schedule;
    schedule.reserve(j.size());
    for (const auto& v : j) {
        if (!v.is_number_unsigned()) {
            throw std::invalid_argument("schedule json: entries must be non-negative integers");
        }
        schedule.push_back(v.get<std::uint64_t>());
    }
    return schedule;
}

inline std::string hex_u64(std::uint64_t v) {
    std::ostringstream os;
    os << "0x" << std::hex << v;
    return os.str();
}

// Audit snapshot of a generator: enough to restart the loop from this point.
inline json engine_snapshot(const TurngEngine& engine) {
    return json{{"config", config_to_json(engine.config())},
                {"seed", hex_u64(engine.lcg().seed())},
                {"multiplier", hex_u64(engine.lcg().multiplier())},
                {"increment", hex_u64(engine.lcg().increment())},
                {"cycles", engine.cycles()}};
}

inline void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    os << text;
    if (!os) throw std::runtime_error("write failed: " + path);
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open for reading: " + path);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

}  // namespace rpss::io
