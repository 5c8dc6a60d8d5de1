#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace rpss {

// Elapsed time in raw monotonic counter units. Ticks are never converted to
// wall-clock units; the counter granularity is the unit.
struct TickSpan {
    std::uint64_t ticks = 0;

    friend bool operator==(const TickSpan&, const TickSpan&) = default;
};

struct ScheduleExhausted : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Tick-granularity time source. The system flavor reads the platform's
// monotonic counter; the mock flavor replays a fixed schedule of
// per-permutation costs, one entry per consume() call, for deterministic
// tests. Mock entries are >= 1: a permutation consumes time.
class TickSource {
public:
    enum class Kind { system_monotonic, mock };

    static TickSource system() { return TickSource(Kind::system_monotonic, {}); }

    static TickSource mock(std::vector<std::uint64_t> schedule) {
        for (const std::uint64_t v : schedule) {
            if (v == 0) throw std::invalid_argument("TickSource::mock: schedule entries must be >= 1 tick");
        }
        return TickSource(Kind::mock, std::move(schedule));
    }

    Kind kind() const { return kind_; }

    // Mock: consume the next scheduled per-permutation cost. System: no-op,
    // real time flows on its own.
    void consume() {
        if (kind_ == Kind::system_monotonic) return;
        if (cursor_ >= schedule_.size()) {
            throw ScheduleExhausted("mock schedule exhausted after " + std::to_string(cursor_) +
                                    " entries; provision a longer schedule");
        }
        window_ += schedule_[cursor_++];
    }

    std::size_t remaining() const { return schedule_.size() - cursor_; }

    // Raw monotonic counter reading, system sources only.
    std::uint64_t now() const {
        return static_cast<std::uint64_t>(std::chrono::steady_clock::now().time_since_epoch().count());
    }

    template <typename Work>
    friend TickSpan measure(TickSource& source, Work&& work);

private:
    TickSource(Kind kind, std::vector<std::uint64_t> schedule)
        : kind_(kind), schedule_(std::move(schedule)) {}

    Kind kind_;
    std::vector<std::uint64_t> schedule_;
    std::size_t cursor_ = 0;
    std::uint64_t window_ = 0;
};

// System source: counter delta around the work. Mock source: sum of the
// schedule entries the work consumed.
template <typename Work>
TickSpan measure(TickSource& source, Work&& work) {
    if (source.kind_ == TickSource::Kind::system_monotonic) {
        const std::uint64_t start = source.now();
        std::forward<Work>(work)();
        return TickSpan{source.now() - start};
    }
    source.window_ = 0;
    std::forward<Work>(work)();
    return TickSpan{source.window_};
}

// Per-permutation runtime models for simulated mode. All draws are >= 1 tick.
struct ConstantModel {
    std::uint64_t ticks = 1;
};

// X = offset + (failures before first success at probability p).
struct GeometricShiftedModel {
    double p = 0.5;
    std::uint64_t offset = 1;
};

// Explicit pmf over tick costs; probabilities must sum to 1 within 1e-9.
struct EmpiricalModel {
    std::vector<std::pair<std::uint64_t, double>> table;
};

using RuntimeModel = std::variant<ConstantModel, GeometricShiftedModel, EmpiricalModel>;

// Calibration default: mode at 3 ticks with light tails on either side.
inline RuntimeModel default_runtime_model() {
    return EmpiricalModel{{{1, 0.05}, {2, 0.15}, {3, 0.55}, {4, 0.15}, {5, 0.10}}};
}

inline void validate_runtime_model(const RuntimeModel& model) {
    if (const auto* c = std::get_if<ConstantModel>(&model)) {
        if (c->ticks == 0) throw std::invalid_argument("runtime model: constant cost must be >= 1 tick");
        return;
    }
    if (const auto* g = std::get_if<GeometricShiftedModel>(&model)) {
        if (!(g->p > 0.0) || g->p > 1.0) {
            throw std::invalid_argument("runtime model: geometric p must be in (0, 1]");
        }
        if (g->offset == 0) throw std::invalid_argument("runtime model: geometric offset must be >= 1 tick");
        return;
    }
    const auto& e = std::get<EmpiricalModel>(model);
    if (e.table.empty()) throw std::invalid_argument("runtime model: empirical table is empty");
    double sum = 0.0;
    for (const auto& [ticks, prob] : e.table) {
        if (ticks == 0) throw std::invalid_argument("runtime model: empirical tick cost must be >= 1");
        if (!(prob > 0.0)) throw std::invalid_argument("runtime model: empirical probabilities must be > 0");
        sum += prob;
    }
    if (std::fabs(sum - 1.0) > 1e-9) {
        throw std::invalid_argument("runtime model: empirical probabilities must sum to 1");
    }
}

template <typename S>
concept RandomWordSource = requires(S s) {
    { s.next_u64() } -> std::convertible_to<std::uint64_t>;
};

// Uniform double in [0, 1) from the top 53 bits of one word.
template <RandomWordSource S>
double uniform01(S& source) {
    return static_cast<double>(source.next_u64() >> 11) * 0x1.0p-53;
}

// Draws one per-permutation tick cost X_j >= 1. The constant model consumes
// no randomness.
template <RandomWordSource S>
std::uint64_t sample_runtime_model(S& source, const RuntimeModel& model) {
    if (const auto* c = std::get_if<ConstantModel>(&model)) {
        return c->ticks;
    }
    if (const auto* g = std::get_if<GeometricShiftedModel>(&model)) {
        if (g->p == 1.0) return g->offset;
        const double u = uniform01(source);
        const double failures = std::floor(std::log1p(-u) / std::log1p(-g->p));
        return g->offset + static_cast<std::uint64_t>(failures);
    }
    const auto& e = std::get<EmpiricalModel>(model);
    const double u = uniform01(source);
    double cum = 0.0;
    for (const auto& [ticks, prob] : e.table) {
        cum += prob;
        if (u < cum) return ticks;
    }
    return e.table.back().first;  // guards the 1e-9 normalization slack
}

struct Moments {
    double mean = 0.0;
    double variance = 0.0;
};

inline Moments runtime_model_moments(const RuntimeModel& model) {
    validate_runtime_model(model);
    if (const auto* c = std::get_if<ConstantModel>(&model)) {
        return {static_cast<double>(c->ticks), 0.0};
    }
    if (const auto* g = std::get_if<GeometricShiftedModel>(&model)) {
        const double q = 1.0 - g->p;
        return {static_cast<double>(g->offset) + q / g->p, q / (g->p * g->p)};
    }
    const auto& e = std::get<EmpiricalModel>(model);
    double mean = 0.0, ex2 = 0.0;
    for (const auto& [ticks, prob] : e.table) {
        const double t = static_cast<double>(ticks);
        mean += t * prob;
        ex2 += t * t * prob;
    }
    return {mean, ex2 - mean * mean};
}

}  // namespace rpss
