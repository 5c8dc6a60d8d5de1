#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "rpss/lcg.hpp"
#include "rpss/permutation.hpp"
#include "rpss/timing.hpp"

namespace rpss {

struct EngineError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class EngineMode { hardware, simulated };

// Canonical target array. The N = 4 case is the reference experiment array;
// other sizes use the reversed sequence.
inline DataArray default_disordered(int N) {
    if (N == 4) return DataArray{3, 2, 0, 1};
    std::vector<int> v(static_cast<std::size_t>(N));
    for (int i = 0; i < N; ++i) v[static_cast<std::size_t>(i)] = N - 1 - i;
    return DataArray(v);
}

struct EngineConfig {
    int N = 4;
    std::uint64_t m = 4;              // required sorting successes per cycle
    unsigned n_bits = 4;              // output symbol width, 1..16
    unsigned k_shift = 7;             // reseed shift amount
    DataArray disordered = default_disordered(4);
    EngineMode mode = EngineMode::simulated;
    RuntimeModel runtime_model = default_runtime_model();  // simulated mode only
    std::uint64_t draw_cap = 1'000'000'000;  // per-cycle safety cap

    // M = m * N!, exact.
    std::uint64_t M() const {
        return m * factorial(N);
    }

    // The uniformity of modular residues degrades once M is within a factor
    // of four of R = 2^n_bits; callers should surface this as a warning, not
    // an error.
    bool convergence_warning() const {
        return M() <= (1ull << (n_bits + 2));
    }

    void validate() const {
        if (N < kMinN || N > kMaxN) throw std::invalid_argument("EngineConfig: N must be in [2, 12]");
        if (m < 1) throw std::invalid_argument("EngineConfig: m must be >= 1");
        if (n_bits < 1 || n_bits > 16) throw std::invalid_argument("EngineConfig: n_bits must be in [1, 16]");
        if (k_shift >= 64) throw std::invalid_argument("EngineConfig: k_shift must be in [0, 64)");
        if (disordered.size() != N) throw std::invalid_argument("EngineConfig: disordered array size must equal N");
        if (is_sorted(disordered)) throw std::invalid_argument("EngineConfig: disordered array is already sorted");
        if (m > UINT64_MAX / factorial(N)) throw std::invalid_argument("EngineConfig: m * N! overflows");
        if (draw_cap < 1) throw std::invalid_argument("EngineConfig: draw_cap must be >= 1");
        validate_runtime_model(runtime_model);
    }
};

// Conjugate observables of one sorting cycle.
struct CycleResult {
    std::uint64_t n_p = 0;     // permutation draws through the m-th success
    TickSpan t;                // elapsed ticks for the whole cycle
    std::uint32_t n_p_mod = 0; // n_p mod 2^n_bits
    std::uint32_t t_mod = 0;   // t mod 2^n_bits
};

inline std::uint32_t modular_reduce(std::uint64_t value, unsigned n_bits) {
    if (n_bits < 1 || n_bits > 16) throw std::invalid_argument("modular_reduce: n_bits must be in [1, 16]");
    return static_cast<std::uint32_t>(value & ((1ull << n_bits) - 1));
}

// One sorting cycle: draw a uniform permutation, compose it onto the running
// pad, apply the pad to the disordered array, and test sortedness. Every draw
// counts toward n_p; each success resets the pad to identity; the m-th
// success halts. The pad stays uniform on S_N under composition, so the
// success law per draw is exactly 1/N!.
//
// Hardware mode times the whole cycle with one span around the loop; mock
// sources consume one schedule entry per draw inside that span. Simulated
// mode draws per-permutation costs from the runtime model instead, consuming
// randomness from the same LCG stream as the pad draws.
//
// cfg must be validated by the caller.
inline CycleResult run_cycle(const EngineConfig& cfg, LcgState& rng, TickSource& clock) {
    std::uint64_t n_p = 0;
    std::uint64_t t_sim = 0;
    const bool simulated = cfg.mode == EngineMode::simulated;

    const auto sort_loop = [&] {
        Permutation pad = Permutation::identity(cfg.N);
        std::uint64_t successes = 0;
        for (;;) {
            if (n_p == cfg.draw_cap) {
                throw EngineError("run_cycle: sorting cycle exceeded the draw cap (" +
                                  std::to_string(cfg.draw_cap) + " draws)");
            }
            ++n_p;
            pad = compose(pad, random_permutation(cfg.N, rng));
            if (simulated) {
                t_sim += sample_runtime_model(rng, cfg.runtime_model);
            } else {
                clock.consume();
            }
            if (is_sorted(apply(pad, cfg.disordered))) {
                if (++successes == cfg.m) return;
                pad = Permutation::identity(cfg.N);
            }
        }
    };

    std::uint64_t ticks;
    if (simulated) {
        sort_loop();
        ticks = t_sim;
    } else {
        ticks = measure(clock, sort_loop).ticks;
    }
    return {n_p, TickSpan{ticks}, modular_reduce(n_p, cfg.n_bits), modular_reduce(ticks, cfg.n_bits)};
}

// Self-reseeding generator loop: each cycle emits the residue of n_p as the
// output symbol, then folds the residue of t back into the LCG seed. The
// multiplier and increment never change; only the seed evolves.
class TurngEngine {
public:
    TurngEngine(EngineConfig cfg, std::uint64_t seed,
                std::uint64_t multiplier = kDefaultMultiplier,
                std::uint64_t increment = kDefaultIncrement)
        : TurngEngine(std::move(cfg), LcgState(seed, multiplier, increment), TickSource::system()) {}

    TurngEngine(EngineConfig cfg, LcgState lcg, TickSource clock)
        : cfg_(std::move(cfg)), lcg_(lcg), clock_(std::move(clock)) {
        cfg_.validate();
    }

    // Emits the symbol for one cycle and reseeds with the cycle's t residue.
    CycleResult next_cycle() {
        const CycleResult r = run_cycle(cfg_, lcg_, clock_);
        lcg_.reseed_shift_add(r.t_mod, cfg_.k_shift);
        ++cycles_;
        return r;
    }

    std::uint32_t next_symbol() { return next_cycle().n_p_mod; }

    // Symbols packed little end first: the first symbol fills the low bits of
    // each byte. Requires n_bits in {1, 2, 4, 8}.
    std::vector<std::uint8_t> byte_stream(std::uint64_t count) {
        const unsigned n = cfg_.n_bits;
        if (n != 1 && n != 2 && n != 4 && n != 8) {
            throw std::invalid_argument("byte_stream: n_bits must be one of {1, 2, 4, 8}");
        }
        std::vector<std::uint8_t> out;
        out.reserve(count);
        for (std::uint64_t i = 0; i < count; ++i) {
            unsigned byte = 0;
            for (unsigned shift = 0; shift < 8; shift += n) {
                byte |= static_cast<unsigned>(next_symbol()) << shift;
            }
            out.push_back(static_cast<std::uint8_t>(byte));
        }
        return out;
    }

    const EngineConfig& config() const { return cfg_; }
    const LcgState& lcg() const { return lcg_; }
    std::uint64_t cycles() const { return cycles_; }

private:
    EngineConfig cfg_;
    LcgState lcg_;
    TickSource clock_;
    std::uint64_t cycles_ = 0;
};

}  // namespace rpss
