#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "rpss/timing.hpp"

namespace rpss {

// Integer-valued counts over raw observables or residues.
struct Histogram {
    std::map<std::uint64_t, std::uint64_t> bins;
    std::uint64_t total = 0;

    void add(std::uint64_t value, std::uint64_t count = 1) {
        bins[value] += count;
        total += count;
    }

    std::uint64_t count(std::uint64_t value) const {
        const auto it = bins.find(value);
        return it == bins.end() ? 0 : it->second;
    }

    std::uint64_t max_count() const {
        std::uint64_t m = 0;
        for (const auto& [value, count] : bins) m = std::max(m, count);
        return m;
    }
};

// ---------------------------------------------------------------------------
// Exact distribution oracles
// ---------------------------------------------------------------------------

// Pr[n_p = k] = C(k-1, m-1) (1-p)^(k-m) p^m, evaluated in log space.
// m = 1 reduces to the geometric law (1-p)^(k-1) p.
inline double negbin_pmf(std::uint64_t k, std::uint64_t m, double p) {
    if (m < 1) throw std::invalid_argument("negbin_pmf: m must be >= 1");
    if (k < m) throw std::invalid_argument("negbin_pmf: k must be >= m");
    if (!(p > 0.0) || p > 1.0) throw std::invalid_argument("negbin_pmf: p must be in (0, 1]");
    if (p == 1.0) return k == m ? 1.0 : 0.0;
    const double kd = static_cast<double>(k);
    const double md = static_cast<double>(m);
    const double log_choose = std::lgamma(kd) - std::lgamma(md) - std::lgamma(kd - md + 1.0);
    return std::exp(log_choose + md * std::log(p) + (kd - md) * std::log1p(-p));
}

inline Moments negbin_moments(std::uint64_t m, double p) {
    if (m < 1) throw std::invalid_argument("negbin_moments: m must be >= 1");
    if (!(p > 0.0) || p > 1.0) throw std::invalid_argument("negbin_moments: p must be in (0, 1]");
    const double md = static_cast<double>(m);
    return {md / p, md * (1.0 - p) / (p * p)};
}

// E[T] = (m/p) mu_x, Var(T) = (m/p) var_x + m (1-p)/p^2 mu_x^2.
inline Moments compound_time_moments(std::uint64_t m, double p, double mu_x, double var_x) {
    if (m < 1) throw std::invalid_argument("compound_time_moments: m must be >= 1");
    if (!(p > 0.0) || p > 1.0) throw std::invalid_argument("compound_time_moments: p must be in (0, 1]");
    if (!(mu_x > 0.0)) throw std::invalid_argument("compound_time_moments: mu_x must be > 0");
    if (var_x < 0.0) throw std::invalid_argument("compound_time_moments: var_x must be >= 0");
    const double md = static_cast<double>(m);
    return {(md / p) * mu_x, (md / p) * var_x + md * (1.0 - p) / (p * p) * mu_x * mu_x};
}

inline constexpr std::uint64_t kWrappedIterationCap = 50'000'000;

// Wrapped residue law S_r = sum_s Pr[n_p = r + s R]. Direct summation with a
// multiplicative pmf recurrence; terminates once the neglected tail mass is
// below 1e-12, so the entries sum to 1 within that tolerance (no
// renormalization). R must be a power of two, at most 2^16.
inline std::vector<double> wrapped_residue_pmf(std::uint64_t m, double p, std::uint32_t R) {
    if (m < 1) throw std::invalid_argument("wrapped_residue_pmf: m must be >= 1");
    if (!(p > 0.0) || p > 1.0) throw std::invalid_argument("wrapped_residue_pmf: p must be in (0, 1]");
    if (R < 2 || R > (1u << 16) || (R & (R - 1)) != 0) {
        throw std::invalid_argument("wrapped_residue_pmf: R must be a power of two in [2, 2^16]");
    }
    std::vector<double> out(R, 0.0);
    if (p == 1.0) {
        out[m % R] = 1.0;
        return out;
    }
    std::vector<long double> acc(R, 0.0L);
    long double covered = 0.0L, comp = 0.0L;
    long double pk = std::pow(static_cast<long double>(p), static_cast<long double>(m));
    std::uint64_t k = m;
    for (;;) {
        acc[k % R] += pk;
        const long double y = pk - comp;
        const long double t = covered + y;
        comp = (t - covered) - y;
        covered = t;
        if (1.0L - covered < 1e-12L) break;
        if (pk == 0.0L) {
            // Recurrence underflowed; accept only if already within the looser
            // normalization tolerance.
            if (1.0L - covered < 1e-9L) break;
            throw std::runtime_error("wrapped_residue_pmf: pmf underflow before tolerance reached");
        }
        if (k - m >= kWrappedIterationCap) {
            throw std::runtime_error("wrapped_residue_pmf: truncation tolerance not reached within iteration cap");
        }
        pk *= (1.0L - p) * static_cast<long double>(k) / static_cast<long double>(k - m + 1);
        ++k;
    }
    for (std::uint32_t r = 0; r < R; ++r) out[r] = static_cast<double>(acc[r]);
    return out;
}

// Single-term tail bound: Pr(T > t) >= Pr[n_p = k] * Pr(sum of k runtime draws > t).
// The runtime factor is an exact k-fold convolution, so the model must have
// finite support (constant or empirical).
inline double tail_lower_bound(std::uint64_t m, double p, const RuntimeModel& model,
                               std::uint64_t k, std::uint64_t t) {
    if (k < m) throw std::invalid_argument("tail_lower_bound: k must be >= m");
    validate_runtime_model(model);
    std::vector<std::pair<std::uint64_t, double>> support;
    if (const auto* c = std::get_if<ConstantModel>(&model)) {
        support = {{c->ticks, 1.0}};
    } else if (const auto* e = std::get_if<EmpiricalModel>(&model)) {
        support = e->table;
    } else {
        throw std::invalid_argument("tail_lower_bound: runtime model must have finite support");
    }
    if (support.size() > 64) {
        throw std::invalid_argument("tail_lower_bound: runtime support exceeds 64 points");
    }
    std::uint64_t min_tick = support.front().first, max_tick = support.front().first;
    for (const auto& [ticks, prob] : support) {
        min_tick = std::min(min_tick, ticks);
        max_tick = std::max(max_tick, ticks);
    }
    const double head = negbin_pmf(k, m, p);
    if (t < k * min_tick) return head;  // every k-draw sum exceeds t
    if (t >= k * max_tick) return 0.0;  // no k-draw sum exceeds t
    if (k > 1000 || k * max_tick > (1u << 16)) {
        throw std::invalid_argument("tail_lower_bound: convolution support overflow");
    }
    std::vector<double> conv{1.0};  // pmf of the running sum, indexed by ticks
    for (std::uint64_t i = 0; i < k; ++i) {
        std::vector<double> next(conv.size() + max_tick, 0.0);
        for (std::size_t s = 0; s < conv.size(); ++s) {
            if (conv[s] == 0.0) continue;
            for (const auto& [ticks, prob] : support) next[s + ticks] += conv[s] * prob;
        }
        conv = std::move(next);
    }
    double tail = 0.0;
    for (std::size_t s = conv.size(); s-- > t + 1;) tail += conv[s];
    return head * tail;
}

// ---------------------------------------------------------------------------
// Uniformity validators
// ---------------------------------------------------------------------------

namespace detail {

// Regularized incomplete gamma Q(a, x): series for x < a + 1, modified Lentz
// continued fraction otherwise. Relative accuracy well below 1e-8 over the
// degrees-of-freedom range used here.
inline double gamma_q(double a, double x) {
    if (x <= 0.0) return 1.0;
    const double lg = std::lgamma(a);
    const double prefix = std::exp(-x + a * std::log(x) - lg);
    if (x < a + 1.0) {
        double term = 1.0 / a;
        double sum = term;
        for (int n = 1; n < 10000; ++n) {
            term *= x / (a + static_cast<double>(n));
            sum += term;
            if (std::fabs(term) < std::fabs(sum) * 1e-16) break;
        }
        return std::clamp(1.0 - prefix * sum, 0.0, 1.0);
    }
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 10000; ++i) {
        const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::fabs(delta - 1.0) < 1e-16) break;
    }
    return std::clamp(prefix * h, 0.0, 1.0);
}

inline void require_cells(const Histogram& h, std::uint32_t R, const char* who) {
    if (R < 2) throw std::invalid_argument(std::string(who) + ": need at least 2 cells");
    if (!h.bins.empty() && h.bins.rbegin()->first >= R) {
        throw std::invalid_argument(std::string(who) + ": histogram value outside [0, R)");
    }
}

}  // namespace detail

// Survival function of the chi-square distribution.
inline double chi_square_p_value(double statistic, unsigned degrees_of_freedom) {
    if (degrees_of_freedom < 1) throw std::invalid_argument("chi_square_p_value: df must be >= 1");
    if (statistic < 0.0) throw std::invalid_argument("chi_square_p_value: statistic must be >= 0");
    return detail::gamma_q(static_cast<double>(degrees_of_freedom) / 2.0, statistic / 2.0);
}

struct ChiSquareResult {
    double statistic = 0.0;
    unsigned degrees_of_freedom = 0;
    double p_value = 1.0;
};

// Goodness of fit against the uniform law on R cells; expected-count rule
// requires total >= 5R.
inline ChiSquareResult chi_square_uniform(const Histogram& h, std::uint32_t R) {
    detail::require_cells(h, R, "chi_square_uniform");
    if (h.total < 5ull * R) {
        throw std::invalid_argument("chi_square_uniform: insufficient sample, need total >= 5R");
    }
    const double expected = static_cast<double>(h.total) / static_cast<double>(R);
    double stat = 0.0;
    for (std::uint32_t r = 0; r < R; ++r) {
        const double diff = static_cast<double>(h.count(r)) - expected;
        stat += diff * diff / expected;
    }
    const unsigned df = R - 1;
    return {stat, df, chi_square_p_value(stat, df)};
}

// NIST SP 800-90B most-common-value estimate: p_u is a 99% upper confidence
// bound on the modal symbol probability; the result is clamped to [0, n_bits].
inline double min_entropy_mcv(const Histogram& h, unsigned n_bits) {
    if (n_bits < 1 || n_bits > 64) throw std::invalid_argument("min_entropy_mcv: n_bits must be in [1, 64]");
    if (h.total < 1000) throw std::invalid_argument("min_entropy_mcv: insufficient sample, need total >= 1000");
    const double total = static_cast<double>(h.total);
    const double phat = static_cast<double>(h.max_count()) / total;
    const double pu = std::min(1.0, phat + 2.576 * std::sqrt(phat * (1.0 - phat) / (total - 1.0)));
    return std::clamp(-std::log2(pu), 0.0, static_cast<double>(n_bits));
}

struct CltFractions {
    double within_1 = 0.0;
    double within_2 = 0.0;
    double within_3 = 0.0;
};

// Cell z-scores z_r = (O_r - E) / sqrt(E (1 - 1/R)); the denominator is the
// exact multinomial cell deviation, which matters at small R.
inline CltFractions clt_residuals(const Histogram& h, std::uint32_t R) {
    detail::require_cells(h, R, "clt_residuals");
    if (h.total < 5ull * R) {
        throw std::invalid_argument("clt_residuals: insufficient sample, need total >= 5R");
    }
    const double expected = static_cast<double>(h.total) / static_cast<double>(R);
    const double denom = std::sqrt(expected * (1.0 - 1.0 / static_cast<double>(R)));
    std::uint32_t in1 = 0, in2 = 0, in3 = 0;
    for (std::uint32_t r = 0; r < R; ++r) {
        const double z = std::fabs((static_cast<double>(h.count(r)) - expected) / denom);
        if (z <= 1.0) ++in1;
        if (z <= 2.0) ++in2;
        if (z <= 3.0) ++in3;
    }
    const double cells = static_cast<double>(R);
    return {in1 / cells, in2 / cells, in3 / cells};
}

inline double shannon_entropy(const Histogram& h) {
    if (h.total < 1) throw std::invalid_argument("shannon_entropy: histogram is empty");
    double bits = 0.0;
    for (const auto& [value, count] : h.bins) {
        if (count == 0) continue;
        const double f = static_cast<double>(count) / static_cast<double>(h.total);
        bits -= f * std::log2(f);
    }
    return bits;
}

struct UniformityReport {
    double chi_square = 0.0;
    unsigned degrees_of_freedom = 0;
    double p_value = 1.0;
    double min_entropy_bits = 0.0;
    CltFractions clt_fraction_within;
};

inline UniformityReport uniformity_report(const Histogram& h, unsigned n_bits) {
    if (n_bits < 1 || n_bits > 16) throw std::invalid_argument("uniformity_report: n_bits must be in [1, 16]");
    const std::uint32_t R = 1u << n_bits;
    const ChiSquareResult chi = chi_square_uniform(h, R);
    return {chi.statistic, chi.degrees_of_freedom, chi.p_value, min_entropy_mcv(h, n_bits),
            clt_residuals(h, R)};
}

}  // namespace rpss
