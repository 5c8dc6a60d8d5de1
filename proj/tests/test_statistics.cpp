#include "rpss/statistics.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "rpss/lcg.hpp"
#include "testutil.hpp"

namespace rpss {
namespace {

Histogram uniform_histogram(std::uint32_t cells, std::uint64_t per_cell) {
    Histogram h;
    for (std::uint32_t r = 0; r < cells; ++r) {
        for (std::uint64_t i = 0; i < per_cell; ++i) h.add(r);
    }
    return h;
}

TEST(Histogram, TracksCountsAndTotal) {
    Histogram h;
    h.add(3);
    h.add(3);
    h.add(7);
    EXPECT_EQ(h.total, 3u);
    EXPECT_EQ(h.count(3), 2u);
    EXPECT_EQ(h.count(7), 1u);
    EXPECT_EQ(h.count(4), 0u);
    EXPECT_EQ(h.max_count(), 2u);
    std::uint64_t sum = 0;
    for (const auto& [_, c] : h.bins) sum += c;
    EXPECT_EQ(sum, h.total);
}

TEST(NegbinPmf, GeometricHeadAndAllSuccessCases) {
    EXPECT_NEAR(negbin_pmf(1, 1, 1.0 / 24.0), 1.0 / 24.0, 1e-15);
    EXPECT_NEAR(negbin_pmf(3, 3, 0.25), 0.015625, 1e-15);  // p^m
    EXPECT_DOUBLE_EQ(negbin_pmf(2, 2, 1.0), 1.0);
    EXPECT_DOUBLE_EQ(negbin_pmf(3, 2, 1.0), 0.0);
}

TEST(NegbinPmf, ConsecutiveRatioIsOneMinusPForGeometric) {
    const double p = 1.0 / 24.0;
    for (std::uint64_t k = 1; k < 5; ++k) {
        EXPECT_NEAR(negbin_pmf(k + 1, 1, p) / negbin_pmf(k, 1, p), 1.0 - p, 1e-12);
    }
}

TEST(NegbinPmf, DomainViolationsThrow) {
    EXPECT_THROW(negbin_pmf(1, 0, 0.5), std::invalid_argument);
    EXPECT_THROW(negbin_pmf(1, 1, 0.0), std::invalid_argument);
    EXPECT_THROW(negbin_pmf(1, 1, 1.5), std::invalid_argument);
    EXPECT_THROW(negbin_pmf(1, 2, 0.5), std::invalid_argument);  // k < m
}

TEST(NegbinPmf, NormalizesOverTruncatedSupport) {
    const double p = 1.0 / 24.0;
    double sum = 0.0;
    for (std::uint64_t k = 2; k <= 1'000'000; ++k) {
        const double v = negbin_pmf(k, 2, p);
        sum += v;
        if (v == 0.0 && k > 4000) break;
    }
    EXPECT_NEAR(sum, 1.0, 1e-9);
}

TEST(NegbinMoments, ClosedForms) {
    const Moments a = negbin_moments(1, 1.0 / 24.0);
    EXPECT_DOUBLE_EQ(a.mean, 24.0);
    EXPECT_DOUBLE_EQ(a.variance, 552.0);
    const Moments b = negbin_moments(3, 1.0 / 24.0);
    EXPECT_DOUBLE_EQ(b.mean, 72.0);
    const Moments c = negbin_moments(5, 1.0);
    EXPECT_DOUBLE_EQ(c.mean, 5.0);
    EXPECT_DOUBLE_EQ(c.variance, 0.0);
}

TEST(CompoundMoments, ClosedForms) {
    const Moments a = compound_time_moments(1, 1.0 / 24.0, 2.0, 0.0);
    EXPECT_DOUBLE_EQ(a.mean, 48.0);
    EXPECT_DOUBLE_EQ(a.variance, 2208.0);
    const Moments b = compound_time_moments(2, 1.0 / 24.0, 3.0, 1.0);
    EXPECT_DOUBLE_EQ(b.mean, 144.0);
    const Moments c = compound_time_moments(4, 1.0, 2.5, 1.25);
    EXPECT_DOUBLE_EQ(c.mean, 10.0);
    EXPECT_DOUBLE_EQ(c.variance, 5.0);
}

// Brute-force cross-check: m=1, p=1/2, two-point runtime model, expectation
// accumulated path by path until the neglected mass is below 1e-9.
TEST(CompoundMoments, MatchBruteForceEnumerationTinyCase) {
    const double p = 0.5;
    const std::vector<std::pair<std::uint64_t, double>> x{{1, 0.25}, {3, 0.75}};
    double mass = 0.0, e_t = 0.0, e_t2 = 0.0;
    std::vector<double> conv{1.0};  // pmf of the k-fold sum, index = ticks
    for (std::uint64_t k = 1; mass < 1.0 - 1e-9; ++k) {
        std::vector<double> next(conv.size() + 3, 0.0);
        for (std::size_t s = 0; s < conv.size(); ++s) {
            if (conv[s] == 0.0) continue;
            for (const auto& [ticks, prob] : x) next[s + ticks] += conv[s] * prob;
        }
        conv = std::move(next);
        const double pk = negbin_pmf(k, 1, p);
        for (std::size_t s = 0; s < conv.size(); ++s) {
            const double w = pk * conv[s];
            e_t += w * static_cast<double>(s);
            e_t2 += w * static_cast<double>(s) * static_cast<double>(s);
        }
        mass += pk;
    }
    const double mu_x = 1 * 0.25 + 3 * 0.75;
    const double var_x = (1 * 0.25 + 9 * 0.75) - mu_x * mu_x;
    const Moments closed = compound_time_moments(1, p, mu_x, var_x);
    EXPECT_NEAR(e_t, closed.mean, 1e-6 * closed.mean);
    EXPECT_NEAR(e_t2 - e_t * e_t, closed.variance, 1e-5 * closed.variance);
}

TEST(WrappedResiduePmf, DegenerateCertainSuccess) {
    const std::vector<double> s = wrapped_residue_pmf(1, 1.0, 16);
    ASSERT_EQ(s.size(), 16u);
    EXPECT_DOUBLE_EQ(s[1], 1.0);
    EXPECT_DOUBLE_EQ(std::accumulate(s.begin(), s.end(), 0.0), 1.0);
}

TEST(WrappedResiduePmf, SmallModulusWitness) {
    // m=1, p=1/2, R=2: odd counts carry 2/3 of the mass.
    const std::vector<double> s = wrapped_residue_pmf(1, 0.5, 2);
    EXPECT_NEAR(s[0], 1.0 / 3.0, 1e-12);
    EXPECT_NEAR(s[1], 2.0 / 3.0, 1e-12);
}

TEST(WrappedResiduePmf, NormalizesAndBoundsDeviation) {
    const std::vector<double> s = wrapped_residue_pmf(3, 1.0 / 24.0, 16);
    EXPECT_NEAR(std::accumulate(s.begin(), s.end(), 0.0), 1.0, 1e-9);
    double dev = 0.0;
    for (const double v : s) dev = std::max(dev, std::fabs(v - 1.0 / 16.0));
    EXPECT_LE(dev, 2.0 / 72.0);
    EXPECT_NEAR(dev, 1.6882944e-4, 1e-9);
}

TEST(WrappedResiduePmf, DeviationShrinksMonotonicallyInM) {
    // Fixed R=16, fixed p=1/24; M = m * 24 over {24, 48, 72, 96, 240}.
    const std::uint64_t ms[] = {1, 2, 3, 4, 10};
    double prev = 1.0;
    for (const std::uint64_t m : ms) {
        const std::vector<double> s = wrapped_residue_pmf(m, 1.0 / 24.0, 16);
        EXPECT_NEAR(std::accumulate(s.begin(), s.end(), 0.0), 1.0, 1e-9);
        double dev = 0.0;
        for (const double v : s) dev = std::max(dev, std::fabs(v - 1.0 / 16.0));
        EXPECT_LE(dev, 2.0 / static_cast<double>(m * 24));
        EXPECT_LT(dev, prev);
        prev = dev;
    }
}

TEST(WrappedResiduePmf, MatchesIndependentDftOracle) {
    for (const auto& [m, p] : std::vector<std::pair<std::uint64_t, double>>{
             {3, 1.0 / 24.0}, {2, 1.0 / 120.0}, {1, 0.5}}) {
        const std::vector<double> direct = wrapped_residue_pmf(m, p, 16);
        const std::vector<double> dft = testutil::dft_wrapped_negbin(m, p, 16);
        for (std::size_t r = 0; r < 16; ++r) {
            EXPECT_NEAR(direct[r], dft[r], 1e-10) << "residue " << r;
        }
    }
}

TEST(WrappedResiduePmf, RejectsBadModulusAndUnreachableTolerance) {
    EXPECT_THROW(wrapped_residue_pmf(1, 0.5, 0), std::invalid_argument);
    EXPECT_THROW(wrapped_residue_pmf(1, 0.5, 1), std::invalid_argument);
    EXPECT_THROW(wrapped_residue_pmf(1, 0.5, 24), std::invalid_argument);
    EXPECT_THROW(wrapped_residue_pmf(1, 0.5, 1u << 17), std::invalid_argument);
    // Tail cannot reach 1e-12 within the iteration cap for a minuscule p.
    EXPECT_THROW(wrapped_residue_pmf(1, 1e-7, 16), std::runtime_error);
}

TEST(TailLowerBound, ClosedFormProductWithConstantModel) {
    const RuntimeModel c3 = ConstantModel{3};
    // t below k*min support: runtime factor is 1, bound is the count pmf.
    const double expect = std::pow(23.0 / 24.0, 9) * (1.0 / 24.0);
    EXPECT_NEAR(tail_lower_bound(1, 1.0 / 24.0, c3, 10, 29), expect, 1e-9 * expect);
    // t at or above k*max support: no k-draw path exceeds t.
    EXPECT_DOUBLE_EQ(tail_lower_bound(1, 1.0 / 24.0, c3, 10, 30), 0.0);
    EXPECT_DOUBLE_EQ(tail_lower_bound(1, 1.0 / 24.0, c3, 10, 31), 0.0);
}

TEST(TailLowerBound, ConvolutionTailForTwoPointModel) {
    const RuntimeModel two = EmpiricalModel{{{1, 0.5}, {2, 0.5}}};
    // k=2: sum in {2,3,4} with probs {1/4, 1/2, 1/4}; Pr[sum > 2] = 3/4.
    const double head = negbin_pmf(2, 1, 0.5);
    EXPECT_NEAR(tail_lower_bound(1, 0.5, two, 2, 2), head * 0.75, 1e-12);
    EXPECT_NEAR(tail_lower_bound(1, 0.5, two, 2, 3), head * 0.25, 1e-12);
}

TEST(TailLowerBound, DomainAndOverflowGuards) {
    const RuntimeModel two = EmpiricalModel{{{1, 0.5}, {2, 0.5}}};
    EXPECT_THROW(tail_lower_bound(1, 0.5, two, 0, 1), std::invalid_argument);  // k < m
    EXPECT_THROW(tail_lower_bound(1, 0.5, GeometricShiftedModel{0.5, 1}, 2, 2),
                 std::invalid_argument);  // infinite support
    EXPECT_THROW(tail_lower_bound(1, 0.5, two, 1001, 1500), std::invalid_argument);
    const RuntimeModel wide = EmpiricalModel{{{1, 0.5}, {66, 0.5}}};
    EXPECT_THROW(tail_lower_bound(1, 0.5, wide, 1000, 5000), std::invalid_argument);
    std::vector<std::pair<std::uint64_t, double>> many;
    for (std::uint64_t t = 1; t <= 65; ++t) many.emplace_back(t, 1.0 / 65.0);
    EXPECT_THROW(tail_lower_bound(1, 0.5, EmpiricalModel{many}, 2, 3), std::invalid_argument);
}

TEST(ChiSquare, PValueAnchorsFromPublishedTables) {
    EXPECT_NEAR(chi_square_p_value(24.996, 15), 0.0499971788297, 1e-8);
    EXPECT_NEAR(chi_square_p_value(7.2609, 15), 0.950001357181, 1e-8);
    EXPECT_NEAR(chi_square_p_value(30.5779, 15), 0.0100000433171, 1e-8);
    EXPECT_NEAR(chi_square_p_value(24.996, 20), 0.201584177612, 1e-8);
    EXPECT_NEAR(chi_square_p_value(0.5, 1), 0.479500122187, 1e-8);
    EXPECT_NEAR(chi_square_p_value(3.8414588206941236, 1), 0.05, 1e-8);
    EXPECT_NEAR(chi_square_p_value(123.225, 100), 0.057479841007, 1e-8);
    EXPECT_NEAR(chi_square_p_value(310.45737, 255), 0.0100000188751, 1e-8);
    EXPECT_DOUBLE_EQ(chi_square_p_value(0.0, 15), 1.0);
    EXPECT_LE(chi_square_p_value(2400.0, 15), 1e-300);
}

TEST(ChiSquare, UniformCountsScoreZero) {
    const Histogram h = uniform_histogram(16, 100);
    const ChiSquareResult r = chi_square_uniform(h, 16);
    EXPECT_DOUBLE_EQ(r.statistic, 0.0);
    EXPECT_EQ(r.degrees_of_freedom, 15u);
    EXPECT_DOUBLE_EQ(r.p_value, 1.0);
}

TEST(ChiSquare, AllMassInOneCellForcedStatistic) {
    Histogram h;
    h.add(5, 160);
    const ChiSquareResult r = chi_square_uniform(h, 16);
    EXPECT_DOUBLE_EQ(r.statistic, 2400.0);
    EXPECT_LE(r.p_value, 1e-300);
}

TEST(ChiSquare, KnownTwoCellStatistic) {
    Histogram h;
    for (int i = 0; i < 30; ++i) h.add(0);
    for (int i = 0; i < 70; ++i) h.add(1);
    const ChiSquareResult r = chi_square_uniform(h, 2);
    EXPECT_DOUBLE_EQ(r.statistic, 16.0);
    EXPECT_EQ(r.degrees_of_freedom, 1u);
    EXPECT_DOUBLE_EQ(r.p_value, chi_square_p_value(16.0, 1));
}

TEST(ChiSquare, GuardsOnSampleSizeAndKeys) {
    EXPECT_THROW(chi_square_uniform(uniform_histogram(16, 4), 16), std::invalid_argument);
    Histogram bad = uniform_histogram(16, 100);
    bad.add(16);
    EXPECT_THROW(chi_square_uniform(bad, 16), std::invalid_argument);
    EXPECT_THROW(chi_square_uniform(uniform_histogram(2, 100), 1), std::invalid_argument);
}

TEST(ChiSquare, OracleSampledResiduesPassAtAlphaOneTenthPercent) {
    // 10^6 inverse-CDF samples from the wrapped law at M=96 look uniform.
    const std::vector<double> pmf = wrapped_residue_pmf(4, 1.0 / 24.0, 16);
    LcgState rng(7);
    const Histogram h = testutil::sample_pmf(pmf, rng, 1'000'000);
    EXPECT_GT(chi_square_uniform(h, 16).p_value, 0.001);
}

TEST(MinEntropyMcv, FrozenUniformValues) {
    EXPECT_NEAR(min_entropy_mcv(uniform_histogram(16, 1000), 4), 3.890470894669677, 1e-9);
    EXPECT_NEAR(min_entropy_mcv(uniform_histogram(16, 10000), 4), 3.9644576003464436, 1e-9);
}

TEST(MinEntropyMcv, DegenerateAndGuardCases) {
    Histogram one;
    for (int i = 0; i < 1000; ++i) one.add(3);
    EXPECT_DOUBLE_EQ(min_entropy_mcv(one, 4), 0.0);
    Histogram small;
    for (int i = 0; i < 999; ++i) small.add(i % 16);
    EXPECT_THROW(min_entropy_mcv(small, 4), std::invalid_argument);
    EXPECT_THROW(min_entropy_mcv(uniform_histogram(16, 1000), 0), std::invalid_argument);
    EXPECT_THROW(min_entropy_mcv(uniform_histogram(16, 1000), 65), std::invalid_argument);
}

TEST(MinEntropyMcv, ClampedToWidth) {
    const double v = min_entropy_mcv(uniform_histogram(2, 500000), 1);
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
}

TEST(CltResiduals, UniformCountsAllWithinOneSigma) {
    const CltFractions f = clt_residuals(uniform_histogram(16, 100), 16);
    EXPECT_DOUBLE_EQ(f.within_1, 1.0);
    EXPECT_DOUBLE_EQ(f.within_2, 1.0);
    EXPECT_DOUBLE_EQ(f.within_3, 1.0);
}

TEST(CltResiduals, ConstructedViolationLandsOutsideThreeSigma) {
    // R=4, total 1000, E=250, sigma = sqrt(250 * 0.75) = 13.693.
    Histogram h;
    h.bins = {{0, 292}, {1, 236}, {2, 236}, {3, 236}};
    h.total = 1000;
    const CltFractions f = clt_residuals(h, 4);
    EXPECT_DOUBLE_EQ(f.within_1, 0.0);    // all four cells beyond 1 sigma
    EXPECT_DOUBLE_EQ(f.within_2, 0.75);
    EXPECT_DOUBLE_EQ(f.within_3, 0.75);   // only the inflated cell beyond 3
}

TEST(CltResiduals, SkewedDoubleCellBelowOneForLargeTotals) {
    Histogram h;
    for (std::uint32_t r = 0; r < 16; ++r) h.bins[r] = r == 0 ? 2000 : 1000;
    h.total = 17000;
    const CltFractions f = clt_residuals(h, 16);
    EXPECT_LT(f.within_3, 1.0);
}

TEST(CltResiduals, FractionsNonDecreasing) {
    LcgState rng(31);
    Histogram h;
    for (int i = 0; i < 100000; ++i) h.add(rng.next_bounded(16));
    const CltFractions f = clt_residuals(h, 16);
    EXPECT_LE(f.within_1, f.within_2);
    EXPECT_LE(f.within_2, f.within_3);
}

TEST(CltResiduals, NinetyNinePercentRuleHoldsAcrossSeededRepetitions) {
    // 100 seeded runs of 10^6 uniform draws; at least 95 land with >= 99% of
    // cell z-scores inside 3 sigma.
    int good = 0;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        LcgState rng(seed);
        Histogram h;
        for (int i = 0; i < 1'000'000; ++i) h.add(rng.next_bounded(16));
        if (clt_residuals(h, 16).within_3 >= 0.99) ++good;
    }
    EXPECT_GE(good, 95);
}

TEST(ShannonEntropy, ClosedFormCases) {
    Histogram one;
    one.add(9);
    EXPECT_DOUBLE_EQ(shannon_entropy(one), 0.0);
    EXPECT_NEAR(shannon_entropy(uniform_histogram(16, 10)), 4.0, 1e-12);
    Histogram h;
    h.bins = {{0, 75}, {1, 25}};
    h.total = 100;
    EXPECT_NEAR(shannon_entropy(h), 0.811278124459, 1e-10);
    Histogram empty;
    EXPECT_THROW(shannon_entropy(empty), std::invalid_argument);
}

TEST(ShannonEntropy, WrappedOracleNearlyFourBits) {
    const std::vector<double> s = wrapped_residue_pmf(3, 1.0 / 24.0, 16);
    double bits = 0.0;
    for (const double v : s) bits -= v * std::log2(v);
    EXPECT_NEAR(bits, 3.99999760495, 1e-9);
    EXPECT_GE(bits, 3.99);
}

TEST(UniformityReport, ComposesTheThreeCriteria) {
    LcgState rng(13);
    Histogram h;
    for (int i = 0; i < 200000; ++i) h.add(rng.next_bounded(16));
    const UniformityReport r = uniformity_report(h, 4);
    const ChiSquareResult chi = chi_square_uniform(h, 16);
    EXPECT_DOUBLE_EQ(r.chi_square, chi.statistic);
    EXPECT_EQ(r.degrees_of_freedom, chi.degrees_of_freedom);
    EXPECT_DOUBLE_EQ(r.p_value, chi.p_value);
    EXPECT_DOUBLE_EQ(r.min_entropy_bits, min_entropy_mcv(h, 4));
    EXPECT_DOUBLE_EQ(r.clt_fraction_within.within_3, clt_residuals(h, 16).within_3);
    EXPECT_GE(r.p_value, 0.0);
    EXPECT_LE(r.p_value, 1.0);
    EXPECT_LE(r.min_entropy_bits, 4.0);
    EXPECT_THROW(uniformity_report(h, 17), std::invalid_argument);
}

}  // namespace
}  // namespace rpss
