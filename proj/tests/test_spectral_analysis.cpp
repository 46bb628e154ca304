#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "ising_gap/geometric_bounds.hpp"
#include "ising_gap/spectral_analysis.hpp"
#include "oracles.hpp"

using namespace ising_gap;

namespace {

const Temperature kT1 = Temperature::finite(1.0);
const LatticeSize kN1(1), kN2(2), kN3(3);

std::vector<Temperature> temperature_grid() {
    return {Temperature::finite(0.5), Temperature::finite(1.0), Temperature::finite(2.0),
            Temperature::finite(5.0)};
}

}  // namespace

TEST(Spectrum, SingleSite) {
    const Spectrum s = exact_spectrum(TransitionKernel(kN1, kT1));
    ASSERT_EQ(s.eigenvalues.size(), 2U);
    EXPECT_NEAR(s.eigenvalues[0], 1.0, 1e-15);
    EXPECT_NEAR(s.eigenvalues[1], 0.0, 1e-15);
    EXPECT_NEAR(s.beta_star, 0.0, 1e-15);
}

TEST(Spectrum, InfiniteTemperatureClosedForm) {
    const Spectrum s = exact_spectrum(TransitionKernel(kN2, Temperature::infinite()));
    const auto m = s.multiplicities();
    ASSERT_EQ(m.size(), 5U);
    for (int k = 0; k <= 4; ++k) {
        EXPECT_NEAR(m[k].first, 1.0 - k / 4.0, 1e-10);
        EXPECT_EQ(m[k].second, static_cast<int>(oracle::binomial(4, k)));
    }
    EXPECT_NEAR(s.beta1, 0.75, 1e-12);
    EXPECT_NEAR(s.beta_min, 0.0, 1e-12);
}

TEST(Spectrum, MatchesJacobiOracle) {
    for (int n = 1; n <= 3; ++n)
        for (const Temperature& t : {Temperature::finite(1.0), Temperature::finite(2.0), Temperature::infinite()}) {
            if (n == 3 && !t.is_infinite() && t.value() == 2.0) continue;  // keep the runtime small
            const Spectrum s = exact_spectrum(TransitionKernel(LatticeSize(n), t));
            const auto ref = oracle::kernel_spectrum(n, t.inverse());
            ASSERT_EQ(s.eigenvalues.size(), ref.size());
            for (std::size_t i = 0; i < ref.size(); ++i) EXPECT_NEAR(s.eigenvalues[i], ref[i], 1e-10);
        }
}

TEST(Spectrum, Invariants) {
    for (int n = 1; n <= 3; ++n)
        for (const Temperature& t : temperature_grid()) {
            const TransitionKernel k(LatticeSize(n), t);
            const Spectrum s = exact_spectrum(k);
            EXPECT_NEAR(s.eigenvalues.front(), 1.0, 1e-10);
            EXPECT_GT(s.beta_min, -1.0);
            EXPECT_GT(1.0 - s.beta1, 1e-12);
            EXPECT_LE(s.symmetry_residual, 1e-10);
            double trace = 0, sum = 0;
            for (StateIndex x = 0; x < k.state_count(); ++x) trace += k.holding(x);
            for (double v : s.eigenvalues) sum += v;
            EXPECT_NEAR(trace, sum, 1e-8);
            EXPECT_DOUBLE_EQ(s.beta_star, std::max(s.beta1, std::fabs(s.beta_min)));
            EXPECT_GE(s.beta_min, beta_min_lower_bound(t) - 1e-9);
            if (n > 1) {
                const EdgeLoadTable loads = accumulate_edge_loads(k);
                EXPECT_LE(s.beta1, ds_beta1_bound(kappa_exact(k, loads).kappa) + 1e-9);
            }
        }
}

TEST(Spectrum, UnitTemperatureBetweenUncoupledAndPathBound) {
    const Spectrum s = exact_spectrum(TransitionKernel(kN2, kT1));
    EXPECT_GT(s.beta1, 0.75);
    EXPECT_LT(s.beta1, path_beta1_bound(2, kT1));
}

TEST(Spectrum, CeilingRejected) {
    const TransitionKernel k(LatticeSize(4), kT1);
    EXPECT_THROW(exact_spectrum(k), LatticeTooLarge);
    EXPECT_THROW(exact_spectrum(TransitionKernel(LatticeSize(5), kT1)), LatticeTooLarge);
}

TEST(Lanczos, MatchesDenseSolverOnThreeByThree) {
    for (const Temperature& t : temperature_grid()) {
        const TransitionKernel k(kN3, t);
        const Spectrum dense = exact_spectrum(k);
        const ExtremalSpectrum lanczos = extremal_spectrum(k);
        EXPECT_NEAR(lanczos.beta1, dense.beta1, 1e-9);
        EXPECT_NEAR(lanczos.beta_min, dense.beta_min, 1e-9);
    }
}

TEST(Lanczos, FourByFourWithinBounds) {
    const TransitionKernel k(LatticeSize(4), Temperature::finite(2.0));
    const ExtremalSpectrum s = extremal_spectrum(k);
    EXPECT_GT(s.beta1, 0.0);
    EXPECT_LT(s.beta1, path_beta1_bound(4, Temperature::finite(2.0)));
    EXPECT_GE(s.beta_min, beta_min_lower_bound(Temperature::finite(2.0)) - 1e-9);
    EXPECT_LT(s.residual_beta1, 1e-8);
}

TEST(TotalVariation, Examples) {
    const BoltzmannDistribution pi(kN2, kT1);
    EXPECT_EQ(tv_distance(pi.probabilities(), pi.probabilities()), 0.0);
    std::vector<double> point(16, 0.0), uniform(16, 1.0 / 16);
    point[3] = 1.0;
    EXPECT_NEAR(tv_distance(point, uniform), 15.0 / 16, 1e-15);
    std::vector<double> up(16, 0.0);
    up[15] = 1.0;
    EXPECT_NEAR(tv_distance(up, pi.probabilities()), 1.0 - pi[15], 1e-15);
    EXPECT_NEAR(tv_distance(up, pi.probabilities()), 0.54964, 1e-5);
    std::vector<double> bad(16, 0.1);
    EXPECT_THROW(tv_distance(bad, uniform), std::invalid_argument);
}

TEST(TotalVariation, SymmetricAndTriangle) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    auto random_vector = [&] {
        std::vector<double> v(32);
        double s = 0;
        for (double& x : v) s += (x = u(rng));
        for (double& x : v) x /= s;
        return v;
    };
    for (int i = 0; i < 500; ++i) {
        const auto a = random_vector(), b = random_vector(), c = random_vector();
        EXPECT_DOUBLE_EQ(tv_distance(a, b), tv_distance(b, a));
        EXPECT_LE(tv_distance(a, c), tv_distance(a, b) + tv_distance(b, c) + 1e-15);
    }
}

TEST(PowerRows, StartAndLimit) {
    const TransitionKernel k(kN2, kT1);
    const auto rows = power_rows(k, 5, 1000);
    ASSERT_EQ(rows.size(), 1001U);
    for (StateIndex y = 0; y < 16; ++y) {
        EXPECT_EQ(rows[0][y], y == 5 ? 1.0 : 0.0);
        EXPECT_DOUBLE_EQ(rows[1][y], k(5, y));
        EXPECT_NEAR(rows[1000][y], k.stationary()[y], 1e-8);
    }
    for (const auto& r : rows) {
        double s = 0;
        for (double v : r) s += v;
        EXPECT_NEAR(s, 1.0, 1e-10);
    }
    EXPECT_THROW(power_rows(TransitionKernel(LatticeSize(4), kT1), 0, 2), LatticeTooLarge);
}

TEST(TvDecay, HoldsAtTwoAndThree) {
    for (int n : {2, 3})
        for (double tv : {1.0, 2.0}) {
            const Temperature t = Temperature::finite(tv);
            const TransitionKernel k(LatticeSize(n), t);
            const Spectrum s = exact_spectrum(k);
            const TvDecayReport r =
                verify_tv_decay(k, s, closed_form_beta_star_bound(n, t).beta_star_bound, n == 2 ? 50 : 30);
            EXPECT_TRUE(r.passed());
            EXPECT_EQ(r.checks, k.state_count() * (n == 2 ? 51U : 31U));
            EXPECT_LE(r.identity_residual, 1e-12);
        }
    const TransitionKernel k(kN2, kT1);
    EXPECT_THROW(verify_tv_decay(k, exact_spectrum(k), 0.99, 0), std::invalid_argument);
}

TEST(TvDecay, FittedDecayRateMatchesBetaStar) {
    for (double tv : {1.0, 2.0}) {
        const TransitionKernel k(kN2, Temperature::finite(tv));
        const Spectrum s = exact_spectrum(k);
        const double rate = fitted_decay_rate(k, 15, 20, 50);
        EXPECT_NEAR(rate, s.beta_star, 1e-3);
    }
}

TEST(SpectrumCsv, Format) {
    const Spectrum s = exact_spectrum(TransitionKernel(kN2, kT1));
    std::ostringstream out;
    write_eigenvalues_csv(out, s);
    EXPECT_EQ(out.str().rfind("index,eigenvalue\n0,", 0), 0U);
}
