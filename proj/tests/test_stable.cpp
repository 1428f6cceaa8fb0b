#include <gtest/gtest.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "jumphedge/stable.hpp"

using namespace jumphedge;
using std::numbers::pi;

namespace {

const StableLaw unit = StableLaw::symmetric(1.5, 1.0);

// 2c int_0^inf (1 - cos(ux)) x^{-1-alpha} dx, by periodwise Gauss-Kronrod plus an analytic tail.
double levy_khintchine_exponent(double alpha, double c, double u) {
    using boost::math::quadrature::gauss_kronrod;
    const double period = 2.0 * pi / u;
    auto f = [&](double x) {
        const double s = std::sin(0.5 * u * x);
        return 2.0 * s * s * std::pow(x, -1.0 - alpha);
    };
    // near zero the integrand behaves like u^2 x^{1-alpha}/2: integrate on a log grid
    double total = 0.0;
    double lo = period * 1e-12;
    total += 0.5 * u * u * std::pow(lo, 2.0 - alpha) / (2.0 - alpha);
    for (; lo < period; lo *= 2.0) total += gauss_kronrod<double, 61>::integrate(f, lo, std::min(2.0 * lo, period));
    const int periods = 4000;
    for (int k = 1; k < periods; ++k) total += gauss_kronrod<double, 61>::integrate(f, k * period, (k + 1) * period);
    // beyond L the cosine part averages out to O(L^{-1-alpha})
    const double L = periods * period;
    total += std::pow(L, -alpha) / alpha;
    return 2.0 * c * total;
}

// Overshoot density written in terms of the distance x beyond the upper barrier.
double density_beyond_upper(double alpha, double lo, double up, double x) {
    const double z = up + x;
    return std::sin(pi * alpha / 2.0) / pi * std::pow(lo * up, alpha / 2.0) * std::pow(x * (z + lo), -alpha / 2.0) / z;
}

} // namespace

// ---------------------------------------------------------------------------
// StableLaw

TEST(StableLaw, RejectsBadParameters) {
    EXPECT_THROW(StableLaw(1.0, 1, 1), DomainError);
    EXPECT_THROW(StableLaw(2.0, 1, 1), DomainError);
    EXPECT_THROW(StableLaw(0.8, 1, 1), DomainError);
    EXPECT_THROW(StableLaw(1.5, 0, 0), DomainError);
    EXPECT_THROW(StableLaw(1.5, -1, 1), DomainError);
    EXPECT_THROW(StableLaw::symmetric(1.5, 0.0), DomainError);
}

TEST(StableLaw, SigmaMatchesLevyKhintchineIntegral) {
    for (double alpha : {1.2, 1.5, 1.8}) {
        const StableLaw law(alpha, 0.7, 0.7);
        for (double u : {0.5, 1.0, 2.0}) {
            const double oracle = levy_khintchine_exponent(alpha, 0.7, u);
            EXPECT_NEAR(law.sigma() * std::pow(u, alpha), oracle, 1e-6 * oracle) << alpha << " " << u;
        }
    }
}

TEST(StableLaw, SymmetricFactoryRoundTrips) {
    const auto law = StableLaw::symmetric(1.7, 2.5);
    EXPECT_TRUE(law.is_symmetric());
    EXPECT_NEAR(law.sigma(), 2.5, 1e-14);
    EXPECT_EQ(law.skewness(), 0.0);
    EXPECT_EQ(StableLaw(1.5, 2, 0).skewness(), 1.0);
}

// ---------------------------------------------------------------------------
// Sampling

TEST(Sampling, Deterministic) {
    auto s1 = derive_stream(11, 4);
    auto s2 = derive_stream(11, 4);
    const auto a = sample_stable_increments(unit, 0.3, 1000, s1);
    const auto b = sample_stable_increments(unit, 0.3, 1000, s2);
    ASSERT_EQ(a.size(), 1000u);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(std::bit_cast<std::uint64_t>(a[i]), std::bit_cast<std::uint64_t>(b[i]));
}

TEST(Sampling, RejectsBadStep) {
    auto s = derive_stream(1, 1);
    EXPECT_THROW(sample_stable_increments(unit, 0.0, 3, s), DomainError);
    EXPECT_THROW(sample_stable_increments(unit, std::nan(""), 3, s), DomainError);
    EXPECT_THROW(sample_stable_increments(unit, INFINITY, 3, s), DomainError);
}

TEST(Sampling, CharacteristicFunctionSymmetric) {
    auto s = derive_stream(2024, 0);
    const auto xs = sample_stable_increments(unit, 1.0, 1'000'000, s);
    for (double u : {0.5, 1.0, 2.0}) {
        MeanAccumulator acc;
        for (double x : xs) acc.add(std::cos(u * x));
        EXPECT_NEAR(acc.mean(), std::exp(-std::pow(u, 1.5)), 3.0 * acc.std_error()) << u;
    }
}

TEST(Sampling, CharacteristicFunctionSkewed) {
    // totally and partially skewed laws: compare both real and imaginary parts
    for (auto law : {StableLaw(1.5, 1.0, 0.0), StableLaw(1.3, 0.2, 0.6)}) {
        auto s = derive_stream(77, 1);
        const double dt = 0.7;
        const auto xs = sample_stable_increments(law, dt, 400'000, s);
        for (double u : {-1.0, 0.6, 1.5}) {
            MeanAccumulator re, im;
            for (double x : xs) {
                re.add(std::cos(u * x));
                im.add(std::sin(u * x));
            }
            const double mod = dt * law.sigma() * std::pow(std::abs(u), law.alpha());
            const double phase = mod * law.skewness() * std::tan(pi * law.alpha() / 2.0) * (u > 0 ? 1.0 : -1.0);
            EXPECT_NEAR(re.mean(), std::exp(-mod) * std::cos(phase), 4.0 * re.std_error());
            EXPECT_NEAR(im.mean(), std::exp(-mod) * std::sin(phase), 4.0 * im.std_error());
        }
    }
}

TEST(Sampling, SymmetricMedianIsZero) {
    auto s = derive_stream(5, 5);
    const auto xs = sample_stable_increments(unit, 1.0, 200'000, s);
    const double frac = std::count_if(xs.begin(), xs.end(), [](double x) { return x > 0; }) / double(xs.size());
    EXPECT_NEAR(frac, 0.5, 3.0 * 0.5 / std::sqrt(double(xs.size())));
}

TEST(Sampling, TailCountsMatchLevyCoefficients) {
    // x^alpha P(X_1 > x) -> c+/alpha; the next term is O(x^{-alpha}) relative
    const StableLaw law(1.5, 0.3, 0.1);
    auto s = derive_stream(8, 8);
    const auto xs = sample_stable_increments(law, 1.0, 1'000'000, s);
    const double x = 25.0;
    const double up = std::count_if(xs.begin(), xs.end(), [&](double v) { return v > x; }) / double(xs.size());
    const double dn = std::count_if(xs.begin(), xs.end(), [&](double v) { return v < -x; }) / double(xs.size());
    EXPECT_NEAR(std::pow(x, 1.5) * up, 0.3 / 1.5, 0.1 * 0.3 / 1.5);
    EXPECT_NEAR(std::pow(x, 1.5) * dn, 0.1 / 1.5, 0.15 * 0.1 / 1.5);
}

// ---------------------------------------------------------------------------
// Closed forms

TEST(ClosedForms, MeanExitTimeValues) {
    EXPECT_NEAR(mean_exit_time(unit, {1, 1}), 0.752253, 1e-6);
    EXPECT_NEAR(mean_exit_time(unit, {2, 2}), 2.127700, 1e-5);
    EXPECT_NEAR(mean_exit_time(unit, {2, 1}), 1.265130, 1e-5);
    EXPECT_NEAR(mean_exit_time(unit, {1, 1}), 1.0 / std::tgamma(2.5), 1e-15);
}

TEST(ClosedForms, MeanSquaredIntegralValues) {
    EXPECT_NEAR(mean_squared_integral(unit, {1, 1}), 0.128958, 1e-6);
    EXPECT_NEAR(mean_squared_integral(unit, {1, 1}), 1.5 / std::tgamma(4.5), 1e-15);
    EXPECT_NEAR(mean_squared_integral(unit, {2, 1}), 0.623527, 1e-5);
}

TEST(ClosedForms, RejectAsymmetricLaws) {
    const StableLaw skew(1.5, 1.0, 0.5);
    EXPECT_THROW(mean_exit_time(skew, {1, 1}), DomainError);
    EXPECT_THROW(mean_squared_integral(skew, {1, 1}), DomainError);
    EXPECT_THROW(overshoot_density(skew, {1, 1}, 2.0), DomainError);
    EXPECT_THROW(overshoot_moment(skew, {1, 1}, 0.5), DomainError);
}

TEST(ClosedForms, RatioIdentity) {
    for (double alpha : {1.1, 1.5, 1.9}) {
        const auto law = StableLaw::symmetric(alpha, 1.3);
        for (double a : {0.2, 1.0, 3.7}) {
            const double ratio = mean_squared_integral(law, {a, a}) / mean_exit_time(law, {a, a});
            const double expect = a * a * alpha / ((alpha + 2) * (alpha + 1));
            EXPECT_NEAR(ratio, expect, 1e-12 * expect);
        }
    }
}

TEST(ClosedForms, ScalingLaws) {
    const Barriers b(0.7, 1.9);
    for (double k : {0.1, 2.0, 13.0}) {
        EXPECT_NEAR(mean_exit_time(unit, b.scaled(k)), std::pow(k, 1.5) * mean_exit_time(unit, b),
                    1e-13 * mean_exit_time(unit, b.scaled(k)));
        EXPECT_NEAR(mean_squared_integral(unit, b.scaled(k)), std::pow(k, 3.5) * mean_squared_integral(unit, b),
                    1e-13 * mean_squared_integral(unit, b.scaled(k)));
        const double u = overshoot_moment(unit, b, 0.8);
        EXPECT_NEAR(overshoot_moment(unit, b.scaled(k), 0.8), std::pow(k, 0.8) * u, 1e-9 * std::pow(k, 0.8) * u);
    }
}

TEST(ClosedForms, SwapSymmetricAndMonotone) {
    for (auto [l, u] : {std::pair{0.3, 2.0}, std::pair{1.0, 1.5}}) {
        EXPECT_DOUBLE_EQ(mean_exit_time(unit, {l, u}), mean_exit_time(unit, {u, l}));
        EXPECT_DOUBLE_EQ(mean_squared_integral(unit, {l, u}), mean_squared_integral(unit, {u, l}));
        EXPECT_NEAR(overshoot_moment(unit, {l, u}, 0.5), overshoot_moment(unit, {u, l}, 0.5), 1e-10);
    }
    double prev_f = 0.0, prev_g = 0.0;
    for (double up = 0.1; up < 5.0; up *= 1.3) {
        const double f = mean_squared_integral(unit, {0.8, up});
        const double g = mean_exit_time(unit, {0.8, up});
        EXPECT_GT(f, prev_f);
        EXPECT_GT(g, prev_g);
        prev_f = f;
        prev_g = g;
    }
}

TEST(ClosedForms, RatioMinimalAtZeroAsymmetry) {
    for (double alpha : {1.1, 1.5, 1.9}) {
        const auto law = StableLaw::symmetric(alpha, 1.0);
        auto ratio = [&](double theta) {
            const auto b = Barriers::from_center(1.0, theta);
            return mean_squared_integral(law, b) / mean_exit_time(law, b);
        };
        const double r0 = ratio(0.0);
        for (double th = -0.9; th <= 0.9001; th += 0.05)
            if (std::abs(th) > 1e-9) {
                EXPECT_GT(ratio(th), r0) << th;
            }
    }
}

// ---------------------------------------------------------------------------
// Overshoot law

TEST(Overshoot, DensitySupportAndSingularity) {
    EXPECT_EQ(overshoot_density(unit, {1, 1}, 0.0), 0.0);
    EXPECT_EQ(overshoot_density(unit, {1, 1}, 0.99), 0.0);
    EXPECT_EQ(overshoot_density(unit, {0.5, 2}, -0.3), 0.0);
    EXPECT_THROW(overshoot_density(unit, {1, 1}, 1.0), SingularPointError);
    EXPECT_THROW(overshoot_density(unit, {0.5, 2}, -0.5), SingularPointError);
    EXPECT_EQ(overshoot_density(unit, {1, 1}, 1.5), overshoot_density(unit, {1, 1}, -1.5));
    EXPECT_NEAR(overshoot_density(unit, {0.5, 2}, 3.0), density_beyond_upper(1.5, 0.5, 2.0, 1.0), 1e-15);
    EXPECT_NEAR(overshoot_density_past(unit, {0.5, 2}, 1.0), density_beyond_upper(1.5, 0.5, 2.0, 1.0), 1e-15);
    EXPECT_NEAR(overshoot_density_past(unit, {0.5, 2}, 1e-3, true), overshoot_density(unit, {0.5, 2}, -0.501), 1e-9);
    EXPECT_THROW(overshoot_density_past(unit, {1, 1}, 0.0), SingularPointError);
}

TEST(Overshoot, DensityNormalizes) {
    boost::math::quadrature::tanh_sinh<double> ts;
    for (double alpha : {1.2, 1.5, 1.9}) {
        for (auto [lo, up] : {std::pair{1.0, 1.0}, std::pair{0.4, 1.7}}) {
            const double upper_mass =
                ts.integrate([&](double x) { return density_beyond_upper(alpha, lo, up, x); }, 0.0, INFINITY);
            const double lower_mass =
                ts.integrate([&](double x) { return density_beyond_upper(alpha, up, lo, x); }, 0.0, INFINITY);
            EXPECT_NEAR(upper_mass + lower_mass, 1.0, 1e-6) << alpha;
        }
    }
}

TEST(Overshoot, ZerothMomentIsExactlyOne) {
    EXPECT_EQ(overshoot_moment(unit, {1, 1}, 0.0), 1.0);
    EXPECT_EQ(overshoot_moment(unit, {0.3, 7}, 0.0), 1.0);
}

TEST(Overshoot, FirstMomentMatchesBetaFunctionReduction) {
    const double oracle = std::sin(3.0 * pi / 4.0) / pi * 2.0 * std::pow(2.0, -0.5) * std::beta(0.25, 0.5);
    EXPECT_NEAR(oracle, 1.66928, 1e-4);
    EXPECT_NEAR(overshoot_moment(unit, {1, 1}, 1.0), oracle, 1e-8);
}

TEST(Overshoot, MomentMatchesDensityWeightedQuadrature) {
    boost::math::quadrature::tanh_sinh<double> ts;
    for (double beta : {0.3, 1.0, 1.4}) {
        for (auto [lo, up] : {std::pair{1.0, 1.0}, std::pair{2.0, 1.0}, std::pair{0.3, 1.2}}) {
            auto side = [&](double l, double u) {
                return ts.integrate([&](double x) { return std::pow(u + x, beta) * density_beyond_upper(1.5, l, u, x); },
                                    0.0, INFINITY);
            };
            EXPECT_NEAR(overshoot_moment(unit, {lo, up}, beta), side(lo, up) + side(up, lo), 1e-6) << beta;
        }
    }
}

TEST(Overshoot, MomentScaling) {
    EXPECT_NEAR(overshoot_moment(unit, {3, 3}, 0.5), std::pow(3.0, 0.5) * overshoot_moment(unit, {1, 1}, 0.5),
                1e-6 * overshoot_moment(unit, {3, 3}, 0.5));
}

TEST(Overshoot, RejectsBetaAtOrAboveAlpha) {
    EXPECT_THROW(overshoot_moment(unit, {1, 1}, 1.5), DomainError);
    EXPECT_THROW(overshoot_moment(unit, {1, 1}, 1.7), DomainError);
    EXPECT_THROW(overshoot_moment(unit, {1, 1}, -0.1), DomainError);
}

// ---------------------------------------------------------------------------
// Monte Carlo oracle

TEST(McExit, ZeroBetaMomentIsExactlyOne) {
    McExitOptions opt;
    opt.n_paths = 200;
    opt.dt = 1e-2;
    const auto est = mc_exit_functionals(StableLaw(1.5, 1.0, 0.2), {1, 1}, 0.0, opt);
    EXPECT_EQ(est.mean.u_beta, 1.0);
    EXPECT_EQ(est.u_se, 0.0);
}

TEST(McExit, BudgetExceededNamesPath) {
    McExitOptions opt;
    opt.n_paths = 50;
    opt.dt = 1e-3;
    opt.max_steps = 3;
    try {
        mc_exit_functionals(unit, {1, 1}, 0.5, opt);
        FAIL();
    } catch (const BudgetExceeded& e) {
        EXPECT_EQ(e.path_index(), 0u);
    }
}

TEST(McExit, IdenticalAcrossThreadCounts) {
    McExitOptions opt;
    opt.n_paths = 3000;
    opt.dt = 1e-2;
    opt.threads = 1;
    const auto a = mc_exit_functionals(StableLaw(1.5, 0.4, 0.2), {1, 2}, 0.5, opt);
    opt.threads = 5;
    const auto b = mc_exit_functionals(StableLaw(1.5, 0.4, 0.2), {1, 2}, 0.5, opt);
    EXPECT_EQ(a.mean.f, b.mean.f);
    EXPECT_EQ(a.mean.g, b.mean.g);
    EXPECT_EQ(a.mean.u_beta, b.mean.u_beta);
    EXPECT_EQ(a.g_se, b.g_se);
}

TEST(McExit, AgreesWithClosedFormsAtModerateSize) {
    McExitOptions opt;
    opt.n_paths = 20000;
    opt.dt = 1e-3 * mean_exit_time(unit, {1, 1});
    const auto est = mc_exit_functionals(unit, {1, 1}, 0.5, opt);
    const auto ex = exit_functionals(unit, {1, 1}, 0.5);
    EXPECT_NEAR(est.mean.g, ex.g, 3.0 * est.g_se + est.g_bias_bound);
    EXPECT_NEAR(est.mean.f, ex.f, 3.0 * est.f_se + est.f_bias_bound);
    EXPECT_NEAR(est.mean.u_beta, ex.u_beta, 3.0 * est.u_se + est.u_bias_bound);
}

TEST(McExit, RefinementStaysWithinReportedBias) {
    const Barriers b(1, 1);
    McExitOptions opt;
    opt.n_paths = 20000;
    opt.dt = 1e-2 * mean_exit_time(unit, b);
    const auto coarse = mc_exit_functionals(unit, b, 0.5, opt);
    opt.dt /= 4.0;
    const auto fine = mc_exit_functionals(unit, b, 0.5, opt);
    EXPECT_LT(std::abs(coarse.mean.g - fine.mean.g), coarse.g_bias_bound);
    EXPECT_LT(std::abs(coarse.mean.f - fine.mean.f), coarse.f_bias_bound);
    EXPECT_LT(std::abs(coarse.mean.u_beta - fine.mean.u_beta), coarse.u_bias_bound);
    EXPECT_LE(fine.g_bias_bound, coarse.g_bias_bound);
}

TEST(McExit, AsymmetricLawRuns) {
    McExitOptions opt;
    opt.n_paths = 4000;
    opt.dt = 1e-3;
    const StableLaw up_only(1.5, 1.0, 0.0);
    const auto est = mc_exit_functionals(up_only, {1, 1}, 1.0, opt);
    EXPECT_GT(est.mean.g, 0.0);
    EXPECT_GT(est.mean.f, 0.0);
    // the exit position lies outside (-1, 1)
    EXPECT_GE(est.mean.u_beta, 1.0);
}

TEST(Sampling, TailFunctionalsMatchSamples) {
    for (auto law : {StableLaw(1.5, 1.0, 0.3), StableLaw(1.2, 0.0, 0.5), StableLaw::symmetric(1.8, 1.0)}) {
        auto s = derive_stream(31, 0);
        const auto xs = sample_stable_increments(law, 1.0, 1'000'000, s);
        for (double r : {0.5, 2.0, 6.0}) {
            MeanAccumulator prob, mean;
            for (double x : xs) {
                const bool out = std::abs(x) > r;
                prob.add(out ? 1.0 : 0.0);
                mean.add(out ? x : 0.0);
            }
            const auto tail = stable_tail(law, r);
            EXPECT_NEAR(tail.prob, prob.mean(), 4.0 * prob.std_error()) << law.alpha() << " " << r;
            // the tail mean has infinite variance; compare against the exact far-tail form too
            EXPECT_NEAR(tail.mean, mean.mean(), 6.0 * mean.std_error() + 0.02 * std::abs(tail.mean)) << r;
        }
        // far tail: E[X; |X| > r] ~ (c+ - c-) r^{1-alpha}/(alpha-1)
        const double r = 1e4;
        const double asym = (law.c_plus() - law.c_minus()) * std::pow(r, 1.0 - law.alpha()) / (law.alpha() - 1.0);
        EXPECT_NEAR(stable_tail(law, r).mean, asym, 1e-3 * std::abs(asym) + 1e-9);
        EXPECT_NEAR(stable_tail(law, r).prob, (law.c_plus() + law.c_minus()) / law.alpha() * std::pow(r, -law.alpha()),
                    1e-3 * std::pow(r, -law.alpha()));
    }
}
