#pragma once

// Weighted power-law fits, log y = intercept + slope log x.
//
// Weights come from delta-method standard errors on the log scale,
// sd(log y) = se_y / y, and when x is itself an estimate (a Monte Carlo cost)
// its error enters as effective variance sd(log y)^2 + slope^2 sd(log x)^2,
// iterated to a fixed point in the slope.

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "jumphedge/errors.hpp"

namespace jumphedge {

struct PowerLawPoint {
    double x;
    double y;
    double x_se = 0.0;
    double y_se = 0.0;
};

struct PowerLawFit {
    double slope = 0.0;
    double slope_se = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
    double slope_ci_low = 0.0;   ///< 95% Student-t interval
    double slope_ci_high = 0.0;
    double reduced_chi2 = 0.0;
    std::size_t n_points = 0;
};

inline constexpr std::size_t min_fit_points = 4;

inline PowerLawFit fit_power_law(std::span<const PowerLawPoint> pts) {
    const std::size_t n = pts.size();
    if (n < min_fit_points)
        throw FitDegenerateError("need at least " + std::to_string(min_fit_points) + " points for a slope fit, got " +
                                 std::to_string(n));
    std::vector<double> u(n), v(n), su2(n), sv2(n);
    bool weighted = false;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& p = pts[i];
        if (!(p.x > 0.0) || !(p.y > 0.0) || !std::isfinite(p.x) || !std::isfinite(p.y))
            throw FitDegenerateError("power-law fit needs positive finite values");
        if (!(p.x_se >= 0.0) || !(p.y_se >= 0.0)) throw FitDegenerateError("standard errors must be non-negative");
        u[i] = std::log(p.x);
        v[i] = std::log(p.y);
        su2[i] = (p.x_se / p.x) * (p.x_se / p.x);
        sv2[i] = (p.y_se / p.y) * (p.y_se / p.y);
        weighted = weighted || sv2[i] > 0.0 || su2[i] > 0.0;
    }

    PowerLawFit f;
    f.n_points = n;
    std::vector<double> w(n, 1.0);
    double sw = 0, mu = 0, mv = 0, suu = 0, suv = 0;
    auto solve = [&] {
        sw = mu = mv = suu = suv = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            sw += w[i];
            mu += w[i] * u[i];
            mv += w[i] * v[i];
        }
        mu /= sw;
        mv /= sw;
        for (std::size_t i = 0; i < n; ++i) {
            suu += w[i] * (u[i] - mu) * (u[i] - mu);
            suv += w[i] * (u[i] - mu) * (v[i] - mv);
        }
        if (!(suu > 1e-300 * sw)) throw FitDegenerateError("all x values coincide");
        f.slope = suv / suu;
        f.intercept = mv - f.slope * mu;
    };
    solve();
    if (weighted) {
        for (int iter = 0; iter < 50; ++iter) {
            const double prev = f.slope;
            for (std::size_t i = 0; i < n; ++i) {
                const double var = sv2[i] + f.slope * f.slope * su2[i];
                if (!(var > 0.0)) throw FitDegenerateError("a point has zero standard error in a weighted fit");
                w[i] = 1.0 / var;
            }
            solve();
            if (std::abs(f.slope - prev) <= 1e-12 * (1.0 + std::abs(f.slope))) break;
        }
    }

    double chi2 = 0.0, tss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = v[i] - f.intercept - f.slope * u[i];
        chi2 += w[i] * r * r;
        tss += w[i] * (v[i] - mv) * (v[i] - mv);
    }
    const double dof = static_cast<double>(n - 2);
    f.reduced_chi2 = chi2 / dof;
    f.r2 = tss > 0.0 ? 1.0 - chi2 / tss : 1.0;
    // absolute weights: inflate only when the scatter exceeds the error bars
    const double scale = weighted ? std::max(1.0, f.reduced_chi2) : f.reduced_chi2;
    f.slope_se = std::sqrt(scale / suu);
    const double tq = boost::math::quantile(boost::math::students_t(dof), 0.975);
    f.slope_ci_low = f.slope - tq * f.slope_se;
    f.slope_ci_high = f.slope + tq * f.slope_se;
    return f;
}

} // namespace jumphedge
