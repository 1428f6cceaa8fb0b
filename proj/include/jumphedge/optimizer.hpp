#pragma once

// Asymptotically optimal barriers.
//
// Locally the rule (lower, upper) costs A f/g in error and c lambda u^beta/g in
// trading per unit time, with f, g, u^beta the exit functionals of the stable
// limit law. The optimal pair minimizes their sum. Under the scaling
// f ~ a^{2+alpha}, g ~ a^alpha, u ~ a^beta the symmetric optimum is a power of
// lambda/A, which is what the closed-form strategy formulas encode.

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <variant>

#include <boost/math/tools/minima.hpp>

#include "jumphedge/errors.hpp"
#include "jumphedge/market.hpp"
#include "jumphedge/stable.hpp"

namespace jumphedge {

struct LagrangianProblem {
    double A;           ///< local variance coefficient A_t
    double lam;         ///< jump intensity coefficient lambda_t
    double multiplier;  ///< Lagrange constant c
    double beta;        ///< cost exponent
    StableLaw law;

    void validate() const {
        if (!(A > 0.0) || !std::isfinite(A)) throw DomainError("A must be positive");
        if (!(lam > 0.0) || !std::isfinite(lam)) throw DomainError("lambda must be positive");
        if (!(multiplier > 0.0) || !std::isfinite(multiplier)) throw DomainError("multiplier must be positive");
        detail::require_beta(law, beta);
    }
};

struct ObjectiveValue {
    double value;
    double std_error = 0.0;  ///< zero for closed forms
};

struct OptimizerOptions {
    /// Use the Monte Carlo exit oracle even for symmetric laws. Asymmetric
    /// laws always use it.
    bool force_monte_carlo = false;
    McExitOptions mc{20000, 0.0, 16.0, 1e-3, 1, 0, 100'000'000};  ///< dt = 0 means 1e-3 g(1,1)
    double search_factor = 1e3;  ///< outer bracket is [a0 / f, a0 f]
    double theta_max = 0.99;
};

namespace detail {

/// x^{1/d}, polished by one Newton step on k^d = x so exact roots come out exact.
inline double root(double x, double d) {
    double k = std::pow(x, 1.0 / d);
    k -= (std::pow(k, d) - x) / (d * std::pow(k, d - 1.0));
    return k;
}

inline ObjectiveValue mc_objective(const LagrangianProblem& p, const Barriers& b, const McExitOptions& mc) {
    const auto est = mc_exit_functionals(p.law, b, p.beta, mc);
    const double f = est.mean.f, g = est.mean.g, u = est.mean.u_beta;
    const double cl = p.multiplier * p.lam;
    const double value = (p.A * f + cl * u) / g;
    // delta method on (f, g, u) -> (A f + c lambda u)/g
    const double df = p.A / g, dg = -value / g, du = cl / g;
    const double var = df * df * est.f_se * est.f_se + dg * dg * est.g_se * est.g_se + du * du * est.u_se * est.u_se +
                       2.0 * (df * dg * est.fg_cov + df * du * est.fu_cov + dg * du * est.gu_cov);
    return {value, std::sqrt(std::max(var, 0.0))};
}

inline McExitOptions resolve_mc(const LagrangianProblem& p, McExitOptions mc) {
    if (mc.dt == 0.0) {
        const auto sym = StableLaw::symmetric(p.law.alpha(), p.law.sigma());
        mc.dt = 1e-3 * mean_exit_time(sym, {1.0, 1.0});
    }
    return mc;
}

} // namespace detail

/// A f/g + c lambda u^beta/g at the given barriers.
inline ObjectiveValue lagrangian_objective(const LagrangianProblem& p, const Barriers& b,
                                           const OptimizerOptions& opt = {}) {
    p.validate();
    if (p.law.is_symmetric() && !opt.force_monte_carlo) {
        const double g = mean_exit_time(p.law, b);
        return {(p.A * mean_squared_integral(p.law, b) + p.multiplier * p.lam * overshoot_moment(p.law, b, p.beta)) / g};
    }
    return detail::mc_objective(p, b, detail::resolve_mc(p, opt.mc));
}

/// c (lambda/A)^{1/(2+alpha-beta)}.
inline double symmetric_power_barrier(double A, double lam, double alpha, double beta, double c) {
    if (!(A > 0.0) || !(lam > 0.0) || !(c > 0.0)) throw DomainError("A, lambda and c must be positive");
    if (!(alpha > 1.0 && alpha < 2.0)) throw DomainError("alpha must lie in (1, 2)");
    if (!(beta >= 0.0 && beta <= 1.0)) throw DomainError("the symmetric power rule needs beta in [0, 1]");
    return c * std::pow(lam / A, 1.0 / (2.0 + alpha - beta));
}

/// Closed-form barrier of a delta hedge at slope phi_y and price y.
inline double delta_hedge_barrier(double phi_y, double y, double alpha, double beta, double c) {
    if (!(phi_y > 0.0)) throw HypothesisViolation("hedge slope d phi / d y must be positive");
    if (!(y > 0.0) || !(c > 0.0)) throw DomainError("price and c must be positive");
    const double d = 2.0 + alpha - beta;
    return c * std::pow(phi_y, alpha / d) * std::pow(y, (alpha - 2.0) / d);
}

/// Closed-form barrier of the constant-proportion strategy at wealth v and price y.
inline double merton_barrier(double v, double y, double alpha, double beta, double c) {
    if (!(v > 0.0) || !(y > 0.0) || !(c > 0.0)) throw DomainError("wealth, price and c must be positive");
    const double d = 2.0 + alpha - beta;
    return c * std::pow(v, alpha / d) * std::pow(y, -(2.0 + alpha) / d);
}

/// The closed-form barrier formula for the integrand kind at the given state.
inline double strategy_barrier(const IntegrandSpec& spec, const ProcessState& state, double alpha, double beta,
                               double c) {
    if (!(beta >= 0.0 && beta < alpha)) throw DomainError("beta must lie in [0, alpha)");
    return std::visit(
        [&](const auto& k) -> double {
            using K = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<K, DeltaHedge>) {
                return delta_hedge_barrier(k.hedge.phi_y(state.t, state.y), state.y, alpha, beta, c);
            } else if constexpr (std::is_same_v<K, Merton>) {
                return merton_barrier(state.v, state.y, alpha, beta, c);
            } else {
                // lambda = A = 1
                return c;
            }
        },
        spec);
}

/// kappa = (c_new / c_old)^{1/(alpha - beta + 2)}.
inline double budget_scale_factor(double c_old, double c_new, double alpha, double beta) {
    if (!(c_old > 0.0) || !(c_new > 0.0)) throw DomainError("multipliers must be positive");
    if (c_new == c_old) return 1.0;
    return detail::root(c_new / c_old, alpha - beta + 2.0);
}

inline Barriers budget_rescale(const Barriers& b, double c_old, double c_new, double alpha, double beta) {
    return b.scaled(budget_scale_factor(c_old, c_new, alpha, beta));
}

struct OptimizerResult {
    Barriers barriers{1.0, 1.0};
    double half_width = 0.0;  ///< a = (lower + upper)/2
    double theta = 0.0;       ///< (upper - lower)/(upper + lower)
    ObjectiveValue objective{0.0};
    bool monte_carlo = false;
};

namespace detail {

inline void check_interior(double x, double lo, double hi, double tol, const std::string& what) {
    if (x - lo < tol || hi - x < tol)
        throw SearchBoxError(what + " minimum sits on the search box edge (" + std::to_string(x) + " in [" +
                             std::to_string(lo) + ", " + std::to_string(hi) + "]); objective looks monotone");
}

} // namespace detail

/// Minimizes the Lagrangian over (lower, upper).
///
/// Closed-form mode: Brent search over log a, with an inner Brent search over
/// theta at every a. Monte Carlo mode: for each theta one oracle run at unit
/// half-width (same seeds for every theta) gives F = f/g and H = u^beta/g; the
/// scaling laws then make the best a explicit,
///   a^{2+alpha-beta} = (alpha - beta) c lambda H / (2 A F),
/// so only theta is searched, to tolerance 1e-2.
inline OptimizerResult minimize_lagrangian(const LagrangianProblem& p, const OptimizerOptions& opt = {}) {
    p.validate();
    const double alpha = p.law.alpha();
    const double d = 2.0 + alpha - p.beta;
    const double cl = p.multiplier * p.lam;
    OptimizerResult out;

    if (!p.law.is_symmetric() || opt.force_monte_carlo) {
        const auto mc = detail::resolve_mc(p, opt.mc);
        auto profile = [&](double theta) {
            const auto est = mc_exit_functionals(p.law, Barriers::from_center(1.0, theta), p.beta, mc);
            const double F = est.mean.f / est.mean.g;
            const double H = est.mean.u_beta / est.mean.g;
            const double a = std::pow((alpha - p.beta) * cl * H / (2.0 * p.A * F), 1.0 / d);
            // objective at the best a for this theta
            return std::pair{a, p.A * a * a * F + cl * std::pow(a, p.beta - alpha) * H};
        };
        std::uintmax_t iters = 60;
        const auto [theta, value] = boost::math::tools::brent_find_minima(
            [&](double th) { return profile(th).second; }, -opt.theta_max, opt.theta_max, 8, iters);
        (void)value;
        detail::check_interior(theta, -opt.theta_max, opt.theta_max, 1e-2, "theta");
        const double a = profile(theta).first;
        out.barriers = Barriers::from_center(a, theta);
        out.half_width = a;
        out.theta = theta;
        out.objective = detail::mc_objective(p, out.barriers, mc);
        out.monte_carlo = true;
        return out;
    }

    // closed forms: f/g and u/g at half-width a and asymmetry theta
    const double gamma_term = p.law.sigma() * std::tgamma(1.0 + alpha);
    auto objective = [&](double a, double theta) {
        const auto b = Barriers::from_center(a, theta);
        const double g = mean_exit_time(p.law, b);
        return (p.A * mean_squared_integral(p.law, b) + cl * overshoot_moment(p.law, b, p.beta)) / g;
    };
    auto inner = [&](double a) {
        std::uintmax_t iters = 200;
        return boost::math::tools::brent_find_minima([&](double th) { return objective(a, th); }, -opt.theta_max,
                                                     opt.theta_max, 40, iters);
    };
    // symmetric first-order condition as the starting point
    const double K1 = alpha / ((alpha + 2.0) * (alpha + 1.0));
    const double H0 = overshoot_moment(p.law, {1.0, 1.0}, p.beta) * gamma_term;
    const double a0 = std::pow((alpha - p.beta) * cl * H0 / (2.0 * p.A * K1), 1.0 / d);
    const double lo = std::log(a0 / opt.search_factor);
    const double hi = std::log(a0 * opt.search_factor);
    std::uintmax_t iters = 200;
    const auto [log_a, best] =
        boost::math::tools::brent_find_minima([&](double la) { return inner(std::exp(la)).second; }, lo, hi, 40, iters);
    detail::check_interior(log_a, lo, hi, 1e-6, "half-width");
    const double a = std::exp(log_a);
    const double theta = inner(a).first;
    detail::check_interior(theta, -opt.theta_max, opt.theta_max, 1e-6, "theta");
    out.barriers = Barriers::from_center(a, theta);
    out.half_width = a;
    out.theta = theta;
    out.objective = {best};
    return out;
}

} // namespace jumphedge
