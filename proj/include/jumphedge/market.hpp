#pragma once

// Asset and integrand models for the exponential Levy setting.
//
// The asset Y is the stochastic exponential of a pure-jump martingale Levy
// process Z whose Levy density is a truncated power law
//     nu(x) = alpha c+ x^{-1-alpha}    on (0, cutoff],
//     nu(x) = alpha c- |x|^{-1-alpha}  on [-cutoff, 0),
// so x^alpha nu((x, inf)) -> c+ as x -> 0. Near the origin nu coincides with the
// Levy density of the stable law StableLaw(alpha, alpha c+, alpha c-), which is
// the local limit used for barrier formulas and rescaling checks.

#include <cmath>
#include <functional>
#include <numbers>
#include <string>
#include <utility>
#include <variant>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "jumphedge/errors.hpp"
#include "jumphedge/rng.hpp"
#include "jumphedge/stable.hpp"

namespace jumphedge {

class TruncatedStableDensity {
public:
    TruncatedStableDensity(double alpha, double c_plus, double c_minus, double cutoff)
        : alpha_(alpha), c_plus_(c_plus), c_minus_(c_minus), cutoff_(cutoff) {
        if (!(alpha > 1.0 && alpha < 2.0)) throw DomainError("alpha must lie in (1, 2)");
        if (!(c_plus >= 0.0) || !(c_minus >= 0.0) || !(c_plus + c_minus > 0.0))
            throw DomainError("tail coefficients must be non-negative and not both zero");
        if (!(cutoff > 0.0) || !std::isfinite(cutoff)) throw DomainError("cutoff must be positive and finite");
        if (c_minus > 0.0 && cutoff >= 1.0)
            throw DomainError("negative jumps must stay above -1 to keep the asset positive; need cutoff < 1");

        q_ = alpha * (c_plus + c_minus) * std::pow(cutoff, 2.0 - alpha) / (2.0 - alpha);
        const double q_quad = quadrature_q();
        if (std::abs(q_quad - q_) > 1e-10 * q_)
            throw InternalError("quadratic coefficient does not match its quadrature check");
    }

    double alpha() const noexcept { return alpha_; }
    double c_plus() const noexcept { return c_plus_; }
    double c_minus() const noexcept { return c_minus_; }
    double cutoff() const noexcept { return cutoff_; }

    double operator()(double x) const noexcept {
        if (x == 0.0 || std::abs(x) > cutoff_) return 0.0;
        const double c = x > 0.0 ? c_plus_ : c_minus_;
        return alpha_ * c * std::pow(std::abs(x), -1.0 - alpha_);
    }

    /// q = int z^2 nu(z) dz, so that A_t = Y_t^2 q.
    double quadratic_coefficient() const noexcept { return q_; }

    /// Mass of nu on {|z| > delta}.
    double jump_rate_above(double delta) const noexcept {
        if (delta >= cutoff_) return 0.0;
        return (c_plus_ + c_minus_) * (std::pow(delta, -alpha_) - std::pow(cutoff_, -alpha_));
    }

    /// int_{delta < |z| <= cutoff} z nu(z) dz; the drift that compensates the large jumps.
    double compensator_drift(double delta) const noexcept {
        if (delta >= cutoff_) return 0.0;
        return alpha_ * (c_plus_ - c_minus_) * (std::pow(delta, 1.0 - alpha_) - std::pow(cutoff_, 1.0 - alpha_)) /
               (alpha_ - 1.0);
    }

    /// Draws a jump from nu restricted to {|z| > delta} by inverse transform.
    double sample_jump_above(double delta, RngStream& rng) const {
        const double lo = std::pow(delta, -alpha_);
        const double hi = std::pow(cutoff_, -alpha_);
        const double p_plus = c_plus_ / (c_plus_ + c_minus_);
        const double sign = rng.uniform() < p_plus ? 1.0 : -1.0;
        const double u = rng.uniform();
        return sign * std::pow(lo - u * (lo - hi), -1.0 / alpha_);
    }

    /// Stable law whose Levy density agrees with nu near zero.
    StableLaw small_jump_law() const { return StableLaw(alpha_, alpha_ * c_plus_, alpha_ * c_minus_); }

private:
    double quadrature_q() const {
        boost::math::quadrature::tanh_sinh<double> quad;
        auto side = [&](double c) {
            if (c == 0.0) return 0.0;
            return quad.integrate([&](double z) { return alpha_ * c * std::pow(z, 1.0 - alpha_); }, 0.0, cutoff_, 1e-14);
        };
        return side(c_plus_) + side(c_minus_);
    }

    double alpha_;
    double c_plus_;
    double c_minus_;
    double cutoff_;
    double q_;
};

inline TruncatedStableDensity build_truncated_stable_density(double alpha, double c_plus, double c_minus, double cutoff) {
    return {alpha, c_plus, c_minus, cutoff};
}

struct LevyMarketModel {
    TruncatedStableDensity density;
    double y0 = 1.0;

    LevyMarketModel(TruncatedStableDensity density_, double y0_) : density(std::move(density_)), y0(y0_) {
        if (!(y0 > 0.0) || !std::isfinite(y0)) throw DomainError("initial asset price must be positive");
    }

    double alpha() const noexcept { return density.alpha(); }
    double q() const noexcept { return density.quadratic_coefficient(); }
};

// ---------------------------------------------------------------------------
// Integrands

/// A hedge ratio phi(t, y) with its partial derivatives.
struct HedgeFunction {
    std::string name;
    std::function<double(double, double)> phi;
    std::function<double(double, double)> phi_y;
    std::function<double(double, double)> phi_t;
};

/// phi(t, y) = slope * y.
inline HedgeFunction linear_hedge(double slope) {
    if (!(slope > 0.0)) throw DomainError("linear hedge slope must be positive");
    return {"linear",
            [slope](double, double y) { return slope * y; },
            [slope](double, double) { return slope; },
            [](double, double) { return 0.0; }};
}

/// Black-Scholes-style call delta N(ln(y/K)/(v sqrt(tau)) + v sqrt(tau)/2), tau = maturity - t.
inline HedgeFunction black_scholes_delta(double strike, double vol, double maturity) {
    if (!(strike > 0.0) || !(vol > 0.0) || !(maturity > 0.0))
        throw DomainError("strike, vol and maturity must be positive");
    auto tau_of = [maturity](double t) {
        const double tau = maturity - t;
        if (!(tau > 0.0)) throw HypothesisViolation("hedge function evaluated at or after maturity");
        return tau;
    };
    auto d1 = [=](double t, double y) {
        const double s = vol * std::sqrt(tau_of(t));
        return std::log(y / strike) / s + 0.5 * s;
    };
    auto pdf = [](double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); };
    return {"black_scholes",
            [=](double t, double y) { return 0.5 * std::erfc(-d1(t, y) / std::numbers::sqrt2); },
            [=](double t, double y) { return pdf(d1(t, y)) / (y * vol * std::sqrt(tau_of(t))); },
            [=](double t, double y) {
                const double tau = tau_of(t);
                const double dd1_dtau = -std::log(y / strike) / (2.0 * vol * tau * std::sqrt(tau)) + vol / (4.0 * std::sqrt(tau));
                return -pdf(d1(t, y)) * dd1_dtau;
            }};
}

struct DeltaHedge {
    HedgeFunction hedge;
};

/// Constant-proportion strategy: fraction pi of wealth V in the asset.
struct Merton {
    double pi;
    double v0;
};

/// X is the stable process itself; A and lambda are identically one.
struct RawStable {
    StableLaw law;
};

using IntegrandSpec = std::variant<DeltaHedge, Merton, RawStable>;

/// Support restrictions on the jump law required by the Merton strategy.
inline void validate_integrand(const LevyMarketModel& model, const IntegrandSpec& spec) {
    if (const auto* m = std::get_if<Merton>(&spec)) {
        if (!(m->v0 > 0.0)) throw DomainError("initial wealth must be positive");
        const double cut = model.density.cutoff();
        const bool has_neg = model.density.c_minus() > 0.0;
        const bool has_pos = model.density.c_plus() > 0.0;
        if (m->pi > 1.0 && has_neg && !(cut < 1.0 / m->pi))
            throw DomainError("Merton fraction pi > 1 needs negative jumps above -1/pi");
        if (m->pi < 0.0 && has_pos && !(cut < -1.0 / m->pi))
            throw DomainError("Merton fraction pi < 0 needs positive jumps below -1/pi");
    }
    if (const auto* r = std::get_if<RawStable>(&spec)) {
        if (r->law.alpha() != model.alpha()) throw DomainError("raw stable integrand must share the model's alpha");
    }
}

struct ProcessState {
    double t = 0.0;
    double y = 1.0;
    double v = 0.0;      ///< Merton wealth
    double x_raw = 0.0;  ///< stable path value for RawStable
};

struct Coefficients {
    double x;
    double a;
    double lambda;
};

inline Coefficients coefficient_processes(const LevyMarketModel& model, const IntegrandSpec& spec, const ProcessState& s) {
    if (!(s.y > 0.0)) throw InternalError("asset price must stay positive");
    const double alpha = model.alpha();
    return std::visit(
        [&](const auto& k) -> Coefficients {
            using K = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<K, DeltaHedge>) {
                const double slope = k.hedge.phi_y(s.t, s.y);
                if (!(slope > 0.0))
                    throw HypothesisViolation("hedge slope d phi / d y must be positive, got " + std::to_string(slope));
                return {k.hedge.phi(s.t, s.y), s.y * s.y * model.q(), std::pow(s.y * slope, alpha)};
            } else if constexpr (std::is_same_v<K, Merton>) {
                const double x = k.pi * s.v / s.y;
                return {x, s.y * s.y * model.q(), std::pow(std::abs((k.pi - 1.0) * x), alpha)};
            } else {
                return {s.x_raw, 1.0, 1.0};
            }
        },
        spec);
}

} // namespace jumphedge
