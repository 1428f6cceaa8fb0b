#pragma once

// Simulation of (Y, X, A, lambda) on a jump-adapted grid.
//
// Jumps of Z above the threshold delta are drawn exactly as a compound Poisson
// process and inserted into a uniform base grid of step h. Between grid events
// the jumps below delta are represented by one increment of the matching
// stable law, conditioned on |increment| <= delta and recentred by its exact
// conditional mean, so Z stays a martingale and keeps no Gaussian part.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <memory>
#include <optional>
#include <ostream>
#include <vector>

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>

#include "jumphedge/errors.hpp"
#include "jumphedge/market.hpp"
#include "jumphedge/rng.hpp"
#include "jumphedge/stable.hpp"

namespace jumphedge {

struct GridSpec {
    double h = 1e-4;        ///< base step
    double delta = 0.01;    ///< jumps with |z| > delta are simulated exactly
    bool small_jumps = true;
    std::size_t max_steps = 100'000'000;
};

/// h = 1e-4 T and delta such that about 1e3 jumps per horizon exceed it.
inline GridSpec default_grid(const LevyMarketModel& model, double horizon) {
    GridSpec g;
    g.h = 1e-4 * horizon;
    const auto& d = model.density;
    const double total = d.c_plus() + d.c_minus();
    const double target_rate = 1e3 / horizon;
    g.delta = std::min(d.cutoff(), std::pow(target_rate / total + std::pow(d.cutoff(), -d.alpha()), -1.0 / d.alpha()));
    return g;
}

struct PathBundle {
    std::vector<double> times;
    std::vector<double> y;
    std::vector<double> x;
    std::vector<double> a_coef;
    std::vector<double> lambda;
    std::vector<std::uint8_t> jump;

    std::size_t size() const noexcept { return times.size(); }

    void reserve(std::size_t n) {
        times.reserve(n);
        y.reserve(n);
        x.reserve(n);
        a_coef.reserve(n);
        lambda.reserve(n);
        jump.reserve(n);
    }

    void push(double t, double yv, const Coefficients& c, bool is_jump) {
        times.push_back(t);
        y.push_back(yv);
        x.push_back(c.x);
        a_coef.push_back(c.a);
        lambda.push_back(c.lambda);
        jump.push_back(is_jump ? 1 : 0);
    }
};

/// Conditional mean of a stable increment S_dt given |S_dt| <= delta, for
/// 0 < dt <= h.
///
/// By scaling it equals -k dt G(dt delta^{-alpha}) with
/// k = (c+ - c-) delta^{1-alpha}/(alpha - 1) and G(0) = 1; G depends on the
/// law only and is tabulated once with a cubic spline. The base step h is
/// evaluated exactly.
class SmallJumpCentering {
public:
    SmallJumpCentering(const StableLaw& law, double delta, double h) : alpha_(law.alpha()) {
        const double skew_mass = law.c_plus() - law.c_minus();
        if (skew_mass == 0.0) return;  // symmetric: the conditional mean vanishes
        k_ = skew_mass * std::pow(delta, 1.0 - alpha_) / (alpha_ - 1.0);
        delta_pow_ = std::pow(delta, -alpha_);
        s_max_ = h * delta_pow_;
        auto g = [&](double s) {
            if (s == 0.0) return 1.0;
            const auto tail = stable_tail(law, std::pow(s, -1.0 / alpha_));
            return std::pow(s, (1.0 - alpha_) / alpha_) * tail.mean * (alpha_ - 1.0) / (skew_mass * (1.0 - tail.prob));
        };
        constexpr int nodes = 65;
        std::vector<double> values(nodes);
        const double step = s_max_ / (nodes - 1);
        for (int i = 0; i < nodes; ++i) values[i] = g(i * step);
        spline_ = std::make_shared<boost::math::interpolators::cardinal_cubic_b_spline<double>>(values.begin(), values.end(),
                                                                                             0.0, step);
        base_step_ = h;
        base_mean_ = -k_ * h * values.back();
    }

    double conditional_mean(double dt) const {
        if (k_ == 0.0) return 0.0;
        if (dt == base_step_) return base_mean_;
        return -k_ * dt * (*spline_)(std::min(dt * delta_pow_, s_max_));
    }

private:
    double alpha_;
    double k_ = 0.0;
    double delta_pow_ = 0.0;
    double s_max_ = 0.0;
    double base_step_ = 0.0;
    double base_mean_ = 0.0;
    std::shared_ptr<const boost::math::interpolators::cardinal_cubic_b_spline<double>> spline_;
};

/// Everything shared by the paths of one simulation: model, integrand, grid
/// and precomputed small-jump centering. Must outlive its steppers.
struct SimulationPlan {
    LevyMarketModel model;
    IntegrandSpec spec;
    GridSpec grid;
    double delta = 0.0;  ///< effective threshold, min(grid.delta, cutoff)
    std::optional<StableLaw> small_law;
    std::optional<SmallJumpCentering> centering;

    SimulationPlan(LevyMarketModel model_, IntegrandSpec spec_, const GridSpec& grid_)
        : model(std::move(model_)), spec(std::move(spec_)), grid(grid_) {
        if (!(grid.h > 0.0) || !std::isfinite(grid.h)) throw DomainError("grid step h must be positive");
        validate_integrand(model, spec);
        if (std::holds_alternative<RawStable>(spec)) return;
        if (!(grid.delta > 0.0)) throw DomainError("jump threshold delta must be positive");
        delta = std::min(grid.delta, model.density.cutoff());
        if (const auto* m = std::get_if<Merton>(&spec); m && grid.small_jumps && std::abs(m->pi) * delta >= 0.5)
            throw DomainError("jump threshold too large for the Merton fraction");
        if (grid.small_jumps) {
            small_law.emplace(model.density.small_jump_law());
            if (monitoring_scale(*small_law, grid.h) > 0.5 * delta)
                throw DomainError("grid step h is too coarse for the jump threshold delta");
            centering.emplace(*small_law, delta, grid.h);
        }
    }
};

/// One grid point produced by PathStepper.
struct PathPoint {
    ProcessState state;
    Coefficients coef;
    bool jump = false;
};

/// Advances one trajectory event by event: base-grid points and large-jump
/// times, whichever comes first. Can run past any horizon, which the exit-time
/// experiments rely on.
class PathStepper {
public:
    PathStepper(const SimulationPlan& plan, RngStream stream)
        : model_(plan.model), spec_(plan.spec), grid_(plan.grid), plan_(plan), rng_(stream) {
        state_.y = model_.y0;
        if (const auto* m = std::get_if<Merton>(&spec_)) {
            state_.v = m->v0;
            merton_pi_ = m->pi;
        }
        if (const auto* r = std::get_if<RawStable>(&spec_)) {
            raw_sampler_.emplace(r->law, grid_.h);
            raw_law_.emplace(r->law);
        } else {
            delta_ = plan.delta;
            jump_rate_ = model_.density.jump_rate_above(delta_);
            big_drift_ = model_.density.compensator_drift(delta_);
            if (plan.small_law) small_sampler_.emplace(*plan.small_law, grid_.h);
            next_jump_ = draw_next_jump(0.0);
        }
        current_ = {state_, coefficient_processes(model_, spec_, state_), false};
    }

    const PathPoint& current() const noexcept { return current_; }
    std::size_t steps() const noexcept { return steps_; }
    double delta() const noexcept { return delta_; }

    /// Moves to the next event: base-grid point, large jump, or `t_stop`,
    /// whichever comes first. Stopping short of a base point does not skip it.
    const PathPoint& advance(double t_stop = std::numeric_limits<double>::infinity()) {
        if (++steps_ > grid_.max_steps) throw BudgetExceeded(rng_.path_index(), grid_.max_steps);
        const double next_base = static_cast<double>(base_index_ + 1) * grid_.h;
        const double target = std::min(next_base, t_stop);
        if (!(target > state_.t)) throw DomainError("advance target must lie after the current time");
        bool is_jump = false;
        if (raw_sampler_) {
            advance_raw(target);
        } else if (next_jump_ < target) {
            evolve_between(next_jump_ - state_.t);
            state_.t = next_jump_;
            apply_jump(model_.density.sample_jump_above(delta_, rng_));
            next_jump_ = draw_next_jump(state_.t);
            is_jump = true;
        } else {
            evolve_between(target - state_.t);
            state_.t = target;
        }
        if (state_.t == next_base) ++base_index_;
        if (!(state_.y > 0.0)) throw InternalError("simulated asset price left (0, inf)");
        current_ = {state_, coefficient_processes(model_, spec_, state_), is_jump};
        return current_;
    }

private:
    // k h - (k-1) h need not round to h exactly
    bool is_base_step(double dt) const noexcept { return std::abs(dt - grid_.h) <= 1e-9 * grid_.h; }

    double draw_next_jump(double t) {
        if (jump_rate_ <= 0.0) return std::numeric_limits<double>::infinity();
        return t + rng_.exponential() / jump_rate_;
    }

    void advance_raw(double t_grid) {
        const double dt = t_grid - state_.t;
        if (is_base_step(dt)) {
            state_.x_raw += (*raw_sampler_)(rng_);
        } else if (dt > 0.0) {
            state_.x_raw += StableSampler(*raw_law_, dt)(rng_);
        }
        state_.t = t_grid;
    }

    double small_increment(double dt) {
        if (!small_sampler_ || dt <= 0.0) return 0.0;
        std::optional<StableSampler> local;
        const StableSampler* sampler = &*small_sampler_;
        if (is_base_step(dt)) {
            dt = grid_.h;
        } else {
            local.emplace(*plan_.small_law, dt);
            sampler = &*local;
        }
        double s = (*sampler)(rng_);
        while (std::abs(s) > delta_) s = (*sampler)(rng_);
        return s - plan_.centering->conditional_mean(dt);
    }

    void evolve_between(double dt) {
        if (dt <= 0.0) return;
        const double dz = small_increment(dt);
        state_.y *= (1.0 + dz) * std::exp(-big_drift_ * dt);
        if (merton_pi_) state_.v *= (1.0 + *merton_pi_ * dz) * std::exp(-*merton_pi_ * big_drift_ * dt);
    }

    void apply_jump(double z) {
        state_.y *= 1.0 + z;
        if (merton_pi_) state_.v *= 1.0 + *merton_pi_ * z;
    }

    const LevyMarketModel& model_;
    const IntegrandSpec& spec_;
    const GridSpec& grid_;
    const SimulationPlan& plan_;
    RngStream rng_;
    ProcessState state_;
    PathPoint current_;
    std::size_t steps_ = 0;
    std::uint64_t base_index_ = 0;

    std::optional<StableSampler> raw_sampler_;
    std::optional<StableLaw> raw_law_;
    std::optional<StableSampler> small_sampler_;
    std::optional<double> merton_pi_;
    double delta_ = 0.0;
    double jump_rate_ = 0.0;
    double big_drift_ = 0.0;
    double next_jump_ = std::numeric_limits<double>::infinity();
};

/// Simulates one trajectory on [0, horizon]. times.front() == 0 and times.back() == horizon.
inline PathBundle simulate_path(const SimulationPlan& plan, double horizon, RngStream stream) {
    if (!(horizon > 0.0) || !std::isfinite(horizon)) throw DomainError("horizon must be positive and finite");
    PathStepper stepper(plan, stream);
    PathBundle bundle;
    bundle.reserve(static_cast<std::size_t>(horizon / plan.grid.h) + 16);
    auto record = [&](const PathPoint& p) { bundle.push(p.state.t, p.state.y, p.coef, p.jump); };
    record(stepper.current());
    while (stepper.current().state.t < horizon) record(stepper.advance(horizon));
    return bundle;
}

/// One-off convenience; builds a fresh plan.
inline PathBundle simulate_path(const LevyMarketModel& model, const IntegrandSpec& spec, double horizon,
                                const GridSpec& grid, RngStream stream) {
    const SimulationPlan plan(model, spec, grid);
    return simulate_path(plan, horizon, stream);
}

inline void write_path_csv(const PathBundle& b, std::ostream& out) {
    out << "t,y,x,a_coef,lambda,jump\n";
    char line[256];
    for (std::size_t i = 0; i < b.size(); ++i) {
        std::snprintf(line, sizeof line, "%.12e,%.12e,%.12e,%.12e,%.12e,%d\n", b.times[i], b.y[i], b.x[i], b.a_coef[i],
                      b.lambda[i], static_cast<int>(b.jump[i]));
        out << line;
    }
}

} // namespace jumphedge
