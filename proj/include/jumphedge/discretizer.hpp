#pragma once

// Hitting-time discretization of a simulated integrand, and Monte Carlo
// estimators of the tracking error and the rebalancing cost.
//
// A rule rebalances at the first grid time where X leaves the open interval
// (X_Ti - eps a_lower, X_Ti + eps a_upper); the barriers are evaluated at the
// last rebalance time Ti and frozen until the next one. Between grid points X
// is a right-continuous step function, so exits are only seen at grid points.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <limits>
#include <memory>
#include <ostream>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "jumphedge/errors.hpp"
#include "jumphedge/market.hpp"
#include "jumphedge/optimizer.hpp"
#include "jumphedge/parallel.hpp"
#include "jumphedge/path_engine.hpp"
#include "jumphedge/rng.hpp"

namespace jumphedge {

// ---------------------------------------------------------------------------
// Rules

struct ConstantPair {
    double lower;
    double upper;
};

/// a = c (lambda/A)^{1/(2+alpha-beta)}
struct SymmetricPower {
    double c;
    double beta;
};

/// Delta-hedge formula; needs a DeltaHedge integrand (phi_y is read back from lambda).
struct DeltaHedgePower {
    double c;
    double beta;
};

/// Constant-proportion formula; wealth is read back as V = X Y / pi.
struct MertonPower {
    double c;
    double beta;
    double pi;
};

using BarrierKind = std::variant<ConstantPair, SymmetricPower, DeltaHedgePower, MertonPower>;

struct BarrierRule {
    BarrierKind kind;
    double alpha;

    BarrierRule(BarrierKind k, double alpha_) : kind(k), alpha(alpha_) {
        if (!(alpha > 1.0 && alpha < 2.0)) throw DomainError("rule alpha must lie in (1, 2)");
        std::visit(
            [&](const auto& r) {
                using R = std::decay_t<decltype(r)>;
                if constexpr (std::is_same_v<R, ConstantPair>) {
                    if (!(r.lower > 0.0) || !(r.upper > 0.0) || !std::isfinite(r.lower) || !std::isfinite(r.upper))
                        throw DomainError("constant barriers must be positive and finite");
                } else {
                    if (!(r.c > 0.0) || !std::isfinite(r.c)) throw DomainError("rule constant c must be positive");
                    if (!(r.beta >= 0.0 && r.beta < alpha)) throw DomainError("rule beta must lie in [0, alpha)");
                    if constexpr (std::is_same_v<R, SymmetricPower>) {
                        if (r.beta > 1.0) throw DomainError("the symmetric power rule needs beta in [0, 1]");
                    }
                    if constexpr (std::is_same_v<R, MertonPower>) {
                        if (r.pi == 0.0 || !std::isfinite(r.pi)) throw DomainError("Merton fraction must be non-zero");
                    }
                }
            },
            kind);
    }

    /// Barriers at grid point i of the bundle.
    Barriers at(const PathBundle& b, std::size_t i) const {
        const double t = b.times[i];
        const auto [lo, hi] = std::visit(
            [&](const auto& r) -> std::pair<double, double> {
                using R = std::decay_t<decltype(r)>;
                if constexpr (std::is_same_v<R, ConstantPair>) {
                    return {r.lower, r.upper};
                } else if constexpr (std::is_same_v<R, SymmetricPower>) {
                    const double a = b.a_coef[i], lam = b.lambda[i];
                    if (!(a > 0.0) || !(lam > 0.0)) return {0.0, 0.0};
                    const double v = r.c * std::pow(lam / a, 1.0 / (2.0 + alpha - r.beta));
                    return {v, v};
                } else if constexpr (std::is_same_v<R, DeltaHedgePower>) {
                    const double y = b.y[i];
                    const double phi_y = std::pow(b.lambda[i], 1.0 / alpha) / y;
                    if (!(phi_y > 0.0)) return {0.0, 0.0};
                    const double v = delta_hedge_barrier(phi_y, y, alpha, r.beta, r.c);
                    return {v, v};
                } else {
                    const double wealth = b.x[i] * b.y[i] / r.pi;
                    if (!(wealth > 0.0)) return {0.0, 0.0};
                    const double v = merton_barrier(wealth, b.y[i], alpha, r.beta, r.c);
                    return {v, v};
                }
            },
            kind);
        if (!(lo > 0.0) || !(hi > 0.0) || !std::isfinite(lo) || !std::isfinite(hi))
            throw RuleViolation("barrier is not positive at t = " + std::to_string(t));
        return {lo, hi};
    }

    /// Short name for CSV output; contains no commas.
    std::string label() const {
        char buf[96];
        std::visit(
            [&](const auto& r) {
                using R = std::decay_t<decltype(r)>;
                if constexpr (std::is_same_v<R, ConstantPair>)
                    std::snprintf(buf, sizeof buf, "constant:%g:%g", r.lower, r.upper);
                else if constexpr (std::is_same_v<R, SymmetricPower>)
                    std::snprintf(buf, sizeof buf, "symmetric_power:%g:%g", r.c, r.beta);
                else if constexpr (std::is_same_v<R, DeltaHedgePower>)
                    std::snprintf(buf, sizeof buf, "delta_hedge:%g:%g", r.c, r.beta);
                else
                    std::snprintf(buf, sizeof buf, "merton:%g:%g", r.c, r.beta);
            },
            kind);
        return buf;
    }
};

// ---------------------------------------------------------------------------
// Single path

struct DiscretizationTrace {
    double epsilon = 0.0;
    std::vector<double> rebalance_times;
    std::vector<std::size_t> grid_index;  ///< bundle index of each rebalance
    std::vector<double> increments;       ///< |X_Ti - X_Ti-1|
    std::size_t n_rebalances = 0;
};

namespace detail {

inline void check_bundle(const PathBundle& b) {
    if (b.size() == 0) throw DomainError("empty path bundle");
    if (b.x.size() != b.size() || b.a_coef.size() != b.size() || b.y.size() != b.size() ||
        b.lambda.size() != b.size())
        throw DomainError("path bundle arrays differ in length");
}

inline void check_epsilon(double eps) {
    if (!(eps > 0.0) || !std::isfinite(eps)) throw DomainError("epsilon must be positive and finite");
}

inline void check_betas(std::span<const double> betas, double alpha) {
    for (double beta : betas)
        if (!(beta >= 0.0 && beta < alpha)) throw DomainError("cost exponent beta must lie in [0, alpha)");
}

inline double cost_term(double dx, double beta) { return beta == 0.0 ? 1.0 : std::pow(std::abs(dx), beta); }

} // namespace detail

/// Visits the rebalances of `rule` at scale eps along the path:
/// on_rebalance(i, previous_index).
template <class F>
void for_each_rebalance(const PathBundle& b, const BarrierRule& rule, double eps, F&& on_rebalance) {
    std::size_t ref = 0;
    Barriers bar = rule.at(b, 0);
    double lo = b.x[0] - eps * bar.lower, hi = b.x[0] + eps * bar.upper;
    for (std::size_t i = 1; i < b.size(); ++i) {
        const double x = b.x[i];
        if (x <= lo || x >= hi) {
            on_rebalance(i, ref);
            ref = i;
            if (i + 1 < b.size()) {
                bar = rule.at(b, i);
                lo = x - eps * bar.lower;
                hi = x + eps * bar.upper;
            }
        }
    }
}

inline DiscretizationTrace hitting_times(const PathBundle& b, const BarrierRule& rule, double eps) {
    detail::check_epsilon(eps);
    detail::check_bundle(b);
    DiscretizationTrace tr;
    tr.epsilon = eps;
    for_each_rebalance(b, rule, eps, [&](std::size_t i, std::size_t ref) {
        tr.rebalance_times.push_back(b.times[i]);
        tr.grid_index.push_back(i);
        tr.increments.push_back(std::abs(b.x[i] - b.x[ref]));
    });
    tr.n_rebalances = tr.rebalance_times.size();
    return tr;
}

/// Pathwise error and costs of one discretization.
struct PathFunctionals {
    double error = 0.0;          ///< int (X_t - X_eta(t))^2 A_t dt, left rectangle rule on the grid
    std::vector<double> costs;   ///< sum |dX|^beta, one entry per requested beta
    std::size_t n_rebalances = 0;
};

inline PathFunctionals evaluate_rule(const PathBundle& b, const BarrierRule& rule, double eps,
                                     std::span<const double> betas) {
    detail::check_epsilon(eps);
    detail::check_bundle(b);
    detail::check_betas(betas, rule.alpha);
    PathFunctionals out;
    out.costs.assign(betas.size(), 0.0);
    std::size_t last = 0;
    double x_ref = b.x[0];
    // integrates (x_j - x_ref)^2 a_j dt over grid cells j in [last, upto)
    auto integrate_to = [&](std::size_t upto) {
        for (std::size_t j = last; j < upto; ++j) {
            const double d = b.x[j] - x_ref;
            out.error += d * d * b.a_coef[j] * (b.times[j + 1] - b.times[j]);
        }
        last = upto;
    };
    for_each_rebalance(b, rule, eps, [&](std::size_t i, std::size_t ref) {
        integrate_to(i);
        const double dx = b.x[i] - b.x[ref];
        for (std::size_t k = 0; k < betas.size(); ++k) out.costs[k] += detail::cost_term(dx, betas[k]);
        ++out.n_rebalances;
        x_ref = b.x[i];
    });
    integrate_to(b.size() - 1);
    return out;
}

/// Deterministic dates k T/n, k = 1..n, with T = times.back(). The date T
/// itself is a rebalance, so the beta = 0 cost is n exactly.
inline PathFunctionals evaluate_equidistant(const PathBundle& b, std::size_t n_dates, std::span<const double> betas) {
    detail::check_bundle(b);
    if (n_dates == 0) throw DomainError("need at least one rebalancing date");
    for (double beta : betas)
        if (!(beta >= 0.0)) throw DomainError("cost exponent beta must be non-negative");
    const double t0 = b.times.front(), horizon = b.times.back();
    const double step = (horizon - t0) / static_cast<double>(n_dates);
    auto date = [&](std::size_t k) { return k == n_dates ? horizon : t0 + static_cast<double>(k) * step; };

    PathFunctionals out;
    out.costs.assign(betas.size(), 0.0);
    out.n_rebalances = n_dates;
    double x_ref = b.x[0];
    std::size_t k = 1;  // next date
    for (std::size_t j = 0; j + 1 < b.size(); ++j) {
        // cell [t_j, t_j+1) holds x_j; dates inside it reset the reference to x_j
        double t = b.times[j];
        const double t_end = b.times[j + 1];
        while (k < n_dates && date(k) < t_end) {
            const double d = date(k);
            const double diff = b.x[j] - x_ref;
            out.error += diff * diff * b.a_coef[j] * (d - t);
            for (std::size_t m = 0; m < betas.size(); ++m) out.costs[m] += detail::cost_term(b.x[j] - x_ref, betas[m]);
            x_ref = b.x[j];
            t = d;
            ++k;
        }
        const double diff = b.x[j] - x_ref;
        out.error += diff * diff * b.a_coef[j] * (t_end - t);
    }
    // the final date T
    for (std::size_t m = 0; m < betas.size(); ++m) out.costs[m] += detail::cost_term(b.x.back() - x_ref, betas[m]);
    return out;
}

// ---------------------------------------------------------------------------
// Monte Carlo estimators

struct FunctionalEstimate {
    double value = 0.0;
    double std_error = 0.0;
    std::size_t n_paths = 0;
    double epsilon = 0.0;
    double beta = std::numeric_limits<double>::quiet_NaN();  ///< NaN for the error functional
};

/// Path source shared by all estimators: every path i is simulated from
/// derive_stream(seed, i), so estimates on the same config use common paths.
struct EstimatorConfig {
    std::shared_ptr<const SimulationPlan> plan;
    double horizon = 1.0;
    std::uint64_t seed = 1;
    unsigned threads = 0;
};

/// Simulates n_paths paths, maps each to a fixed-length vector with
/// `per_path`, and averages slot by slot in path order.
template <class PerPath>
std::vector<MeanAccumulator> estimate_on_paths(const EstimatorConfig& cfg, std::size_t n_paths, std::size_t width,
                                               PerPath&& per_path) {
    if (!cfg.plan) throw DomainError("estimator config has no simulation plan");
    if (n_paths < 2) throw DomainError("need at least two paths for a standard error");
    std::vector<double> slots(n_paths * width);
    parallel_for(n_paths, cfg.threads, [&](std::size_t i) {
        const PathBundle b = simulate_path(*cfg.plan, cfg.horizon, derive_stream(cfg.seed, i));
        const std::vector<double> v = per_path(b);
        if (v.size() != width) throw InternalError("per-path evaluator returned the wrong width");
        std::copy(v.begin(), v.end(), slots.begin() + static_cast<std::ptrdiff_t>(i * width));
    });
    std::vector<MeanAccumulator> acc(width);
    for (std::size_t i = 0; i < n_paths; ++i)
        for (std::size_t k = 0; k < width; ++k) acc[k].add(slots[i * width + k]);
    return acc;
}

inline FunctionalEstimate to_estimate(const MeanAccumulator& a, double eps, double beta) {
    return {a.mean(), a.std_error(), a.count(), eps, beta};
}

/// One sampled point of the error/cost frontier.
struct FrontierPoint {
    double epsilon;
    FunctionalEstimate error;
    std::vector<FunctionalEstimate> costs;  ///< one per beta, in the order requested
};

/// Error and costs for every epsilon on one common path set. Points come back
/// sorted by epsilon descending.
inline std::vector<FrontierPoint> estimate_frontier(const EstimatorConfig& cfg, const BarrierRule& rule,
                                                    std::vector<double> epsilons, std::vector<double> betas,
                                                    std::size_t n_paths) {
    if (epsilons.empty()) throw DomainError("no epsilon values requested");
    for (double e : epsilons) detail::check_epsilon(e);
    detail::check_betas(betas, rule.alpha);
    std::sort(epsilons.begin(), epsilons.end(), std::greater<>());
    if (std::adjacent_find(epsilons.begin(), epsilons.end()) != epsilons.end())
        throw DomainError("epsilon values must be distinct");
    const std::size_t per_eps = 1 + betas.size();
    const auto acc = estimate_on_paths(cfg, n_paths, epsilons.size() * per_eps, [&](const PathBundle& b) {
        std::vector<double> v;
        v.reserve(epsilons.size() * per_eps);
        for (double e : epsilons) {
            const auto f = evaluate_rule(b, rule, e, betas);
            v.push_back(f.error);
            v.insert(v.end(), f.costs.begin(), f.costs.end());
        }
        return v;
    });
    std::vector<FrontierPoint> out;
    for (std::size_t k = 0; k < epsilons.size(); ++k) {
        FrontierPoint p{epsilons[k], to_estimate(acc[k * per_eps], epsilons[k], std::numeric_limits<double>::quiet_NaN()), {}};
        for (std::size_t m = 0; m < betas.size(); ++m)
            p.costs.push_back(to_estimate(acc[k * per_eps + 1 + m], epsilons[k], betas[m]));
        out.push_back(std::move(p));
    }
    return out;
}

inline FunctionalEstimate estimate_error_functional(const EstimatorConfig& cfg, const BarrierRule& rule, double eps,
                                                    std::size_t n_paths) {
    return estimate_frontier(cfg, rule, {eps}, {}, n_paths).front().error;
}

inline FunctionalEstimate estimate_cost_functional(const EstimatorConfig& cfg, const BarrierRule& rule, double eps,
                                                   double beta, std::size_t n_paths) {
    return estimate_frontier(cfg, rule, {eps}, {beta}, n_paths).front().costs.front();
}

struct BaselineEstimate {
    std::size_t n_dates;
    FunctionalEstimate error;
    std::vector<FunctionalEstimate> costs;
};

/// Equidistant rebalancing with n_dates dates on [0, T].
inline BaselineEstimate equidistant_baseline(const EstimatorConfig& cfg, std::size_t n_dates,
                                             const std::vector<double>& betas, std::size_t n_paths) {
    const auto acc = estimate_on_paths(cfg, n_paths, 1 + betas.size(), [&](const PathBundle& b) {
        const auto f = evaluate_equidistant(b, n_dates, betas);
        std::vector<double> v{f.error};
        v.insert(v.end(), f.costs.begin(), f.costs.end());
        return v;
    });
    BaselineEstimate out{n_dates, to_estimate(acc[0], 0.0, std::numeric_limits<double>::quiet_NaN()), {}};
    for (std::size_t m = 0; m < betas.size(); ++m) out.costs.push_back(to_estimate(acc[1 + m], 0.0, betas[m]));
    return out;
}

// ---------------------------------------------------------------------------
// Budget inversion

struct FrontierSample {
    double epsilon;
    double cost;
    double error;
};

struct BudgetPoint {
    double epsilon;
    double error;
};

/// eps(C) = smallest sampled eps with cost < C; the error at budget C is
/// interpolated log-log in cost between the samples bracketing C.
inline BudgetPoint invert_cost_for_budget(std::span<const FrontierSample> table, double budget) {
    if (table.empty()) throw DomainError("empty frontier table");
    for (std::size_t i = 0; i < table.size(); ++i) {
        if (!(table[i].cost > 0.0) || !(table[i].error > 0.0) || !(table[i].epsilon > 0.0))
            throw DomainError("frontier samples need positive epsilon, cost and error");
        if (i > 0 && !(table[i].epsilon < table[i - 1].epsilon))
            throw DomainError("frontier table must be sorted by epsilon descending");
        if (i > 0 && !(table[i].cost > table[i - 1].cost))
            throw DomainError("frontier cost must increase as epsilon decreases");
    }
    if (!(budget > table.front().cost))
        throw OutOfRangeError("budget " + std::to_string(budget) + " is not above the smallest sampled cost " +
                              std::to_string(table.front().cost));
    std::size_t k = 0;
    while (k + 1 < table.size() && table[k + 1].cost < budget) ++k;
    if (k + 1 == table.size())
        throw OutOfRangeError("budget " + std::to_string(budget) + " exceeds the largest sampled cost " +
                              std::to_string(table.back().cost));
    const auto& a = table[k];
    const auto& b = table[k + 1];
    const double w = std::log(budget / a.cost) / std::log(b.cost / a.cost);
    return {a.epsilon, std::exp((1.0 - w) * std::log(a.error) + w * std::log(b.error))};
}

// ---------------------------------------------------------------------------
// Output

/// Header epsilon,error,error_se,cost,cost_se,beta,n_paths,rule,seed; one row
/// per (epsilon, beta), epsilon descending then beta ascending.
inline void write_frontier_csv(std::ostream& out, const std::vector<FrontierPoint>& points, const std::string& rule,
                               std::uint64_t seed) {
    out << "epsilon,error,error_se,cost,cost_se,beta,n_paths,rule,seed\n";
    std::vector<const FrontierPoint*> order;
    for (const auto& p : points) order.push_back(&p);
    std::stable_sort(order.begin(), order.end(), [](auto* a, auto* b) { return a->epsilon > b->epsilon; });
    char buf[512];
    for (const auto* p : order) {
        std::vector<const FunctionalEstimate*> costs;
        for (const auto& c : p->costs) costs.push_back(&c);
        std::stable_sort(costs.begin(), costs.end(), [](auto* a, auto* b) { return a->beta < b->beta; });
        for (const auto* c : costs) {
            std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%zu,%s,%llu\n", p->epsilon,
                          p->error.value, p->error.std_error, c->value, c->std_error, c->beta, p->error.n_paths,
                          rule.c_str(), static_cast<unsigned long long>(seed));
            out << buf;
        }
    }
}

} // namespace jumphedge
