#pragma once

// Studies behind `jumphedge run`: convergence of the scaled functionals,
// hitting-time vs equidistant rates at matched budgets, the rescaled exit
// statistics of market integrands, and plain frontiers with budget inversion.
//
// Output files depend only on (config, seed): no timings, thread counts or
// host data are written, so runs with different --threads compare bytewise.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <openssl/evp.h>

#include "jumphedge/config.hpp"
#include "jumphedge/discretizer.hpp"
#include "jumphedge/fit.hpp"
#include "jumphedge/parallel.hpp"
#include "jumphedge/path_engine.hpp"
#include "jumphedge/stable.hpp"

namespace jumphedge {

inline constexpr double nan_value = std::numeric_limits<double>::quiet_NaN();

/// SHA-1 of "blob <size>\0<bytes>", as `git hash-object` prints it.
inline std::string git_blob_hash(const std::string& bytes) {
    const std::string header = "blob " + std::to_string(bytes.size()) + '\0';
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (!ctx) throw InternalError("cannot allocate a digest context");
    const bool ok = EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr) == 1 &&
                    EVP_DigestUpdate(ctx, header.data(), header.size()) == 1 &&
                    EVP_DigestUpdate(ctx, bytes.data(), bytes.size()) == 1 && EVP_DigestFinal_ex(ctx, md, &len) == 1;
    EVP_MD_CTX_free(ctx);
    if (!ok) throw InternalError("SHA-1 digest failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 15];
    }
    return out;
}

namespace detail {

/// Round-trip decimal; NaN prints as an empty cell.
inline std::string cell(double x) {
    if (std::isnan(x)) return "";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline std::string cell(std::size_t n) { return std::to_string(n); }
inline std::string cell(const std::string& s) { return s; }
inline std::string cell(const char* s) { return s; }

template <class... T>
std::string csv_row(const T&... v) {
    std::string line;
    bool first = true;
    ((line += (first ? "" : ","), line += cell(v), first = false), ...);
    return line + "\n";
}

inline std::vector<PowerLawPoint> tail_points(const std::vector<PowerLawPoint>& pts, std::size_t skip) {
    return {pts.begin() + static_cast<std::ptrdiff_t>(std::min(skip, pts.size())), pts.end()};
}

} // namespace detail

// ---------------------------------------------------------------------------
// Study results

/// Largest epsilons left out of every slope fit as pre-asymptotic.
inline constexpr std::size_t pre_asymptotic_points = 2;

struct SlopeReport {
    std::string quantity;
    double expected = nan_value;
    bool fitted = false;
    PowerLawFit fit;
    std::string note;
};

inline SlopeReport fit_slope(std::string quantity, double expected, const std::vector<PowerLawPoint>& pts,
                             bool required) {
    SlopeReport r{std::move(quantity), expected, false, {}, ""};
    const auto used = detail::tail_points(pts, pre_asymptotic_points);
    try {
        r.fit = fit_power_law(used);
        r.fitted = true;
    } catch (const FitDegenerateError& e) {
        if (required) throw;
        r.note = e.what();
    }
    return r;
}

struct ConvergenceRow {
    double epsilon;
    double beta;
    FunctionalEstimate error;
    FunctionalEstimate cost;
    double scaled_error, scaled_error_se;  ///< eps^{-2} E
    double scaled_cost, scaled_cost_se;    ///< eps^{alpha - beta} C
    double limit_error = nan_value;        ///< T f/g, raw stable with constant barriers only
    double limit_cost = nan_value;         ///< T u^beta / g
};

struct ConvergenceResult {
    std::string rule;
    std::vector<FrontierPoint> frontier;
    std::vector<ConvergenceRow> rows;  ///< epsilon descending, beta ascending
    std::vector<SlopeReport> fits;
};

struct BudgetRow {
    double beta;
    double budget;
    double epsilon;
    double error;
};

struct RateRow {
    double epsilon;
    FunctionalEstimate hit_cost;
    FunctionalEstimate hit_error;
    std::size_t n_dates;
    FunctionalEstimate eq_error;
    double hit_error_at_budget;  ///< hitting frontier interpolated at budget n_dates
    bool in_fit;
};

struct RateResult {
    std::string rule;
    std::vector<FrontierPoint> frontier;
    std::vector<RateRow> rows;
    SlopeReport hitting;
    SlopeReport equidistant;
};

struct RescalingRow {
    double epsilon;
    double beta;
    double h;
    double delta;
    FunctionalEstimate exit_time;  ///< E[lambda_0 eps^{-alpha} tau]
    double exit_limit;
    double exit_limit_se;          ///< zero for closed forms
    FunctionalEstimate overshoot;  ///< E[|X_tau - X_0|^beta] / eps^beta
    double overshoot_limit;
    double overshoot_limit_se;
    double mean_steps;

    double exit_dev() const { return exit_time.value / exit_limit - 1.0; }
    double exit_dev_se() const {
        return std::hypot(exit_time.std_error / exit_limit, exit_time.value * exit_limit_se / (exit_limit * exit_limit));
    }
    double overshoot_dev() const { return overshoot.value / overshoot_limit - 1.0; }
    double overshoot_dev_se() const {
        return std::hypot(overshoot.std_error / overshoot_limit,
                          overshoot.value * overshoot_limit_se / (overshoot_limit * overshoot_limit));
    }
};

struct RescalingResult {
    StableLaw law;
    double lambda0;
    bool monte_carlo_reference;
    std::vector<RescalingRow> rows;  ///< epsilon descending, beta ascending
};

// ---------------------------------------------------------------------------
// Studies

namespace detail {

inline EstimatorConfig estimator(const ExperimentConfig& cfg, unsigned threads) {
    return {build_plan(cfg), cfg.horizon, cfg.seed, threads};
}

inline bool closed_form_limits(const ExperimentConfig& cfg) {
    return cfg.integrand.type == "raw_stable" && cfg.rule.type == "constant" && model_stable_law(cfg).is_symmetric();
}

} // namespace detail

inline ConvergenceResult run_convergence_study(const ExperimentConfig& cfg, unsigned threads = 0) {
    const auto est = detail::estimator(cfg, threads);
    const auto rule = build_rule(cfg);
    ConvergenceResult out;
    out.rule = rule.label();
    out.frontier = estimate_frontier(est, rule, cfg.epsilons, cfg.betas, cfg.n_paths);
    const double alpha = cfg.model.alpha;

    std::optional<Barriers> limit_barriers;
    if (detail::closed_form_limits(cfg)) limit_barriers.emplace(cfg.rule.lower, cfg.rule.upper);
    std::optional<StableLaw> law;
    if (limit_barriers) law.emplace(model_stable_law(cfg));

    for (const auto& p : out.frontier) {
        for (const auto& c : p.costs) {
            ConvergenceRow r{p.epsilon, c.beta, p.error, c, 0, 0, 0, 0};
            const double se = std::pow(p.epsilon, -2.0), sc = std::pow(p.epsilon, alpha - c.beta);
            r.scaled_error = se * p.error.value;
            r.scaled_error_se = se * p.error.std_error;
            r.scaled_cost = sc * c.value;
            r.scaled_cost_se = sc * c.std_error;
            if (limit_barriers) {
                const double g = mean_exit_time(*law, *limit_barriers);
                r.limit_error = cfg.horizon * mean_squared_integral(*law, *limit_barriers) / g;
                r.limit_cost = cfg.horizon * overshoot_moment(*law, *limit_barriers, c.beta) / g;
            }
            out.rows.push_back(r);
        }
    }

    std::vector<PowerLawPoint> err_pts;
    for (const auto& p : out.frontier) err_pts.push_back({p.epsilon, p.error.value, 0.0, p.error.std_error});
    if (!std::all_of(err_pts.begin(), err_pts.end(), [](const auto& q) { return q.y > 0.0; })) {
        out.fits.push_back({"error_vs_epsilon", 2.0, false, {}, "zero error at some epsilon"});
    } else {
        out.fits.push_back(fit_slope("error_vs_epsilon", 2.0, err_pts, false));
    }
    for (std::size_t m = 0; m < cfg.betas.size(); ++m) {
        std::vector<PowerLawPoint> pts;
        bool positive = true;
        for (const auto& p : out.frontier) {
            pts.push_back({p.epsilon, p.costs[m].value, 0.0, p.costs[m].std_error});
            positive = positive && p.costs[m].value > 0.0;
        }
        char name[64];
        std::snprintf(name, sizeof name, "cost_vs_epsilon_beta_%g", cfg.betas[m]);
        if (!positive) out.fits.push_back({name, -(alpha - cfg.betas[m]), false, {}, "zero cost at some epsilon"});
        else out.fits.push_back(fit_slope(name, -(alpha - cfg.betas[m]), pts, false));
    }
    return out;
}

/// Budgets between consecutive sampled costs (geometric midpoints), inverted per beta.
inline std::vector<BudgetRow> budget_table(const std::vector<FrontierPoint>& frontier, const std::vector<double>& betas) {
    std::vector<BudgetRow> rows;
    for (std::size_t m = 0; m < betas.size(); ++m) {
        std::vector<FrontierSample> t;
        for (const auto& p : frontier) t.push_back({p.epsilon, p.costs[m].value, p.error.value});
        bool usable = t.size() >= 2;
        for (std::size_t i = 0; usable && i < t.size(); ++i)
            usable = t[i].cost > 0.0 && t[i].error > 0.0 && (i == 0 || t[i].cost > t[i - 1].cost);
        if (!usable) continue;
        for (std::size_t i = 0; i + 1 < t.size(); ++i) {
            const double budget = std::sqrt(t[i].cost * t[i + 1].cost);
            const auto bp = invert_cost_for_budget(t, budget);
            rows.push_back({betas[m], budget, bp.epsilon, bp.error});
        }
    }
    return rows;
}

inline RateResult run_rate_comparison(const ExperimentConfig& cfg, unsigned threads = 0) {
    const auto est = detail::estimator(cfg, threads);
    const auto rule = build_rule(cfg);
    RateResult out;
    out.rule = rule.label();
    const std::vector<double> betas{0.0};
    out.frontier = estimate_frontier(est, rule, cfg.epsilons, betas, cfg.n_paths);

    // equidistant dates at the budgets the hitting rule spent, on the same paths
    std::vector<std::size_t> dates;
    for (const auto& p : out.frontier)
        dates.push_back(std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(p.costs[0].value))));
    const auto acc = estimate_on_paths(est, cfg.n_paths, dates.size(), [&](const PathBundle& b) {
        std::vector<double> v;
        for (std::size_t n : dates) v.push_back(evaluate_equidistant(b, n, {}).error);
        return v;
    });

    std::vector<FrontierSample> table;
    for (const auto& p : out.frontier) table.push_back({p.epsilon, p.costs[0].value, p.error.value});
    std::vector<PowerLawPoint> hit_pts, eq_pts;
    for (std::size_t k = 0; k < out.frontier.size(); ++k) {
        const auto& p = out.frontier[k];
        RateRow r{p.epsilon, p.costs[0], p.error, dates[k], to_estimate(acc[k], p.epsilon, nan_value), nan_value,
                  k >= pre_asymptotic_points};
        try {
            r.hit_error_at_budget = invert_cost_for_budget(table, static_cast<double>(dates[k])).error;
        } catch (const Error&) {
            r.hit_error_at_budget = nan_value;  // budget outside the sampled costs
        }
        out.rows.push_back(r);
        hit_pts.push_back({p.costs[0].value, p.error.value, p.costs[0].std_error, p.error.std_error});
        eq_pts.push_back({static_cast<double>(dates[k]), r.eq_error.value, 0.0, r.eq_error.std_error});
    }
    out.hitting = fit_slope("hitting_error_vs_cost", -2.0 / cfg.model.alpha, hit_pts, true);
    out.equidistant = fit_slope("equidistant_error_vs_cost", -1.0, eq_pts, true);
    return out;
}

namespace detail {

struct ExitSample {
    double tau;
    double overshoot;  ///< |X_tau - X_0| / eps
    double steps;
};

/// Runs one path until X leaves (X_0 - eps, X_0 + eps). Steps shrink near
/// the barrier so that exits between grid points are rare.
inline ExitSample simulate_exit(const SimulationPlan& plan, double eps, double sigma, double refine, RngStream stream) {
    PathStepper st(plan, stream);
    const double x0 = st.current().coef.x;
    const double alpha = plan.model.alpha();
    const double h = plan.grid.h, dt_min = 1e-3 * h;
    for (;;) {
        const auto& p = st.current();
        const double d = eps - std::abs(p.coef.x - x0);
        if (d <= 0.0) return {p.state.t, std::abs(p.coef.x - x0) / eps, static_cast<double>(st.steps())};
        const double local = p.coef.lambda * sigma;
        const double dt = local > 0.0 ? std::clamp(std::pow(d / refine, alpha) / local, dt_min, h) : h;
        st.advance(p.state.t + dt);
    }
}

} // namespace detail

inline RescalingResult run_rescaling_validation(const ExperimentConfig& cfg, unsigned threads = 0) {
    const auto base_plan = build_plan(cfg);
    const auto lim = local_limit(cfg, *base_plan);
    if (!(lim.lambda0 > 0.0)) throw ConfigError("integrand", "local jump intensity is zero at the start");
    const StableLaw& law = lim.law;
    const double alpha = cfg.model.alpha;

    // limits g(1,1) and u^beta(1,1): closed forms, or the exit oracle for skewed laws
    RescalingResult out{law, lim.lambda0, !law.is_symmetric(), {}};
    std::vector<double> g_ref(cfg.betas.size()), g_se(cfg.betas.size()), u_ref(cfg.betas.size()), u_se(cfg.betas.size());
    for (std::size_t m = 0; m < cfg.betas.size(); ++m) {
        if (law.is_symmetric()) {
            g_ref[m] = mean_exit_time(law, {1.0, 1.0});
            u_ref[m] = overshoot_moment(law, {1.0, 1.0}, cfg.betas[m]);
        } else {
            McExitOptions mc;
            mc.n_paths = cfg.rescaling.reference_paths;
            mc.dt = 1e-3 * mean_exit_time(StableLaw::symmetric(alpha, law.sigma()), {1.0, 1.0});
            mc.master_seed = mix_seed(cfg.seed, 0x7265663a);
            mc.threads = threads;
            const auto e = mc_exit_functionals(law, {1.0, 1.0}, cfg.betas[m], mc);
            g_ref[m] = e.mean.g;
            g_se[m] = e.g_se;
            u_ref[m] = e.mean.u_beta;
            u_se[m] = e.u_se;
        }
    }
    const double g_scale = law.is_symmetric() ? g_ref[0] : mean_exit_time(StableLaw::symmetric(alpha, law.sigma()), {1, 1});

    for (double eps : cfg.epsilons) {
        GridSpec g = base_plan->grid;
        g.h = g_scale * std::pow(eps, alpha) / (lim.lambda0 * cfg.rescaling.steps_per_exit);
        if (cfg.integrand.type != "raw_stable") g.delta = std::min(cfg.model.cutoff, 0.5 * eps);
        const SimulationPlan plan = detail::config_guard("grid", [&] {
            return SimulationPlan(base_plan->model, base_plan->spec, g);
        });
        std::vector<detail::ExitSample> samples(cfg.n_paths);
        parallel_for(cfg.n_paths, threads, [&](std::size_t i) {
            samples[i] = detail::simulate_exit(plan, eps, law.sigma(), cfg.rescaling.refine, derive_stream(cfg.seed, i));
        });
        const double time_scale = lim.lambda0 * std::pow(eps, -alpha);
        MeanAccumulator tau, steps;
        std::vector<MeanAccumulator> over(cfg.betas.size());
        for (const auto& s : samples) {
            tau.add(time_scale * s.tau);
            steps.add(s.steps);
            for (std::size_t m = 0; m < cfg.betas.size(); ++m)
                over[m].add(cfg.betas[m] == 0.0 ? 1.0 : std::pow(s.overshoot, cfg.betas[m]));
        }
        for (std::size_t m = 0; m < cfg.betas.size(); ++m) {
            out.rows.push_back({eps, cfg.betas[m], plan.grid.h, plan.delta, to_estimate(tau, eps, nan_value), g_ref[m],
                                g_se[m], to_estimate(over[m], eps, cfg.betas[m]), u_ref[m], u_se[m], steps.mean()});
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Writers

inline std::string convergence_csv(const ConvergenceResult& r, const ExperimentConfig& cfg) {
    std::string s = "epsilon,beta,error,error_se,cost,cost_se,scaled_error,scaled_error_se,scaled_cost,scaled_cost_se,"
                    "limit_error,limit_cost,n_paths,rule,seed\n";
    for (const auto& row : r.rows)
        s += detail::csv_row(row.epsilon, row.beta, row.error.value, row.error.std_error, row.cost.value, row.cost.std_error,
                             row.scaled_error, row.scaled_error_se, row.scaled_cost, row.scaled_cost_se, row.limit_error,
                             row.limit_cost, row.error.n_paths, r.rule, std::to_string(cfg.seed));
    return s;
}

inline std::string fits_csv(const std::vector<SlopeReport>& fits) {
    std::string s = "quantity,slope,slope_se,slope_ci_low,slope_ci_high,intercept,r2,n_points,expected,note\n";
    for (const auto& f : fits) {
        if (f.fitted)
            s += detail::csv_row(f.quantity, f.fit.slope, f.fit.slope_se, f.fit.slope_ci_low, f.fit.slope_ci_high,
                                 f.fit.intercept, f.fit.r2, f.fit.n_points, f.expected, "");
        else
            s += detail::csv_row(f.quantity, nan_value, nan_value, nan_value, nan_value, nan_value, nan_value,
                                 std::size_t{0}, f.expected, "not fitted");
    }
    return s;
}

inline std::string frontier_csv(const std::vector<FrontierPoint>& pts, const std::string& rule, std::uint64_t seed) {
    std::ostringstream s;
    write_frontier_csv(s, pts, rule, seed);
    return s.str();
}

inline std::string budget_csv(const std::vector<BudgetRow>& rows) {
    std::string s = "beta,budget,epsilon_at_budget,error_at_budget\n";
    for (const auto& r : rows) s += detail::csv_row(r.beta, r.budget, r.epsilon, r.error);
    return s;
}

inline std::string rate_csv(const RateResult& r) {
    std::string s = "epsilon,hit_cost,hit_cost_se,hit_error,hit_error_se,n_dates,eq_error,eq_error_se,"
                    "hit_error_at_budget,error_ratio,in_fit\n";
    for (const auto& row : r.rows) {
        const double hit = std::isnan(row.hit_error_at_budget) ? row.hit_error.value : row.hit_error_at_budget;
        s += detail::csv_row(row.epsilon, row.hit_cost.value, row.hit_cost.std_error, row.hit_error.value,
                             row.hit_error.std_error, row.n_dates, row.eq_error.value, row.eq_error.std_error,
                             row.hit_error_at_budget, hit / row.eq_error.value, row.in_fit ? "1" : "0");
    }
    return s;
}

inline std::string rescaling_csv(const RescalingResult& r) {
    std::string s = "epsilon,beta,n_paths,h,delta,exit_time,exit_time_se,exit_limit,exit_dev,exit_dev_se,overshoot,"
                    "overshoot_se,overshoot_limit,overshoot_dev,overshoot_dev_se,mean_steps,reference\n";
    const char* ref = r.monte_carlo_reference ? "monte_carlo" : "closed_form";
    for (const auto& row : r.rows)
        s += detail::csv_row(row.epsilon, row.beta, row.exit_time.n_paths, row.h, row.delta, row.exit_time.value,
                             row.exit_time.std_error, row.exit_limit, row.exit_dev(), row.exit_dev_se(), row.overshoot.value,
                             row.overshoot.std_error, row.overshoot_limit, row.overshoot_dev(), row.overshoot_dev_se(),
                             row.mean_steps, ref);
    return s;
}

// ---------------------------------------------------------------------------
// Runs

struct OutputFile {
    std::string name;
    std::string hash;
};

struct RunReport {
    std::string directory;
    std::vector<OutputFile> files;
    std::vector<std::string> summary;  ///< human-readable lines for the console
};

struct RunOptions {
    unsigned threads = 0;
    std::size_t dump_paths = 0;
    std::string config_text;  ///< echoed and hashed into the manifest
};

namespace detail {

class OutputDir {
public:
    explicit OutputDir(std::string dir) : dir_(std::move(dir)) {
        std::error_code ec;
        std::filesystem::create_directories(dir_, ec);
        if (ec) throw ConfigError("output_dir", "cannot create '" + dir_ + "': " + ec.message());
    }

    void write(const std::string& name, const std::string& bytes, bool record = true) {
        const auto path = std::filesystem::path(dir_) / name;
        std::filesystem::create_directories(path.parent_path());
        std::ofstream f(path, std::ios::binary);
        f << bytes;
        if (!f) throw InternalError("cannot write " + path.string());
        if (record) files_.push_back({name, git_blob_hash(bytes)});
    }

    const std::string& path() const { return dir_; }
    const std::vector<OutputFile>& files() const { return files_; }

private:
    std::string dir_;
    std::vector<OutputFile> files_;
};

inline std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c, d);
    return buf;
}

inline std::string slope_line(const SlopeReport& s) {
    if (!s.fitted) return s.quantity + ": not fitted (" + s.note + ")";
    return s.quantity + fmt(": slope %.4f +- %.4f (expected %.4f, R2 %.4f)", s.fit.slope, s.fit.slope_se, s.expected, s.fit.r2);
}

} // namespace detail

inline std::string manifest_text(const ExperimentConfig& cfg, const RunOptions& opt, const std::vector<OutputFile>& files) {
    std::string s = "jumphedge run manifest\n";
    s += std::string("experiment: ") + to_string(cfg.kind) + "\n";
    s += "master_seed: " + std::to_string(cfg.seed) + "\n";
    s += "n_paths: " + std::to_string(cfg.n_paths) + "\n";
    s += "config_hash: " + git_blob_hash(opt.config_text) + "\n";
    s += "outputs:\n";
    for (const auto& f : files) s += "  " + f.hash + "  " + f.name + "\n";
    s += "config:\n" + opt.config_text;
    if (opt.config_text.empty() || opt.config_text.back() != '\n') s += "\n";
    return s;
}

inline RunReport run_experiment(const ExperimentConfig& cfg, const RunOptions& opt = {}) {
    detail::OutputDir out(cfg.output_dir);
    RunReport rep;
    rep.directory = out.path();
    const std::string seed = std::to_string(cfg.seed);

    switch (cfg.kind) {
        case StudyKind::convergence: {
            const auto r = run_convergence_study(cfg, opt.threads);
            out.write("frontier.csv", frontier_csv(r.frontier, r.rule, cfg.seed));
            out.write("convergence.csv", convergence_csv(r, cfg));
            out.write("fits.csv", fits_csv(r.fits));
            for (const auto& row : r.rows) {
                rep.summary.push_back(detail::fmt("eps %-8g beta %-4g eps^-2 E = %.6f", row.epsilon, row.beta, row.scaled_error) +
                                      detail::fmt("  eps^(a-b) C = %.6f", row.scaled_cost) +
                                      (std::isnan(row.limit_error)
                                           ? std::string()
                                           : detail::fmt("  (limits %.6f, %.6f)", row.limit_error, row.limit_cost)));
            }
            for (const auto& f : r.fits) rep.summary.push_back(detail::slope_line(f));
            break;
        }
        case StudyKind::frontier: {
            const auto r = run_convergence_study(cfg, opt.threads);
            out.write("frontier.csv", frontier_csv(r.frontier, r.rule, cfg.seed));
            const auto budgets = budget_table(r.frontier, cfg.betas);
            out.write("budget.csv", budget_csv(budgets));
            for (const auto& b : budgets)
                rep.summary.push_back(detail::fmt("beta %g budget %.4g -> eps %.4g, error %.6g", b.beta, b.budget, b.epsilon, b.error));
            break;
        }
        case StudyKind::rate_comparison: {
            const auto r = run_rate_comparison(cfg, opt.threads);
            out.write("frontier.csv", frontier_csv(r.frontier, r.rule, cfg.seed));
            out.write("rate_comparison.csv", rate_csv(r));
            out.write("fits.csv", fits_csv({r.hitting, r.equidistant}));
            rep.summary.push_back(detail::slope_line(r.hitting));
            rep.summary.push_back(detail::slope_line(r.equidistant));
            break;
        }
        case StudyKind::rescaling: {
            const auto r = run_rescaling_validation(cfg, opt.threads);
            out.write("rescaling.csv", rescaling_csv(r));
            for (const auto& row : r.rows)
                rep.summary.push_back(detail::fmt("eps %-8g exit time dev %+.4f +- %.4f", row.epsilon, row.exit_dev(), row.exit_dev_se()) +
                                      detail::fmt("  overshoot(beta %g) dev %+.4f", row.beta, row.overshoot_dev()));
            break;
        }
    }

    if (opt.dump_paths > 0) {
        const auto plan = build_plan(cfg);
        for (std::size_t i = 0; i < opt.dump_paths; ++i) {
            std::ostringstream s;
            write_path_csv(simulate_path(*plan, cfg.horizon, derive_stream(cfg.seed, i)), s);
            out.write("paths/path_" + std::to_string(i) + ".csv", s.str());
        }
    }
    out.write("manifest.txt", manifest_text(cfg, opt, out.files()), false);
    rep.files = out.files();
    rep.files.push_back({"manifest.txt", ""});
    return rep;
}

} // namespace jumphedge
