// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
//
//   acceptance <path to jumphedge binary> <configs dir>
//
// Criteria 4, 5, 6, 9 and 10 drive the CLI on the shipped configs and read
// the CSVs it writes; the others call the library directly.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "jumphedge/optimizer.hpp"
#include "jumphedge/stable.hpp"

using namespace jumphedge;
namespace fs = std::filesystem;

namespace {

constexpr double pi = 3.141592653589793;

struct Outcome {
    bool pass;
    std::string detail;
};

std::string fmt(const char* f, double a = 0, double b = 0, double c = 0, double d = 0, double e = 0, double g = 0) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, a, b, c, d, e, g);
    return buf;
}

// CSV with a header row; cells by column name
struct Table {
    std::vector<std::map<std::string, std::string>> rows;

    static Table read(const fs::path& p) {
        std::ifstream in(p);
        if (!in) throw std::runtime_error("cannot read " + p.string());
        auto split = [](const std::string& line) {
            std::vector<std::string> out;
            std::stringstream s(line);
            std::string cell;
            while (std::getline(s, cell, ',')) out.push_back(cell);
            if (!line.empty() && line.back() == ',') out.push_back("");
            return out;
        };
        Table t;
        std::string line;
        std::getline(in, line);
        const auto header = split(line);
        while (std::getline(in, line)) {
            const auto cells = split(line);
            std::map<std::string, std::string> row;
            for (std::size_t i = 0; i < header.size() && i < cells.size(); ++i) row[header[i]] = cells[i];
            t.rows.push_back(row);
        }
        return t;
    }

    static double num(const std::map<std::string, std::string>& row, const std::string& key) {
        const auto it = row.find(key);
        if (it == row.end() || it->second.empty()) return std::nan("");
        return std::stod(it->second);
    }
};

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

struct Cli {
    std::string binary;
    fs::path configs;
    fs::path out_root;

    void run(const std::string& config, const std::string& out, unsigned threads) const {
        const auto dir = out_root / out;
        fs::remove_all(dir);
        const std::string cmd = "\"" + binary + "\" run \"" + (configs / config).string() + "\" --threads " +
                                std::to_string(threads) + " --out \"" + dir.string() + "\" > \"" +
                                (out_root / (out + ".log")).string() + "\" 2>&1";
        const int rc = std::system(cmd.c_str());
        if (rc != 0) throw std::runtime_error("'" + cmd + "' failed with status " + std::to_string(rc));
    }

    fs::path dir(const std::string& out) const { return out_root / out; }
};

const StableLaw unit = StableLaw::symmetric(1.5, 1.0);

// ---------------------------------------------------------------------------

Outcome closed_forms() {
    const double g = mean_exit_time(unit, {1, 1});
    const double f = mean_squared_integral(unit, {1, 1});
    const double f21 = mean_squared_integral(unit, {2, 1});
    double worst = 0.0;
    for (double alpha : {1.1, 1.5, 1.9}) {
        const auto law = StableLaw::symmetric(alpha, 1.0);
        for (double a : {0.3, 1.0, 2.7}) {
            const double ratio = mean_squared_integral(law, {a, a}) / mean_exit_time(law, {a, a});
            const double expect = a * a * alpha / ((alpha + 2) * (alpha + 1));
            worst = std::max(worst, std::abs(ratio / expect - 1.0));
        }
    }
    const bool ok = std::abs(g - 0.752253) <= 1e-6 && std::abs(f - 0.128958) <= 1e-6 &&
                    std::abs(f21 - 0.623527) <= 1e-5 && worst <= 1e-12;
    return {ok, fmt("g(1,1)=%.7f f(1,1)=%.7f f(2,1)=%.7f ratio identity rel err %.1e", g, f, f21, worst)};
}

Outcome overshoot() {
    boost::math::quadrature::tanh_sinh<double> ts;
    const Barriers b(1.0, 1.0);
    // mass beyond each barrier, integrating in the distance past it
    const double up = ts.integrate([&](double x) { return overshoot_density_past(unit, b, x); }, 0.0, INFINITY);
    const double down = ts.integrate([&](double x) { return overshoot_density_past(unit, b, x, true); }, 0.0, INFINITY);
    const double mass = up + down;
    const double u1 = overshoot_moment(unit, b, 1.0);
    // beta-function reduction of the first moment
    const double oracle = std::sin(3.0 * pi / 4.0) / pi * 2.0 * std::pow(2.0, -0.5) * std::beta(0.25, 0.5);
    const double u0 = overshoot_moment(unit, b, 0.0);
    const bool ok = std::abs(mass - 1.0) <= 1e-6 && std::abs(u1 - 1.66928) <= 1e-4 && std::abs(u1 - oracle) <= 1e-8 &&
                    u0 == 1.0;
    return {ok, fmt("mass=%.9f u1=%.7f (oracle %.7f) u0=%.17g", mass, u1, oracle, u0)};
}

Outcome mc_oracle() {
    std::string detail;
    bool ok = true;
    for (const Barriers b : {Barriers(1, 1), Barriers(2, 1)}) {
        const auto exact = exit_functionals(unit, b, 0.5);
        McExitOptions opt;
        opt.n_paths = 100000;
        opt.dt = 1e-3 * exact.g;
        opt.master_seed = 2024;
        const auto e = mc_exit_functionals(unit, b, 0.5, opt);
        auto check = [&](const char* name, double est, double se, double ref) {
            const double z = std::abs(est - ref) / se, rel = std::abs(est / ref - 1.0);
            ok = ok && z <= 3.0 && rel <= 0.02;
            detail += name + fmt("(%g,%g) %.2f SE %.2f%%; ", b.lower, b.upper, z, 100 * rel);
        };
        check("g", e.mean.g, e.g_se, exact.g);
        check("f", e.mean.f, e.f_se, exact.f);
        check("u0.5", e.mean.u_beta, e.u_se, exact.u_beta);
    }
    return {ok, detail};
}

struct LimitsRun {
    double scaled_error, scaled_error_se, scaled_cost, scaled_cost_se;
};

LimitsRun read_limits(const Cli& cli, const std::string& out) {
    const auto t = Table::read(cli.dir(out) / "convergence.csv");
    for (const auto& row : t.rows)
        if (Table::num(row, "epsilon") == 0.05 && Table::num(row, "beta") == 0.0)
            return {Table::num(row, "scaled_error"), Table::num(row, "scaled_error_se"), Table::num(row, "scaled_cost"),
                    Table::num(row, "scaled_cost_se")};
    throw std::runtime_error("no eps = 0.05, beta = 0 row in convergence.csv");
}

Outcome error_limit(const Cli& cli) {
    const auto r = read_limits(cli, "limits_t1");
    const double target = 0.171429, rel = r.scaled_error / target - 1.0;
    return {std::abs(rel) <= 0.05, fmt("eps^-2 E(0.05) = %.5f +- %.5f vs %.6f (%+.2f%%)", r.scaled_error,
                                       r.scaled_error_se, target, 100 * rel)};
}

Outcome cost_limit(const Cli& cli) {
    const auto r = read_limits(cli, "limits_t1");
    const double target = 1.329340, rel = r.scaled_cost / target - 1.0;
    return {std::abs(rel) <= 0.05, fmt("eps^1.5 C0(0.05) = %.5f +- %.5f vs %.6f (%+.2f%%)", r.scaled_cost,
                                       r.scaled_cost_se, target, 100 * rel)};
}

Outcome rate_comparison(const Cli& cli) {
    cli.run("rate_comparison.json", "rate", 0);
    const auto fits = Table::read(cli.dir("rate") / "fits.csv");
    double hit = std::nan(""), hit_se = 0, eq = std::nan(""), eq_se = 0;
    for (const auto& row : fits.rows) {
        if (row.at("quantity") == "hitting_error_vs_cost") hit = Table::num(row, "slope"), hit_se = Table::num(row, "slope_se");
        if (row.at("quantity") == "equidistant_error_vs_cost") eq = Table::num(row, "slope"), eq_se = Table::num(row, "slope_se");
    }
    const auto rows = Table::read(cli.dir("rate") / "rate_comparison.csv");
    bool below = true;
    double worst_ratio = 0.0;
    int compared = 0;
    for (const auto& row : rows.rows) {
        if (row.at("in_fit") != "1") continue;
        const double ratio = Table::num(row, "error_ratio");
        worst_ratio = std::max(worst_ratio, ratio);
        below = below && ratio < 1.0;
        ++compared;
    }
    const bool ok = std::abs(hit + 4.0 / 3.0) <= 0.15 && std::abs(eq + 1.0) <= 0.10 && below && compared >= 4;
    return {ok, fmt("hitting slope %.4f +- %.4f, equidistant slope %.4f +- %.4f, max hit/eq error ratio %.3f over %g budgets",
                    hit, hit_se, eq, eq_se, worst_ratio, compared)};
}

Outcome optimizer() {
    // brute-force grid oracle on the closed-form objective
    auto objective = [](double a) {
        return 1.5 / (3.5 * 2.5) * a * a + std::tgamma(2.5) * std::pow(a, -1.5);
    };
    double grid_a = 0.0, best = INFINITY;
    for (double a = 0.5; a < 5.0; a += 1e-5) {
        const double v = objective(a);
        if (v < best) best = v, grid_a = a;
    }
    const auto r = minimize_lagrangian({1.0, 1.0, 1.0, 0.0, unit});
    double worst_theta = 0.0;
    for (double alpha : {1.2, 1.5, 1.8})
        for (double beta : {0.0, 0.5, 1.0})
            worst_theta = std::max(worst_theta,
                                   std::abs(minimize_lagrangian({1.3, 0.7, 2.0, beta, StableLaw::symmetric(alpha, 1.0)}).theta));
    double worst_kappa = 0.0;
    for (double beta : {0.0, 0.5}) {
        const auto r1 = minimize_lagrangian({1.0, 1.0, 1.0, beta, unit});
        const auto r2 = minimize_lagrangian({1.0, 1.0, 5.0, beta, unit});
        const double kappa = budget_scale_factor(1.0, 5.0, 1.5, beta);
        worst_kappa = std::max({worst_kappa, std::abs(r2.barriers.lower / (kappa * r1.barriers.lower) - 1.0),
                                std::abs(r2.barriers.upper / (kappa * r1.barriers.upper) - 1.0)});
    }
    const bool ok = std::abs(r.half_width - 1.653757) <= 1e-3 && std::abs(r.half_width - grid_a) <= 1e-3 &&
                    worst_theta <= 1e-3 && worst_kappa <= 1e-6;
    return {ok, fmt("a* = %.6f (grid oracle %.5f), max |theta*| %.1e, kappa covariance rel err %.1e", r.half_width,
                    grid_a, worst_theta, worst_kappa)};
}

Outcome strategy_formulas() {
    const double merton = merton_barrier(1000.0, 100.0, 1.5, 1.0, 1.0);
    const double delta = delta_hedge_barrier(0.5, 100.0, 1.5, 0.0, 1.0);
    // the target is the closed expression; its usual 6-digit rendering 0.384852 is off in the fifth digit
    const double expression = std::pow(0.5, 3.0 / 7.0) * std::pow(100.0, -1.0 / 7.0);
    const auto rescaled = budget_rescale({1.0, 1.0}, 1.0, 8.0, 1.5, 0.5);
    const bool ok = std::abs(merton - 0.1) <= 1e-12 && std::abs(delta - expression) <= 1e-5 &&
                    std::abs(rescaled.lower - 2.0) <= 1e-12 && std::abs(rescaled.upper - 2.0) <= 1e-12;
    return {ok, fmt("merton %.17g, delta hedge %.7f (0.5^{3/7} 100^{-1/7} = %.7f; literal 0.384852 differs by %.1e), "
                    "budget_rescale(8) = %.17g",
                    merton, delta, expression, std::abs(delta - 0.384852), rescaled.lower)};
}

Outcome reproducibility(const Cli& cli) {
    cli.run("raw_stable_limits.json", "limits_t8", 8);
    std::string detail;
    bool ok = true;
    int compared = 0;
    for (const auto& entry : fs::directory_iterator(cli.dir("limits_t1"))) {
        const auto name = entry.path().filename();
        const bool same = slurp(entry.path()) == slurp(cli.dir("limits_t8") / name);
        ok = ok && same;
        ++compared;
        if (!same) detail += name.string() + " differs; ";
    }
    ok = ok && compared >= 4;
    return {ok, detail.empty() ? fmt("%g output files byte-identical for --threads 1 and 8", compared) : detail};
}

Outcome rescaling(const Cli& cli) {
    cli.run("rescaling.json", "rescaling", 0);
    const auto t = Table::read(cli.dir("rescaling") / "rescaling.csv");
    std::vector<double> eps, dev, se;
    for (const auto& row : t.rows) {
        if (!eps.empty() && Table::num(row, "epsilon") == eps.back()) continue;  // one row per epsilon
        eps.push_back(Table::num(row, "epsilon"));
        dev.push_back(std::abs(Table::num(row, "exit_dev")));
        se.push_back(Table::num(row, "exit_dev_se"));
    }
    bool monotone = eps.size() >= 3;
    std::string trail;
    for (std::size_t k = 0; k < eps.size(); ++k) {
        trail += fmt("%.3g:%.4f ", eps[k], dev[k]);
        if (k > 0 && dev[k] > dev[k - 1] + 2.0 * std::hypot(se[k], se[k - 1])) monotone = false;
    }
    const bool ok = monotone && !dev.empty() && dev.back() <= 0.05;
    return {ok, "|E tau / g - 1| by eps " + trail + (monotone ? "(monotone within 2 SE)" : "(not monotone)")};
}

} // namespace

int main(int argc, char** argv) {
    if (argc < 3) {
        std::fprintf(stderr, "usage: acceptance <jumphedge binary> <configs dir>\n");
        return 2;
    }
    Cli cli{argv[1], argv[2], fs::absolute("acceptance_out")};
    fs::create_directories(cli.out_root);

    struct Criterion {
        int id;
        const char* name;
        std::function<Outcome()> check;
    };
    bool limits_ready = false;
    auto limits = [&] {
        if (!limits_ready) cli.run("raw_stable_limits.json", "limits_t1", 1);
        limits_ready = true;
    };
    const std::vector<Criterion> criteria{
        {1, "closed-form exit functionals", closed_forms},
        {2, "overshoot law", overshoot},
        {3, "Monte Carlo exit oracle vs closed forms", mc_oracle},
        {4, "error functional limit (RawStable, eps = 0.05)", [&] { limits(); return error_limit(cli); }},
        {5, "cost functional limit, beta = 0", [&] { limits(); return cost_limit(cli); }},
        {6, "rate comparison vs equidistant dates", [&] { return rate_comparison(cli); }},
        {7, "Lagrangian optimizer", optimizer},
        {8, "closed-form strategy barriers", strategy_formulas},
        {9, "reproducibility across thread counts", [&] { limits(); return reproducibility(cli); }},
        {10, "rescaled exit times of the market integrand", [&] { return rescaling(cli); }},
    };

    int failures = 0;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.check();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("%s criterion %d: %s -- %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), secs);
        std::fflush(stdout);
        failures += o.pass ? 0 : 1;
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
