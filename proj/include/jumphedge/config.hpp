#pragma once

// Experiment configuration: strict JSON parsing and construction of the
// simulation objects. Every error names the offending field as a path into
// the document, e.g. "model.alpha" or "epsilons[3]".

#include <cstdint>
#include <fstream>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "jumphedge/discretizer.hpp"
#include "jumphedge/errors.hpp"
#include "jumphedge/market.hpp"
#include "jumphedge/optimizer.hpp"
#include "jumphedge/path_engine.hpp"
#include "jumphedge/stable.hpp"

namespace jumphedge {

using json = nlohmann::json;

enum class StudyKind { convergence, rate_comparison, rescaling, frontier };

inline const char* to_string(StudyKind k) {
    switch (k) {
        case StudyKind::convergence: return "convergence";
        case StudyKind::rate_comparison: return "rate_comparison";
        case StudyKind::rescaling: return "rescaling";
        case StudyKind::frontier: return "frontier";
    }
    return "?";
}

struct ModelConfig {
    std::string type;  ///< "raw_stable" or "truncated_stable"
    double alpha = 1.5;
    double c_plus = 1.0;
    double c_minus = 1.0;
    double cutoff = 0.5;
    double y0 = 1.0;
};

struct HedgeConfig {
    std::string type = "linear";  ///< "linear" or "black_scholes"
    double slope = 1.0;
    double strike = 1.0;
    double vol = 0.2;
    double maturity = 2.0;
};

struct IntegrandConfig {
    std::string type;  ///< "raw_stable", "delta_hedge" or "merton"
    HedgeConfig hedge;
    double pi = 0.5;
    double v0 = 1.0;
};

struct RuleConfig {
    std::string type;  ///< constant, symmetric_power, delta_hedge, merton, optimal
    double lower = 1.0;
    double upper = 1.0;
    double c = 1.0;
    double beta = 0.0;
};

struct GridConfig {
    std::optional<double> h;
    std::optional<double> delta;
    bool small_jumps = true;
    std::size_t max_steps = 100'000'000;
};

struct RescalingConfig {
    double refine = 16.0;           ///< steps shrink like (distance / refine)^alpha near the barrier
    double steps_per_exit = 1000.0; ///< base step = g(1,1) eps^alpha / (lambda_0 steps_per_exit)
    std::size_t reference_paths = 100000;  ///< Monte Carlo reference for asymmetric limits
};

struct ExperimentConfig {
    StudyKind kind = StudyKind::convergence;
    ModelConfig model;
    IntegrandConfig integrand;
    RuleConfig rule;
    std::vector<double> epsilons;
    std::vector<double> betas{0.0};
    double horizon = 1.0;
    std::size_t n_paths = 1000;
    std::uint64_t seed = 1;
    GridConfig grid;
    RescalingConfig rescaling;
    std::string output_dir = "out";
};

// ---------------------------------------------------------------------------
// Strict field reader

namespace detail {

class Fields {
public:
    Fields(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
    }

    std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    bool has(const std::string& key) const { return j_.contains(key); }

    const json* find(const std::string& key) {
        used_.insert(key);
        auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    const json& require(const std::string& key) {
        const json* v = find(key);
        if (!v) throw ConfigError(at(key), "missing required field");
        return *v;
    }

    double number(const std::string& key) { return as_number(require(key), at(key)); }
    double number_or(const std::string& key, double def) {
        const json* v = find(key);
        return v ? as_number(*v, at(key)) : def;
    }

    std::uint64_t count(const std::string& key) { return as_count(require(key), at(key)); }
    std::uint64_t count_or(const std::string& key, std::uint64_t def) {
        const json* v = find(key);
        return v ? as_count(*v, at(key)) : def;
    }

    std::string string(const std::string& key) {
        const json& v = require(key);
        if (!v.is_string()) throw ConfigError(at(key), "expected a string");
        return v.get<std::string>();
    }
    std::string string_or(const std::string& key, const std::string& def) {
        if (has(key)) return string(key);
        find(key);
        return def;
    }

    bool boolean_or(const std::string& key, bool def) {
        const json* v = find(key);
        if (!v) return def;
        if (!v->is_boolean()) throw ConfigError(at(key), "expected true or false");
        return v->get<bool>();
    }

    std::vector<double> numbers(const std::string& key) {
        const json& v = require(key);
        if (!v.is_array()) throw ConfigError(at(key), "expected an array of numbers");
        std::vector<double> out;
        for (std::size_t i = 0; i < v.size(); ++i) out.push_back(as_number(v[i], at(key) + "[" + std::to_string(i) + "]"));
        return out;
    }

    Fields object(const std::string& key) { return Fields(require(key), at(key)); }

    /// Rejects keys that were never looked up.
    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!used_.count(it.key())) throw ConfigError(at(it.key()), "unknown field");
    }

    static double as_number(const json& v, const std::string& where) {
        if (!v.is_number()) throw ConfigError(where, "expected a number");
        const double x = v.get<double>();
        if (!std::isfinite(x)) throw ConfigError(where, "expected a finite number");
        return x;
    }

    static std::uint64_t as_count(const json& v, const std::string& where) {
        if (v.is_number_unsigned()) return v.get<std::uint64_t>();
        if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
        throw ConfigError(where, "expected a non-negative integer");
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> used_;
};

template <class F>
auto config_guard(const std::string& field, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(field, e.what());
    }
}

} // namespace detail

// ---------------------------------------------------------------------------
// Parsing

inline ExperimentConfig parse_config(const json& doc) {
    detail::Fields root(doc, "");
    ExperimentConfig cfg;

    const std::string kind = root.string("experiment");
    if (kind == "convergence") cfg.kind = StudyKind::convergence;
    else if (kind == "rate_comparison") cfg.kind = StudyKind::rate_comparison;
    else if (kind == "rescaling") cfg.kind = StudyKind::rescaling;
    else if (kind == "frontier") cfg.kind = StudyKind::frontier;
    else throw ConfigError("experiment", "unknown experiment '" + kind + "'");

    {
        auto m = root.object("model");
        cfg.model.type = m.string("type");
        cfg.model.alpha = m.number("alpha");
        if (!(cfg.model.alpha > 1.0 && cfg.model.alpha < 2.0)) throw ConfigError(m.at("alpha"), "must lie in (1, 2)");
        if (cfg.model.type == "raw_stable") {
            if (m.has("sigma")) {
                if (m.has("c_plus") || m.has("c_minus"))
                    throw ConfigError(m.at("sigma"), "give either sigma or c_plus/c_minus, not both");
                const double sigma = m.number("sigma");
                if (!(sigma > 0.0)) throw ConfigError(m.at("sigma"), "must be positive");
                const auto law = StableLaw::symmetric(cfg.model.alpha, sigma);
                cfg.model.c_plus = law.c_plus();
                cfg.model.c_minus = law.c_minus();
            } else {
                cfg.model.c_plus = m.number("c_plus");
                cfg.model.c_minus = m.number("c_minus");
            }
        } else if (cfg.model.type == "truncated_stable") {
            cfg.model.c_plus = m.number("c_plus");
            cfg.model.c_minus = m.number("c_minus");
            cfg.model.cutoff = m.number("cutoff");
            cfg.model.y0 = m.number_or("y0", 1.0);
        } else {
            throw ConfigError(m.at("type"), "unknown model type '" + cfg.model.type + "'");
        }
        if (!(cfg.model.c_plus >= 0.0)) throw ConfigError(m.at("c_plus"), "must be non-negative");
        if (!(cfg.model.c_minus >= 0.0)) throw ConfigError(m.at("c_minus"), "must be non-negative");
        m.finish();
    }

    if (cfg.model.type == "raw_stable") {
        if (root.has("integrand")) {
            auto in = root.object("integrand");
            if (in.string("type") != "raw_stable") throw ConfigError(in.at("type"), "a raw_stable model integrates itself");
            in.finish();
        }
        cfg.integrand.type = "raw_stable";
    } else {
        auto in = root.object("integrand");
        cfg.integrand.type = in.string("type");
        if (cfg.integrand.type == "delta_hedge") {
            auto h = in.object("hedge");
            cfg.integrand.hedge.type = h.string("type");
            if (cfg.integrand.hedge.type == "linear") {
                cfg.integrand.hedge.slope = h.number("slope");
            } else if (cfg.integrand.hedge.type == "black_scholes") {
                cfg.integrand.hedge.strike = h.number("strike");
                cfg.integrand.hedge.vol = h.number("vol");
                cfg.integrand.hedge.maturity = h.number("maturity");
            } else {
                throw ConfigError(h.at("type"), "unknown hedge '" + cfg.integrand.hedge.type + "'");
            }
            h.finish();
        } else if (cfg.integrand.type == "merton") {
            cfg.integrand.pi = in.number("pi");
            cfg.integrand.v0 = in.number_or("v0", 1.0);
        } else {
            throw ConfigError(in.at("type"), "unknown integrand '" + cfg.integrand.type + "' for a market model");
        }
        in.finish();
    }

    if (cfg.kind != StudyKind::rescaling || root.has("rule")) {
        auto r = root.object("rule");
        cfg.rule.type = r.string("type");
        if (cfg.rule.type == "constant") {
            cfg.rule.lower = r.number("lower");
            cfg.rule.upper = r.number("upper");
        } else if (cfg.rule.type == "symmetric_power" || cfg.rule.type == "delta_hedge" || cfg.rule.type == "merton" ||
                   cfg.rule.type == "optimal") {
            cfg.rule.c = r.number("c");
            cfg.rule.beta = r.number_or("beta", 0.0);
        } else {
            throw ConfigError(r.at("type"), "unknown rule '" + cfg.rule.type + "'");
        }
        r.finish();
    }

    cfg.epsilons = root.numbers("epsilons");
    if (cfg.epsilons.empty()) throw ConfigError("epsilons", "need at least one value");
    for (std::size_t i = 0; i < cfg.epsilons.size(); ++i) {
        const std::string where = "epsilons[" + std::to_string(i) + "]";
        if (!(cfg.epsilons[i] > 0.0)) throw ConfigError(where, "must be positive");
        if (i > 0 && !(cfg.epsilons[i] < cfg.epsilons[i - 1])) throw ConfigError(where, "epsilons must be strictly decreasing");
    }
    if (root.has("betas")) cfg.betas = root.numbers("betas");
    else root.find("betas");
    for (std::size_t i = 0; i < cfg.betas.size(); ++i) {
        const std::string where = "betas[" + std::to_string(i) + "]";
        if (!(cfg.betas[i] >= 0.0 && cfg.betas[i] < cfg.model.alpha)) throw ConfigError(where, "must lie in [0, alpha)");
        if (i > 0 && !(cfg.betas[i] > cfg.betas[i - 1])) throw ConfigError(where, "betas must be strictly increasing");
    }
    if (cfg.betas.empty()) throw ConfigError("betas", "need at least one value");

    cfg.horizon = root.number_or("horizon", 1.0);
    if (!(cfg.horizon > 0.0)) throw ConfigError("horizon", "must be positive");
    cfg.n_paths = root.count("n_paths");
    if (cfg.n_paths < 2) throw ConfigError("n_paths", "need at least 2 paths");
    cfg.seed = root.count_or("master_seed", 1);
    cfg.output_dir = root.string_or("output_dir", "out");

    if (root.has("grid")) {
        auto g = root.object("grid");
        if (g.has("h")) cfg.grid.h = g.number("h");
        if (g.has("delta")) cfg.grid.delta = g.number("delta");
        cfg.grid.small_jumps = g.boolean_or("small_jumps", true);
        cfg.grid.max_steps = g.count_or("max_steps", cfg.grid.max_steps);
        if (cfg.grid.h && !(*cfg.grid.h > 0.0)) throw ConfigError(g.at("h"), "must be positive");
        if (cfg.grid.delta && !(*cfg.grid.delta > 0.0)) throw ConfigError(g.at("delta"), "must be positive");
        if (cfg.grid.max_steps == 0) throw ConfigError(g.at("max_steps"), "must be positive");
        g.finish();
    } else {
        root.find("grid");
    }

    if (root.has("rescaling")) {
        if (cfg.kind != StudyKind::rescaling) throw ConfigError("rescaling", "only valid for the rescaling experiment");
        auto r = root.object("rescaling");
        cfg.rescaling.refine = r.number_or("refine", cfg.rescaling.refine);
        cfg.rescaling.steps_per_exit = r.number_or("steps_per_exit", cfg.rescaling.steps_per_exit);
        cfg.rescaling.reference_paths = r.count_or("reference_paths", cfg.rescaling.reference_paths);
        if (!(cfg.rescaling.refine >= 1.0)) throw ConfigError(r.at("refine"), "must be at least 1");
        if (!(cfg.rescaling.steps_per_exit >= 10.0)) throw ConfigError(r.at("steps_per_exit"), "must be at least 10");
        if (cfg.rescaling.reference_paths < 2) throw ConfigError(r.at("reference_paths"), "need at least 2 paths");
        r.finish();
    } else {
        root.find("rescaling");
    }
    root.finish();

    if (cfg.kind == StudyKind::rate_comparison) {
        if (cfg.betas != std::vector<double>{0.0})
            throw ConfigError("betas", "the rate comparison budgets rebalancing counts; betas must be [0]");
        if (cfg.epsilons.size() < 6)
            throw ConfigError("epsilons", "the rate comparison fits slopes on all but the two largest epsilons; need at least 6");
    }
    return cfg;
}

inline ExperimentConfig parse_config_text(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError("", std::string("invalid JSON: ") + e.what());
    }
    return parse_config(doc);
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("", "cannot read config file '" + path + "'");
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

// ---------------------------------------------------------------------------
// Construction

/// The stable law of the integrand itself (raw models) or of the driving
/// process' small jumps (market models).
inline StableLaw model_stable_law(const ExperimentConfig& cfg) {
    return detail::config_guard("model", [&] {
        if (cfg.model.type == "raw_stable") return StableLaw(cfg.model.alpha, cfg.model.c_plus, cfg.model.c_minus);
        return build_truncated_stable_density(cfg.model.alpha, cfg.model.c_plus, cfg.model.c_minus, cfg.model.cutoff)
            .small_jump_law();
    });
}

inline LevyMarketModel build_model(const ExperimentConfig& cfg) {
    return detail::config_guard("model", [&] {
        if (cfg.model.type == "raw_stable")  // the market is unused; any valid density will do
            return LevyMarketModel(build_truncated_stable_density(cfg.model.alpha, 1.0, 1.0, 0.5), 1.0);
        return LevyMarketModel(
            build_truncated_stable_density(cfg.model.alpha, cfg.model.c_plus, cfg.model.c_minus, cfg.model.cutoff),
            cfg.model.y0);
    });
}

inline IntegrandSpec build_integrand(const ExperimentConfig& cfg) {
    return detail::config_guard("integrand", [&]() -> IntegrandSpec {
        const auto& in = cfg.integrand;
        if (in.type == "raw_stable") return RawStable{model_stable_law(cfg)};
        if (in.type == "merton") return Merton{in.pi, in.v0};
        if (in.hedge.type == "linear") return DeltaHedge{linear_hedge(in.hedge.slope)};
        if (!(in.hedge.maturity > cfg.horizon))
            throw DomainError("hedge maturity must lie beyond the horizon");
        return DeltaHedge{black_scholes_delta(in.hedge.strike, in.hedge.vol, in.hedge.maturity)};
    });
}

inline GridSpec build_grid(const ExperimentConfig& cfg, const LevyMarketModel& model) {
    GridSpec g = default_grid(model, cfg.horizon);
    if (cfg.grid.h) g.h = *cfg.grid.h;
    if (cfg.grid.delta) g.delta = *cfg.grid.delta;
    g.small_jumps = cfg.grid.small_jumps;
    g.max_steps = cfg.grid.max_steps;
    return g;
}

inline std::shared_ptr<const SimulationPlan> build_plan(const ExperimentConfig& cfg) {
    const auto model = build_model(cfg);
    const auto spec = build_integrand(cfg);
    detail::config_guard("integrand", [&] {
        validate_integrand(model, spec);
        return 0;
    });
    return detail::config_guard("grid", [&] {
        return std::make_shared<const SimulationPlan>(model, spec, build_grid(cfg, model));
    });
}

/// Stable law seen by the integrand at time zero, with its local intensity.
struct LocalLimit {
    StableLaw law;
    double lambda0;
};

inline LocalLimit local_limit(const ExperimentConfig& cfg, const SimulationPlan& plan) {
    const auto base = model_stable_law(cfg);
    ProcessState s;
    s.y = plan.model.y0;
    bool mirrored = false;
    if (const auto* m = std::get_if<Merton>(&plan.spec)) {
        s.v = m->v0;
        // dX = (pi - 1) X dZ at a jump: a negative factor mirrors the law
        mirrored = (m->pi - 1.0) * m->pi * m->v0 / plan.model.y0 < 0.0;
    }
    const double lambda0 = coefficient_processes(plan.model, plan.spec, s).lambda;
    if (mirrored) return {StableLaw(base.alpha(), base.c_minus(), base.c_plus()), lambda0};
    return {base, lambda0};
}

inline BarrierRule build_rule(const ExperimentConfig& cfg) {
    return detail::config_guard("rule", [&] {
        const auto& r = cfg.rule;
        const double alpha = cfg.model.alpha;
        if (r.type == "constant") return BarrierRule(ConstantPair{r.lower, r.upper}, alpha);
        if (r.type == "symmetric_power") return BarrierRule(SymmetricPower{r.c, r.beta}, alpha);
        if (r.type == "delta_hedge") {
            if (cfg.integrand.type != "delta_hedge") throw DomainError("the delta_hedge rule needs a delta_hedge integrand");
            return BarrierRule(DeltaHedgePower{r.c, r.beta}, alpha);
        }
        if (r.type == "merton") {
            if (cfg.integrand.type != "merton") throw DomainError("the merton rule needs a merton integrand");
            return BarrierRule(MertonPower{r.c, r.beta, cfg.integrand.pi}, alpha);
        }
        // optimal: Lagrangian minimizer at unit A and lambda
        const auto law = model_stable_law(cfg);
        if (cfg.integrand.type == "raw_stable") {
            const auto opt = minimize_lagrangian({1.0, 1.0, r.c, r.beta, law});
            return BarrierRule(ConstantPair{opt.barriers.lower, opt.barriers.upper}, alpha);
        }
        if (!law.is_symmetric())
            throw DomainError("the optimal rule for market models needs a symmetric jump law; use an explicit rule");
        // a_t = a*(A_t, lambda_t) = a*(1, 1) (lambda_t / A_t)^{1/(2+alpha-beta)}
        const auto opt = minimize_lagrangian({1.0, 1.0, r.c, r.beta, law});
        return BarrierRule(SymmetricPower{opt.half_width, r.beta}, alpha);
    });
}

/// Parses and builds every object the run will need.
inline void validate_config(const ExperimentConfig& cfg) {
    const auto plan = build_plan(cfg);
    if (cfg.kind != StudyKind::rescaling || !cfg.rule.type.empty()) build_rule(cfg);
}

} // namespace jumphedge
