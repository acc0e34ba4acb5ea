#pragma once

// Run configuration: one JSON document mirroring the scenario, features, split, filters, heads,
// wake model, search, evaluation and ablation settings. Unknown keys are rejected.

#include "windprob/diffusion.hpp"
#include "windprob/features.hpp"
#include "windprob/gbt.hpp"
#include "windprob/ngboost.hpp"
#include "windprob/pipeline/filters.hpp"
#include "windprob/pipeline/search.hpp"
#include "windprob/pipeline/split.hpp"
#include "windprob/pipeline/strict_json.hpp"
#include "windprob/pipeline/synthetic.hpp"
#include "windprob/text.hpp"
#include "windprob/wake.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace windprob::pipeline {

struct FilterConfig {
    bool balancing = true;
    bool economic = true;
    EconomicFilterOptions economic_options;
};

struct CqrHeadConfig {
    gbt::GbtParams gbt;
    std::vector<double> alphas = {0.1, 0.2};

    CqrHeadConfig() {
        gbt.n_estimators = 300;
        gbt.learning_rate = 0.05;
        gbt.max_depth = 3;
        gbt.min_child_weight = 20;
    }
};

struct NgboostHeadConfig {
    gbt::GbtParams gbt;
    ngboost::NgboostOptions options;
    /// Early stopping on the calibration split when gbt.early_stopping_rounds is set.
    bool validate_on_calibration = true;

    NgboostHeadConfig() {
        gbt.n_estimators = 500;
        gbt.learning_rate = 0.05;
        gbt.max_depth = 3;
        gbt.min_child_weight = 20;
        gbt.early_stopping_rounds = 30;
        options.sigma_floor = 1e-3;
    }
};

struct DiffusionHeadConfig {
    diffusion::DiffusionParams params;
    /// Early stopping on the calibration split when params.tree.early_stopping_rounds is set.
    bool validate_on_calibration = true;

    DiffusionHeadConfig() {
        params.tree.n_estimators = 300;
        params.tree.learning_rate = 0.1;
        params.tree.max_depth = 7;
        params.tree.num_leaves = 31;
        params.tree.min_child_weight = 20;
        params.n_repeats = 10;
    }
};

struct HeadsConfig {
    CqrHeadConfig cqr;
    NgboostHeadConfig ngboost;
    DiffusionHeadConfig diffusion;
};

struct WakeConfig {
    wake::WakeParams params;
    wake::CalibrationOptions calibration;
    /// Training rows used for calibration, taken at an even stride.
    std::size_t max_calibration_cases = 500;
};

struct SearchConfig {
    int n_iter = 25;
    int workers = 1;
    SearchSpace xgboost = xgboost_space();
    SearchSpace lightgbm = lightgbm_space();
};

struct EvalConfig {
    std::vector<double> alphas = {0.1, 0.2};
};

struct AblationConfig {
    std::string head = "cqr";
};

struct Config {
    std::uint64_t seed = 1;
    SyntheticScenario scenario;
    FeatureOptions features;
    SplitSpec split;
    FilterConfig filters;
    HeadsConfig heads;
    WakeConfig wake;
    SearchConfig search;
    EvalConfig eval;
    AblationConfig ablation;

    void validate() const {
        scenario.validate();
        split.validate();
        require(!features.lags.empty(), ErrorCode::Config, "features.lags must not be empty");
        heads.cqr.gbt.validate();
        for (double a : heads.cqr.alphas) {
            require(a > 0.0 && a < 1.0, ErrorCode::Config, "heads.cqr.alphas must lie in (0,1)");
        }
        heads.ngboost.gbt.validate();
        require(heads.ngboost.options.sigma_floor > 0.0, ErrorCode::Config, "heads.ngboost.sigma_floor must be > 0");
        heads.diffusion.params.validate();
        wake.params.validate();
        require(wake.max_calibration_cases >= 1, ErrorCode::Config, "wake.max_calibration_cases must be >= 1");
        require(search.n_iter >= 1 && search.workers >= 1, ErrorCode::Config, "search.n_iter and search.workers must be >= 1");
        require(ablation.head == "cqr" || ablation.head == "ngboost" || ablation.head == "diffusion", ErrorCode::Config,
                "ablation.head must be cqr, ngboost or diffusion");
    }
};

namespace detail {

inline nlohmann::json gbt_json(const gbt::GbtParams& p) {
    nlohmann::json j{{"learning_rate", p.learning_rate}, {"max_depth", p.max_depth},
                     {"min_child_weight", p.min_child_weight}, {"gamma", p.gamma},
                     {"subsample", p.subsample}, {"n_estimators", p.n_estimators},
                     {"num_leaves", p.num_leaves}, {"reg_lambda", p.reg_lambda}};
    j["early_stopping_rounds"] = p.early_stopping_rounds ? nlohmann::json(*p.early_stopping_rounds) : nlohmann::json();
    return j;
}

inline void read_gbt(StrictObject& o, gbt::GbtParams& p) {
    o.get("learning_rate", p.learning_rate);
    o.get("max_depth", p.max_depth);
    o.get("min_child_weight", p.min_child_weight);
    o.get("gamma", p.gamma);
    o.get("subsample", p.subsample);
    o.get("n_estimators", p.n_estimators);
    o.get("num_leaves", p.num_leaves);
    o.get("reg_lambda", p.reg_lambda);
    o.get("early_stopping_rounds", p.early_stopping_rounds);
}

} // namespace detail

inline nlohmann::json to_json(const Config& c) {
    const auto& d = c.heads.diffusion.params;
    const auto& cal = c.wake.calibration;
    return {{"seed", c.seed},
            {"scenario", to_json(c.scenario)},
            {"features", {{"lags", c.features.lags}, {"providers", c.features.providers}}},
            {"split", to_json(c.split)},
            {"filters",
             {{"balancing", c.filters.balancing},
              {"economic", c.filters.economic},
              {"bin_width", c.filters.economic_options.bin_width},
              {"min_bin_count", c.filters.economic_options.min_count},
              {"drop_quantile", c.filters.economic_options.drop_quantile}}},
            {"heads",
             {{"cqr", {{"gbt", detail::gbt_json(c.heads.cqr.gbt)}, {"alphas", c.heads.cqr.alphas}}},
              {"ngboost",
               {{"gbt", detail::gbt_json(c.heads.ngboost.gbt)},
                {"sigma_floor", c.heads.ngboost.options.sigma_floor},
                {"max_halvings", c.heads.ngboost.options.max_halvings},
                {"validate_on_calibration", c.heads.ngboost.validate_on_calibration}}},
              {"diffusion",
               {{"gbt", detail::gbt_json(d.tree)},
                {"n_repeats", d.n_repeats},
                {"sigma_min", d.sde.sigma_min},
                {"sigma_max", d.sde.sigma_max},
                {"n_samples", d.n_samples},
                {"n_steps", d.n_steps},
                {"validate_on_calibration", c.heads.diffusion.validate_on_calibration}}}}},
            {"wake",
             {{"k_a", c.wake.params.k_a},
              {"k_b", c.wake.params.k_b},
              {"ambient_ti_iref", c.wake.params.ambient_ti_iref},
              {"calibration",
               {{"k_a_min", cal.k_a_min},
                {"k_a_max", cal.k_a_max},
                {"k_b_min", cal.k_b_min},
                {"k_b_max", cal.k_b_max},
                {"grid_points", cal.grid_points},
                {"tolerance", cal.tolerance},
                {"max_evaluations", cal.max_evaluations},
                {"min_observations", cal.min_observations}}},
              {"max_calibration_cases", c.wake.max_calibration_cases}}},
            {"search",
             {{"n_iter", c.search.n_iter},
              {"workers", c.search.workers},
              {"xgboost_space", to_json(c.search.xgboost)},
              {"lightgbm_space", to_json(c.search.lightgbm)}}},
            {"eval", {{"alphas", c.eval.alphas}}},
            {"ablation", {{"head", c.ablation.head}}}};
}

/// Starts from the defaults and overrides every key present in `j`.
inline Config config_from_json(const nlohmann::json& j) {
    Config c;
    StrictObject root(j, "config");
    root.get("seed", c.seed);
    root.object("scenario", [&](StrictObject& o) { read_scenario(o, c.scenario); });
    root.object("features", [&](StrictObject& o) {
        o.get("lags", c.features.lags);
        o.get("providers", c.features.providers);
    });
    root.object("split", [&](StrictObject& o) { read_split(o, c.split); });
    root.object("filters", [&](StrictObject& o) {
        o.get("balancing", c.filters.balancing);
        o.get("economic", c.filters.economic);
        o.get("bin_width", c.filters.economic_options.bin_width);
        o.get("min_bin_count", c.filters.economic_options.min_count);
        o.get("drop_quantile", c.filters.economic_options.drop_quantile);
    });
    root.object("heads", [&](StrictObject& h) {
        h.object("cqr", [&](StrictObject& o) {
            o.object("gbt", [&](StrictObject& g) { detail::read_gbt(g, c.heads.cqr.gbt); });
            o.get("alphas", c.heads.cqr.alphas);
        });
        h.object("ngboost", [&](StrictObject& o) {
            o.object("gbt", [&](StrictObject& g) { detail::read_gbt(g, c.heads.ngboost.gbt); });
            o.get("sigma_floor", c.heads.ngboost.options.sigma_floor);
            o.get("max_halvings", c.heads.ngboost.options.max_halvings);
            o.get("validate_on_calibration", c.heads.ngboost.validate_on_calibration);
        });
        h.object("diffusion", [&](StrictObject& o) {
            auto& d = c.heads.diffusion.params;
            o.object("gbt", [&](StrictObject& g) { detail::read_gbt(g, d.tree); });
            o.get("n_repeats", d.n_repeats);
            o.get("sigma_min", d.sde.sigma_min);
            o.get("sigma_max", d.sde.sigma_max);
            o.get("n_samples", d.n_samples);
            o.get("n_steps", d.n_steps);
            o.get("validate_on_calibration", c.heads.diffusion.validate_on_calibration);
        });
    });
    root.object("wake", [&](StrictObject& o) {
        o.get("k_a", c.wake.params.k_a);
        o.get("k_b", c.wake.params.k_b);
        o.get("ambient_ti_iref", c.wake.params.ambient_ti_iref);
        o.object("calibration", [&](StrictObject& k) {
            auto& cal = c.wake.calibration;
            k.get("k_a_min", cal.k_a_min);
            k.get("k_a_max", cal.k_a_max);
            k.get("k_b_min", cal.k_b_min);
            k.get("k_b_max", cal.k_b_max);
            k.get("grid_points", cal.grid_points);
            k.get("tolerance", cal.tolerance);
            k.get("max_evaluations", cal.max_evaluations);
            k.get("min_observations", cal.min_observations);
        });
        o.get("max_calibration_cases", c.wake.max_calibration_cases);
    });
    root.object("search", [&](StrictObject& o) {
        o.get("n_iter", c.search.n_iter);
        o.get("workers", c.search.workers);
        nlohmann::json space;
        o.get("xgboost_space", space);
        if (!space.is_null()) {
            c.search.xgboost = search_space_from_json(space, "config.search.xgboost_space");
        }
        space = nullptr;
        o.get("lightgbm_space", space);
        if (!space.is_null()) {
            c.search.lightgbm = search_space_from_json(space, "config.search.lightgbm_space");
        }
    });
    root.object("eval", [&](StrictObject& o) { o.get("alphas", c.eval.alphas); });
    root.object("ablation", [&](StrictObject& o) { o.get("head", c.ablation.head); });
    root.finish();
    c.validate();
    return c;
}

inline Config load_config(const std::string& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text::read_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        fail(ErrorCode::Config, "config " + path + " is not valid JSON: " + e.what());
    }
    return config_from_json(j);
}

/// Applies a search point to a head's parameters; names follow the config keys.
inline void apply_point(gbt::GbtParams& p, int* n_repeats, const ParamPoint& point) {
    for (const auto& [name, v] : point) {
        if (name == "learning_rate" || name == "eta") {
            p.learning_rate = v;
        } else if (name == "max_depth") {
            p.max_depth = static_cast<int>(v);
        } else if (name == "min_child_weight") {
            p.min_child_weight = v;
        } else if (name == "gamma") {
            p.gamma = v;
        } else if (name == "subsample") {
            p.subsample = v;
        } else if (name == "n_estimators") {
            p.n_estimators = static_cast<int>(v);
        } else if (name == "num_leaves") {
            p.num_leaves = static_cast<int>(v);
        } else if (name == "early_stopping_rounds") {
            p.early_stopping_rounds = static_cast<int>(v);
        } else if (name == "reg_lambda") {
            p.reg_lambda = v;
        } else if (name == "n_repeats" && n_repeats != nullptr) {
            *n_repeats = static_cast<int>(v);
        } else {
            fail(ErrorCode::Config, "search parameter '" + name + "' does not apply to this head");
        }
    }
}

} // namespace windprob::pipeline
