#pragma once

// Uniform training and prediction over the three probabilistic heads and the two engineering
// baselines, one model per farm.

#include "windprob/cqr.hpp"
#include "windprob/diffusion.hpp"
#include "windprob/ngboost.hpp"
#include "windprob/pipeline/config.hpp"
#include "windprob/pipeline/dataset.hpp"
#include "windprob/wake.hpp"

#include <json.hpp>

#include <algorithm>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace windprob::pipeline {

enum class Head { Cqr, Ngboost, Diffusion };

inline Head parse_head(const std::string& s) {
    if (s == "cqr") {
        return Head::Cqr;
    }
    if (s == "ngboost") {
        return Head::Ngboost;
    }
    if (s == "diffusion") {
        return Head::Diffusion;
    }
    fail(ErrorCode::InvalidArgument, "unknown head '" + s + "' (expected cqr, ngboost or diffusion)");
}

inline std::string to_string(Head h) {
    switch (h) {
    case Head::Cqr: return "cqr";
    case Head::Ngboost: return "ngboost";
    case Head::Diffusion: return "diffusion";
    }
    return "cqr";
}

/// A trained head for one farm, held as its serialized bundle.
struct HeadModel {
    Head head = Head::Cqr;
    std::string farm_id;
    nlohmann::json bundle;
};

/// Seeds derived per farm so farms train on independent subsampling streams.
inline std::uint64_t farm_seed(std::uint64_t seed, std::size_t farm_index) {
    return diffusion::draw_seed(seed, 0xfa53, farm_index);
}

inline HeadModel train_head(Head head, const HeadsConfig& cfg, const FarmData& farm, const FarmLayout& layout,
                            std::uint64_t seed) {
    const Bounds clamp{0.0, layout.installed_capacity()};
    HeadModel m{head, farm.farm_id, {}};
    switch (head) {
    case Head::Cqr: {
        auto p = cfg.cqr.gbt;
        p.seed = seed;
        const auto model = cqr::fit_cqr(farm.train.x, farm.train.y(), farm.calibration.x, farm.calibration.y(), p,
                                        cfg.cqr.alphas, clamp);
        m.bundle = cqr::to_json(model);
        break;
    }
    case Head::Ngboost: {
        auto p = cfg.ngboost.gbt;
        p.seed = seed;
        std::optional<gbt::Validation> val;
        if (cfg.ngboost.validate_on_calibration && p.early_stopping_rounds) {
            val.emplace(gbt::Validation{farm.calibration.x, farm.calibration.y()});
        } else {
            p.early_stopping_rounds.reset();
        }
        m.bundle = ngboost::to_json(ngboost::train_ngboost(farm.train.x, farm.train.y(), p, cfg.ngboost.options, val));
        break;
    }
    case Head::Diffusion: {
        auto p = cfg.diffusion.params;
        p.tree.seed = seed;
        std::optional<gbt::Validation> val;
        if (cfg.diffusion.validate_on_calibration && p.tree.early_stopping_rounds) {
            val.emplace(gbt::Validation{farm.calibration.x, farm.calibration.y()});
        } else {
            p.tree.early_stopping_rounds.reset();
        }
        auto model = diffusion::train_diffusion(farm.train.x, farm.train.y(), p, val);
        model.set_clamp(clamp);
        m.bundle = diffusion::to_json(model);
        break;
    }
    }
    return m;
}

inline std::vector<PredictiveDistribution> predict_head(const HeadModel& m, const FeatureMatrix& x, std::uint64_t seed) {
    switch (m.head) {
    case Head::Cqr: return cqr::cqr_from_json(m.bundle).predict(x);
    case Head::Ngboost: return ngboost::ngboost_from_json(m.bundle).predict(x);
    case Head::Diffusion: return diffusion::diffusion_from_json(m.bundle).predict(x, seed);
    }
    return {};
}

inline nlohmann::json to_json(const HeadModel& m) {
    return {{"format", "windprob.head"}, {"head", to_string(m.head)}, {"farm_id", m.farm_id}, {"model", m.bundle}};
}

inline HeadModel head_from_json(const nlohmann::json& j) {
    try {
        require(j.at("format").get<std::string>() == "windprob.head", ErrorCode::Parse, "not a head bundle");
        return {parse_head(j.at("head").get<std::string>()), j.at("farm_id").get<std::string>(), j.at("model")};
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::Parse, std::string("malformed head bundle: ") + e.what());
    }
}

// ---------------------------------------------------------------------------------------------
// Engineering baselines (point forecasts from the ensemble-mean wind)

inline PredictiveDistribution point_distribution(Timestamp t, double v) {
    PredictiveDistribution d;
    d.time = t;
    d.levels = {0.5};
    d.values = {v};
    return d;
}

inline std::vector<double> power_curve_baseline(const FarmLayout& layout, const SplitData& s, double max_observed) {
    std::vector<double> raw;
    raw.reserve(s.rows());
    for (double v : s.mean_speed) {
        raw.push_back(wake::power_curve_forecast(layout, v));
    }
    return wake::rescale_engineering(raw, max_observed, layout.installed_capacity());
}

inline std::vector<double> wake_baseline(const FarmLayout& layout, const SplitData& s, const wake::WakeParams& params,
                                         double max_observed) {
    std::vector<double> raw;
    raw.reserve(s.rows());
    for (std::size_t i = 0; i < s.rows(); ++i) {
        raw.push_back(wake::farm_power(layout, {s.mean_speed[i], s.mean_direction[i]}, params).total_power);
    }
    return wake::rescale_engineering(raw, max_observed, layout.installed_capacity());
}

/// Fits (k_a, k_b) on training rows. The flow is the reference wind when available, otherwise
/// the ensemble mean; observations are divided by the rescaling ratio so the fit sees
/// grid-loss-free power. At most `max_calibration_cases` rows are used, at an even stride.
inline wake::CalibrationReport calibrate_farm_wake(const FarmLayout& layout, const FarmData& farm,
                                                   const std::vector<MeanInput>& reference, const WakeConfig& cfg) {
    std::unordered_map<std::int64_t, MeanInput> ref;
    for (const auto& r : reference) {
        ref.emplace(r.time.hours(), r);
    }
    const double ratio = farm.max_observed_train / layout.installed_capacity();
    require(ratio > 0.0, ErrorCode::DegenerateData, "farm " + farm.farm_id + " has no positive training power");
    std::vector<wake::WakeObservation> obs;
    const auto& s = farm.train;
    const std::size_t stride = (s.rows() + cfg.max_calibration_cases - 1) / cfg.max_calibration_cases;
    for (std::size_t i = 0; i < s.rows(); i += std::max<std::size_t>(stride, 1)) {
        const auto it = ref.find(s.x.times[i].hours());
        const wake::FlowCase flow = it != ref.end() ? wake::FlowCase{it->second.wind_speed, it->second.wind_direction}
                                                    : wake::FlowCase{s.mean_speed[i], s.mean_direction[i]};
        obs.push_back({flow, s.y()[i] / ratio});
    }
    return wake::calibrate_wake(layout, obs, cfg.params, cfg.calibration);
}

inline nlohmann::json to_json(const wake::CalibrationReport& r, const std::string& farm_id) {
    return {{"format", "windprob.wake_calibration"},
            {"farm_id", farm_id},
            {"k_a", r.params.k_a},
            {"k_b", r.params.k_b},
            {"ambient_ti_iref", r.params.ambient_ti_iref},
            {"rmse_mw", r.rmse},
            {"n_cases", r.n_cases},
            {"evaluations", r.evaluations}};
}

} // namespace windprob::pipeline
