#pragma once

// Glue between the dataset bundle, trained heads and the scoring module: prediction files,
// tuning objectives and per-farm wake calibration files.
//
// Prediction CSV: time,farm_id,q<level>...[,mu,sigma]; point forecasts carry only q0.5.

#include "windprob/eval.hpp"
#include "windprob/pipeline/config.hpp"
#include "windprob/pipeline/dataset.hpp"
#include "windprob/pipeline/heads.hpp"
#include "windprob/pipeline/search.hpp"
#include "windprob/text.hpp"

#include <json.hpp>

#include <map>
#include <string>
#include <unordered_map>
#include <vector>

namespace windprob::pipeline {

struct FarmPredictions {
    std::string farm_id;
    std::vector<PredictiveDistribution> dists;
};

inline std::string predictions_to_csv(const std::vector<FarmPredictions>& farms) {
    require(!farms.empty() && !farms.front().dists.empty(), ErrorCode::EmptyData, "no predictions to write");
    const auto& first = farms.front().dists.front();
    const bool gaussian = first.gaussian.has_value();
    std::string out = "time,farm_id";
    for (double l : first.levels) {
        out += ",q" + text::format_double(l);
    }
    out += gaussian ? ",mu,sigma\n" : "\n";
    for (const auto& f : farms) {
        for (const auto& d : f.dists) {
            require(d.levels == first.levels && d.gaussian.has_value() == gaussian, ErrorCode::SchemaMismatch,
                    "predictions differ in quantile levels");
            out += d.time.to_string() + "," + f.farm_id;
            for (double v : d.values) {
                out += "," + text::format_double(v);
            }
            if (gaussian) {
                out += "," + text::format_double(d.gaussian->mu) + "," + text::format_double(d.gaussian->sigma);
            }
            out += "\n";
        }
    }
    return out;
}

inline std::vector<FarmPredictions> predictions_from_csv(std::string_view content) {
    const auto t = text::parse_csv(content);
    require(t.header.size() >= 3 && t.header[0] == "time" && t.header[1] == "farm_id", ErrorCode::SchemaMismatch,
            "predictions must start with time,farm_id");
    std::vector<double> levels;
    std::size_t c = 2;
    for (; c < t.header.size() && !t.header[c].empty() && t.header[c][0] == 'q'; ++c) {
        levels.push_back(text::parse_double(t.header[c].substr(1)));
    }
    const bool gaussian = c + 2 == t.header.size() && t.header[c] == "mu" && t.header[c + 1] == "sigma";
    require(!levels.empty() && (gaussian || c == t.header.size()), ErrorCode::SchemaMismatch,
            "predictions header has unexpected columns");
    std::vector<FarmPredictions> out;
    std::map<std::string, std::size_t> index;
    for (const auto& row : t.rows) {
        PredictiveDistribution d;
        d.time = Timestamp::parse(row[0]);
        d.levels = levels;
        for (std::size_t k = 0; k < levels.size(); ++k) {
            d.values.push_back(text::parse_double(row[2 + k]));
        }
        if (gaussian) {
            d.gaussian = GaussianSummary{text::parse_double(row[c]), text::parse_double(row[c + 1])};
        }
        d.validate();
        const auto [it, inserted] = index.emplace(row[1], out.size());
        if (inserted) {
            out.push_back({row[1], {}});
        }
        out[it->second].dists.push_back(std::move(d));
    }
    return out;
}

/// Pairs predictions with observed power and mean speeds from a dataset split. Every split row
/// must have a prediction.
inline std::vector<eval::FarmForecasts> join_predictions(const Dataset& ds, SplitRole role,
                                                         const std::vector<FarmPredictions>& preds) {
    std::vector<eval::FarmForecasts> out;
    for (const auto& farm : ds.farms) {
        const FarmPredictions* p = nullptr;
        for (const auto& fp : preds) {
            p = fp.farm_id == farm.farm_id ? &fp : p;
        }
        require(p != nullptr, ErrorCode::Misalignment, "no predictions for farm " + farm.farm_id);
        std::unordered_map<std::int64_t, const PredictiveDistribution*> by_time;
        for (const auto& d : p->dists) {
            by_time.emplace(d.time.hours(), &d);
        }
        const auto& s = farm.split(role);
        eval::FarmForecasts f;
        f.layout = &ds.layout(farm.farm_id);
        for (std::size_t i = 0; i < s.rows(); ++i) {
            const auto it = by_time.find(s.x.times[i].hours());
            require(it != by_time.end(), ErrorCode::Misalignment,
                    "farm " + farm.farm_id + ": no prediction at " + s.x.times[i].to_string());
            f.y.push_back(s.y()[i]);
            f.dists.push_back(*it->second);
            f.mean_speed.push_back(s.mean_speed[i]);
        }
        out.push_back(std::move(f));
    }
    return out;
}

inline std::vector<FarmPredictions> predict_all(const Dataset& ds, SplitRole role,
                                                const std::vector<HeadModel>& models, std::uint64_t seed) {
    std::vector<FarmPredictions> out;
    for (const auto& farm : ds.farms) {
        const HeadModel* m = nullptr;
        for (const auto& hm : models) {
            m = hm.farm_id == farm.farm_id ? &hm : m;
        }
        require(m != nullptr, ErrorCode::Misalignment, "no model for farm " + farm.farm_id);
        out.push_back({farm.farm_id, predict_head(*m, farm.split(role).x, seed)});
    }
    return out;
}

inline std::vector<HeadModel> train_all(Head head, const HeadsConfig& cfg, const Dataset& ds, std::uint64_t seed) {
    std::vector<HeadModel> out;
    for (std::size_t i = 0; i < ds.farms.size(); ++i) {
        out.push_back(train_head(head, cfg, ds.farms[i], ds.layout(ds.farms[i].farm_id), farm_seed(seed, i)));
    }
    return out;
}

/// Search space of a head: the leaf-wise space for diffusion, the depth-wise space otherwise.
inline const SearchSpace& head_space(Head head, const SearchConfig& cfg) {
    return head == Head::Diffusion ? cfg.lightgbm : cfg.xgboost;
}

/// Heads configuration with a search point applied to `head`.
inline HeadsConfig with_point(HeadsConfig cfg, Head head, const ParamPoint& point) {
    switch (head) {
    case Head::Cqr: apply_point(cfg.cqr.gbt, nullptr, point); break;
    case Head::Ngboost: apply_point(cfg.ngboost.gbt, nullptr, point); break;
    case Head::Diffusion: apply_point(cfg.diffusion.params.tree, &cfg.diffusion.params.n_repeats, point); break;
    }
    return cfg;
}

/// Tuning objective: mean over farms of the calibration-split CRPS (fraction of capacity).
inline double calibration_crps(const Dataset& ds, Head head, const HeadsConfig& cfg, std::uint64_t seed) {
    const auto models = train_all(head, cfg, ds, seed);
    const auto forecasts = join_predictions(ds, SplitRole::Calibration, predict_all(ds, SplitRole::Calibration, models, seed));
    const auto report = eval::build_report(to_string(head), forecasts, std::vector<double>{});
    require(report.average.crps.has_value(), ErrorCode::MissingLevel, "tuning objective needs the fixed quantile levels");
    return *report.average.crps;
}

inline SearchResult tune_head(const Dataset& ds, Head head, const Config& cfg, std::uint64_t seed) {
    return random_search(
        head_space(head, cfg.search), cfg.search.n_iter, seed,
        [&](const ParamPoint& p) { return calibration_crps(ds, head, with_point(cfg.heads, head, p), seed); },
        cfg.search.workers);
}

inline nlohmann::json best_to_json(Head head, const SearchResult& r) {
    const auto& t = r.best_trial();
    return {{"format", "windprob.best"}, {"head", to_string(head)}, {"trial", t.index}, {"params", t.params},
            {"score", *t.score}, {"objective", "calibration_crps"}};
}

/// Reads a tune result and returns the search point, checking that it belongs to `head`.
inline ParamPoint best_from_json(const nlohmann::json& j, Head head) {
    try {
        require(j.at("format").get<std::string>() == "windprob.best", ErrorCode::Parse, "not a tuning result");
        require(j.at("head").get<std::string>() == to_string(head), ErrorCode::InvalidArgument,
                "tuning result is for head " + j.at("head").get<std::string>());
        return j.at("params").get<ParamPoint>();
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::Parse, std::string("malformed tuning result: ") + e.what());
    }
}

/// Calibrated wake parameters per farm.
inline nlohmann::json calibrations_to_json(const std::vector<std::pair<std::string, wake::CalibrationReport>>& reports) {
    nlohmann::json farms = nlohmann::json::array();
    for (const auto& [id, r] : reports) {
        farms.push_back(to_json(r, id));
    }
    return {{"format", "windprob.wake_calibrations"}, {"farms", farms}};
}

inline std::map<std::string, wake::WakeParams> calibrations_from_json(const nlohmann::json& j) {
    std::map<std::string, wake::WakeParams> out;
    try {
        require(j.at("format").get<std::string>() == "windprob.wake_calibrations", ErrorCode::Parse,
                "not a wake calibration file");
        for (const auto& f : j.at("farms")) {
            wake::WakeParams p{f.at("k_a").get<double>(), f.at("k_b").get<double>(), f.at("ambient_ti_iref").get<double>()};
            p.validate();
            out.emplace(f.at("farm_id").get<std::string>(), p);
        }
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::Parse, std::string("malformed wake calibration file: ") + e.what());
    }
    return out;
}

enum class Baseline { PowerCurve, Wake };

inline std::vector<FarmPredictions> baseline_predictions(const Dataset& ds, SplitRole role, Baseline kind,
                                                         const std::map<std::string, wake::WakeParams>& params,
                                                         const wake::WakeParams& fallback) {
    std::vector<FarmPredictions> out;
    for (const auto& farm : ds.farms) {
        const auto& layout = ds.layout(farm.farm_id);
        const auto& s = farm.split(role);
        std::vector<double> v;
        if (kind == Baseline::PowerCurve) {
            v = power_curve_baseline(layout, s, farm.max_observed_train);
        } else {
            const auto it = params.find(farm.farm_id);
            v = wake_baseline(layout, s, it != params.end() ? it->second : fallback, farm.max_observed_train);
        }
        FarmPredictions fp{farm.farm_id, {}};
        for (std::size_t i = 0; i < v.size(); ++i) {
            fp.dists.push_back(point_distribution(s.x.times[i], v[i]));
        }
        out.push_back(std::move(fp));
    }
    return out;
}

} // namespace windprob::pipeline
