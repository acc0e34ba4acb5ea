#pragma once

// Quantile regression over boosted trees plus split-conformal calibration of interval pairs.

#include "windprob/domain.hpp"
#include "windprob/gbt.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace windprob::cqr {

struct QuantileModelSet {
    std::vector<double> levels;
    std::vector<gbt::TreeEnsembleModel> models;

    /// Raw (unsorted) quantile predictions, one vector per row.
    std::vector<std::vector<double>> predict_raw(const FeatureMatrix& x) const {
        std::vector<std::vector<double>> out(x.rows(), std::vector<double>(levels.size()));
        for (std::size_t k = 0; k < models.size(); ++k) {
            const auto p = models[k].predict(x);
            for (std::size_t i = 0; i < p.size(); ++i) {
                out[i][k] = p[i];
            }
        }
        return out;
    }
};

/// Interval pair (α/2, 1-α/2) calibrated on a hold-out set.
struct ConformalCalibration {
    double alpha = 0.1;
    double s_hat = 0.0;
    std::size_t n_cal = 0;

    double lower_level() const { return alpha / 2.0; }
    double upper_level() const { return 1.0 - alpha / 2.0; }
};

inline QuantileModelSet train_quantile_models(const FeatureMatrix& x, std::span<const double> y,
                                              const gbt::GbtParams& params,
                                              std::span<const double> levels = kFixedLevels,
                                              const std::optional<gbt::Validation>& validation = std::nullopt) {
    QuantileModelSet set;
    for (double tau : levels) {
        set.levels.push_back(tau);
        set.models.push_back(gbt::train(x, y, gbt::quantile_objective(tau), params, validation));
    }
    return set;
}

/// Sorted copy: the rearrangement that removes quantile crossing.
inline std::vector<double> monotonize(std::span<const double> values) {
    std::vector<double> out(values.begin(), values.end());
    std::sort(out.begin(), out.end());
    return out;
}

/// Positive iff y lies outside [lo, hi]; magnitude is the distance to the nearer bound.
inline double conformal_score(double y, double lo, double hi) {
    require(lo <= hi, ErrorCode::CrossedInterval, "interval bounds are crossed; monotonize first");
    return std::max(lo - y, y - hi);
}

/// s_hat = k-th smallest score with k = ceil((n+1)(1-α)).
inline ConformalCalibration calibrate(std::span<const double> scores, double alpha) {
    require(alpha > 0.0 && alpha < 1.0, ErrorCode::InvalidArgument, "alpha must lie in (0,1)");
    require(!scores.empty(), ErrorCode::EmptyData, "no calibration scores");
    const std::size_t n = scores.size();
    const double level = static_cast<double>(n + 1) * (1.0 - alpha);
    const auto k = static_cast<std::size_t>(std::ceil(level - 1e-9));
    require(k <= n, ErrorCode::InfeasibleLevel,
            "(n+1)(1-alpha) exceeds n: need at least " + std::to_string(static_cast<std::size_t>(std::ceil(1.0 / alpha)) - 1) +
                " calibration scores");
    std::vector<double> sorted(scores.begin(), scores.end());
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(std::max<std::size_t>(k, 1) - 1),
                     sorted.end());
    return ConformalCalibration{alpha, sorted[std::max<std::size_t>(k, 1) - 1], n};
}

/// [q_lo - s_hat, q_hi + s_hat]; a crossed result collapses to its midpoint.
inline std::pair<double, double> conformalized_interval(const PredictiveDistribution& dist,
                                                        const ConformalCalibration& cal) {
    const auto lo = dist.at(cal.lower_level());
    const auto hi = dist.at(cal.upper_level());
    require(lo.has_value() && hi.has_value(), ErrorCode::MissingLevel,
            "distribution lacks the levels needed for alpha=" + std::to_string(cal.alpha));
    double a = *lo - cal.s_hat;
    double b = *hi + cal.s_hat;
    if (a > b) {
        a = b = 0.5 * (a + b);
    }
    return {a, b};
}

/// Scores for one interval pair on calibration rows, using monotonized raw quantiles.
inline ConformalCalibration calibrate_pair(const QuantileModelSet& models, const FeatureMatrix& x_cal,
                                           std::span<const double> y_cal, double alpha) {
    require(y_cal.size() == x_cal.rows(), ErrorCode::LengthMismatch, "calibration target length mismatch");
    const auto raw = models.predict_raw(x_cal);
    PredictiveDistribution probe;
    probe.levels = models.levels;
    std::vector<double> scores;
    scores.reserve(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        probe.values = monotonize(raw[i]);
        const auto lo = probe.at(alpha / 2.0);
        const auto hi = probe.at(1.0 - alpha / 2.0);
        require(lo.has_value() && hi.has_value(), ErrorCode::MissingLevel, "model set lacks levels for alpha");
        scores.push_back(conformal_score(y_cal[i], *lo, *hi));
    }
    return calibrate(scores, alpha);
}

/// Raw quantiles → monotonize → conformalize each calibrated pair → monotonize → clamp.
inline std::vector<PredictiveDistribution> predict_distribution(const QuantileModelSet& models, const FeatureMatrix& x,
                                                                std::span<const ConformalCalibration> cal = {},
                                                                std::optional<Bounds> clamp = std::nullopt) {
    const auto raw = models.predict_raw(x);
    std::vector<PredictiveDistribution> out;
    out.reserve(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        PredictiveDistribution d;
        d.time = x.times[i];
        d.levels = models.levels;
        d.values = monotonize(raw[i]);
        if (!cal.empty()) {
            auto adjusted = d.values;
            for (const auto& c : cal) {
                const auto [lo, hi] = conformalized_interval(d, c);
                for (std::size_t k = 0; k < d.levels.size(); ++k) {
                    if (std::abs(d.levels[k] - c.lower_level()) < 1e-12) {
                        adjusted[k] = lo;
                    } else if (std::abs(d.levels[k] - c.upper_level()) < 1e-12) {
                        adjusted[k] = hi;
                    }
                }
            }
            d.values = monotonize(adjusted);
        }
        if (clamp) {
            for (auto& v : d.values) {
                v = std::clamp(v, clamp->lower, clamp->upper);
            }
        }
        out.push_back(std::move(d));
    }
    return out;
}

/// Trained quantile models together with their calibration records.
struct CqrModel {
    QuantileModelSet models;
    std::vector<ConformalCalibration> calibrations;
    std::optional<Bounds> clamp;

    std::vector<PredictiveDistribution> predict(const FeatureMatrix& x) const {
        return predict_distribution(models, x, calibrations, clamp);
    }
};

/// Trains the quantile set on one split and calibrates each α on another.
inline CqrModel fit_cqr(const FeatureMatrix& x_train, std::span<const double> y_train, const FeatureMatrix& x_cal,
                        std::span<const double> y_cal, const gbt::GbtParams& params,
                        std::span<const double> alphas = std::vector<double>{0.1, 0.2},
                        std::optional<Bounds> clamp = std::nullopt) {
    CqrModel m;
    m.models = train_quantile_models(x_train, y_train, params);
    for (double a : alphas) {
        m.calibrations.push_back(calibrate_pair(m.models, x_cal, y_cal, a));
    }
    m.clamp = clamp;
    return m;
}

inline nlohmann::json to_json(const CqrModel& m) {
    nlohmann::json models = nlohmann::json::array();
    for (std::size_t k = 0; k < m.models.levels.size(); ++k) {
        models.push_back({{"level", m.models.levels[k]}, {"model", gbt::to_json(m.models.models[k])}});
    }
    nlohmann::json cals = nlohmann::json::array();
    for (const auto& c : m.calibrations) {
        cals.push_back({{"alpha", c.alpha}, {"s_hat", c.s_hat}, {"n_cal", c.n_cal}});
    }
    nlohmann::json j{{"format", "windprob.cqr"}, {"version", 1}, {"models", models}, {"calibration", cals}};
    j["clamp"] = m.clamp ? nlohmann::json{m.clamp->lower, m.clamp->upper} : nlohmann::json();
    return j;
}

inline CqrModel cqr_from_json(const nlohmann::json& j) {
    try {
        require(j.at("format").get<std::string>() == "windprob.cqr", ErrorCode::Parse, "not a cqr bundle");
        CqrModel m;
        for (const auto& e : j.at("models")) {
            m.models.levels.push_back(e.at("level").get<double>());
            m.models.models.push_back(gbt::model_from_json(e.at("model")));
        }
        for (const auto& c : j.at("calibration")) {
            m.calibrations.push_back({c.at("alpha").get<double>(), c.at("s_hat").get<double>(),
                                      c.at("n_cal").get<std::size_t>()});
        }
        if (!j.at("clamp").is_null()) {
            m.clamp = Bounds{j.at("clamp")[0].get<double>(), j.at("clamp")[1].get<double>()};
        }
        return m;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::Parse, std::string("malformed cqr bundle: ") + e.what());
    }
}

} // namespace windprob::cqr
