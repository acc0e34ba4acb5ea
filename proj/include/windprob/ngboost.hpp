#pragma once

// Natural-gradient boosting of a conditional Normal in the (μ, log σ) chart.
// The Fisher information there is diag(1/σ², 2), so the natural gradient has a closed form.

#include "windprob/domain.hpp"
#include "windprob/gbt.hpp"
#include "windprob/stats.hpp"

#include <json.hpp>

#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

namespace windprob::ngboost {

struct GaussianParams {
    double mu = 0.0;
    double log_sigma = 0.0;

    double sigma() const { return std::exp(log_sigma); }
};

struct ScoreGradient {
    double d_mu = 0.0;
    double d_log_sigma = 0.0;
};

inline void check_finite(double y, const GaussianParams& p) {
    require(std::isfinite(y) && std::isfinite(p.mu) && std::isfinite(p.log_sigma), ErrorCode::NonFiniteInput,
            "log score needs finite y, mu and log sigma");
}

/// Negative log density of N(μ, σ²) at y.
inline double log_score(double y, const GaussianParams& p) {
    check_finite(y, p);
    const double z = (y - p.mu) / p.sigma();
    return 0.5 * std::log(2.0 * std::numbers::pi) + p.log_sigma + 0.5 * z * z;
}

inline ScoreGradient ordinary_gradient(double y, const GaussianParams& p) {
    check_finite(y, p);
    const double s2 = p.sigma() * p.sigma();
    const double r = y - p.mu;
    return {-r / s2, 1.0 - r * r / s2};
}

/// Diagonal of the Fisher information for (μ, log σ).
inline std::array<double, 2> fisher_diagonal(const GaussianParams& p) {
    const double s2 = p.sigma() * p.sigma();
    return {1.0 / s2, 2.0};
}

inline ScoreGradient natural_gradient(double y, const GaussianParams& p) {
    check_finite(y, p);
    const double s2 = p.sigma() * p.sigma();
    const double r = y - p.mu;
    return {p.mu - y, 0.5 * (1.0 - r * r / s2)};
}

/// μ + σ·Φ⁻¹(τ) for each level.
inline std::vector<double> gaussian_quantiles(const GaussianParams& p, std::span<const double> levels) {
    std::vector<double> out;
    out.reserve(levels.size());
    const double s = p.sigma();
    for (double tau : levels) {
        out.push_back(p.mu + s * stats::normal_ppf(tau));
    }
    return out;
}

struct NgboostOptions {
    /// Lower bound on σ applied whenever parameters are evaluated (MW in the forecasting pipeline).
    double sigma_floor = 1e-6;
    /// Halvings tried by the per-round line search before boosting stops.
    int max_halvings = 10;
};

class NgboostModel {
public:
    NgboostModel() = default;
    NgboostModel(gbt::TreeEnsembleModel mu, gbt::TreeEnsembleModel log_sigma, double sigma_floor)
        : mu_(std::move(mu)), log_sigma_(std::move(log_sigma)), sigma_floor_(sigma_floor) {}

    const gbt::TreeEnsembleModel& mu_model() const { return mu_; }
    const gbt::TreeEnsembleModel& log_sigma_model() const { return log_sigma_; }
    double sigma_floor() const { return sigma_floor_; }
    double initial_mu() const { return mu_.base_score(); }
    double initial_log_sigma() const { return log_sigma_.base_score(); }

    GaussianParams floored(double mu, double log_sigma) const {
        return {mu, std::max(log_sigma, std::log(sigma_floor_))};
    }

    std::vector<GaussianParams> predict_params(const FeatureMatrix& x) const {
        const auto m = mu_.predict(x);
        const auto s = log_sigma_.predict(x);
        std::vector<GaussianParams> out;
        out.reserve(m.size());
        for (std::size_t i = 0; i < m.size(); ++i) {
            out.push_back(floored(m[i], s[i]));
        }
        return out;
    }

    std::vector<PredictiveDistribution> predict(const FeatureMatrix& x,
                                                std::span<const double> levels = kFixedLevels) const {
        const auto params = predict_params(x);
        std::vector<PredictiveDistribution> out;
        out.reserve(params.size());
        for (std::size_t i = 0; i < params.size(); ++i) {
            PredictiveDistribution d;
            d.time = x.times[i];
            d.levels.assign(levels.begin(), levels.end());
            d.values = gaussian_quantiles(params[i], levels);
            d.gaussian = GaussianSummary{params[i].mu, params[i].sigma()};
            out.push_back(std::move(d));
        }
        return out;
    }

private:
    gbt::TreeEnsembleModel mu_;
    gbt::TreeEnsembleModel log_sigma_;
    double sigma_floor_ = 1e-6;
};

struct NgboostTrace {
    std::vector<double> train_log_score;      // after each accepted round
    std::vector<double> validation_log_score;
    std::vector<double> step_scale;           // line-search factor per accepted round
    double initial_log_score = 0.0;
};

namespace detail {

inline double mean_log_score(std::span<const double> y, std::span<const double> mu, std::span<const double> ls,
                             double log_floor) {
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        s += log_score(y[i], {mu[i], std::max(ls[i], log_floor)});
    }
    return s / static_cast<double>(y.size());
}

} // namespace detail

/// One tree per parameter per round, fitted to the natural gradient with unit hessian; the
/// pair of trees is scaled by a halving line search so the training log score never increases.
inline NgboostModel train_ngboost(const FeatureMatrix& x, std::span<const double> y, const gbt::GbtParams& params,
                                  const NgboostOptions& options = {},
                                  const std::optional<gbt::Validation>& validation = std::nullopt,
                                  NgboostTrace* trace = nullptr) {
    params.validate();
    require(x.rows() > 0 && y.size() == x.rows(), ErrorCode::EmptyData, "ngboost needs matching non-empty data");
    require(options.sigma_floor > 0.0, ErrorCode::InvalidArgument, "sigma floor must be positive");
    require(!params.early_stopping_rounds || validation.has_value(), ErrorCode::InvalidArgument,
            "early stopping requires a validation set");
    const double sd = stats::stddev(y);
    require(sd > 0.0, ErrorCode::DegenerateVariance, "target has zero variance");

    const double log_floor = std::log(options.sigma_floor);
    const double mu0 = stats::mean(y);
    const double ls0 = std::max(std::log(sd), log_floor);

    const gbt::TrainingData data(x);
    gbt::TreeGrower grower(data, params);
    std::mt19937_64 rng(params.seed);
    gbt::TreeEnsembleModel mu_model(x.names, mu0, params.learning_rate);
    gbt::TreeEnsembleModel ls_model(x.names, ls0, params.learning_rate);

    const std::size_t n = y.size();
    std::vector<double> mu(n, mu0), ls(n, ls0), g_mu(n), g_ls(n);
    const std::vector<double> ones(n, 1.0);
    std::vector<double> step_mu(n, 0.0), step_ls(n, 0.0), cand_mu(n), cand_ls(n);

    std::vector<double> vmu, vls;
    if (validation) {
        mu_model.check_schema(validation->x);
        vmu.assign(validation->y.size(), mu0);
        vls.assign(validation->y.size(), ls0);
    }
    NgboostTrace local;
    double current = detail::mean_log_score(y, mu, ls, log_floor);
    local.initial_log_score = current;
    double best_val = std::numeric_limits<double>::infinity();
    std::size_t best_rounds = 0;
    auto no_renew = [](std::span<const int>) -> std::optional<double> { return std::nullopt; };

    for (int round = 0; round < params.n_estimators; ++round) {
        for (std::size_t i = 0; i < n; ++i) {
            const auto g = natural_gradient(y[i], {mu[i], std::max(ls[i], log_floor)});
            g_mu[i] = g.d_mu;
            g_ls[i] = g.d_log_sigma;
            require(std::isfinite(g_mu[i]) && std::isfinite(g_ls[i]), ErrorCode::NonFiniteGradient,
                    "natural gradient is not finite");
        }
        const auto mask = gbt::draw_sample(n, params.subsample, rng);
        auto tree_mu = grower.grow(g_mu, ones, mask, no_renew);
        auto tree_ls = grower.grow(g_ls, ones, mask, no_renew);

        std::fill(step_mu.begin(), step_mu.end(), 0.0);
        std::fill(step_ls.begin(), step_ls.end(), 0.0);
        gbt::accumulate(tree_mu, params.learning_rate, x, step_mu);
        gbt::accumulate(tree_ls, params.learning_rate, x, step_ls);

        double scale = 1.0;
        double candidate = std::numeric_limits<double>::infinity();
        for (int h = 0; h <= options.max_halvings; ++h) {
            for (std::size_t i = 0; i < n; ++i) {
                cand_mu[i] = mu[i] + scale * step_mu[i];
                cand_ls[i] = ls[i] + scale * step_ls[i];
            }
            candidate = detail::mean_log_score(y, cand_mu, cand_ls, log_floor);
            if (std::isfinite(candidate) && candidate <= current) {
                break;
            }
            scale *= 0.5;
        }
        if (!(std::isfinite(candidate) && candidate <= current)) {
            break;
        }
        tree_mu.scale_leaves(scale);
        tree_ls.scale_leaves(scale);
        // Recompute with the scaled trees so stored predictions match predict() exactly.
        gbt::accumulate(tree_mu, params.learning_rate, x, mu);
        gbt::accumulate(tree_ls, params.learning_rate, x, ls);
        current = detail::mean_log_score(y, mu, ls, log_floor);
        local.train_log_score.push_back(current);
        local.step_scale.push_back(scale);
        if (validation) {
            gbt::accumulate(tree_mu, params.learning_rate, validation->x, vmu);
            gbt::accumulate(tree_ls, params.learning_rate, validation->x, vls);
            const double vl = detail::mean_log_score(validation->y, vmu, vls, log_floor);
            local.validation_log_score.push_back(vl);
            if (vl < best_val) {
                best_val = vl;
                best_rounds = mu_model.trees().size() + 1;
            }
        }
        mu_model.push_tree(std::move(tree_mu));
        ls_model.push_tree(std::move(tree_ls));
        if (params.early_stopping_rounds &&
            static_cast<int>(mu_model.trees().size() - best_rounds) >= *params.early_stopping_rounds) {
            break;
        }
    }
    if (params.early_stopping_rounds && best_rounds < mu_model.trees().size()) {
        mu_model.truncate(best_rounds);
        ls_model.truncate(best_rounds);
    }
    if (trace != nullptr) {
        *trace = std::move(local);
    }
    return NgboostModel(std::move(mu_model), std::move(ls_model), options.sigma_floor);
}

inline nlohmann::json to_json(const NgboostModel& m) {
    return {{"format", "windprob.ngboost"},
            {"version", 1},
            {"sigma_floor", m.sigma_floor()},
            {"initial_mu", m.initial_mu()},
            {"initial_log_sigma", m.initial_log_sigma()},
            {"mu", gbt::to_json(m.mu_model())},
            {"log_sigma", gbt::to_json(m.log_sigma_model())}};
}

inline NgboostModel ngboost_from_json(const nlohmann::json& j) {
    try {
        require(j.at("format").get<std::string>() == "windprob.ngboost", ErrorCode::Parse, "not an ngboost bundle");
        return NgboostModel(gbt::model_from_json(j.at("mu")), gbt::model_from_json(j.at("log_sigma")),
                            j.at("sigma_floor").get<double>());
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::Parse, std::string("malformed ngboost bundle: ") + e.what());
    }
}

} // namespace windprob::ngboost
