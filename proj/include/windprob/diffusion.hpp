#pragma once

// Conditional score-based diffusion over boosted trees. Targets are standardized, noised
// by a variance-exploding SDE, and a single ensemble predicts the injected noise z from
// (features, y_t, t, log σ(t)). Sampling integrates the reverse SDE with Euler–Maruyama.

#include "windprob/domain.hpp"
#include "windprob/gbt.hpp"
#include "windprob/stats.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

namespace windprob::diffusion {

/// Variance-exploding SDE: dy = g(t) dW with σ(t) = σ_min (σ_max/σ_min)^t.
struct SdeSpec {
    double sigma_min = 0.01;
    double sigma_max = 8.0;

    void validate() const {
        require(sigma_min > 0.0 && sigma_max > sigma_min, ErrorCode::InvalidArgument,
                "SDE needs 0 < sigma_min < sigma_max");
    }
    double log_ratio() const { return std::log(sigma_max / sigma_min); }
    double sigma(double t) const { return sigma_min * std::pow(sigma_max / sigma_min, t); }
    /// g(t)² = d σ(t)² / dt.
    double g2(double t) const {
        const double s = sigma(t);
        return 2.0 * s * s * log_ratio();
    }
};

struct DiffusionParams {
    gbt::GbtParams tree;
    int n_repeats = 10;
    SdeSpec sde;
    int n_samples = 50;
    int n_steps = 50;

    void validate() const {
        tree.validate();
        sde.validate();
        require(n_repeats >= 1, ErrorCode::InvalidArgument, "n_repeats must be at least 1");
        require(n_samples >= 2, ErrorCode::InvalidArgument, "n_samples must be at least 2");
        require(n_steps >= 10, ErrorCode::InvalidArgument, "n_steps must be at least 10");
    }
};

inline const std::vector<std::string>& extra_feature_names() {
    static const std::vector<std::string> names{"diffusion.y_t", "diffusion.t", "diffusion.log_sigma"};
    return names;
}

/// Per-draw generator seed from (base seed, row, sample); splitmix64 finalizer over a running hash.
inline std::uint64_t draw_seed(std::uint64_t seed, std::uint64_t row, std::uint64_t sample) {
    auto mix = [](std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    };
    return mix(mix(mix(seed) ^ row) ^ sample);
}

/// Empirical quantiles (linear interpolation of order statistics) at the given levels.
inline PredictiveDistribution samples_to_distribution(std::vector<double> samples,
                                                      std::span<const double> levels = kFixedLevels) {
    require(samples.size() >= 2, ErrorCode::TooFewSamples, "need at least two samples for empirical quantiles");
    std::sort(samples.begin(), samples.end());
    PredictiveDistribution d;
    d.levels.assign(levels.begin(), levels.end());
    for (double tau : levels) {
        d.values.push_back(stats::quantile_linear_sorted(samples, tau));
    }
    d.samples = std::move(samples);
    return d;
}

class DiffusionModel {
public:
    DiffusionModel() = default;
    DiffusionModel(gbt::TreeEnsembleModel score_model, SdeSpec sde, double target_mean, double target_std,
                   int n_samples = 50, int n_steps = 50, std::optional<Bounds> clamp = std::nullopt)
        : score_model_(std::move(score_model)), sde_(sde), mean_(target_mean), std_(target_std),
          n_samples_(n_samples), n_steps_(n_steps), clamp_(clamp) {
        sde_.validate();
        require(std_ > 0.0, ErrorCode::InvalidArgument, "target standard deviation must be positive");
        require(n_samples_ >= 2 && n_steps_ >= 10, ErrorCode::InvalidArgument, "need n_samples >= 2, n_steps >= 10");
        const auto& names = score_model_.feature_names();
        require(names.size() >= 3 && std::equal(extra_feature_names().begin(), extra_feature_names().end(),
                                                names.end() - 3),
                ErrorCode::SchemaMismatch, "score model lacks the diffusion input columns");
        input_names_.assign(names.begin(), names.end() - 3);
    }

    const gbt::TreeEnsembleModel& score_model() const { return score_model_; }
    const SdeSpec& sde() const { return sde_; }
    double target_mean() const { return mean_; }
    double target_std() const { return std_; }
    int n_samples() const { return n_samples_; }
    int n_steps() const { return n_steps_; }
    const std::optional<Bounds>& clamp() const { return clamp_; }
    void set_clamp(std::optional<Bounds> b) { clamp_ = b; }
    const std::vector<std::string>& input_names() const { return input_names_; }

    void check_schema(const FeatureMatrix& x) const {
        require(x.names == input_names_, ErrorCode::SchemaMismatch, "feature names differ from the training schema");
    }

    /// Draws from one row; `features` is ordered like input_names().
    std::vector<double> sample_row(std::span<const double> features, int n, std::uint64_t seed,
                                   std::uint64_t row_id) const {
        require(features.size() == input_names_.size(), ErrorCode::SchemaMismatch, "feature row has wrong width");
        require(n >= 1, ErrorCode::InvalidArgument, "need at least one sample");
        std::vector<double> buf(features.begin(), features.end());
        buf.resize(features.size() + 3);
        const std::size_t iy = features.size();
        const double dt = 1.0 / n_steps_;
        std::vector<double> out;
        out.reserve(static_cast<std::size_t>(n));
        std::normal_distribution<double> n01;
        for (int s = 0; s < n; ++s) {
            std::mt19937_64 rng(draw_seed(seed, row_id, static_cast<std::uint64_t>(s)));
            double y = sde_.sigma_max * n01(rng);
            for (int k = 0; k < n_steps_; ++k) {
                const double t = 1.0 - k * dt;
                const double sig = sde_.sigma(t);
                buf[iy] = y;
                buf[iy + 1] = t;
                buf[iy + 2] = std::log(sig);
                const double z_hat = score_model_.predict_row(buf);
                const double g2 = sde_.g2(t);
                y += g2 * (-z_hat / sig) * dt + std::sqrt(g2 * dt) * n01(rng);
            }
            double v = mean_ + std_ * y;
            if (clamp_) {
                v = std::clamp(v, clamp_->lower, clamp_->upper);
            }
            out.push_back(v);
        }
        return out;
    }

    std::vector<double> sample(const FeatureMatrix& x, std::size_t row, int n, std::uint64_t seed) const {
        check_schema(x);
        require(row < x.rows(), ErrorCode::InvalidArgument, "row index out of range");
        std::vector<double> f(x.cols());
        for (std::size_t c = 0; c < f.size(); ++c) {
            f[c] = x.columns[c][row];
        }
        return sample_row(f, n, seed, row);
    }

    std::vector<PredictiveDistribution> predict(const FeatureMatrix& x, std::uint64_t seed,
                                                std::span<const double> levels = kFixedLevels) const {
        check_schema(x);
        std::vector<PredictiveDistribution> out;
        out.reserve(x.rows());
        for (std::size_t i = 0; i < x.rows(); ++i) {
            auto d = samples_to_distribution(sample(x, i, n_samples_, seed), levels);
            d.time = x.times[i];
            out.push_back(std::move(d));
        }
        return out;
    }

private:
    gbt::TreeEnsembleModel score_model_;
    SdeSpec sde_;
    double mean_ = 0.0;
    double std_ = 1.0;
    int n_samples_ = 50;
    int n_steps_ = 50;
    std::optional<Bounds> clamp_;
    std::vector<std::string> input_names_;
};

/// Score-free sampler: drives the reverse SDE with a zero score.
inline DiffusionModel zero_score_model(std::vector<std::string> input_names, SdeSpec sde, double mean, double std,
                                       int n_samples = 50, int n_steps = 50) {
    for (const auto& n : extra_feature_names()) {
        input_names.push_back(n);
    }
    return DiffusionModel(gbt::TreeEnsembleModel(std::move(input_names), 0.0, 1.0), sde, mean, std, n_samples, n_steps);
}

/// Variance of the zero-score sampler's output in standardized units: the initial
/// σ_max² plus the injected g²(t_k)Δt at each left-endpoint step.
inline double zero_score_variance(const SdeSpec& sde, int n_steps) {
    const double dt = 1.0 / n_steps;
    double v = sde.sigma_max * sde.sigma_max;
    for (int k = 0; k < n_steps; ++k) {
        v += sde.g2(1.0 - k * dt) * dt;
    }
    return v;
}

/// Training pairs (features ‖ y_t ‖ t ‖ log σ(t)) → z, n_repeats per row, in row-major order.
struct NoisedPairs {
    FeatureMatrix x;
    std::vector<double> z;
    std::vector<double> t;
    std::vector<double> y0;
};

inline NoisedPairs make_noised_pairs(const FeatureMatrix& x, std::span<const double> y_std, int n_repeats,
                                     const SdeSpec& sde, std::mt19937_64& rng) {
    NoisedPairs p;
    const std::size_t n = x.rows() * static_cast<std::size_t>(n_repeats);
    p.x.names = x.names;
    for (const auto& e : extra_feature_names()) {
        p.x.names.push_back(e);
    }
    p.x.columns.assign(p.x.names.size(), {});
    for (auto& c : p.x.columns) {
        c.reserve(n);
    }
    p.x.times.reserve(n);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::normal_distribution<double> n01;
    const std::size_t f = x.cols();
    for (std::size_t i = 0; i < x.rows(); ++i) {
        for (int r = 0; r < n_repeats; ++r) {
            const double t = u01(rng);
            const double z = n01(rng);
            const double sig = sde.sigma(t);
            p.x.times.push_back(x.times[i]);
            for (std::size_t c = 0; c < f; ++c) {
                p.x.columns[c].push_back(x.columns[c][i]);
            }
            p.x.columns[f].push_back(y_std[i] + sig * z);
            p.x.columns[f + 1].push_back(t);
            p.x.columns[f + 2].push_back(std::log(sig));
            p.z.push_back(z);
            p.t.push_back(t);
            p.y0.push_back(y_std[i]);
        }
    }
    return p;
}

inline DiffusionModel train_diffusion(const FeatureMatrix& x, std::span<const double> y, const DiffusionParams& params,
                                      const std::optional<gbt::Validation>& validation = std::nullopt,
                                      gbt::TrainingTrace* trace = nullptr) {
    params.validate();
    require(x.rows() > 0 && y.size() == x.rows(), ErrorCode::EmptyData, "diffusion needs matching non-empty data");
    const double mean = stats::mean(y);
    const double sd = stats::stddev(y);
    require(sd > 0.0, ErrorCode::DegenerateVariance, "target has zero variance");
    auto standardize = [&](std::span<const double> v) {
        std::vector<double> out(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) {
            out[i] = (v[i] - mean) / sd;
        }
        return out;
    };
    std::mt19937_64 rng(draw_seed(params.tree.seed, 0xd1ff, 0));
    const auto ys = standardize(y);
    const auto train = make_noised_pairs(x, ys, params.n_repeats, params.sde, rng);
    gbt::GbtParams tp = params.tree;
    tp.base_score = 0.0;
    gbt::TreeEnsembleModel score;
    if (validation) {
        require(validation->x.names == x.names, ErrorCode::SchemaMismatch, "validation schema differs");
        const auto vys = standardize(validation->y);
        const auto val = make_noised_pairs(validation->x, vys, params.n_repeats, params.sde, rng);
        score = gbt::train(train.x, train.z, gbt::SquaredErrorObjective{}, tp, gbt::Validation{val.x, val.z}, trace);
    } else {
        score = gbt::train(train.x, train.z, gbt::SquaredErrorObjective{}, tp, std::nullopt, trace);
    }
    return DiffusionModel(std::move(score), params.sde, mean, sd, params.n_samples, params.n_steps);
}

inline nlohmann::json to_json(const DiffusionModel& m) {
    nlohmann::json j{{"format", "windprob.diffusion"},
                     {"version", 1},
                     {"sde", {{"kind", "variance-exploding"}, {"sigma_min", m.sde().sigma_min}, {"sigma_max", m.sde().sigma_max}}},
                     {"target_mean", m.target_mean()},
                     {"target_std", m.target_std()},
                     {"n_samples", m.n_samples()},
                     {"n_steps", m.n_steps()},
                     {"score_model", gbt::to_json(m.score_model())}};
    j["clamp"] = m.clamp() ? nlohmann::json{m.clamp()->lower, m.clamp()->upper} : nlohmann::json();
    return j;
}

inline DiffusionModel diffusion_from_json(const nlohmann::json& j) {
    try {
        require(j.at("format").get<std::string>() == "windprob.diffusion", ErrorCode::Parse, "not a diffusion bundle");
        const auto& s = j.at("sde");
        require(s.at("kind").get<std::string>() == "variance-exploding", ErrorCode::Parse, "unknown SDE kind");
        std::optional<Bounds> clamp;
        if (!j.at("clamp").is_null()) {
            clamp = Bounds{j.at("clamp")[0].get<double>(), j.at("clamp")[1].get<double>()};
        }
        return DiffusionModel(gbt::model_from_json(j.at("score_model")),
                              SdeSpec{s.at("sigma_min").get<double>(), s.at("sigma_max").get<double>()},
                              j.at("target_mean").get<double>(), j.at("target_std").get<double>(),
                              j.at("n_samples").get<int>(), j.at("n_steps").get<int>(), clamp);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::Parse, std::string("malformed diffusion bundle: ") + e.what());
    }
}

} // namespace windprob::diffusion
