#pragma once

// Gradient-boosted regression trees with second-order split gain and exact split search
// over presorted feature values. Trees grow best-first under both a depth cap and a leaf cap,
// so depth-wise (max_depth) and leaf-wise (num_leaves) parameterisations share one engine.

#include "windprob/error.hpp"
#include "windprob/features.hpp"
#include "windprob/stats.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <queue>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace windprob::gbt {

struct GbtParams {
    double learning_rate = 0.1;
    int max_depth = 6;
    double min_child_weight = 1.0;
    double gamma = 0.0;
    double subsample = 1.0;
    int n_estimators = 100;
    int num_leaves = 64;
    std::optional<int> early_stopping_rounds;
    double reg_lambda = 1.0;
    std::optional<double> base_score;
    std::uint64_t seed = 0;

    void validate() const {
        require(learning_rate > 0.0 && learning_rate <= 1.0, ErrorCode::InvalidArgument, "learning_rate must be in (0,1]");
        require(max_depth >= 1, ErrorCode::InvalidArgument, "max_depth must be >= 1");
        require(min_child_weight >= 0.0, ErrorCode::InvalidArgument, "min_child_weight must be >= 0");
        require(gamma >= 0.0, ErrorCode::InvalidArgument, "gamma must be >= 0");
        require(subsample > 0.0 && subsample <= 1.0, ErrorCode::InvalidArgument, "subsample must be in (0,1]");
        require(n_estimators >= 1, ErrorCode::InvalidArgument, "n_estimators must be >= 1");
        require(num_leaves >= 2, ErrorCode::InvalidArgument, "num_leaves must be >= 2");
        require(!early_stopping_rounds || *early_stopping_rounds >= 1, ErrorCode::InvalidArgument,
                "early_stopping_rounds must be >= 1");
        require(reg_lambda >= 0.0, ErrorCode::InvalidArgument, "reg_lambda must be >= 0");
    }
};

// ---------------------------------------------------------------------------------------------
// Objectives

template <typename T>
concept Objective = requires(const T& o, double y, double p, std::span<const double> ys) {
    { o.loss(y, p) } -> std::convertible_to<double>;
    { o.gradient(y, p) } -> std::convertible_to<double>;
    { o.hessian(y, p) } -> std::convertible_to<double>;
    { o.initial_score(ys) } -> std::convertible_to<double>;
};

/// Objectives may replace the Newton leaf value with an exact per-leaf optimum of the residuals.
template <typename T>
concept RenewsLeaves = Objective<T> && requires(const T& o, std::vector<double>& residuals) {
    { o.renew_leaf(residuals) } -> std::convertible_to<double>;
};

struct SquaredErrorObjective {
    double loss(double y, double p) const { return 0.5 * (y - p) * (y - p); }
    double gradient(double y, double p) const { return p - y; }
    double hessian(double, double) const { return 1.0; }
    double initial_score(std::span<const double> ys) const { return stats::mean(ys); }
};

/// Pinball loss with a constant unit hessian surrogate.
struct QuantileObjective {
    double tau = 0.5;

    double loss(double y, double q) const { return y >= q ? tau * (y - q) : (1.0 - tau) * (q - y); }
    double gradient(double y, double q) const { return y >= q ? -tau : 1.0 - tau; }
    double hessian(double, double) const { return 1.0; }
    double initial_score(std::span<const double> ys) const {
        return stats::quantile_lower(std::vector<double>(ys.begin(), ys.end()), tau);
    }
    double renew_leaf(std::vector<double>& residuals) const { return stats::quantile_lower(residuals, tau); }
};

inline QuantileObjective quantile_objective(double tau) {
    require(tau > 0.0 && tau < 1.0, ErrorCode::InvalidArgument, "quantile level must lie in (0,1)");
    return QuantileObjective{tau};
}

// ---------------------------------------------------------------------------------------------
// Trees

struct RegressionTree {
    std::vector<int> feature; // -1 marks a leaf
    std::vector<double> threshold;
    std::vector<int> left;
    std::vector<int> right;
    std::vector<double> value;

    int add_leaf(double v) {
        feature.push_back(-1);
        threshold.push_back(0.0);
        left.push_back(-1);
        right.push_back(-1);
        value.push_back(v);
        return static_cast<int>(feature.size()) - 1;
    }

    std::size_t size() const { return feature.size(); }

    std::size_t leaf_count() const {
        return static_cast<std::size_t>(std::count(feature.begin(), feature.end(), -1));
    }

    /// Leaf value for a row; `x(f)` returns feature f. Values <= threshold go left.
    template <typename Getter>
    double evaluate(Getter&& x) const {
        int node = 0;
        while (feature[node] >= 0) {
            node = x(feature[node]) <= threshold[node] ? left[node] : right[node];
        }
        return value[node];
    }

    void scale_leaves(double s) {
        for (std::size_t i = 0; i < feature.size(); ++i) {
            if (feature[i] < 0) {
                value[i] *= s;
            }
        }
    }
};

/// Presorted view of a training design matrix, reused across boosting rounds.
class TrainingData {
public:
    explicit TrainingData(const FeatureMatrix& x) : x_(&x) {
        x.validate();
        require(x.rows() > 0, ErrorCode::EmptyData, "training matrix has no rows");
        presorted_.resize(x.cols());
        for (std::size_t f = 0; f < x.cols(); ++f) {
            auto& idx = presorted_[f];
            idx.resize(x.rows());
            std::iota(idx.begin(), idx.end(), 0);
            const auto& col = x.columns[f];
            std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return col[a] < col[b]; });
        }
    }

    const FeatureMatrix& matrix() const { return *x_; }
    std::size_t rows() const { return x_->rows(); }
    std::size_t cols() const { return x_->cols(); }
    const std::vector<int>& presorted(std::size_t f) const { return presorted_[f]; }
    double value(std::size_t f, int row) const { return x_->columns[f][static_cast<std::size_t>(row)]; }

private:
    const FeatureMatrix* x_;
    std::vector<std::vector<int>> presorted_;
};

/// Grows one tree on gradient/hessian statistics. `renew(rows)` may override a leaf's value.
class TreeGrower {
public:
    TreeGrower(const TrainingData& data, const GbtParams& params) : data_(data), params_(params) {}

    template <typename Renew>
    RegressionTree grow(std::span<const double> grad, std::span<const double> hess, std::span<const char> in_sample,
                        Renew&& renew) {
        const std::size_t nf = data_.cols();
        order_.assign(nf, {});
        for (std::size_t f = 0; f < nf; ++f) {
            auto& o = order_[f];
            o.clear();
            for (int r : data_.presorted(f)) {
                if (in_sample[static_cast<std::size_t>(r)]) {
                    o.push_back(r);
                }
            }
        }
        // A matrix with zero columns still has a single leaf over the sampled rows.
        std::vector<int> all_rows;
        if (nf == 0) {
            for (std::size_t r = 0; r < in_sample.size(); ++r) {
                if (in_sample[r]) {
                    all_rows.push_back(static_cast<int>(r));
                }
            }
        }
        const std::vector<int>& root_rows = nf > 0 ? order_[0] : all_rows;
        const auto m = static_cast<int>(root_rows.size());

        grad_ = grad;
        hess_ = hess;
        go_left_.assign(data_.rows(), 0);
        buffer_.resize(static_cast<std::size_t>(m));

        RegressionTree tree;
        std::vector<Node> nodes;
        Node root{0, m, 0, 0.0, 0.0, -1, {}};
        for (int r : root_rows) {
            root.g += grad[static_cast<std::size_t>(r)];
            root.h += hess[static_cast<std::size_t>(r)];
        }
        root.tree_index = tree.add_leaf(0.0);
        nodes.push_back(root);

        auto cmp = [&](int a, int b) {
            const auto& na = nodes[static_cast<std::size_t>(a)];
            const auto& nb = nodes[static_cast<std::size_t>(b)];
            if (na.split.gain != nb.split.gain) {
                return na.split.gain < nb.split.gain;
            }
            return a > b;
        };
        std::priority_queue<int, std::vector<int>, decltype(cmp)> queue(cmp);
        auto consider = [&](int id) {
            auto& n = nodes[static_cast<std::size_t>(id)];
            if (nf > 0 && n.depth < params_.max_depth) {
                n.split = best_split(n);
                if (n.split.feature >= 0) {
                    queue.push(id);
                }
            }
        };
        consider(0);
        std::size_t leaves = 1;
        std::vector<int> finished;
        while (!queue.empty() && leaves < static_cast<std::size_t>(params_.num_leaves)) {
            const int id = queue.top();
            queue.pop();
            Node parent = nodes[static_cast<std::size_t>(id)];
            const int mid = partition(parent);
            Node l{parent.begin, mid, parent.depth + 1, parent.split.gl, parent.split.hl, -1, {}};
            Node r{mid, parent.end, parent.depth + 1, parent.g - parent.split.gl, parent.h - parent.split.hl, -1, {}};
            const int ti = parent.tree_index;
            tree.feature[static_cast<std::size_t>(ti)] = parent.split.feature;
            tree.threshold[static_cast<std::size_t>(ti)] = parent.split.threshold;
            l.tree_index = tree.add_leaf(0.0);
            r.tree_index = tree.add_leaf(0.0);
            tree.left[static_cast<std::size_t>(ti)] = l.tree_index;
            tree.right[static_cast<std::size_t>(ti)] = r.tree_index;
            nodes.push_back(l);
            const int lid = static_cast<int>(nodes.size()) - 1;
            nodes.push_back(r);
            const int rid = static_cast<int>(nodes.size()) - 1;
            nodes[static_cast<std::size_t>(id)].split.feature = -2; // internal
            ++leaves;
            consider(lid);
            consider(rid);
        }

        for (const auto& n : nodes) {
            if (tree.feature[static_cast<std::size_t>(n.tree_index)] >= 0) {
                continue;
            }
            const std::vector<int>& rows_src = nf > 0 ? order_[0] : all_rows;
            std::span<const int> rows(rows_src.data() + n.begin, static_cast<std::size_t>(n.end - n.begin));
            std::optional<double> v = renew(rows);
            tree.value[static_cast<std::size_t>(n.tree_index)] = v ? *v : -n.g / (n.h + params_.reg_lambda);
        }
        return tree;
    }

private:
    struct Split {
        int feature = -1;
        double threshold = 0.0;
        double gain = 0.0;
        double gl = 0.0;
        double hl = 0.0;
    };

    struct Node {
        int begin = 0;
        int end = 0;
        int depth = 0;
        double g = 0.0;
        double h = 0.0;
        int tree_index = -1;
        Split split;
    };

    double score(double g, double h) const { return g * g / (h + params_.reg_lambda); }

    Split best_split(const Node& n) const {
        Split best;
        const double parent = score(n.g, n.h);
        for (std::size_t f = 0; f < data_.cols(); ++f) {
            const auto& o = order_[f];
            const auto& col = data_.matrix().columns[f];
            double gl = 0.0, hl = 0.0;
            for (int i = n.begin; i + 1 < n.end; ++i) {
                const auto r = static_cast<std::size_t>(o[static_cast<std::size_t>(i)]);
                gl += grad_[r];
                hl += hess_[r];
                const double here = col[r];
                const double next = col[static_cast<std::size_t>(o[static_cast<std::size_t>(i) + 1])];
                if (next <= here) {
                    continue;
                }
                const double hr = n.h - hl;
                if (hl < params_.min_child_weight || hr < params_.min_child_weight) {
                    continue;
                }
                const double gain = 0.5 * (score(gl, hl) + score(n.g - gl, hr) - parent) - params_.gamma;
                if (gain > best.gain) {
                    double thr = here + 0.5 * (next - here);
                    if (!(thr < next)) {
                        thr = here;
                    }
                    best = Split{static_cast<int>(f), thr, gain, gl, hl};
                }
            }
        }
        return best;
    }

    // Stable partition of the node's segment in every feature order; returns the split point.
    int partition(const Node& n) {
        const auto f = static_cast<std::size_t>(n.split.feature);
        const auto& col = data_.matrix().columns[f];
        int n_left = 0;
        for (int i = n.begin; i < n.end; ++i) {
            const auto r = static_cast<std::size_t>(order_[0][static_cast<std::size_t>(i)]);
            go_left_[r] = col[r] <= n.split.threshold ? 1 : 0;
            n_left += go_left_[r];
        }
        for (auto& o : order_) {
            int li = n.begin;
            int ri = 0;
            for (int i = n.begin; i < n.end; ++i) {
                const int r = o[static_cast<std::size_t>(i)];
                if (go_left_[static_cast<std::size_t>(r)]) {
                    o[static_cast<std::size_t>(li++)] = r;
                } else {
                    buffer_[static_cast<std::size_t>(ri++)] = r;
                }
            }
            std::copy(buffer_.begin(), buffer_.begin() + ri, o.begin() + li);
        }
        return n.begin + n_left;
    }

    const TrainingData& data_;
    GbtParams params_;
    std::vector<std::vector<int>> order_;
    std::span<const double> grad_;
    std::span<const double> hess_;
    std::vector<char> go_left_;
    std::vector<int> buffer_;
};

/// Per-round row mask: Bernoulli(subsample) draws from the caller's generator, never empty.
inline std::vector<char> draw_sample(std::size_t n, double subsample, std::mt19937_64& rng) {
    std::vector<char> mask(n, 1);
    if (subsample >= 1.0) {
        return mask;
    }
    std::uniform_real_distribution<double> u(0.0, 1.0);
    bool any = false;
    for (auto& m : mask) {
        m = u(rng) < subsample ? 1 : 0;
        any = any || m;
    }
    if (!any) {
        mask[0] = 1;
    }
    return mask;
}

// ---------------------------------------------------------------------------------------------
// Ensembles

/// prediction = base_score + Σ learning_rate · leaf(tree). Immutable once trained.
class TreeEnsembleModel {
public:
    TreeEnsembleModel() = default;
    TreeEnsembleModel(std::vector<std::string> feature_names, double base_score, double learning_rate,
                      std::vector<RegressionTree> trees = {})
        : feature_names_(std::move(feature_names)), base_score_(base_score), learning_rate_(learning_rate),
          trees_(std::move(trees)) {}

    const std::vector<std::string>& feature_names() const { return feature_names_; }
    double base_score() const { return base_score_; }
    double learning_rate() const { return learning_rate_; }
    const std::vector<RegressionTree>& trees() const { return trees_; }

    void check_schema(const FeatureMatrix& x) const {
        require(x.names == feature_names_, ErrorCode::SchemaMismatch,
                "feature names differ from the training schema (" + std::to_string(x.cols()) + " vs " +
                    std::to_string(feature_names_.size()) + " columns)");
    }

    /// Row-major single-row prediction; `row` is ordered like feature_names().
    double predict_row(std::span<const double> row) const {
        double s = base_score_;
        for (const auto& t : trees_) {
            s += learning_rate_ * t.evaluate([&](int f) { return row[static_cast<std::size_t>(f)]; });
        }
        return s;
    }

    std::vector<double> predict(const FeatureMatrix& x) const {
        check_schema(x);
        std::vector<double> out(x.rows(), base_score_);
        for (const auto& t : trees_) {
            for (std::size_t i = 0; i < out.size(); ++i) {
                out[i] += learning_rate_ * t.evaluate([&](int f) { return x.columns[static_cast<std::size_t>(f)][i]; });
            }
        }
        return out;
    }

    // Construction helpers for the boosting loops in this library.
    void push_tree(RegressionTree t) { trees_.push_back(std::move(t)); }
    void truncate(std::size_t n) { trees_.resize(std::min(n, trees_.size())); }

private:
    std::vector<std::string> feature_names_;
    double base_score_ = 0.0;
    double learning_rate_ = 1.0;
    std::vector<RegressionTree> trees_;
};

/// Adds learning_rate · tree(x_i) to each prediction, in the same order predict() uses.
inline void accumulate(const RegressionTree& tree, double learning_rate, const FeatureMatrix& x,
                       std::vector<double>& preds) {
    for (std::size_t i = 0; i < preds.size(); ++i) {
        preds[i] += learning_rate * tree.evaluate([&](int f) { return x.columns[static_cast<std::size_t>(f)][i]; });
    }
}

struct Validation {
    const FeatureMatrix& x;
    std::span<const double> y;
};

struct TrainingTrace {
    std::vector<double> train_loss;
    std::vector<double> validation_loss;
    std::vector<double> train_predictions; // predictions of the returned model on the training rows
    std::size_t best_iteration = 0;        // number of trees kept
};

template <Objective Obj>
double mean_loss(const Obj& obj, std::span<const double> y, std::span<const double> pred) {
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        s += obj.loss(y[i], pred[i]);
    }
    return s / static_cast<double>(y.size());
}

template <Objective Obj>
TreeEnsembleModel train(const FeatureMatrix& x, std::span<const double> y, const Obj& objective,
                        const GbtParams& params, const std::optional<Validation>& validation = std::nullopt,
                        TrainingTrace* trace = nullptr) {
    params.validate();
    require(x.rows() > 0 && !y.empty(), ErrorCode::EmptyData, "no training rows");
    require(y.size() == x.rows(), ErrorCode::LengthMismatch, "target length differs from matrix rows");
    for (double v : y) {
        require(std::isfinite(v), ErrorCode::NonFiniteInput, "undefined target value");
    }
    require(!params.early_stopping_rounds || validation.has_value(), ErrorCode::InvalidArgument,
            "early stopping requires a validation set");

    const TrainingData data(x);
    TreeGrower grower(data, params);
    std::mt19937_64 rng(params.seed);

    const double base = params.base_score ? *params.base_score : objective.initial_score(y);
    TreeEnsembleModel model(x.names, base, params.learning_rate);
    std::vector<double> pred(y.size(), base);
    std::vector<double> grad(y.size()), hess(y.size());

    std::vector<double> val_pred;
    if (validation) {
        validation->x.validate();
        model.check_schema(validation->x);
        require(validation->y.size() == validation->x.rows(), ErrorCode::LengthMismatch, "validation length mismatch");
        val_pred.assign(validation->y.size(), base);
    }
    double best_val = std::numeric_limits<double>::infinity();
    std::size_t best_round = 0;
    TrainingTrace local;

    for (int round = 0; round < params.n_estimators; ++round) {
        for (std::size_t i = 0; i < y.size(); ++i) {
            grad[i] = objective.gradient(y[i], pred[i]);
            hess[i] = objective.hessian(y[i], pred[i]);
            require(std::isfinite(grad[i]) && std::isfinite(hess[i]), ErrorCode::NonFiniteGradient,
                    "objective produced a non-finite gradient or hessian");
        }
        const auto mask = draw_sample(y.size(), params.subsample, rng);
        auto renew = [&](std::span<const int> rows) -> std::optional<double> {
            if constexpr (RenewsLeaves<Obj>) {
                std::vector<double> residuals;
                residuals.reserve(rows.size());
                for (int r : rows) {
                    residuals.push_back(y[static_cast<std::size_t>(r)] - pred[static_cast<std::size_t>(r)]);
                }
                if (residuals.empty()) {
                    return 0.0;
                }
                return objective.renew_leaf(residuals);
            } else {
                (void)rows;
                return std::nullopt;
            }
        };
        auto tree = grower.grow(grad, hess, mask, renew);
        accumulate(tree, params.learning_rate, x, pred);
        local.train_loss.push_back(mean_loss(objective, y, pred));
        if (validation) {
            accumulate(tree, params.learning_rate, validation->x, val_pred);
            const double vl = mean_loss(objective, validation->y, val_pred);
            local.validation_loss.push_back(vl);
            if (vl < best_val) {
                best_val = vl;
                best_round = static_cast<std::size_t>(round) + 1;
            }
        }
        model.push_tree(std::move(tree));
        if (params.early_stopping_rounds && static_cast<int>(model.trees().size() - best_round) >= *params.early_stopping_rounds) {
            break;
        }
    }
    if (params.early_stopping_rounds && best_round < model.trees().size()) {
        model.truncate(best_round);
        pred = model.predict(x);
    }
    if (trace != nullptr) {
        local.best_iteration = model.trees().size();
        local.train_predictions = std::move(pred);
        *trace = std::move(local);
    }
    return model;
}

inline std::vector<double> predict(const TreeEnsembleModel& model, const FeatureMatrix& x) { return model.predict(x); }

// ---------------------------------------------------------------------------------------------
// Serialization (structured text; doubles are written in shortest round-trip form)

inline nlohmann::json params_to_json(const GbtParams& p) {
    nlohmann::json j{{"learning_rate", p.learning_rate}, {"max_depth", p.max_depth},
                     {"min_child_weight", p.min_child_weight}, {"gamma", p.gamma},
                     {"subsample", p.subsample},           {"n_estimators", p.n_estimators},
                     {"num_leaves", p.num_leaves},         {"reg_lambda", p.reg_lambda},
                     {"seed", p.seed}};
    j["early_stopping_rounds"] = p.early_stopping_rounds ? nlohmann::json(*p.early_stopping_rounds) : nlohmann::json();
    j["base_score"] = p.base_score ? nlohmann::json(*p.base_score) : nlohmann::json();
    return j;
}

inline GbtParams params_from_json(const nlohmann::json& j) {
    GbtParams p;
    p.learning_rate = j.at("learning_rate").get<double>();
    p.max_depth = j.at("max_depth").get<int>();
    p.min_child_weight = j.at("min_child_weight").get<double>();
    p.gamma = j.at("gamma").get<double>();
    p.subsample = j.at("subsample").get<double>();
    p.n_estimators = j.at("n_estimators").get<int>();
    p.num_leaves = j.at("num_leaves").get<int>();
    p.reg_lambda = j.at("reg_lambda").get<double>();
    p.seed = j.at("seed").get<std::uint64_t>();
    if (!j.at("early_stopping_rounds").is_null()) {
        p.early_stopping_rounds = j.at("early_stopping_rounds").get<int>();
    }
    if (!j.at("base_score").is_null()) {
        p.base_score = j.at("base_score").get<double>();
    }
    return p;
}

inline nlohmann::json to_json(const TreeEnsembleModel& m) {
    nlohmann::json trees = nlohmann::json::array();
    for (const auto& t : m.trees()) {
        trees.push_back({{"feature", t.feature},
                         {"threshold", t.threshold},
                         {"left", t.left},
                         {"right", t.right},
                         {"value", t.value}});
    }
    return {{"format", "windprob.gbt"},
            {"version", 1},
            {"feature_names", m.feature_names()},
            {"base_score", m.base_score()},
            {"learning_rate", m.learning_rate()},
            {"trees", trees}};
}

inline TreeEnsembleModel model_from_json(const nlohmann::json& j) {
    try {
        require(j.at("format").get<std::string>() == "windprob.gbt", ErrorCode::Parse, "not a gbt model bundle");
        require(j.at("version").get<int>() == 1, ErrorCode::Parse, "unsupported gbt bundle version");
        std::vector<RegressionTree> trees;
        for (const auto& jt : j.at("trees")) {
            RegressionTree t;
            t.feature = jt.at("feature").get<std::vector<int>>();
            t.threshold = jt.at("threshold").get<std::vector<double>>();
            t.left = jt.at("left").get<std::vector<int>>();
            t.right = jt.at("right").get<std::vector<int>>();
            t.value = jt.at("value").get<std::vector<double>>();
            require(!t.feature.empty() && t.threshold.size() == t.size() && t.left.size() == t.size() &&
                        t.right.size() == t.size() && t.value.size() == t.size(),
                    ErrorCode::Parse, "inconsistent tree arrays");
            trees.push_back(std::move(t));
        }
        return TreeEnsembleModel(j.at("feature_names").get<std::vector<std::string>>(), j.at("base_score").get<double>(),
                                 j.at("learning_rate").get<double>(), std::move(trees));
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::Parse, std::string("malformed gbt bundle: ") + e.what());
    }
}

} // namespace windprob::gbt
