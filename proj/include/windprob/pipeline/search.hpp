#pragma once

#include "windprob/error.hpp"
#include "windprob/pipeline/strict_json.hpp"

#include <json.hpp>

#include <atomic>
#include <cmath>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <variant>
#include <vector>

namespace windprob::pipeline {

struct Uniform { double a = 0.0, b = 1.0; };
struct LogUniform { double a = 0.01, b = 1.0; };
struct IntUniform { long a = 0, b = 1; };
struct Choice { std::vector<double> values; };

using Distribution = std::variant<Uniform, LogUniform, IntUniform, Choice>;

struct SearchParameter {
    std::string name;
    Distribution dist;
};

using ParamPoint = std::map<std::string, double>;

/// Ordered parameter list; draws visit parameters in this order.
struct SearchSpace {
    std::vector<SearchParameter> params;

    void validate() const {
        for (const auto& p : params) {
            std::visit(
                [&](const auto& d) {
                    using T = std::decay_t<decltype(d)>;
                    if constexpr (std::is_same_v<T, Choice>) {
                        require(!d.values.empty(), ErrorCode::InvalidArgument, "search: empty choice set for " + p.name);
                    } else if constexpr (std::is_same_v<T, LogUniform>) {
                        require(0.0 < d.a && d.a <= d.b, ErrorCode::InvalidArgument, "search: log-uniform bounds invalid for " + p.name);
                    } else {
                        require(d.a <= d.b, ErrorCode::InvalidArgument, "search: bounds invalid for " + p.name);
                    }
                },
                p.dist);
        }
    }

    ParamPoint draw(std::mt19937_64& rng) const {
        ParamPoint out;
        for (const auto& p : params) {
            out[p.name] = std::visit(
                [&](const auto& d) -> double {
                    using T = std::decay_t<decltype(d)>;
                    if constexpr (std::is_same_v<T, Uniform>) {
                        return std::uniform_real_distribution<double>(d.a, d.b)(rng);
                    } else if constexpr (std::is_same_v<T, LogUniform>) {
                        return std::exp(std::uniform_real_distribution<double>(std::log(d.a), std::log(d.b))(rng));
                    } else if constexpr (std::is_same_v<T, IntUniform>) {
                        return static_cast<double>(std::uniform_int_distribution<long>(d.a, d.b)(rng));
                    } else {
                        return d.values[std::uniform_int_distribution<std::size_t>(0, d.values.size() - 1)(rng)];
                    }
                },
                p.dist);
        }
        return out;
    }
};

/// Gradient-boosting space for the quantile and Gaussian heads (learning_rate is eta).
inline SearchSpace xgboost_space() {
    return {{{"learning_rate", Uniform{0.01, 0.2}},
             {"max_depth", IntUniform{3, 7}},
             {"min_child_weight", Choice{{1, 5, 10, 20}}},
             {"gamma", Uniform{0.0, 1.0}},
             {"subsample", Uniform{0.5, 1.0}}}};
}

/// Leaf-wise space for the diffusion head.
inline SearchSpace lightgbm_space() {
    return {{{"n_estimators", IntUniform{100, 3000}},
             {"n_repeats", IntUniform{10, 50}},
             {"learning_rate", LogUniform{0.01, 1.0}},
             {"early_stopping_rounds", IntUniform{10, 100}},
             {"num_leaves", IntUniform{10, 100}}}};
}

inline nlohmann::json to_json(const SearchSpace& s) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& p : s.params) {
        j[p.name] = std::visit(
            [](const auto& d) -> nlohmann::json {
                using T = std::decay_t<decltype(d)>;
                if constexpr (std::is_same_v<T, Uniform>) {
                    return {{"uniform", {d.a, d.b}}};
                } else if constexpr (std::is_same_v<T, LogUniform>) {
                    return {{"log_uniform", {d.a, d.b}}};
                } else if constexpr (std::is_same_v<T, IntUniform>) {
                    return {{"int_uniform", {d.a, d.b}}};
                } else {
                    return {{"choice", d.values}};
                }
            },
            p.dist);
    }
    return j;
}

/// Replaces the space with the listed parameters, each given as {"uniform": [a, b]},
/// {"log_uniform": [a, b]}, {"int_uniform": [a, b]} or {"choice": [...]}.
inline SearchSpace search_space_from_json(const nlohmann::json& j, const std::string& path) {
    require(j.is_object(), ErrorCode::Config, path + " must be an object");
    SearchSpace s;
    for (const auto& [name, spec] : j.items()) {
        const auto where = path + "." + name;
        require(spec.is_object() && spec.size() == 1, ErrorCode::Config, where + " must hold exactly one distribution");
        const auto& [kind, args] = *spec.items().begin();
        try {
            if (kind == "uniform") {
                s.params.push_back({name, Uniform{args.at(0).get<double>(), args.at(1).get<double>()}});
            } else if (kind == "log_uniform") {
                s.params.push_back({name, LogUniform{args.at(0).get<double>(), args.at(1).get<double>()}});
            } else if (kind == "int_uniform") {
                s.params.push_back({name, IntUniform{args.at(0).get<long>(), args.at(1).get<long>()}});
            } else if (kind == "choice") {
                s.params.push_back({name, Choice{args.get<std::vector<double>>()}});
            } else {
                fail(ErrorCode::Config, "unknown distribution " + where + "." + kind);
            }
        } catch (const nlohmann::json::exception& e) {
            fail(ErrorCode::Config, where + ": " + e.what());
        }
    }
    s.validate();
    return s;
}

struct Trial {
    std::size_t index = 0;
    ParamPoint params;
    std::optional<double> score;
    std::string error;
};

struct SearchResult {
    std::vector<Trial> trials; // ordered by index
    std::optional<std::size_t> best;

    const Trial& best_trial() const {
        require(best.has_value(), ErrorCode::EmptyData, "every search trial failed");
        return trials[*best];
    }
};

inline nlohmann::json to_json(const Trial& t) {
    nlohmann::json j{{"trial", t.index}, {"params", t.params}};
    j["score"] = t.score ? nlohmann::json(*t.score) : nlohmann::json();
    if (!t.error.empty()) {
        j["error"] = t.error;
    }
    return j;
}

/// Draws every point up front from `seed`, evaluates them on up to `workers` threads and returns
/// the lowest score; ties keep the earliest trial. Library errors inside the objective are
/// recorded on the trial, which is then skipped.
inline SearchResult random_search(const SearchSpace& space, int n_iter, std::uint64_t seed,
                                  const std::function<double(const ParamPoint&)>& objective, int workers = 1) {
    space.validate();
    require(n_iter >= 1, ErrorCode::InvalidArgument, "search needs at least one iteration");
    require(workers >= 1, ErrorCode::InvalidArgument, "search needs at least one worker");
    std::mt19937_64 rng(seed);
    SearchResult res;
    for (int i = 0; i < n_iter; ++i) {
        res.trials.push_back({static_cast<std::size_t>(i), space.draw(rng), std::nullopt, {}});
    }
    std::atomic<std::size_t> next{0};
    auto run = [&] {
        for (std::size_t i = next++; i < res.trials.size(); i = next++) {
            auto& t = res.trials[i];
            try {
                const double s = objective(t.params);
                if (std::isfinite(s)) {
                    t.score = s;
                } else {
                    t.error = "non-finite score";
                }
            } catch (const Error& e) {
                t.error = e.what();
            }
        }
    };
    if (workers == 1) {
        run();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back(run);
        }
        for (auto& th : pool) {
            th.join();
        }
    }
    for (const auto& t : res.trials) {
        if (t.score && (!res.best || *t.score < *res.trials[*res.best].score)) {
            res.best = t.index;
        }
    }
    return res;
}

} // namespace windprob::pipeline
