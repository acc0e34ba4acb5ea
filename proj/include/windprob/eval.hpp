#pragma once

// Capacity-normalised scoring: MAE of the median, quantile-form CRPS, interval coverage and
// the operating-region breakdown.

#include "windprob/domain.hpp"
#include "windprob/error.hpp"
#include "windprob/text.hpp"

#include <json.hpp>

#include <array>
#include <cmath>
#include <cstdio>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace windprob::eval {

inline double pinball(double y, double q, double tau) { return y >= q ? tau * (y - q) : (1.0 - tau) * (q - y); }

/// Midpoint-cell weights over [0, 1]: cell k spans the midpoints to its neighbours, the first
/// starts at 0 and the last ends at 1.
inline std::vector<double> riemann_weights(std::span<const double> levels) {
    require(!levels.empty(), ErrorCode::InvalidArgument, "no quantile levels");
    std::vector<double> w(levels.size());
    for (std::size_t k = 0; k < levels.size(); ++k) {
        const double lo = k == 0 ? 0.0 : 0.5 * (levels[k - 1] + levels[k]);
        const double hi = k + 1 == levels.size() ? 1.0 : 0.5 * (levels[k] + levels[k + 1]);
        w[k] = hi - lo;
    }
    return w;
}

inline double mae(std::span<const double> y, std::span<const double> yhat) {
    require(y.size() == yhat.size(), ErrorCode::LengthMismatch, "mae: length mismatch");
    require(!y.empty(), ErrorCode::EmptyData, "mae of an empty sample");
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        s += std::abs(y[i] - yhat[i]);
    }
    return s / static_cast<double>(y.size());
}

/// Fixed-level quantile values of a distribution, or nullopt when any level is missing.
inline std::optional<std::array<double, kFixedLevels.size()>> fixed_quantiles(const PredictiveDistribution& dist) {
    std::array<double, kFixedLevels.size()> q{};
    for (std::size_t k = 0; k < kFixedLevels.size(); ++k) {
        const auto v = dist.at(kFixedLevels[k]);
        if (!v) {
            return std::nullopt;
        }
        q[k] = *v;
    }
    return q;
}

/// Σ_k w_k · L_τk(y, q_τk) over the fixed levels. No factor 2: a point forecast scores ½|y - ŷ|.
inline double crps_from_quantiles(double y, const PredictiveDistribution& dist) {
    const auto q = fixed_quantiles(dist);
    require(q.has_value(), ErrorCode::MissingLevel, "crps needs all seven fixed quantile levels");
    for (std::size_t k = 1; k < q->size(); ++k) {
        require((*q)[k] >= (*q)[k - 1], ErrorCode::InvalidArgument, "quantile values must not decrease");
    }
    static const auto w = riemann_weights(kFixedLevels);
    double s = 0.0;
    for (std::size_t k = 0; k < q->size(); ++k) {
        s += w[k] * pinball(y, (*q)[k], kFixedLevels[k]);
    }
    return s;
}

/// Closed form of crps_from_quantiles when every quantile equals `yhat`.
inline double degenerate_crps(double y, double yhat) {
    static const auto w = riemann_weights(kFixedLevels);
    double up = 0.0, down = 0.0;
    for (std::size_t k = 0; k < w.size(); ++k) {
        up += w[k] * kFixedLevels[k];
        down += w[k] * (1.0 - kFixedLevels[k]);
    }
    return y >= yhat ? up * (y - yhat) : down * (yhat - y);
}

inline double interval_coverage(std::span<const double> y, std::span<const PredictiveDistribution> dists, double alpha) {
    require(y.size() == dists.size(), ErrorCode::LengthMismatch, "coverage: length mismatch");
    require(!y.empty(), ErrorCode::EmptyData, "coverage of an empty sample");
    std::size_t inside = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const auto lo = dists[i].at(alpha / 2.0);
        const auto hi = dists[i].at(1.0 - alpha / 2.0);
        require(lo.has_value() && hi.has_value(), ErrorCode::MissingLevel,
                "distribution lacks the interval levels for alpha=" + text::format_double(alpha));
        inside += (*lo <= y[i] && y[i] <= *hi) ? 1 : 0;
    }
    return static_cast<double>(inside) / static_cast<double>(y.size());
}

enum class Region { One = 1, Two = 2, Three = 3, Excluded = 4 };

/// Half-open bands: rated belongs to region 3 and cut-out is excluded.
inline Region assign_region(double mean_speed, const Turbine& turbine) {
    require(std::isfinite(mean_speed) && mean_speed >= 0.0, ErrorCode::InvalidArgument, "wind speed must be >= 0");
    if (mean_speed < turbine.cut_in()) {
        return Region::One;
    }
    if (mean_speed < turbine.rated_speed()) {
        return Region::Two;
    }
    if (mean_speed < turbine.cut_out()) {
        return Region::Three;
    }
    return Region::Excluded;
}

// ---------------------------------------------------------------------------------------------
// Reports

struct Scores {
    std::size_t n = 0;
    double mae = 0.0;                 // fraction of capacity
    std::optional<double> crps;       // fraction of capacity; absent for point-only models
};

struct FarmReport {
    std::string farm_id;
    double capacity = 0.0;
    Scores overall;
    std::array<Scores, 3> regions;
    std::size_t excluded = 0;
    std::vector<std::pair<double, double>> coverage; // (alpha, fraction)
};

struct AveragedScores {
    std::size_t n_farms = 0;
    double mae = 0.0;
    std::optional<double> crps;
};

struct EvaluationReport {
    std::string model;
    std::vector<FarmReport> farms;
    AveragedScores average;
    std::array<AveragedScores, 3> region_average;
    std::vector<std::pair<double, double>> coverage_average;
};

/// Everything needed to score one farm: targets, forecasts and the mean forecast speed per row.
struct FarmForecasts {
    const FarmLayout* layout = nullptr;
    std::vector<double> y;
    std::vector<PredictiveDistribution> dists;
    std::vector<double> mean_speed;
};

namespace detail {

struct Accumulator {
    std::size_t n = 0;
    double abs_err = 0.0;
    double crps = 0.0;
    bool has_crps = true;

    void add(double y, const PredictiveDistribution& d) {
        ++n;
        abs_err += std::abs(y - point_forecast(d));
        if (has_crps && fixed_quantiles(d)) {
            crps += crps_from_quantiles(y, d);
        } else {
            has_crps = false;
        }
    }

    Scores finish(double capacity) const {
        Scores s;
        s.n = n;
        if (n == 0) {
            return s;
        }
        s.mae = abs_err / static_cast<double>(n) / capacity;
        if (has_crps) {
            s.crps = crps / static_cast<double>(n) / capacity;
        }
        return s;
    }
};

inline AveragedScores average_of(const std::vector<const Scores*>& parts) {
    AveragedScores a;
    bool crps = true;
    double sum_crps = 0.0;
    for (const auto* s : parts) {
        if (s->n == 0) {
            continue;
        }
        ++a.n_farms;
        a.mae += s->mae;
        if (s->crps) {
            sum_crps += *s->crps;
        } else {
            crps = false;
        }
    }
    if (a.n_farms > 0) {
        a.mae /= static_cast<double>(a.n_farms);
        if (crps) {
            a.crps = sum_crps / static_cast<double>(a.n_farms);
        }
    }
    return a;
}

} // namespace detail

/// Scores one farm. Rows whose mean forecast speed reaches cut-out are dropped from every
/// aggregate; regions use the thresholds of the farm's modal turbine type.
inline FarmReport farm_report(const FarmForecasts& f, std::span<const double> alphas = std::vector<double>{0.1, 0.2}) {
    require(f.layout != nullptr, ErrorCode::InvalidArgument, "farm forecasts without a layout");
    require(f.y.size() == f.dists.size() && f.y.size() == f.mean_speed.size(), ErrorCode::LengthMismatch,
            "farm " + f.layout->farm_id() + ": targets, forecasts and speeds differ in length");
    const double capacity = f.layout->installed_capacity();
    require(capacity > 0.0, ErrorCode::ZeroCapacity, "farm " + f.layout->farm_id() + " has zero capacity");
    const auto& turbine = f.layout->modal_turbine();

    FarmReport r;
    r.farm_id = f.layout->farm_id();
    r.capacity = capacity;
    detail::Accumulator all;
    std::array<detail::Accumulator, 3> by_region;
    std::vector<double> kept_y;
    std::vector<PredictiveDistribution> kept_d;
    for (std::size_t i = 0; i < f.y.size(); ++i) {
        const auto region = assign_region(f.mean_speed[i], turbine);
        if (region == Region::Excluded) {
            ++r.excluded;
            continue;
        }
        f.dists[i].validate();
        all.add(f.y[i], f.dists[i]);
        by_region[static_cast<std::size_t>(region) - 1].add(f.y[i], f.dists[i]);
        kept_y.push_back(f.y[i]);
        kept_d.push_back(f.dists[i]);
    }
    require(all.n > 0, ErrorCode::EmptyData, "farm " + r.farm_id + ": every row is in the excluded region");
    r.overall = all.finish(capacity);
    for (std::size_t k = 0; k < 3; ++k) {
        r.regions[k] = by_region[k].finish(capacity);
    }
    for (double a : alphas) {
        const double lo = a / 2.0;
        const bool has_levels = kept_d.front().at(lo) && kept_d.front().at(1.0 - lo);
        if (has_levels) {
            r.coverage.emplace_back(a, interval_coverage(kept_y, kept_d, a));
        }
    }
    return r;
}

/// Per-farm reports plus the unweighted average over farms, overall and per region.
inline EvaluationReport build_report(std::string model, std::span<const FarmForecasts> farms,
                                     std::span<const double> alphas = std::vector<double>{0.1, 0.2}) {
    require(!farms.empty(), ErrorCode::EmptyData, "no farms to evaluate");
    EvaluationReport rep;
    rep.model = std::move(model);
    for (const auto& f : farms) {
        rep.farms.push_back(farm_report(f, alphas));
    }
    std::vector<const Scores*> overall;
    for (const auto& f : rep.farms) {
        overall.push_back(&f.overall);
    }
    rep.average = detail::average_of(overall);
    for (std::size_t k = 0; k < 3; ++k) {
        std::vector<const Scores*> parts;
        for (const auto& f : rep.farms) {
            parts.push_back(&f.regions[k]);
        }
        rep.region_average[k] = detail::average_of(parts);
    }
    for (const auto& entry : rep.farms.front().coverage) {
        const double a = entry.first;
        double s = 0.0;
        for (const auto& f : rep.farms) {
            for (const auto& [b, c] : f.coverage) {
                s += b == a ? c : 0.0;
            }
        }
        rep.coverage_average.emplace_back(a, s / static_cast<double>(rep.farms.size()));
    }
    return rep;
}

inline nlohmann::json to_json(const Scores& s) {
    nlohmann::json j{{"n", s.n}, {"mae", s.mae}};
    j["crps"] = s.crps ? nlohmann::json(*s.crps) : nlohmann::json();
    return j;
}

inline nlohmann::json to_json(const AveragedScores& s) {
    nlohmann::json j{{"n_farms", s.n_farms}, {"mae", s.mae}};
    j["crps"] = s.crps ? nlohmann::json(*s.crps) : nlohmann::json();
    return j;
}

inline nlohmann::json to_json(const EvaluationReport& r) {
    auto coverage = [](const std::vector<std::pair<double, double>>& cov) {
        nlohmann::json j = nlohmann::json::array();
        for (const auto& [a, c] : cov) {
            j.push_back({{"alpha", a}, {"coverage", c}});
        }
        return j;
    };
    nlohmann::json farms = nlohmann::json::array();
    for (const auto& f : r.farms) {
        nlohmann::json regions = nlohmann::json::array();
        for (const auto& s : f.regions) {
            regions.push_back(to_json(s));
        }
        farms.push_back({{"farm_id", f.farm_id},
                         {"capacity_mw", f.capacity},
                         {"overall", to_json(f.overall)},
                         {"regions", regions},
                         {"excluded", f.excluded},
                         {"coverage", coverage(f.coverage)}});
    }
    nlohmann::json regions = nlohmann::json::array();
    for (const auto& s : r.region_average) {
        regions.push_back(to_json(s));
    }
    return {{"format", "windprob.report"},
            {"model", r.model},
            {"farms", farms},
            {"average", to_json(r.average)},
            {"region_average", regions},
            {"coverage_average", coverage(r.coverage_average)}};
}

namespace detail {

inline std::string pct(std::optional<double> v) {
    if (!v) {
        return "NA";
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f%%", 100.0 * *v);
    return buf;
}

inline std::string row(const std::string& label, const std::vector<std::string>& cells) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%-16s", label.c_str());
    std::string out = buf;
    for (const auto& c : cells) {
        std::snprintf(buf, sizeof buf, " %10s", c.c_str());
        out += buf;
    }
    return out + "\n";
}

} // namespace detail

/// Plain-text table: one line per farm plus the average, then the region breakdown.
inline std::string format_table(const EvaluationReport& r) {
    std::string out = "model: " + r.model + "\n";
    std::vector<std::string> head = {"MAE", "CRPS", "n", "excluded"};
    for (const auto& [a, c] : r.coverage_average) {
        head.push_back("cov" + std::to_string(static_cast<int>(std::lround(100.0 * (1.0 - a)))));
    }
    out += detail::row("farm", head);
    for (const auto& f : r.farms) {
        std::vector<std::string> cells = {detail::pct(f.overall.mae), detail::pct(f.overall.crps),
                                          std::to_string(f.overall.n), std::to_string(f.excluded)};
        for (const auto& [a, c] : f.coverage) {
            cells.push_back(detail::pct(c));
        }
        out += detail::row(f.farm_id, cells);
    }
    std::vector<std::string> avg = {detail::pct(r.average.mae), detail::pct(r.average.crps), "", ""};
    for (const auto& [a, c] : r.coverage_average) {
        avg.push_back(detail::pct(c));
    }
    out += detail::row("average", avg);
    out += "\n";
    out += detail::row("region", {"MAE", "CRPS", "farms"});
    for (std::size_t k = 0; k < 3; ++k) {
        const auto& s = r.region_average[k];
        out += detail::row("region " + std::to_string(k + 1),
                           {s.n_farms ? detail::pct(s.mae) : "NA", detail::pct(s.crps), std::to_string(s.n_farms)});
    }
    return out;
}

} // namespace windprob::eval
