#pragma once

#include "windprob/domain.hpp"
#include "windprob/error.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace windprob {

struct CircularSummary {
    double mean_direction = 0.0;  // degrees in [0, 360)
    double circular_std = 0.0;    // sqrt(-2 ln R), radians
    double resultant_length = 1.0;
};

inline constexpr double kDegenerateResultant = 1e-12;

namespace detail {

inline double deg2rad(double d) { return d * std::numbers::pi / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / std::numbers::pi; }

struct Resultant {
    double mean_sin = 0.0;
    double mean_cos = 0.0;
    double length = 0.0;
};

template <typename Range>
Resultant resultant(const Range& directions_deg) {
    double s = 0.0, c = 0.0;
    std::size_t n = 0;
    for (double d : directions_deg) {
        s += std::sin(deg2rad(d));
        c += std::cos(deg2rad(d));
        ++n;
    }
    Resultant r;
    r.mean_sin = s / static_cast<double>(n);
    r.mean_cos = c / static_cast<double>(n);
    r.length = std::min(1.0, std::hypot(r.mean_sin, r.mean_cos));
    return r;
}

} // namespace detail

inline CircularSummary circular_mean_std(std::span<const double> directions_deg) {
    require(!directions_deg.empty(), ErrorCode::EmptyData, "circular statistics of an empty list");
    const auto r = detail::resultant(directions_deg);
    require(r.length > kDegenerateResultant, ErrorCode::DegenerateResultant,
            "resultant length is zero, mean direction undefined");
    CircularSummary out;
    out.mean_direction = wrap_degrees(detail::rad2deg(std::atan2(r.mean_sin, r.mean_cos)));
    out.resultant_length = r.length;
    out.circular_std = std::sqrt(std::max(0.0, -2.0 * std::log(r.length)));
    return out;
}

/// Column-major design matrix aligned to `times`.
struct FeatureMatrix {
    std::vector<Timestamp> times;
    std::vector<std::string> names;
    std::vector<std::vector<double>> columns;
    std::optional<std::vector<double>> target;

    std::size_t rows() const { return times.size(); }
    std::size_t cols() const { return names.size(); }

    std::size_t index_of(const std::string& name) const {
        const auto it = std::find(names.begin(), names.end(), name);
        require(it != names.end(), ErrorCode::SchemaMismatch, "no column named '" + name + "'");
        return static_cast<std::size_t>(it - names.begin());
    }

    const std::vector<double>& column(const std::string& name) const { return columns[index_of(name)]; }

    void add_column(std::string name, std::vector<double> values) {
        require(std::find(names.begin(), names.end(), name) == names.end(), ErrorCode::InvalidArgument,
                "duplicate column '" + name + "'");
        require(values.size() == rows(), ErrorCode::LengthMismatch, "column '" + name + "' has wrong length");
        names.push_back(std::move(name));
        columns.push_back(std::move(values));
    }

    FeatureMatrix select_rows(std::span<const std::size_t> idx) const {
        FeatureMatrix out;
        out.names = names;
        out.columns.assign(columns.size(), {});
        for (auto& c : out.columns) {
            c.reserve(idx.size());
        }
        if (target) {
            out.target.emplace();
        }
        for (std::size_t i : idx) {
            out.times.push_back(times[i]);
            for (std::size_t c = 0; c < columns.size(); ++c) {
                out.columns[c].push_back(columns[c][i]);
            }
            if (target) {
                out.target->push_back((*target)[i]);
            }
        }
        return out;
    }

    void validate() const {
        require(columns.size() == names.size(), ErrorCode::LengthMismatch, "names and columns differ");
        for (std::size_t c = 0; c < columns.size(); ++c) {
            require(columns[c].size() == rows(), ErrorCode::LengthMismatch, "column '" + names[c] + "' has wrong length");
            for (double v : columns[c]) {
                require(std::isfinite(v), ErrorCode::NonFiniteInput, "undefined value in column '" + names[c] + "'");
            }
            for (std::size_t d = 0; d < c; ++d) {
                require(names[c] != names[d], ErrorCode::InvalidArgument, "duplicate column '" + names[c] + "'");
            }
        }
        if (target) {
            require(target->size() == rows(), ErrorCode::LengthMismatch, "target has wrong length");
        }
    }
};

inline std::string lag_suffix(int lag) {
    return lag < 0 ? "t" + std::to_string(lag) : "t+" + std::to_string(lag);
}

/// Sorted, de-duplicated provider ids seen in the records.
inline std::vector<std::string> provider_ids(std::span<const EnsembleForecastRecord> records) {
    std::vector<std::string> ids;
    for (const auto& r : records) {
        for (const auto& p : r.providers) {
            ids.push_back(p.provider_id);
        }
    }
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    return ids;
}

/// Column names in emission order. Per lag: provider blocks (speed, dir_sin, dir_cos) then the
/// five summary columns; after all lags: one missing flag per provider and the degenerate-direction flag.
/// Width = P·L·3 + L·5 + P + 1.
inline std::vector<std::string> feature_names(const std::vector<std::string>& providers, std::span<const int> lags) {
    std::vector<std::string> names;
    for (int lag : lags) {
        const auto sfx = "." + lag_suffix(lag);
        for (const auto& p : providers) {
            names.push_back("speed." + p + sfx);
            names.push_back("dir_sin." + p + sfx);
            names.push_back("dir_cos." + p + sfx);
        }
        for (const char* s : {"speed_mean", "speed_std", "dir_cmean_sin", "dir_cmean_cos", "dir_cstd"}) {
            names.push_back(std::string(s) + sfx);
        }
    }
    for (const auto& p : providers) {
        names.push_back("missing." + p);
    }
    names.push_back("dir_degenerate");
    return names;
}

struct FeatureOptions {
    std::vector<int> lags = {-1, 0, 1};
    /// Provider universe; empty means "every provider seen in the records".
    std::vector<std::string> providers;
};

namespace detail {

// Per-timestamp values before lag expansion.
struct HourBlock {
    std::vector<double> provider_values; // P × (speed, sin, cos)
    std::array<double, 5> summary{};
    std::vector<double> missing;
    double degenerate = 0.0;
};

inline HourBlock hour_block(const EnsembleForecastRecord& rec, const std::vector<std::string>& providers) {
    rec.validate();
    std::vector<double> speeds, dirs;
    for (const auto& p : rec.providers) {
        if (std::binary_search(providers.begin(), providers.end(), p.provider_id)) {
            speeds.push_back(p.wind_speed);
            dirs.push_back(p.wind_direction);
        }
    }
    require(!speeds.empty(), ErrorCode::InvalidArgument, "no known provider at " + rec.time.to_string());
    HourBlock h;
    double sum = 0.0;
    for (double s : speeds) {
        sum += s;
    }
    const double mean_speed = sum / static_cast<double>(speeds.size());
    double ss = 0.0;
    for (double s : speeds) {
        ss += (s - mean_speed) * (s - mean_speed);
    }
    const auto r = resultant(dirs);
    double mean_dir = 0.0;
    double cstd = 0.0;
    if (r.length > kDegenerateResultant) {
        mean_dir = wrap_degrees(rad2deg(std::atan2(r.mean_sin, r.mean_cos)));
        cstd = std::sqrt(std::max(0.0, -2.0 * std::log(r.length)));
    } else {
        h.degenerate = 1.0;
        cstd = std::sqrt(-2.0 * std::log(kDegenerateResultant));
    }
    h.summary = {mean_speed, std::sqrt(ss / static_cast<double>(speeds.size())), std::sin(deg2rad(mean_dir)),
                 std::cos(deg2rad(mean_dir)), cstd};
    for (const auto& id : providers) {
        const auto it = std::find_if(rec.providers.begin(), rec.providers.end(),
                                     [&](const ProviderForecast& p) { return p.provider_id == id; });
        const bool present = it != rec.providers.end();
        const double speed = present ? it->wind_speed : mean_speed;
        const double dir = present ? it->wind_direction : mean_dir;
        h.provider_values.push_back(speed);
        h.provider_values.push_back(std::sin(deg2rad(dir)));
        h.provider_values.push_back(std::cos(deg2rad(dir)));
        h.missing.push_back(present ? 0.0 : 1.0);
    }
    return h;
}

} // namespace detail

/// Lagged ensemble design matrix. Rows whose lag neighbours are absent are dropped. When `targets`
/// is non-empty every surviving row must have an observation at the same timestamp.
inline FeatureMatrix build_features(std::span<const EnsembleForecastRecord> records, const FeatureOptions& options,
                                    std::span<const PowerObservation> targets = {}) {
    std::vector<int> lags = options.lags;
    std::sort(lags.begin(), lags.end());
    lags.erase(std::unique(lags.begin(), lags.end()), lags.end());
    require(!lags.empty(), ErrorCode::InvalidArgument, "lag set is empty");

    auto providers = options.providers.empty() ? provider_ids(records) : options.providers;
    std::sort(providers.begin(), providers.end());

    FeatureMatrix m;
    m.names = feature_names(providers, lags);
    m.columns.assign(m.names.size(), {});

    std::unordered_map<std::int64_t, std::size_t> by_time;
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (i > 0) {
            require(records[i].time > records[i - 1].time, ErrorCode::InvalidArgument, "records must be sorted by time");
        }
        by_time.emplace(records[i].time.hours(), i);
    }
    std::vector<detail::HourBlock> blocks;
    blocks.reserve(records.size());
    for (const auto& r : records) {
        blocks.push_back(detail::hour_block(r, providers));
    }

    std::unordered_map<std::int64_t, double> target_by_time;
    for (const auto& t : targets) {
        target_by_time[t.time.hours()] = t.power;
    }
    if (!targets.empty()) {
        m.target.emplace();
    }

    for (std::size_t i = 0; i < records.size(); ++i) {
        std::vector<std::size_t> neighbours;
        bool complete = true;
        for (int lag : lags) {
            const auto it = by_time.find(records[i].time.hours() + lag);
            if (it == by_time.end()) {
                complete = false;
                break;
            }
            neighbours.push_back(it->second);
        }
        if (!complete) {
            continue;
        }
        std::size_t c = 0;
        for (std::size_t j : neighbours) {
            for (double v : blocks[j].provider_values) {
                m.columns[c++].push_back(v);
            }
            for (double v : blocks[j].summary) {
                m.columns[c++].push_back(v);
            }
        }
        for (double v : blocks[i].missing) {
            m.columns[c++].push_back(v);
        }
        m.columns[c++].push_back(blocks[i].degenerate);
        m.times.push_back(records[i].time);
        if (m.target) {
            const auto it = target_by_time.find(records[i].time.hours());
            require(it != target_by_time.end(), ErrorCode::MisalignedTarget,
                    "no target observation at " + records[i].time.to_string());
            m.target->push_back(it->second);
        }
    }
    return m;
}

struct MeanInput {
    Timestamp time;
    double wind_speed = 0.0;
    double wind_direction = 0.0;
};

/// Arithmetic mean speed and circular mean direction across providers, per record.
inline std::vector<MeanInput> ensemble_mean_inputs(std::span<const EnsembleForecastRecord> records) {
    std::vector<MeanInput> out;
    out.reserve(records.size());
    for (const auto& rec : records) {
        rec.validate();
        std::vector<double> dirs;
        double sum = 0.0;
        for (const auto& p : rec.providers) {
            sum += p.wind_speed;
            dirs.push_back(p.wind_direction);
        }
        const auto circ = circular_mean_std(dirs);
        out.push_back({rec.time, sum / static_cast<double>(rec.providers.size()), circ.mean_direction});
    }
    return out;
}

} // namespace windprob
