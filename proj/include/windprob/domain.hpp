#pragma once

#include "windprob/error.hpp"
#include "windprob/timestamp.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace windprob {

/// Quantile levels every probabilistic head reports and every score consumes.
inline constexpr std::array<double, 7> kFixedLevels = {0.05, 0.10, 0.25, 0.50, 0.75, 0.90, 0.95};

/// Wraps any angle in degrees onto [0, 360).
inline double wrap_degrees(double deg) {
    double r = std::fmod(deg, 360.0);
    if (r < 0.0) {
        r += 360.0;
    }
    return r >= 360.0 ? 0.0 : r;
}

struct ProviderForecast {
    std::string provider_id;
    double wind_speed = 0.0;     // m/s
    double wind_direction = 0.0; // meteorological degrees, wind *from*
};

struct EnsembleForecastRecord {
    Timestamp time;
    std::vector<ProviderForecast> providers;

    void validate() const {
        require(!providers.empty(), ErrorCode::InvalidArgument,
                "forecast record at " + time.to_string() + " has no providers");
        for (std::size_t i = 0; i < providers.size(); ++i) {
            const auto& p = providers[i];
            require(std::isfinite(p.wind_speed) && p.wind_speed >= 0.0, ErrorCode::InvalidArgument,
                    "negative or non-finite wind speed for provider " + p.provider_id);
            require(p.wind_direction >= 0.0 && p.wind_direction < 360.0, ErrorCode::InvalidArgument,
                    "direction outside [0,360) for provider " + p.provider_id);
            for (std::size_t j = 0; j < i; ++j) {
                require(providers[j].provider_id != p.provider_id, ErrorCode::InvalidArgument,
                        "duplicate provider " + p.provider_id + " at " + time.to_string());
            }
        }
    }
};

struct PowerObservation {
    Timestamp time;
    double power = 0.0; // MW
    std::string farm_id;
};

/// Tabulated curve with linear interpolation and constant extrapolation beyond the table.
class PiecewiseLinearCurve {
public:
    PiecewiseLinearCurve() = default;
    PiecewiseLinearCurve(std::vector<double> xs, std::vector<double> ys) : xs_(std::move(xs)), ys_(std::move(ys)) {
        require(!xs_.empty() && xs_.size() == ys_.size(), ErrorCode::InvalidArgument,
                "curve needs matching non-empty tables");
        for (std::size_t i = 1; i < xs_.size(); ++i) {
            require(xs_[i] > xs_[i - 1], ErrorCode::InvalidArgument, "curve abscissae must increase");
        }
    }

    double operator()(double x) const {
        if (x <= xs_.front()) {
            return ys_.front();
        }
        if (x >= xs_.back()) {
            return ys_.back();
        }
        const auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
        const auto hi = static_cast<std::size_t>(it - xs_.begin());
        const std::size_t lo = hi - 1;
        const double w = (x - xs_[lo]) / (xs_[hi] - xs_[lo]);
        return ys_[lo] + w * (ys_[hi] - ys_[lo]);
    }

    const std::vector<double>& xs() const { return xs_; }
    const std::vector<double>& ys() const { return ys_; }
    double max_value() const { return *std::max_element(ys_.begin(), ys_.end()); }

private:
    std::vector<double> xs_;
    std::vector<double> ys_;
};

struct TurbineSpec {
    std::string id;
    double easting = 0.0;  // m
    double northing = 0.0; // m
    double rotor_diameter = 0.0;
    double hub_height = 0.0;
    double cut_in = 0.0;
    double rated_speed = 0.0;
    double cut_out = 0.0;
    PiecewiseLinearCurve power_curve;  // m/s -> MW
    PiecewiseLinearCurve thrust_curve; // m/s -> Ct
};

/// Turbine with validated operating envelope. Power and thrust are zero outside [cut_in, cut_out).
class Turbine {
public:
    explicit Turbine(TurbineSpec spec) : s_(std::move(spec)) {
        require(s_.rotor_diameter > 0.0, ErrorCode::InvalidArgument, "turbine " + s_.id + ": rotor diameter must be > 0");
        require(0.0 <= s_.cut_in && s_.cut_in < s_.rated_speed && s_.rated_speed < s_.cut_out, ErrorCode::InvalidArgument,
                "turbine " + s_.id + ": need 0 <= cut_in < rated < cut_out");
        const auto& xs = s_.power_curve.xs();
        double prev = -1.0;
        for (double v : xs) {
            if (v < s_.cut_in || v > s_.rated_speed) {
                continue;
            }
            const double p = s_.power_curve(v);
            require(p >= prev, ErrorCode::InvalidArgument, "turbine " + s_.id + ": power curve decreases below rated");
            prev = p;
        }
        for (double v : xs) {
            if (power(v) > 0.0) {
                const double ct = thrust(v);
                require(ct > 0.0 && ct < 1.0, ErrorCode::InvalidThrust,
                        "turbine " + s_.id + ": Ct must lie in (0,1) where power > 0");
            }
        }
    }

    bool operating(double v) const { return v >= s_.cut_in && v < s_.cut_out; }
    double power(double v) const { return operating(v) ? s_.power_curve(v) : 0.0; }
    double thrust(double v) const { return operating(v) ? s_.thrust_curve(v) : 0.0; }
    double rated_power() const { return s_.power_curve.max_value(); }

    const TurbineSpec& spec() const { return s_; }
    const std::string& id() const { return s_.id; }
    double easting() const { return s_.easting; }
    double northing() const { return s_.northing; }
    double rotor_diameter() const { return s_.rotor_diameter; }
    double hub_height() const { return s_.hub_height; }
    double cut_in() const { return s_.cut_in; }
    double rated_speed() const { return s_.rated_speed; }
    double cut_out() const { return s_.cut_out; }

private:
    TurbineSpec s_;
};

class FarmLayout {
public:
    FarmLayout(std::string farm_id, std::vector<Turbine> turbines, std::vector<FarmLayout> neighbours = {})
        : farm_id_(std::move(farm_id)), turbines_(std::move(turbines)), neighbours_(std::move(neighbours)) {
        require(!turbines_.empty(), ErrorCode::InvalidArgument, "farm " + farm_id_ + " has no turbines");
        for (const auto& t : turbines_) {
            capacity_ += t.rated_power();
        }
        std::vector<const Turbine*> all;
        for (const auto& t : turbines_) {
            all.push_back(&t);
        }
        for (const auto& n : neighbours_) {
            for (const auto& t : n.turbines()) {
                all.push_back(&t);
            }
        }
        for (std::size_t i = 0; i < all.size(); ++i) {
            for (std::size_t j = 0; j < i; ++j) {
                require(all[i]->easting() != all[j]->easting() || all[i]->northing() != all[j]->northing(),
                        ErrorCode::InvalidArgument, "duplicate turbine position in farm " + farm_id_);
            }
        }
    }

    const std::string& farm_id() const { return farm_id_; }
    const std::vector<Turbine>& turbines() const { return turbines_; }
    const std::vector<FarmLayout>& neighbours() const { return neighbours_; }
    double installed_capacity() const { return capacity_; }

    /// Copy of this farm with a different neighbour set.
    FarmLayout with_neighbours(std::vector<FarmLayout> neighbours) const {
        return FarmLayout(farm_id_, turbines_, std::move(neighbours));
    }

    /// Turbine whose (cut_in, rated, cut_out) triple is most common; ties go to the first seen.
    const Turbine& modal_turbine() const {
        std::size_t best = 0;
        std::size_t best_count = 0;
        for (std::size_t i = 0; i < turbines_.size(); ++i) {
            std::size_t count = 0;
            for (const auto& t : turbines_) {
                if (t.cut_in() == turbines_[i].cut_in() && t.rated_speed() == turbines_[i].rated_speed() &&
                    t.cut_out() == turbines_[i].cut_out()) {
                    ++count;
                }
            }
            if (count > best_count) {
                best = i;
                best_count = count;
            }
        }
        return turbines_[best];
    }

private:
    std::string farm_id_;
    std::vector<Turbine> turbines_;
    std::vector<FarmLayout> neighbours_;
    double capacity_ = 0.0;
};

/// Closed interval used to clamp predicted power, typically [0, installed capacity].
struct Bounds {
    double lower = 0.0;
    double upper = 0.0;
};

struct GaussianSummary {
    double mu = 0.0;
    double sigma = 1.0;
};

struct PredictiveDistribution {
    Timestamp time;
    std::vector<double> levels;
    std::vector<double> values;
    std::optional<GaussianSummary> gaussian;
    std::optional<std::vector<double>> samples;

    void validate() const {
        require(levels.size() == values.size(), ErrorCode::LengthMismatch, "levels and values differ in length");
        for (std::size_t i = 0; i < levels.size(); ++i) {
            require(levels[i] > 0.0 && levels[i] < 1.0, ErrorCode::InvalidArgument, "quantile level outside (0,1)");
            if (i > 0) {
                require(levels[i] > levels[i - 1], ErrorCode::InvalidArgument, "quantile levels must increase strictly");
                require(values[i] >= values[i - 1], ErrorCode::InvalidArgument, "quantile values must not decrease");
            }
        }
        if (gaussian) {
            require(gaussian->sigma > 0.0, ErrorCode::InvalidArgument, "gaussian sigma must be positive");
        }
    }

    /// Value at a level, matched to within 1e-12.
    std::optional<double> at(double level) const {
        for (std::size_t i = 0; i < levels.size(); ++i) {
            if (std::abs(levels[i] - level) < 1e-12) {
                return values[i];
            }
        }
        return std::nullopt;
    }
};

/// Median of the distribution: the 0.5 quantile, falling back to the Gaussian mean.
inline double point_forecast(const PredictiveDistribution& dist) {
    if (auto median = dist.at(0.5)) {
        return *median;
    }
    if (dist.gaussian) {
        return dist.gaussian->mu;
    }
    fail(ErrorCode::MissingMedian, "distribution has neither a 0.5 quantile nor gaussian parameters");
}

inline double normalize_power(double power_mw, const FarmLayout& layout) {
    require(layout.installed_capacity() > 0.0, ErrorCode::ZeroCapacity, "farm " + layout.farm_id() + " has zero capacity");
    return power_mw / layout.installed_capacity();
}

inline double normalize_power(double power_mw, double capacity_mw) {
    require(capacity_mw > 0.0, ErrorCode::ZeroCapacity, "installed capacity must be positive");
    return power_mw / capacity_mw;
}

} // namespace windprob
