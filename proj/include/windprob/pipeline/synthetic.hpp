#pragma once

// Synthetic offshore cluster: latent hub-height wind, provider forecasts, farm production with
// curtailments, and the latent truth retained for oracle checks.

#include "windprob/domain.hpp"
#include "windprob/features.hpp"
#include "windprob/layout_io.hpp"
#include "windprob/pipeline/csv_io.hpp"
#include "windprob/pipeline/strict_json.hpp"
#include "windprob/stats.hpp"
#include "windprob/wake.hpp"

#include <json.hpp>

#include <cmath>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace windprob::pipeline {

struct ProviderSpec {
    std::string id;
    double speed_bias = 0.0;      // m/s
    double speed_noise = 1.0;     // m/s, stationary sd of the provider's own error
    double direction_noise = 8.0; // degrees
};

struct WindProcess {
    double ar_phi = 0.97;              // hourly persistence of the latent Gaussian
    double weibull_shape = 2.2;
    double weibull_scale = 10.0;       // m/s
    double prevailing_direction = 240.0;
    double direction_kappa = 60.0;     // concentration of hourly direction steps (von Mises)
    double direction_reversion = 0.02; // pull toward the prevailing direction per hour

    void validate() const {
        require(ar_phi >= 0.0 && ar_phi < 1.0, ErrorCode::InvalidArgument, "ar_phi must be in [0,1)");
        require(weibull_shape > 0.0 && weibull_scale > 0.0, ErrorCode::InvalidArgument, "Weibull parameters must be > 0");
        require(direction_kappa >= 0.0, ErrorCode::InvalidArgument, "direction_kappa must be >= 0");
        require(direction_reversion >= 0.0 && direction_reversion <= 1.0, ErrorCode::InvalidArgument,
                "direction_reversion must be in [0,1]");
    }
};

struct SyntheticScenario {
    std::string start = "2021-01-01T00:00:00Z";
    int n_hours = 8000;
    std::string layout_file; // empty: built-in two-farm cluster
    WindProcess wind;
    std::vector<ProviderSpec> providers = {{"icon", 1.2, 1.3, 8.0}, {"hres", -0.6, 1.0, 6.0}, {"arpege", 2.4, 1.7, 10.0}};
    double common_speed_noise = 0.6;   // m/s, error shared by every provider
    double forecast_error_phi = 0.8;   // hourly persistence of forecast errors
    double power_noise = 0.03;         // multiplicative sd
    double grid_loss = 0.97;
    double balancing_rate = 0.004;     // event starts per hour (cluster-wide, flagged)
    double balancing_duration = 4.0;   // mean hours
    double economic_rate = 0.004;      // event starts per hour per farm (unflagged)
    double economic_duration = 3.0;
    std::uint64_t seed = 1;

    void validate() const {
        Timestamp::parse(start);
        require(n_hours >= 1, ErrorCode::InvalidArgument, "n_hours must be >= 1");
        require(!providers.empty(), ErrorCode::InvalidArgument, "scenario needs at least one provider");
        for (std::size_t i = 0; i < providers.size(); ++i) {
            require(!providers[i].id.empty(), ErrorCode::InvalidArgument, "provider id must not be empty");
            require(providers[i].speed_noise >= 0.0 && providers[i].direction_noise >= 0.0, ErrorCode::InvalidArgument,
                    "provider noise must be >= 0");
            for (std::size_t j = 0; j < i; ++j) {
                require(providers[i].id != providers[j].id, ErrorCode::InvalidArgument, "duplicate provider id");
            }
        }
        wind.validate();
        require(common_speed_noise >= 0.0 && power_noise >= 0.0, ErrorCode::InvalidArgument, "noise must be >= 0");
        require(forecast_error_phi >= 0.0 && forecast_error_phi < 1.0, ErrorCode::InvalidArgument,
                "forecast_error_phi must be in [0,1)");
        require(grid_loss > 0.0 && grid_loss <= 1.0, ErrorCode::InvalidArgument, "grid_loss must be in (0,1]");
        for (double r : {balancing_rate, economic_rate}) {
            require(r >= 0.0 && r <= 1.0, ErrorCode::InvalidArgument, "event rates must be in [0,1]");
        }
        require(balancing_duration >= 1.0 && economic_duration >= 1.0, ErrorCode::InvalidArgument,
                "event durations must be >= 1 hour");
    }
};

inline nlohmann::json to_json(const SyntheticScenario& s) {
    nlohmann::json providers = nlohmann::json::array();
    for (const auto& p : s.providers) {
        providers.push_back({{"id", p.id},
                             {"speed_bias", p.speed_bias},
                             {"speed_noise", p.speed_noise},
                             {"direction_noise", p.direction_noise}});
    }
    return {{"start", s.start},
            {"n_hours", s.n_hours},
            {"layout_file", s.layout_file},
            {"wind",
             {{"ar_phi", s.wind.ar_phi},
              {"weibull_shape", s.wind.weibull_shape},
              {"weibull_scale", s.wind.weibull_scale},
              {"prevailing_direction", s.wind.prevailing_direction},
              {"direction_kappa", s.wind.direction_kappa},
              {"direction_reversion", s.wind.direction_reversion}}},
            {"providers", providers},
            {"common_speed_noise", s.common_speed_noise},
            {"forecast_error_phi", s.forecast_error_phi},
            {"power_noise", s.power_noise},
            {"grid_loss", s.grid_loss},
            {"balancing_rate", s.balancing_rate},
            {"balancing_duration", s.balancing_duration},
            {"economic_rate", s.economic_rate},
            {"economic_duration", s.economic_duration}};
}

inline void read_scenario(StrictObject& o, SyntheticScenario& s) {
    o.get("start", s.start);
    o.get("n_hours", s.n_hours);
    o.get("layout_file", s.layout_file);
    o.object("wind", [&](StrictObject& w) {
        w.get("ar_phi", s.wind.ar_phi);
        w.get("weibull_shape", s.wind.weibull_shape);
        w.get("weibull_scale", s.wind.weibull_scale);
        w.get("prevailing_direction", s.wind.prevailing_direction);
        w.get("direction_kappa", s.wind.direction_kappa);
        w.get("direction_reversion", s.wind.direction_reversion);
    });
    if (o.has("providers")) {
        s.providers.clear();
    }
    o.array("providers", [&](StrictObject& p) {
        ProviderSpec spec;
        p.get("id", spec.id);
        p.get("speed_bias", spec.speed_bias);
        p.get("speed_noise", spec.speed_noise);
        p.get("direction_noise", spec.direction_noise);
        s.providers.push_back(spec);
    });
    o.get("common_speed_noise", s.common_speed_noise);
    o.get("forecast_error_phi", s.forecast_error_phi);
    o.get("power_noise", s.power_noise);
    o.get("grid_loss", s.grid_loss);
    o.get("balancing_rate", s.balancing_rate);
    o.get("balancing_duration", s.balancing_duration);
    o.get("economic_rate", s.economic_rate);
    o.get("economic_duration", s.economic_duration);
}

/// Two neighbouring reference farms: "alpha" (4 × 4 at 6D) and "beta" (3 × 4 at 7D), 3 km apart.
inline std::vector<FarmLayout> default_cluster() {
    FarmLayout alpha("alpha", reference_grid("A", 4, 4, 6, 6));
    FarmLayout beta("beta", reference_grid("B", 3, 4, 7, 7, 3000.0, 1500.0));
    return {alpha.with_neighbours({beta}), beta.with_neighbours({alpha})};
}

enum class Curtailment { None, Balancing, Economic };

inline std::string to_string(Curtailment c) {
    switch (c) {
    case Curtailment::None: return "none";
    case Curtailment::Balancing: return "balancing";
    case Curtailment::Economic: return "economic";
    }
    return "none";
}

struct TruthRow {
    Timestamp time;
    std::string farm_id;
    double wind_speed = 0.0;
    double wind_direction = 0.0;
    double potential_power = 0.0; // wake model × grid loss, before noise and curtailment
    Curtailment curtailment = Curtailment::None;
};

struct SyntheticData {
    std::vector<FarmLayout> layouts;
    std::vector<EnsembleForecastRecord> forecasts;
    std::vector<PowerObservation> production;
    std::vector<BalancingFlag> flags;
    std::vector<MeanInput> reference; // latent hub-height wind (reanalysis stand-in)
    std::vector<TruthRow> truth;
};

namespace detail {

/// Best-Fisher rejection sampler; returns radians in (-π, π].
inline double von_mises(std::mt19937_64& rng, double kappa) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    if (kappa < 1e-8) {
        return std::numbers::pi * (2.0 * u(rng) - 1.0);
    }
    const double a = 1.0 + std::sqrt(1.0 + 4.0 * kappa * kappa);
    const double b = (a - std::sqrt(2.0 * a)) / (2.0 * kappa);
    const double r = (1.0 + b * b) / (2.0 * b);
    while (true) {
        const double u1 = u(rng), u2 = u(rng), u3 = u(rng);
        const double z = std::cos(std::numbers::pi * u1);
        const double f = (1.0 + r * z) / (r + z);
        const double c = kappa * (r - f);
        if (c * (2.0 - c) - u2 > 0.0 || std::log(c / u2) + 1.0 - c >= 0.0) {
            const double theta = std::acos(std::clamp(f, -1.0, 1.0));
            return u3 > 0.5 ? theta : -theta;
        }
    }
}

/// Weibull quantile of Φ(z): maps the latent Gaussian onto the speed marginal.
inline double weibull_from_gaussian(double z, double shape, double scale) {
    const double p = std::clamp(stats::normal_cdf(z), 1e-15, 1.0 - 1e-15);
    return scale * std::pow(-std::log1p(-p), 1.0 / shape);
}

/// Event mask: an event starts with probability `rate` each hour and lasts a geometric number of hours.
inline std::vector<char> event_mask(std::size_t n, double rate, double mean_duration, std::mt19937_64& rng) {
    std::vector<char> mask(n, 0);
    std::bernoulli_distribution start(rate);
    std::geometric_distribution<int> extra(1.0 / mean_duration);
    for (std::size_t t = 0; t < n; ++t) {
        if (start(rng)) {
            const std::size_t len = 1 + static_cast<std::size_t>(extra(rng));
            for (std::size_t k = t; k < std::min(n, t + len); ++k) {
                mask[k] = 1;
            }
        }
    }
    return mask;
}

} // namespace detail

inline std::vector<FarmLayout> scenario_layouts(const SyntheticScenario& s) {
    return s.layout_file.empty() ? default_cluster() : load_layouts(s.layout_file);
}

/// Deterministic in the scenario (including its seed). Independent streams drive the wind, each
/// provider, the production noise and the curtailment events.
inline SyntheticData generate_synthetic(const SyntheticScenario& s, std::vector<FarmLayout> layouts) {
    s.validate();
    require(!layouts.empty(), ErrorCode::InvalidArgument, "scenario has no farms");
    const auto n = static_cast<std::size_t>(s.n_hours);
    const Timestamp t0 = Timestamp::parse(s.start);
    auto stream = [&](std::uint64_t k) { return std::mt19937_64(s.seed * 0x9e3779b97f4a7c15ULL + k * 0xbf58476d1ce4e5b9ULL + k); };
    std::normal_distribution<double> n01;

    SyntheticData out;
    out.layouts = std::move(layouts);

    // Latent wind.
    auto wind_rng = stream(1);
    std::vector<double> speed(n), dir(n);
    double z = n01(wind_rng);
    double theta = s.wind.prevailing_direction;
    const double innov = std::sqrt(1.0 - s.wind.ar_phi * s.wind.ar_phi);
    for (std::size_t t = 0; t < n; ++t) {
        if (t > 0) {
            z = s.wind.ar_phi * z + innov * n01(wind_rng);
            double pull = std::remainder(s.wind.prevailing_direction - theta, 360.0);
            theta += s.wind.direction_reversion * pull + detail::von_mises(wind_rng, s.wind.direction_kappa) * 180.0 / std::numbers::pi;
        }
        theta = wrap_degrees(theta);
        speed[t] = detail::weibull_from_gaussian(z, s.wind.weibull_shape, s.wind.weibull_scale);
        dir[t] = theta;
        out.reference.push_back({t0 + static_cast<std::int64_t>(t), speed[t], dir[t]});
    }

    // Forecasts: truth + bias + shared error + own error, errors AR(1) in time.
    const double phi = s.forecast_error_phi;
    const double e_innov = std::sqrt(1.0 - phi * phi);
    auto common_rng = stream(2);
    std::vector<double> common(n);
    double c = n01(common_rng);
    for (std::size_t t = 0; t < n; ++t) {
        if (t > 0) {
            c = phi * c + e_innov * n01(common_rng);
        }
        common[t] = s.common_speed_noise * c;
    }
    out.forecasts.resize(n);
    for (std::size_t t = 0; t < n; ++t) {
        out.forecasts[t].time = t0 + static_cast<std::int64_t>(t);
    }
    for (std::size_t p = 0; p < s.providers.size(); ++p) {
        const auto& spec = s.providers[p];
        auto rng = stream(10 + p);
        double es = n01(rng), ed = n01(rng);
        for (std::size_t t = 0; t < n; ++t) {
            if (t > 0) {
                es = phi * es + e_innov * n01(rng);
                ed = phi * ed + e_innov * n01(rng);
            }
            const double v = std::max(0.0, speed[t] + spec.speed_bias + common[t] + spec.speed_noise * es);
            const double d = wrap_degrees(dir[t] + spec.direction_noise * ed);
            out.forecasts[t].providers.push_back({spec.id, v, d});
        }
    }

    // Curtailment events.
    auto event_rng = stream(3);
    const auto balancing = detail::event_mask(n, s.balancing_rate, s.balancing_duration, event_rng);
    for (std::size_t t = 0; t < n; ++t) {
        out.flags.push_back({t0 + static_cast<std::int64_t>(t), balancing[t] != 0});
    }
    std::uniform_real_distribution<double> depth(0.0, 0.5);

    // Production per farm.
    for (std::size_t f = 0; f < out.layouts.size(); ++f) {
        const auto& layout = out.layouts[f];
        auto noise_rng = stream(100 + f);
        auto depth_rng = stream(200 + f);
        const auto economic = detail::event_mask(n, s.economic_rate, s.economic_duration, event_rng);
        const double cap = layout.installed_capacity();
        for (std::size_t t = 0; t < n; ++t) {
            const double turbine_power = wake::farm_power(layout, {speed[t], dir[t]}, wake::WakeParams{}).total_power;
            const double potential = turbine_power * s.grid_loss;
            double p = std::clamp(turbine_power * (1.0 + s.power_noise * n01(noise_rng)), 0.0, cap) * s.grid_loss;
            auto kind = Curtailment::None;
            const double d = depth(depth_rng);
            if (balancing[t]) {
                kind = Curtailment::Balancing;
                p *= d;
            } else if (economic[t]) {
                kind = Curtailment::Economic;
                p *= d;
            }
            const auto time = t0 + static_cast<std::int64_t>(t);
            out.production.push_back({time, p, layout.farm_id()});
            out.truth.push_back({time, layout.farm_id(), speed[t], dir[t], potential, kind});
        }
    }
    return out;
}

inline SyntheticData generate_synthetic(const SyntheticScenario& s) { return generate_synthetic(s, scenario_layouts(s)); }

inline std::string truth_to_csv(const std::vector<TruthRow>& rows) {
    std::string out = "time,farm_id,wind_speed_ms,wind_direction_deg,potential_power_mw,curtailment\n";
    for (const auto& r : rows) {
        out += r.time.to_string() + "," + r.farm_id + "," + text::format_double(r.wind_speed) + "," +
               text::format_double(r.wind_direction) + "," + text::format_double(r.potential_power) + "," +
               to_string(r.curtailment) + "\n";
    }
    return out;
}

} // namespace windprob::pipeline
