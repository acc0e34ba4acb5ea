#pragma once

// Engineering baselines: manufacturer power curves and a self-similar Gaussian wake model
// with Crespo-Hernández added turbulence and linear deficit superposition.

#include "windprob/domain.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>
#include <span>
#include <string>
#include <vector>

namespace windprob::wake {

struct WakeParams {
    double k_a = 0.38371;
    double k_b = 0.003678;
    double ambient_ti_iref = 0.06;

    void validate() const {
        require(k_a >= 0.0 && k_b >= 0.0 && k_a + k_b > 0.0, ErrorCode::InvalidArgument,
                "wake expansion coefficients must be non-negative and not both zero");
        require(ambient_ti_iref >= 0.0, ErrorCode::InvalidArgument, "reference turbulence intensity must be >= 0");
    }
};

struct FlowCase {
    double wind_speed = 0.0;     // m/s at hub height
    double wind_direction = 0.0; // degrees, direction the wind comes from
};

/// Wake-free farm output: Σ_j P_j(v) over the farm's own turbines.
inline double power_curve_forecast(const FarmLayout& layout, double wind_speed) {
    require(wind_speed >= 0.0, ErrorCode::InvalidArgument, "wind speed must be >= 0");
    double total = 0.0;
    for (const auto& t : layout.turbines()) {
        total += t.power(wind_speed);
    }
    return total;
}

/// IEC normal turbulence model: TI = iref·(0.75 v + 5.6) / v.
inline double freestream_ti(double wind_speed, double iref) {
    require(wind_speed > 0.0, ErrorCode::ZeroSpeed, "turbulence intensity is undefined at zero wind speed");
    return iref * (0.75 * wind_speed + 5.6) / wind_speed;
}

inline void check_ct(double ct) {
    require(ct > 0.0 && ct < 1.0, ErrorCode::InvalidThrust, "thrust coefficient must lie in (0,1)");
}

struct Deficit {
    double value = 0.0;       // fraction of the waking turbine's incident speed
    double sigma = 0.0;       // wake width, m
    bool near_field = false;  // closed form invalid here; value capped at the Gaussian envelope
};

namespace detail {

/// Deficit closed form with the thrust-dependent pieces precomputed: eps = 0.2√β.
inline Deficit deficit_core(double ct, double eps, double k_star, double x_d, double r, double d0) {
    const double sigma_d = k_star * x_d + eps;
    const double inner = 1.0 - ct / (8.0 * sigma_d * sigma_d);
    const double sigma = sigma_d * d0;
    const double centre = 1.0 - std::sqrt(std::max(0.0, inner));
    return Deficit{std::min(1.0, centre * std::exp(-r * r / (2.0 * sigma * sigma))), sigma, inner < 0.0};
}

inline double wake_eps(double ct) {
    const double root = std::sqrt(1.0 - ct);
    return 0.2 * std::sqrt((1.0 + root) / (2.0 * root));
}

} // namespace detail

/// Self-similar Gaussian deficit at downstream distance x and radial offset r.
inline Deficit gaussian_deficit(double ct, double x, double r, double d0, double ti_local, const WakeParams& params) {
    check_ct(ct);
    require(x > 0.0, ErrorCode::InvalidArgument, "deficit needs a downstream distance x > 0");
    require(d0 > 0.0, ErrorCode::InvalidArgument, "rotor diameter must be positive");
    return detail::deficit_core(ct, detail::wake_eps(ct), params.k_a * ti_local + params.k_b, x / d0, r, d0);
}

/// Axial induction from thrust: a = (1 - √(1 - Ct)) / 2.
inline double axial_induction(double ct) {
    check_ct(ct);
    return 0.5 * (1.0 - std::sqrt(1.0 - ct));
}

inline double crespo_hernandez_added_ti(double ct, double ti_ambient, double x, double d0) {
    require(x > 0.0 && d0 > 0.0, ErrorCode::InvalidArgument, "added turbulence needs x > 0 and d0 > 0");
    const double a = axial_induction(ct);
    return 0.73 * std::pow(a, 0.8325) * std::pow(ti_ambient, 0.0325) * std::pow(x / d0, -0.32);
}

/// Area of the intersection of two discs with radii r1, r2 whose centres are d apart.
inline double disc_overlap_area(double r1, double r2, double d) {
    require(r1 >= 0.0 && r2 >= 0.0 && d >= 0.0, ErrorCode::InvalidArgument, "overlap needs non-negative radii and distance");
    if (d >= r1 + r2) {
        return 0.0;
    }
    if (d <= std::abs(r1 - r2)) {
        const double m = std::min(r1, r2);
        return std::numbers::pi * m * m;
    }
    const double a1 = std::acos(std::clamp((d * d + r1 * r1 - r2 * r2) / (2.0 * d * r1), -1.0, 1.0));
    const double a2 = std::acos(std::clamp((d * d + r2 * r2 - r1 * r1) / (2.0 * d * r2), -1.0, 1.0));
    const double k = (-d + r1 + r2) * (d + r1 - r2) * (d - r1 + r2) * (d + r1 + r2);
    return r1 * r1 * a1 + r2 * r2 * a2 - 0.5 * std::sqrt(std::max(0.0, k));
}

/// Fraction of a rotor (diameter `rotor_d`) covered by a wake of diameter 4σ whose axis is r away.
inline double wake_rotor_overlap(double sigma, double r, double rotor_d) {
    const double rr = 0.5 * rotor_d;
    return disc_overlap_area(2.0 * sigma, rr, r) / (std::numbers::pi * rr * rr);
}

/// Unit vector (east, north) along which the wind travels.
inline std::array<double, 2> downstream_vector(double wind_direction_deg) {
    const double th = wrap_degrees(wind_direction_deg) * std::numbers::pi / 180.0;
    return {-std::sin(th), -std::cos(th)};
}

struct FarmFlowResult {
    double total_power = 0.0;             // MW, the target farm only
    std::vector<double> turbine_power;    // MW, target farm turbines in layout order
    std::vector<double> turbine_speed;    // m/s, local hub speed, same order
    std::vector<double> turbine_ti;       // local turbulence intensity, same order
    std::size_t near_field_count = 0;     // deficit evaluations that hit the near-field cap
};

/// Parameter-independent part of one flow case: processing order and pairwise geometry.
class FlowGeometry {
public:
    struct Pair {
        std::uint32_t up;   // index into turbines()
        double x_d;         // downstream distance / upstream rotor diameter
        double r;           // radial offset, m
        double x_pow;       // (x/d0)^-0.32
    };

    FlowGeometry(const FarmLayout& layout, const FlowCase& flow) : layout_(&layout), flow_(flow) {
        require(flow.wind_speed >= 0.0 && std::isfinite(flow.wind_speed), ErrorCode::InvalidArgument,
                "wind speed must be finite and >= 0");
        for (const auto& t : layout.turbines()) {
            all_.push_back(&t);
        }
        for (const auto& n : layout.neighbours()) {
            for (const auto& t : n.turbines()) {
                all_.push_back(&t);
            }
        }
        const std::size_t n = all_.size();
        const auto dv = downstream_vector(flow.wind_direction);
        std::vector<double> along(n), across(n);
        for (std::size_t i = 0; i < n; ++i) {
            along[i] = all_[i]->easting() * dv[0] + all_[i]->northing() * dv[1];
            across[i] = all_[i]->easting() * dv[1] - all_[i]->northing() * dv[0];
        }
        order_.resize(n);
        std::iota(order_.begin(), order_.end(), 0);
        std::stable_sort(order_.begin(), order_.end(), [&](std::size_t a, std::size_t b) { return along[a] < along[b]; });
        offsets_.push_back(0);
        for (std::size_t oj = 0; oj < n; ++oj) {
            const std::size_t j = order_[oj];
            for (std::size_t oi = 0; oi < oj; ++oi) {
                const std::size_t i = order_[oi];
                const double x = along[j] - along[i];
                if (!(x > 0.0)) {
                    continue;
                }
                const double d0 = all_[i]->rotor_diameter();
                const double r = std::hypot(across[j] - across[i], all_[j]->hub_height() - all_[i]->hub_height());
                pairs_.push_back(Pair{static_cast<std::uint32_t>(i), x / d0, r, std::pow(x / d0, -0.32)});
            }
            offsets_.push_back(pairs_.size());
        }
    }

    const FarmLayout& layout() const { return *layout_; }
    const FlowCase& flow() const { return flow_; }
    const std::vector<const Turbine*>& turbines() const { return all_; }
    const std::vector<std::size_t>& order() const { return order_; }
    /// Upstream pairs of the turbine at position `k` in processing order.
    std::span<const Pair> upstream_of(std::size_t k) const {
        return std::span<const Pair>(pairs_).subspan(offsets_[k], offsets_[k + 1] - offsets_[k]);
    }

private:
    const FarmLayout* layout_;
    FlowCase flow_;
    std::vector<const Turbine*> all_;
    std::vector<std::size_t> order_;
    std::vector<Pair> pairs_;
    std::vector<std::size_t> offsets_;
};

/// Steady flow through the farm and its neighbours. Turbines are processed upstream to
/// downstream; each sees freestream minus Σ_i u_i·deficit_i over upstream turbines i, where
/// u_i is turbine i's own incident speed. Each upstream wake's added turbulence is weighted by
/// the fraction of the rotor it covers (wake diameter 4σ); the largest weighted value is kept.
inline FarmFlowResult farm_power(const FlowGeometry& geo, const WakeParams& params) {
    params.validate();
    const auto& all = geo.turbines();
    const std::size_t n = all.size();
    const std::size_t n_own = geo.layout().turbines().size();
    const double u0 = geo.flow().wind_speed;
    FarmFlowResult out;
    out.turbine_power.assign(n_own, 0.0);
    out.turbine_speed.assign(n_own, u0);
    out.turbine_ti.assign(n_own, 0.0);
    if (u0 == 0.0) {
        return out;
    }
    const double ti0 = freestream_ti(u0, params.ambient_ti_iref);
    const double ti_pow = std::pow(ti0, 0.0325);
    std::vector<double> speed(n, u0), ti(n, ti0), ct(n, 0.0), eps(n, 0.0), k_star(n, 0.0), a_pow(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t j = geo.order()[k];
        double loss = 0.0;
        double max_add2 = 0.0;
        for (const auto& p : geo.upstream_of(k)) {
            const std::size_t i = p.up;
            if (!(ct[i] > 0.0)) {
                continue;
            }
            const auto d = detail::deficit_core(ct[i], eps[i], k_star[i], p.x_d, p.r, all[i]->rotor_diameter());
            out.near_field_count += d.near_field ? 1 : 0;
            loss += speed[i] * d.value;
            const double overlap = wake_rotor_overlap(d.sigma, p.r, all[j]->rotor_diameter());
            if (overlap > 0.0) {
                const double add = overlap * 0.73 * a_pow[i] * ti_pow * p.x_pow;
                max_add2 = std::max(max_add2, add * add);
            }
        }
        speed[j] = std::max(0.0, u0 - loss);
        ti[j] = std::sqrt(ti0 * ti0 + max_add2);
        ct[j] = all[j]->thrust(speed[j]);
        if (ct[j] > 0.0) {
            check_ct(ct[j]);
            eps[j] = detail::wake_eps(ct[j]);
            k_star[j] = params.k_a * ti[j] + params.k_b;
            a_pow[j] = std::pow(axial_induction(ct[j]), 0.8325);
        }
    }
    for (std::size_t k = 0; k < n_own; ++k) {
        out.turbine_speed[k] = speed[k];
        out.turbine_ti[k] = ti[k];
        out.turbine_power[k] = all[k]->power(speed[k]);
        out.total_power += out.turbine_power[k];
    }
    return out;
}

inline FarmFlowResult farm_power(const FarmLayout& layout, const FlowCase& flow, const WakeParams& params) {
    return farm_power(FlowGeometry(layout, flow), params);
}

struct WakeObservation {
    FlowCase flow;
    double power = 0.0; // MW, the target farm
};

struct CalibrationOptions {
    double k_a_min = 0.1, k_a_max = 0.6;
    double k_b_min = 0.0, k_b_max = 0.01;
    int grid_points = 21;           // per axis
    double tolerance = 1e-6;        // final simplex extent, normalized units
    int max_evaluations = 1000;
    std::size_t min_observations = 20;
};

struct CalibrationReport {
    WakeParams params;
    double rmse = 0.0;      // MW
    std::size_t n_cases = 0;
    int evaluations = 0;
};

inline double calibration_mse(std::span<const FlowGeometry> cases, std::span<const WakeObservation> obs,
                              const WakeParams& p) {
    double ss = 0.0;
    for (std::size_t i = 0; i < obs.size(); ++i) {
        const double e = farm_power(cases[i], p).total_power - obs[i].power;
        ss += e * e;
    }
    return ss / static_cast<double>(obs.size());
}

/// Least-squares (k_a, k_b): a bounded grid search, then Nelder-Mead refinement in coordinates
/// normalized to the bounds.
inline CalibrationReport calibrate_wake(const FarmLayout& layout, std::span<const WakeObservation> obs,
                                        const WakeParams& init = {}, const CalibrationOptions& opt = {}) {
    require(obs.size() >= opt.min_observations, ErrorCode::DegenerateData,
            "wake calibration needs at least " + std::to_string(opt.min_observations) + " observations");
    bool varied = false;
    const double d0 = wrap_degrees(obs.front().flow.wind_direction);
    for (const auto& o : obs) {
        require(std::isfinite(o.power) && o.power >= 0.0, ErrorCode::NonFiniteInput, "observed power must be finite");
        varied = varied || std::abs(wrap_degrees(o.flow.wind_direction) - d0) > 1e-9;
    }
    require(varied, ErrorCode::DegenerateData, "all observations share one wind direction; (k_a, k_b) is not identifiable");
    require(opt.grid_points >= 2, ErrorCode::InvalidArgument, "grid needs at least two points per axis");

    std::vector<FlowGeometry> cases;
    cases.reserve(obs.size());
    for (const auto& o : obs) {
        cases.emplace_back(layout, o.flow);
    }
    const double wa = opt.k_a_max - opt.k_a_min;
    const double wb = opt.k_b_max - opt.k_b_min;
    CalibrationReport rep;
    auto at = [&](double ua, double ub) {
        WakeParams p = init;
        p.k_a = opt.k_a_min + std::clamp(ua, 0.0, 1.0) * wa;
        p.k_b = opt.k_b_min + std::clamp(ub, 0.0, 1.0) * wb;
        return p;
    };
    auto loss = [&](double ua, double ub) {
        ++rep.evaluations;
        return calibration_mse(cases, obs, at(ua, ub));
    };

    double best_a = 0.0, best_b = 0.0, best = std::numeric_limits<double>::infinity();
    const int g = opt.grid_points;
    for (int ia = 0; ia < g; ++ia) {
        for (int ib = 0; ib < g; ++ib) {
            const double ua = static_cast<double>(ia) / (g - 1);
            const double ub = static_cast<double>(ib) / (g - 1);
            const double l = loss(ua, ub);
            if (l < best) {
                best = l;
                best_a = ua;
                best_b = ub;
            }
        }
    }
    // Nelder-Mead from the best grid cell; vertices are clamped to the unit box.
    using Vertex = std::array<double, 3>; // ua, ub, loss
    auto make = [&](double ua, double ub) {
        ua = std::clamp(ua, 0.0, 1.0);
        ub = std::clamp(ub, 0.0, 1.0);
        return Vertex{ua, ub, loss(ua, ub)};
    };
    const double h = 1.0 / (g - 1);
    std::array<Vertex, 3> sx{Vertex{best_a, best_b, best}, make(best_a + h, best_b), make(best_a, best_b + h)};
    auto by_loss = [](const Vertex& x, const Vertex& y) { return x[2] < y[2]; };
    while (rep.evaluations < opt.max_evaluations) {
        std::sort(sx.begin(), sx.end(), by_loss);
        const double size = std::max(std::max(std::abs(sx[1][0] - sx[0][0]), std::abs(sx[2][0] - sx[0][0])),
                                     std::max(std::abs(sx[1][1] - sx[0][1]), std::abs(sx[2][1] - sx[0][1])));
        if (size < opt.tolerance) {
            break;
        }
        const double ca = 0.5 * (sx[0][0] + sx[1][0]);
        const double cb = 0.5 * (sx[0][1] + sx[1][1]);
        const auto along = [&](double c) { return make(ca + c * (sx[2][0] - ca), cb + c * (sx[2][1] - cb)); };
        const Vertex r = along(-1.0);
        if (r[2] < sx[0][2]) {
            const Vertex e = along(-2.0);
            sx[2] = e[2] < r[2] ? e : r;
        } else if (r[2] < sx[1][2]) {
            sx[2] = r;
        } else {
            const Vertex c = r[2] < sx[2][2] ? along(-0.5) : along(0.5);
            if (c[2] < std::min(r[2], sx[2][2])) {
                sx[2] = c;
            } else {
                sx[1] = make(0.5 * (sx[0][0] + sx[1][0]), 0.5 * (sx[0][1] + sx[1][1]));
                sx[2] = make(0.5 * (sx[0][0] + sx[2][0]), 0.5 * (sx[0][1] + sx[2][1]));
            }
        }
    }
    std::sort(sx.begin(), sx.end(), by_loss);
    if (sx[0][2] < best) {
        best_a = sx[0][0];
        best_b = sx[0][1];
        best = sx[0][2];
    }
    rep.params = at(best_a, best_b);
    rep.rmse = std::sqrt(best);
    rep.n_cases = obs.size();
    return rep;
}

/// Multiplies each prediction by max_observed / rated, a proxy for grid losses.
inline std::vector<double> rescale_engineering(std::span<const double> predictions, double max_observed_power,
                                               double rated_power) {
    require(rated_power > 0.0, ErrorCode::ZeroCapacity, "rated power must be positive");
    const double f = max_observed_power / rated_power;
    std::vector<double> out(predictions.begin(), predictions.end());
    for (auto& v : out) {
        v *= f;
    }
    return out;
}

} // namespace windprob::wake
