#pragma once

#include "windprob/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

namespace windprob::stats {

inline double mean(std::span<const double> xs) {
    require(!xs.empty(), ErrorCode::EmptyData, "mean of empty sequence");
    double sum = 0.0;
    for (double x : xs) {
        sum += x;
    }
    return sum / static_cast<double>(xs.size());
}

/// Population standard deviation (divides by n).
inline double stddev(std::span<const double> xs) {
    const double m = mean(xs);
    double ss = 0.0;
    for (double x : xs) {
        ss += (x - m) * (x - m);
    }
    return std::sqrt(ss / static_cast<double>(xs.size()));
}

/// Linear interpolation between order statistics at h = (n-1)·tau (numpy's default rule).
inline double quantile_linear_sorted(std::span<const double> sorted, double tau) {
    require(!sorted.empty(), ErrorCode::EmptyData, "quantile of empty sequence");
    const double h = (static_cast<double>(sorted.size()) - 1.0) * tau;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = h - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

inline double quantile_linear(std::vector<double> xs, double tau) {
    std::sort(xs.begin(), xs.end());
    return quantile_linear_sorted(xs, tau);
}

/// Order statistic k = ceil(n·tau) (1-based, at least 1): always a minimiser of the total pinball loss.
inline double quantile_lower(std::vector<double> xs, double tau) {
    require(!xs.empty(), ErrorCode::EmptyData, "quantile of empty sequence");
    const double nt = static_cast<double>(xs.size()) * tau;
    auto k = static_cast<std::size_t>(std::ceil(nt - 1e-9));
    k = std::clamp<std::size_t>(k, 1, xs.size());
    std::nth_element(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(k - 1), xs.end());
    return xs[k - 1];
}

inline double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

/// Inverse standard-normal CDF: Acklam's rational approximation (relative error < 1.2e-9)
/// followed by one Halley step against erfc.
inline double normal_ppf(double p) {
    require(p > 0.0 && p < 1.0, ErrorCode::InvalidArgument, "normal_ppf needs p in (0,1)");
    constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                            1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
    constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                            6.680131188771972e+01,  -1.328068155288572e+01};
    constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                            -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
    constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                            3.754408661907416e+00};
    constexpr double p_low = 0.02425;

    double x = 0.0;
    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - p_low) {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log1p(-p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    const double e = normal_cdf(x) - p;
    const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
    return x - u / (1.0 + 0.5 * x * u);
}

} // namespace windprob::stats
