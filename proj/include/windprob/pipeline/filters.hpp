#pragma once

#include "windprob/domain.hpp"
#include "windprob/pipeline/csv_io.hpp"
#include "windprob/stats.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <span>
#include <vector>

namespace windprob::pipeline {

/// Drops every observation (any farm) at a timestamp where downward balancing was activated.
inline std::vector<PowerObservation> filter_balancing_curtailments(std::span<const PowerObservation> observations,
                                                                   std::span<const BalancingFlag> flags) {
    std::map<Timestamp, bool> active;
    for (const auto& f : flags) {
        const auto [it, inserted] = active.emplace(f.time, f.activated);
        require(inserted || it->second == f.activated, ErrorCode::Misalignment,
                "conflicting balancing flags at " + f.time.to_string());
    }
    std::vector<PowerObservation> out;
    out.reserve(observations.size());
    for (const auto& o : observations) {
        const auto it = active.find(o.time);
        require(it != active.end(), ErrorCode::Misalignment, "no balancing flag at " + o.time.to_string());
        if (!it->second) {
            out.push_back(o);
        }
    }
    return out;
}

struct EconomicFilterOptions {
    double bin_width = 0.5;       // m/s
    std::size_t min_count = 100;  // per final bin
    double drop_quantile = 0.05;
};

/// Final bin id per row. Base bins of `bin_width` are merged rightward until a merged bin holds
/// `min_count` rows; a short remainder at the top joins the last full bin.
inline std::vector<std::size_t> economic_bins(std::span<const double> speeds, const EconomicFilterOptions& opt = {}) {
    require(opt.bin_width > 0.0, ErrorCode::InvalidArgument, "bin width must be > 0");
    require(opt.min_count >= 1, ErrorCode::InvalidArgument, "minimum bin count must be >= 1");
    std::map<long, std::size_t> counts;
    std::vector<long> base(speeds.size());
    for (std::size_t i = 0; i < speeds.size(); ++i) {
        require(std::isfinite(speeds[i]) && speeds[i] >= 0.0, ErrorCode::InvalidArgument,
                "reference speed must be finite and >= 0");
        base[i] = static_cast<long>(std::floor(speeds[i] / opt.bin_width));
        ++counts[base[i]];
    }
    std::map<long, std::size_t> merged;
    std::size_t id = 0, running = 0;
    std::vector<long> pending;
    for (const auto& [b, c] : counts) {
        pending.push_back(b);
        running += c;
        if (running >= opt.min_count) {
            for (long p : pending) {
                merged[p] = id;
            }
            ++id;
            pending.clear();
            running = 0;
        }
    }
    if (!pending.empty()) {
        const std::size_t target = id == 0 ? 0 : id - 1;
        for (long p : pending) {
            merged[p] = target;
        }
    }
    std::vector<std::size_t> out(speeds.size());
    for (std::size_t i = 0; i < speeds.size(); ++i) {
        out[i] = merged.at(base[i]);
    }
    return out;
}

/// Indices of rows kept: within each final bin, rows with power below the bin's
/// `drop_quantile` (linear interpolation) are removed.
inline std::vector<std::size_t> economic_keep_indices(std::span<const double> power, std::span<const double> speeds,
                                                      const EconomicFilterOptions& opt = {}) {
    require(power.size() == speeds.size(), ErrorCode::LengthMismatch, "power and reference speeds differ in length");
    const auto bins = economic_bins(speeds, opt);
    std::map<std::size_t, std::vector<double>> by_bin;
    for (std::size_t i = 0; i < power.size(); ++i) {
        by_bin[bins[i]].push_back(power[i]);
    }
    std::map<std::size_t, double> cut;
    for (auto& [b, values] : by_bin) {
        cut[b] = stats::quantile_linear(values, opt.drop_quantile);
    }
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < power.size(); ++i) {
        if (power[i] >= cut[bins[i]]) {
            keep.push_back(i);
        }
    }
    return keep;
}

/// Observation-level form: `reference_speeds[i]` belongs to `observations[i]`.
inline std::vector<PowerObservation> filter_economic_curtailments(std::span<const PowerObservation> observations,
                                                                  std::span<const double> reference_speeds,
                                                                  const EconomicFilterOptions& opt = {}) {
    std::vector<double> power;
    power.reserve(observations.size());
    for (const auto& o : observations) {
        power.push_back(o.power);
    }
    std::vector<PowerObservation> out;
    for (std::size_t i : economic_keep_indices(power, reference_speeds, opt)) {
        out.push_back(observations[i]);
    }
    return out;
}

} // namespace windprob::pipeline
