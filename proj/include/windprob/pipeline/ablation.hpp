#pragma once

// Input ablation: the same head retrained per farm on features built from the full ensemble,
// from each provider alone, and from the reference wind treated as a single provider.

#include "windprob/cqr.hpp"
#include "windprob/eval.hpp"
#include "windprob/pipeline/dataset.hpp"
#include "windprob/pipeline/heads.hpp"

#include <json.hpp>

#include <algorithm>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

namespace windprob::pipeline {

inline constexpr const char* kEnsembleInput = "ensemble";
inline constexpr const char* kReferenceInput = "reanalysis";

struct AblationEntry {
    std::string input;
    std::vector<double> farm_mae; // fraction of capacity, in dataset farm order
    double mae = 0.0;             // unweighted mean over farms
};

struct AblationReport {
    std::string head;
    std::vector<std::string> farms;
    std::vector<AblationEntry> entries; // ensemble first, then providers, then the reference input
    std::size_t n_test = 0;             // test rows per farm, summed

    const AblationEntry& entry(const std::string& input) const {
        for (const auto& e : entries) {
            if (e.input == input) {
                return e;
            }
        }
        fail(ErrorCode::InvalidArgument, "no ablation entry for " + input);
    }

    /// Largest single-provider MAE; the reference input is not a provider.
    const AblationEntry& worst_single() const {
        const AblationEntry* worst = nullptr;
        for (const auto& e : entries) {
            if (e.input != kEnsembleInput && e.input != kReferenceInput && (!worst || e.mae > worst->mae)) {
                worst = &e;
            }
        }
        require(worst != nullptr, ErrorCode::EmptyData, "ablation has no single-provider entry");
        return *worst;
    }

    /// (worst single - ensemble) / worst single.
    double improvement_over_worst() const {
        const double w = worst_single().mae;
        require(w > 0.0, ErrorCode::DegenerateData, "worst single-provider MAE is zero");
        return (w - entry(kEnsembleInput).mae) / w;
    }
};

namespace detail {

inline std::vector<EnsembleForecastRecord> only_provider(const std::vector<EnsembleForecastRecord>& records,
                                                         const std::string& provider) {
    std::vector<EnsembleForecastRecord> out;
    for (const auto& r : records) {
        for (const auto& p : r.providers) {
            if (p.provider_id == provider) {
                out.push_back({r.time, {p}});
                break;
            }
        }
    }
    return out;
}

inline std::vector<EnsembleForecastRecord> reference_records(const std::vector<MeanInput>& reference) {
    std::vector<EnsembleForecastRecord> out;
    for (const auto& r : reference) {
        out.push_back({r.time, {{kReferenceInput, r.wind_speed, r.wind_direction}}});
    }
    return out;
}

/// Rows of `s` re-expressed with the columns of `alt`, restricted to times present in `keep`.
inline SplitData realign(const SplitData& s, const FeatureMatrix& alt, const std::set<std::int64_t>& keep) {
    std::unordered_map<std::int64_t, std::size_t> row_of;
    for (std::size_t i = 0; i < alt.rows(); ++i) {
        row_of.emplace(alt.times[i].hours(), i);
    }
    SplitData out;
    out.x.names = alt.names;
    out.x.columns.assign(alt.cols(), {});
    out.x.target.emplace();
    for (std::size_t i = 0; i < s.rows(); ++i) {
        const auto h = s.x.times[i].hours();
        if (!keep.contains(h)) {
            continue;
        }
        const std::size_t r = row_of.at(h);
        out.x.times.push_back(s.x.times[i]);
        for (std::size_t c = 0; c < alt.cols(); ++c) {
            out.x.columns[c].push_back(alt.columns[c][r]);
        }
        out.x.target->push_back(s.y()[i]);
        out.mean_speed.push_back(s.mean_speed[i]);
        out.mean_direction.push_back(s.mean_direction[i]);
    }
    return out;
}

/// Median forecast of the head. The CQR median is the τ = 0.5 model clamped to capacity:
/// conformalization only moves the interval bounds.
inline std::vector<double> median_forecast(Head head, const HeadsConfig& cfg, const FarmData& farm,
                                           const FarmLayout& layout, std::uint64_t seed) {
    const auto& test = farm.test.x;
    std::vector<double> out;
    if (head == Head::Cqr) {
        auto p = cfg.cqr.gbt;
        p.seed = seed;
        const std::vector<double> median{0.5};
        const auto set = cqr::train_quantile_models(farm.train.x, farm.train.y(), p, median);
        for (const auto& row : set.predict_raw(test)) {
            out.push_back(std::clamp(row[0], 0.0, layout.installed_capacity()));
        }
        return out;
    }
    const auto model = train_head(head, cfg, farm, layout, seed);
    for (const auto& d : predict_head(model, test, seed)) {
        out.push_back(point_forecast(d));
    }
    return out;
}

} // namespace detail

/// Test rows common to every input configuration are scored, so all entries see the same hours.
inline AblationReport run_ablation(const Dataset& ds, const Config& cfg, std::uint64_t seed) {
    const Head head = parse_head(cfg.ablation.head);
    std::vector<std::pair<std::string, FeatureMatrix>> inputs;
    inputs.emplace_back(kEnsembleInput, build_features(ds.forecasts, cfg.features));
    for (const auto& p : provider_ids(ds.forecasts)) {
        FeatureOptions opt = cfg.features;
        opt.providers = {p};
        inputs.emplace_back(p, build_features(detail::only_provider(ds.forecasts, p), opt));
    }
    if (!ds.reference.empty()) {
        FeatureOptions opt = cfg.features;
        opt.providers = {kReferenceInput};
        inputs.emplace_back(kReferenceInput, build_features(detail::reference_records(ds.reference), opt));
    }

    std::set<std::int64_t> common;
    for (const auto& t : inputs.front().second.times) {
        common.insert(t.hours());
    }
    for (std::size_t k = 1; k < inputs.size(); ++k) {
        std::set<std::int64_t> here;
        for (const auto& t : inputs[k].second.times) {
            if (common.contains(t.hours())) {
                here.insert(t.hours());
            }
        }
        common = std::move(here);
    }

    AblationReport report;
    report.head = to_string(head);
    for (const auto& f : ds.farms) {
        report.farms.push_back(f.farm_id);
    }
    for (const auto& [name, features] : inputs) {
        AblationEntry e;
        e.input = name;
        for (std::size_t fi = 0; fi < ds.farms.size(); ++fi) {
            const auto& src = ds.farms[fi];
            const auto& layout = ds.layout(src.farm_id);
            FarmData farm;
            farm.farm_id = src.farm_id;
            farm.max_observed_train = src.max_observed_train;
            farm.train = detail::realign(src.train, features, common);
            farm.calibration = detail::realign(src.calibration, features, common);
            farm.test = detail::realign(src.test, features, common);
            require(farm.train.rows() > 0 && farm.test.rows() > 0, ErrorCode::EmptyData,
                    "ablation: farm " + farm.farm_id + " has no common rows");
            const auto pred = detail::median_forecast(head, cfg.heads, farm, layout, farm_seed(seed, fi));
            const double cap = layout.installed_capacity();
            std::vector<double> y, yhat;
            for (std::size_t i = 0; i < pred.size(); ++i) {
                y.push_back(normalize_power(farm.test.y()[i], cap));
                yhat.push_back(normalize_power(pred[i], cap));
            }
            e.farm_mae.push_back(eval::mae(y, yhat));
            if (name == kEnsembleInput) {
                report.n_test += pred.size();
            }
        }
        double sum = 0.0;
        for (double m : e.farm_mae) {
            sum += m;
        }
        e.mae = sum / static_cast<double>(e.farm_mae.size());
        report.entries.push_back(std::move(e));
    }
    return report;
}

inline nlohmann::json to_json(const AblationReport& r) {
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& e : r.entries) {
        entries.push_back({{"input", e.input}, {"mae", e.mae}, {"farm_mae", e.farm_mae}});
    }
    nlohmann::json j{{"format", "windprob.ablation"}, {"head", r.head}, {"farms", r.farms},
                     {"n_test", r.n_test}, {"entries", entries}};
    bool has_single = false;
    for (const auto& e : r.entries) {
        has_single = has_single || (e.input != kEnsembleInput && e.input != kReferenceInput);
    }
    if (has_single) {
        j["worst_single"] = r.worst_single().input;
        j["improvement_over_worst"] = r.improvement_over_worst();
    }
    return j;
}

inline std::string format_ablation(const AblationReport& r) {
    std::string out = "input ablation (head " + r.head + ", MAE % of capacity, mean over farms)\n";
    for (const auto& e : r.entries) {
        std::string label = e.input;
        label.resize(std::max<std::size_t>(label.size(), 14), ' ');
        out += "  " + label + eval::detail::pct(e.mae) + "\n";
    }
    return out;
}

} // namespace windprob::pipeline
