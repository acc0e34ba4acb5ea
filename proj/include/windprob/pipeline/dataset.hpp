#pragma once

// Prepared dataset: balancing-filtered observations joined to lagged ensemble features, split
// chronologically, with the economic filter applied to training rows. On disk it is a directory:
//
//   dataset.json               farms, capacities, feature names, row counts
//   layout.txt                 farm layouts (layout file format)
//   forecasts.csv, reference.csv (optional)   inputs kept for ablations
//   <farm>.<split>.csv         time,target,mean_speed,mean_direction,<features...>

#include "windprob/features.hpp"
#include "windprob/layout_io.hpp"
#include "windprob/pipeline/config.hpp"
#include "windprob/pipeline/csv_io.hpp"
#include "windprob/pipeline/filters.hpp"
#include "windprob/pipeline/split.hpp"
#include "windprob/text.hpp"

#include <json.hpp>

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace windprob::pipeline {

/// Rows of one farm in one split; `x.target` holds observed power (MW).
struct SplitData {
    FeatureMatrix x;
    std::vector<double> mean_speed;
    std::vector<double> mean_direction;

    std::size_t rows() const { return x.rows(); }
    const std::vector<double>& y() const { return *x.target; }
};

struct FarmData {
    std::string farm_id;
    SplitData train, calibration, test;
    double max_observed_train = 0.0;

    const SplitData& split(SplitRole r) const {
        switch (r) {
        case SplitRole::Train: return train;
        case SplitRole::Calibration: return calibration;
        case SplitRole::Test: return test;
        default: fail(ErrorCode::InvalidArgument, "no data for the unused split");
        }
    }
};

struct Dataset {
    std::vector<FarmLayout> layouts;
    std::vector<std::string> feature_names;
    std::vector<FarmData> farms;
    std::vector<EnsembleForecastRecord> forecasts;
    std::vector<MeanInput> reference;
    std::size_t balancing_removed = 0;
    std::size_t economic_removed = 0;

    const FarmLayout& layout(const std::string& farm_id) const {
        for (const auto& l : layouts) {
            if (l.farm_id() == farm_id) {
                return l;
            }
        }
        fail(ErrorCode::InvalidArgument, "no layout for farm " + farm_id);
    }
};

struct PrepareInputs {
    std::vector<EnsembleForecastRecord> forecasts;
    std::vector<PowerObservation> production;
    std::optional<std::vector<BalancingFlag>> flags;
    std::vector<MeanInput> reference; // may be empty: the ensemble mean speed is used for binning
    std::vector<FarmLayout> layouts;
};

namespace detail {

inline SplitData empty_split(const std::vector<std::string>& names) {
    SplitData s;
    s.x.names = names;
    s.x.columns.assign(names.size(), {});
    s.x.target.emplace();
    return s;
}

inline void push_row(SplitData& s, const FeatureMatrix& m, std::size_t row, double target, const MeanInput& mean) {
    s.x.times.push_back(m.times[row]);
    for (std::size_t c = 0; c < m.columns.size(); ++c) {
        s.x.columns[c].push_back(m.columns[c][row]);
    }
    s.x.target->push_back(target);
    s.mean_speed.push_back(mean.wind_speed);
    s.mean_direction.push_back(mean.wind_direction);
}

inline SplitData subset(const SplitData& s, std::span<const std::size_t> keep) {
    SplitData out;
    out.x = s.x.select_rows(keep);
    for (std::size_t i : keep) {
        out.mean_speed.push_back(s.mean_speed[i]);
        out.mean_direction.push_back(s.mean_direction[i]);
    }
    return out;
}

} // namespace detail

inline Dataset prepare_dataset(const PrepareInputs& in, const Config& cfg) {
    require(!in.forecasts.empty(), ErrorCode::EmptyData, "no forecast records");
    require(!in.layouts.empty(), ErrorCode::EmptyData, "no farm layouts");
    Dataset ds;
    ds.layouts = in.layouts;
    ds.forecasts = in.forecasts;
    ds.reference = in.reference;

    std::vector<PowerObservation> obs = in.production;
    if (cfg.filters.balancing && in.flags) {
        obs = filter_balancing_curtailments(obs, *in.flags);
        ds.balancing_removed = in.production.size() - obs.size();
    }

    const auto features = build_features(in.forecasts, cfg.features);
    ds.feature_names = features.names;
    std::unordered_map<std::int64_t, MeanInput> means;
    for (const auto& m : ensemble_mean_inputs(in.forecasts)) {
        means.emplace(m.time.hours(), m);
    }
    std::unordered_map<std::int64_t, double> ref_speed;
    for (const auto& r : in.reference) {
        ref_speed.emplace(r.time.hours(), r.wind_speed);
    }
    const auto roles = assign_split(features.times, cfg.split);

    std::map<std::string, std::unordered_map<std::int64_t, double>> by_farm;
    for (const auto& o : obs) {
        by_farm[o.farm_id][o.time.hours()] = o.power;
    }
    for (const auto& layout : ds.layouts) {
        FarmData fd;
        fd.farm_id = layout.farm_id();
        fd.train = fd.calibration = fd.test = detail::empty_split(features.names);
        const auto it = by_farm.find(fd.farm_id);
        require(it != by_farm.end(), ErrorCode::MisalignedTarget, "no production rows for farm " + fd.farm_id);
        for (std::size_t i = 0; i < features.rows(); ++i) {
            const auto h = features.times[i].hours();
            const auto o = it->second.find(h);
            if (o == it->second.end() || roles[i] == SplitRole::Unused) {
                continue;
            }
            auto& dst = roles[i] == SplitRole::Train ? fd.train : roles[i] == SplitRole::Calibration ? fd.calibration : fd.test;
            detail::push_row(dst, features, i, o->second, means.at(h));
        }
        if (cfg.filters.economic && fd.train.rows() > 0) {
            std::vector<double> speeds;
            for (std::size_t i = 0; i < fd.train.rows(); ++i) {
                const auto r = ref_speed.find(fd.train.x.times[i].hours());
                speeds.push_back(r != ref_speed.end() ? r->second : fd.train.mean_speed[i]);
            }
            const auto keep = economic_keep_indices(fd.train.y(), speeds, cfg.filters.economic_options);
            ds.economic_removed += fd.train.rows() - keep.size();
            fd.train = detail::subset(fd.train, keep);
        }
        for (double p : fd.train.y()) {
            fd.max_observed_train = std::max(fd.max_observed_train, p);
        }
        require(fd.train.rows() > 0 && fd.calibration.rows() > 0 && fd.test.rows() > 0, ErrorCode::EmptyData,
                "farm " + fd.farm_id + ": a split has no rows");
        ds.farms.push_back(std::move(fd));
    }
    return ds;
}

// ---------------------------------------------------------------------------------------------
// Bundle IO

inline std::string split_to_csv(const SplitData& s) {
    std::string out = "time,target,mean_speed,mean_direction";
    for (const auto& n : s.x.names) {
        out += "," + n;
    }
    out += "\n";
    for (std::size_t i = 0; i < s.rows(); ++i) {
        out += s.x.times[i].to_string() + "," + text::format_double(s.y()[i]) + "," +
               text::format_double(s.mean_speed[i]) + "," + text::format_double(s.mean_direction[i]);
        for (const auto& col : s.x.columns) {
            out += "," + text::format_double(col[i]);
        }
        out += "\n";
    }
    return out;
}

inline SplitData split_from_csv(std::string_view content, const std::vector<std::string>& names) {
    const auto t = text::parse_csv(content);
    require(t.header.size() == names.size() + 4, ErrorCode::SchemaMismatch, "dataset split has unexpected columns");
    for (std::size_t c = 0; c < names.size(); ++c) {
        require(t.header[c + 4] == names[c], ErrorCode::SchemaMismatch, "dataset split column order differs from dataset.json");
    }
    auto s = detail::empty_split(names);
    for (const auto& row : t.rows) {
        s.x.times.push_back(Timestamp::parse(row[0]));
        s.x.target->push_back(text::parse_double(row[1]));
        s.mean_speed.push_back(text::parse_double(row[2]));
        s.mean_direction.push_back(text::parse_double(row[3]));
        for (std::size_t c = 0; c < names.size(); ++c) {
            s.x.columns[c].push_back(text::parse_double(row[c + 4]));
        }
    }
    return s;
}

/// Files written, relative to `dir`, in a fixed order.
inline std::vector<std::string> save_dataset(const Dataset& ds, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    std::vector<std::string> files;
    auto write = [&](const std::string& name, const std::string& content) {
        text::write_file((fs::path(dir) / name).string(), content);
        files.push_back(name);
    };
    nlohmann::json farms = nlohmann::json::array();
    for (const auto& f : ds.farms) {
        farms.push_back({{"farm_id", f.farm_id},
                         {"installed_capacity_mw", ds.layout(f.farm_id).installed_capacity()},
                         {"max_observed_train_mw", f.max_observed_train},
                         {"rows", {{"train", f.train.rows()}, {"calibration", f.calibration.rows()}, {"test", f.test.rows()}}}});
    }
    const nlohmann::json meta{{"format", "windprob.dataset"},
                              {"version", 1},
                              {"farms", farms},
                              {"feature_names", ds.feature_names},
                              {"has_reference", !ds.reference.empty()},
                              {"balancing_removed", ds.balancing_removed},
                              {"economic_removed", ds.economic_removed}};
    write("dataset.json", meta.dump(2) + "\n");
    write("layout.txt", format_layouts(ds.layouts));
    write("forecasts.csv", forecasts_to_csv(ds.forecasts));
    if (!ds.reference.empty()) {
        write("reference.csv", reference_to_csv(ds.reference));
    }
    for (const auto& f : ds.farms) {
        for (auto role : {SplitRole::Train, SplitRole::Calibration, SplitRole::Test}) {
            write(f.farm_id + "." + to_string(role) + ".csv", split_to_csv(f.split(role)));
        }
    }
    return files;
}

inline Dataset load_dataset(const std::string& dir) {
    namespace fs = std::filesystem;
    auto path = [&](const std::string& name) { return (fs::path(dir) / name).string(); };
    Dataset ds;
    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(text::read_file(path("dataset.json")));
        require(meta.at("format").get<std::string>() == "windprob.dataset", ErrorCode::Parse, "not a dataset bundle");
        ds.feature_names = meta.at("feature_names").get<std::vector<std::string>>();
        ds.balancing_removed = meta.at("balancing_removed").get<std::size_t>();
        ds.economic_removed = meta.at("economic_removed").get<std::size_t>();
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::Parse, std::string("malformed dataset.json: ") + e.what());
    }
    ds.layouts = load_layouts(path("layout.txt"));
    ds.forecasts = forecasts_from_csv(text::read_file(path("forecasts.csv")));
    if (meta.at("has_reference").get<bool>()) {
        ds.reference = reference_from_csv(text::read_file(path("reference.csv")));
    }
    for (const auto& f : meta.at("farms")) {
        FarmData fd;
        fd.farm_id = f.at("farm_id").get<std::string>();
        fd.max_observed_train = f.at("max_observed_train_mw").get<double>();
        fd.train = split_from_csv(text::read_file(path(fd.farm_id + ".train.csv")), ds.feature_names);
        fd.calibration = split_from_csv(text::read_file(path(fd.farm_id + ".calibration.csv")), ds.feature_names);
        fd.test = split_from_csv(text::read_file(path(fd.farm_id + ".test.csv")), ds.feature_names);
        ds.farms.push_back(std::move(fd));
    }
    return ds;
}

} // namespace windprob::pipeline
