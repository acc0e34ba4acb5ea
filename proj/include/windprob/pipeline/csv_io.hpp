#pragma once

// CSV schemas:
//   forecasts:  time,provider,wind_speed_ms,wind_direction_deg
//   production: time,farm_id,power_mw
//   flags:      time,balancing_activated          (0/1)
//   reference:  time,wind_speed_ms,wind_direction_deg

#include "windprob/domain.hpp"
#include "windprob/features.hpp"
#include "windprob/text.hpp"

#include <map>
#include <string>
#include <vector>

namespace windprob::pipeline {

struct BalancingFlag {
    Timestamp time;
    bool activated = false;
};

inline std::string forecasts_to_csv(const std::vector<EnsembleForecastRecord>& records) {
    std::string out = "time,provider,wind_speed_ms,wind_direction_deg\n";
    for (const auto& r : records) {
        for (const auto& p : r.providers) {
            out += r.time.to_string() + "," + p.provider_id + "," + text::format_double(p.wind_speed) + "," +
                   text::format_double(p.wind_direction) + "\n";
        }
    }
    return out;
}

/// Groups rows by timestamp; output is sorted by time with providers in file order.
inline std::vector<EnsembleForecastRecord> forecasts_from_csv(std::string_view content) {
    const auto t = text::parse_csv(content);
    const auto c_time = t.column("time"), c_prov = t.column("provider"), c_speed = t.column("wind_speed_ms"),
               c_dir = t.column("wind_direction_deg");
    std::map<Timestamp, EnsembleForecastRecord> by_time;
    for (const auto& row : t.rows) {
        const auto time = Timestamp::parse(row[c_time]);
        auto& rec = by_time[time];
        rec.time = time;
        rec.providers.push_back({row[c_prov], text::parse_double(row[c_speed]), text::parse_double(row[c_dir])});
    }
    std::vector<EnsembleForecastRecord> out;
    out.reserve(by_time.size());
    for (auto& [time, rec] : by_time) {
        rec.validate();
        out.push_back(std::move(rec));
    }
    return out;
}

inline std::string production_to_csv(const std::vector<PowerObservation>& obs) {
    std::string out = "time,farm_id,power_mw\n";
    for (const auto& o : obs) {
        out += o.time.to_string() + "," + o.farm_id + "," + text::format_double(o.power) + "\n";
    }
    return out;
}

inline std::vector<PowerObservation> production_from_csv(std::string_view content) {
    const auto t = text::parse_csv(content);
    const auto c_time = t.column("time"), c_farm = t.column("farm_id"), c_power = t.column("power_mw");
    std::vector<PowerObservation> out;
    out.reserve(t.rows.size());
    for (const auto& row : t.rows) {
        const double p = text::parse_double(row[c_power]);
        require(std::isfinite(p) && p >= 0.0, ErrorCode::Parse, "negative or non-finite power in production CSV");
        out.push_back({Timestamp::parse(row[c_time]), p, row[c_farm]});
    }
    return out;
}

inline std::string flags_to_csv(const std::vector<BalancingFlag>& flags) {
    std::string out = "time,balancing_activated\n";
    for (const auto& f : flags) {
        out += f.time.to_string() + (f.activated ? ",1\n" : ",0\n");
    }
    return out;
}

inline std::vector<BalancingFlag> flags_from_csv(std::string_view content) {
    const auto t = text::parse_csv(content);
    const auto c_time = t.column("time"), c_flag = t.column("balancing_activated");
    std::vector<BalancingFlag> out;
    for (const auto& row : t.rows) {
        require(row[c_flag] == "0" || row[c_flag] == "1", ErrorCode::Parse, "balancing flag must be 0 or 1");
        out.push_back({Timestamp::parse(row[c_time]), row[c_flag] == "1"});
    }
    return out;
}

inline std::string reference_to_csv(const std::vector<MeanInput>& ref) {
    std::string out = "time,wind_speed_ms,wind_direction_deg\n";
    for (const auto& r : ref) {
        out += r.time.to_string() + "," + text::format_double(r.wind_speed) + "," +
               text::format_double(r.wind_direction) + "\n";
    }
    return out;
}

inline std::vector<MeanInput> reference_from_csv(std::string_view content) {
    const auto t = text::parse_csv(content);
    const auto c_time = t.column("time"), c_speed = t.column("wind_speed_ms"), c_dir = t.column("wind_direction_deg");
    std::vector<MeanInput> out;
    for (const auto& row : t.rows) {
        out.push_back({Timestamp::parse(row[c_time]), text::parse_double(row[c_speed]), text::parse_double(row[c_dir])});
    }
    std::sort(out.begin(), out.end(), [](const MeanInput& a, const MeanInput& b) { return a.time < b.time; });
    return out;
}

} // namespace windprob::pipeline
