#pragma once

#include "windprob/pipeline/strict_json.hpp"
#include "windprob/timestamp.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

namespace windprob::pipeline {

enum class SplitRole { Train, Calibration, Test, Unused };

inline std::string to_string(SplitRole r) {
    switch (r) {
    case SplitRole::Train: return "train";
    case SplitRole::Calibration: return "calibration";
    case SplitRole::Test: return "test";
    case SplitRole::Unused: return "unused";
    }
    return "unused";
}

/// Year-based (the calibration year is held out of training) or fraction-based over the
/// chronologically sorted distinct timestamps.
struct SplitSpec {
    std::string mode = "fraction";
    std::vector<int> train_years;
    int calibration_year = 0;
    int test_year = 0;
    double train_fraction = 0.6;
    double calibration_fraction = 0.15;

    void validate() const {
        if (mode == "years") {
            require(!train_years.empty(), ErrorCode::InvalidArgument, "split: train_years is empty");
            for (int y : train_years) {
                require(y < calibration_year, ErrorCode::InvalidArgument, "split: training years must precede the calibration year");
            }
            require(calibration_year < test_year, ErrorCode::InvalidArgument, "split: calibration year must precede the test year");
        } else {
            require(mode == "fraction", ErrorCode::InvalidArgument, "split mode must be 'years' or 'fraction'");
            require(train_fraction > 0.0 && calibration_fraction > 0.0 && train_fraction + calibration_fraction < 1.0,
                    ErrorCode::InvalidArgument, "split fractions must be positive and sum below 1");
        }
    }
};

inline nlohmann::json to_json(const SplitSpec& s) {
    return {{"mode", s.mode},
            {"train_years", s.train_years},
            {"calibration_year", s.calibration_year},
            {"test_year", s.test_year},
            {"train_fraction", s.train_fraction},
            {"calibration_fraction", s.calibration_fraction}};
}

inline void read_split(StrictObject& o, SplitSpec& s) {
    o.get("mode", s.mode);
    o.get("train_years", s.train_years);
    o.get("calibration_year", s.calibration_year);
    o.get("test_year", s.test_year);
    o.get("train_fraction", s.train_fraction);
    o.get("calibration_fraction", s.calibration_fraction);
}

/// Role of every timestamp; `times` must be sorted.
inline std::vector<SplitRole> assign_split(std::span<const Timestamp> times, const SplitSpec& spec) {
    spec.validate();
    for (std::size_t i = 1; i < times.size(); ++i) {
        require(times[i] >= times[i - 1], ErrorCode::InvalidArgument, "split: timestamps must be sorted");
    }
    std::vector<SplitRole> roles(times.size(), SplitRole::Unused);
    if (spec.mode == "years") {
        for (std::size_t i = 0; i < times.size(); ++i) {
            const int y = times[i].year();
            if (std::find(spec.train_years.begin(), spec.train_years.end(), y) != spec.train_years.end()) {
                roles[i] = SplitRole::Train;
            } else if (y == spec.calibration_year) {
                roles[i] = SplitRole::Calibration;
            } else if (y == spec.test_year) {
                roles[i] = SplitRole::Test;
            }
        }
        return roles;
    }
    std::vector<Timestamp> distinct(times.begin(), times.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    const auto n = static_cast<double>(distinct.size());
    const auto n_train = static_cast<std::size_t>(std::floor(n * spec.train_fraction));
    const auto n_cal = static_cast<std::size_t>(std::floor(n * (spec.train_fraction + spec.calibration_fraction))) - n_train;
    for (std::size_t i = 0; i < times.size(); ++i) {
        const auto rank = static_cast<std::size_t>(std::lower_bound(distinct.begin(), distinct.end(), times[i]) - distinct.begin());
        roles[i] = rank < n_train ? SplitRole::Train : rank < n_train + n_cal ? SplitRole::Calibration : SplitRole::Test;
    }
    return roles;
}

} // namespace windprob::pipeline
