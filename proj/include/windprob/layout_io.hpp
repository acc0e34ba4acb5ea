#pragma once

// Layout file format (one or more farm blocks; every other farm in the file is a neighbour):
//
//   [farm <farm_id>]
//   [turbines]
//   id,easting_m,northing_m,rotor_diameter_m,hub_height_m,cut_in,rated,cut_out
//   ...
//   [power_curve]
//   wind_speed,power_mw
//   ...
//   [ct_curve]
//   wind_speed,ct
//   ...

#include "windprob/domain.hpp"
#include "windprob/text.hpp"

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

namespace windprob {

struct TurbineRow {
    std::string id;
    double easting = 0.0;
    double northing = 0.0;
    double rotor_diameter = 0.0;
    double hub_height = 0.0;
    double cut_in = 0.0;
    double rated = 0.0;
    double cut_out = 0.0;
};

struct CurveTables {
    PiecewiseLinearCurve power;
    PiecewiseLinearCurve ct;
};

/// Generic 5 MW reference machine (D = 126 m, hub 90 m) tabulated at 0.5 m/s.
inline CurveTables reference_curves() {
    constexpr double cut_in = 3.0, rated = 11.5, rated_power = 5.0;
    std::vector<double> v, p, ct;
    for (int i = 0; i <= 50; ++i) {
        const double s = 0.5 * i;
        v.push_back(s);
        if (s < cut_in) {
            p.push_back(0.0);
            ct.push_back(0.0);
            continue;
        }
        const double pw = s >= rated ? rated_power
                                     : rated_power * (s * s * s - cut_in * cut_in * cut_in) /
                                           (rated * rated * rated - cut_in * cut_in * cut_in);
        p.push_back(pw);
        ct.push_back(s <= 9.0 ? 0.8 : 0.8 * std::pow(9.0 / s, 2.2));
    }
    return {PiecewiseLinearCurve(v, p), PiecewiseLinearCurve(v, ct)};
}

inline Turbine make_turbine(const TurbineRow& row, const CurveTables& curves) {
    return Turbine(TurbineSpec{row.id, row.easting, row.northing, row.rotor_diameter, row.hub_height, row.cut_in,
                               row.rated, row.cut_out, curves.power, curves.ct});
}

/// Rectangular grid of reference turbines; rows run north, columns run east.
inline std::vector<Turbine> reference_grid(const std::string& prefix, int rows, int cols, double spacing_east_d,
                                           double spacing_north_d, double origin_east = 0.0,
                                           double origin_north = 0.0) {
    const auto curves = reference_curves();
    constexpr double d = 126.0;
    std::vector<Turbine> out;
    int k = 0;
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            char id[32];
            std::snprintf(id, sizeof id, "%s%02d", prefix.c_str(), ++k);
            out.push_back(make_turbine(TurbineRow{id, origin_east + c * spacing_east_d * d,
                                                  origin_north + r * spacing_north_d * d, d, 90.0, 3.0, 11.5, 25.0},
                                       curves));
        }
    }
    return out;
}

namespace detail {

inline PiecewiseLinearCurve parse_curve(const std::vector<std::string>& lines, const std::string& farm) {
    std::vector<double> xs, ys;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto f = text::split(lines[i]);
        require(f.size() == 2, ErrorCode::Parse, "curve rows need two columns in farm " + farm);
        xs.push_back(text::parse_double(f[0]));
        ys.push_back(text::parse_double(f[1]));
    }
    return PiecewiseLinearCurve(std::move(xs), std::move(ys));
}

struct FarmBlock {
    std::string farm_id;
    std::vector<std::string> turbines, power, ct;
};

} // namespace detail

/// Parses every farm block; each returned farm lists all other farms as neighbours.
inline std::vector<FarmLayout> parse_layouts(std::string_view content) {
    std::vector<detail::FarmBlock> blocks;
    std::vector<std::string>* section = nullptr;
    std::istringstream in{std::string(content)};
    std::string raw;
    while (std::getline(in, raw)) {
        const auto line = text::trim(raw);
        if (line.empty() || line.front() == '#') {
            continue;
        }
        if (line.front() == '[') {
            require(line.back() == ']', ErrorCode::Parse, "unterminated section header: " + line);
            const auto name = text::trim(std::string_view(line).substr(1, line.size() - 2));
            if (name.rfind("farm ", 0) == 0) {
                blocks.push_back({text::trim(std::string_view(name).substr(5)), {}, {}, {}});
                section = nullptr;
                continue;
            }
            require(!blocks.empty(), ErrorCode::Parse, "section before any [farm] header");
            if (name == "turbines") {
                section = &blocks.back().turbines;
            } else if (name == "power_curve") {
                section = &blocks.back().power;
            } else if (name == "ct_curve") {
                section = &blocks.back().ct;
            } else {
                fail(ErrorCode::Parse, "unknown layout section [" + name + "]");
            }
            continue;
        }
        require(section != nullptr, ErrorCode::Parse, "data outside a section: " + line);
        section->push_back(line);
    }
    require(!blocks.empty(), ErrorCode::Parse, "layout file has no farms");

    std::vector<FarmLayout> farms;
    for (const auto& b : blocks) {
        require(b.turbines.size() > 1 && b.power.size() > 1 && b.ct.size() > 1, ErrorCode::Parse,
                "farm " + b.farm_id + " needs turbines, power_curve and ct_curve tables");
        const CurveTables curves{detail::parse_curve(b.power, b.farm_id), detail::parse_curve(b.ct, b.farm_id)};
        const auto header = text::split(b.turbines.front());
        const std::vector<std::string> expected = {"id",           "easting_m", "northing_m", "rotor_diameter_m",
                                                   "hub_height_m", "cut_in",    "rated",      "cut_out"};
        require(header == expected, ErrorCode::Parse, "unexpected turbine header in farm " + b.farm_id);
        std::vector<Turbine> turbines;
        for (std::size_t i = 1; i < b.turbines.size(); ++i) {
            const auto f = text::split(b.turbines[i]);
            require(f.size() == 8, ErrorCode::Parse, "turbine rows need 8 columns in farm " + b.farm_id);
            turbines.push_back(make_turbine(
                TurbineRow{f[0], text::parse_double(f[1]), text::parse_double(f[2]), text::parse_double(f[3]),
                           text::parse_double(f[4]), text::parse_double(f[5]), text::parse_double(f[6]),
                           text::parse_double(f[7])},
                curves));
        }
        farms.emplace_back(b.farm_id, std::move(turbines));
    }
    std::vector<FarmLayout> out;
    for (std::size_t i = 0; i < farms.size(); ++i) {
        std::vector<FarmLayout> others;
        for (std::size_t j = 0; j < farms.size(); ++j) {
            if (j != i) {
                others.push_back(farms[j]);
            }
        }
        out.push_back(farms[i].with_neighbours(std::move(others)));
    }
    return out;
}

/// Writes farms (neighbours are not repeated; each farm block carries its own curve tables,
/// taken from its first turbine).
inline std::string format_layouts(const std::vector<FarmLayout>& farms) {
    std::ostringstream out;
    out << "# windprob layout v1\n";
    for (const auto& farm : farms) {
        out << "[farm " << farm.farm_id() << "]\n[turbines]\n"
            << "id,easting_m,northing_m,rotor_diameter_m,hub_height_m,cut_in,rated,cut_out\n";
        for (const auto& t : farm.turbines()) {
            out << t.id() << ',' << text::format_double(t.easting()) << ',' << text::format_double(t.northing()) << ','
                << text::format_double(t.rotor_diameter()) << ',' << text::format_double(t.hub_height()) << ','
                << text::format_double(t.cut_in()) << ',' << text::format_double(t.rated_speed()) << ','
                << text::format_double(t.cut_out()) << '\n';
        }
        const auto& spec = farm.turbines().front().spec();
        out << "[power_curve]\nwind_speed,power_mw\n";
        for (std::size_t i = 0; i < spec.power_curve.xs().size(); ++i) {
            out << text::format_double(spec.power_curve.xs()[i]) << ','
                << text::format_double(spec.power_curve.ys()[i]) << '\n';
        }
        out << "[ct_curve]\nwind_speed,ct\n";
        for (std::size_t i = 0; i < spec.thrust_curve.xs().size(); ++i) {
            out << text::format_double(spec.thrust_curve.xs()[i]) << ','
                << text::format_double(spec.thrust_curve.ys()[i]) << '\n';
        }
    }
    return out.str();
}

inline std::vector<FarmLayout> load_layouts(const std::string& path) { return parse_layouts(text::read_file(path)); }

} // namespace windprob
