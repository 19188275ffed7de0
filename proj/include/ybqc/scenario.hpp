#pragma once

// Scenario files: "key = value" lines, '#' comments. Numeric keys carry their
// unit in the name (_hz, _s, _gauss, _gauss_per_cm, _m, _kg, ...). Unknown keys
// and malformed values are load errors naming the key.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ybqc/atomic_structure.hpp"
#include "ybqc/constants.hpp"
#include "ybqc/errors.hpp"
#include "ybqc/lattice_addressing.hpp"
#include "ybqc/pulse.hpp"

namespace ybqc {

struct Scenario {
    std::string source = "<defaults>";
    std::vector<std::string> pipeline;
    std::string output_dir;
    std::optional<std::uint64_t> seed;
    std::string circuit_path;

    AtomParams params;
    std::optional<double> calibrate_delta1_hz;
    double calibrate_field_gauss = 650.0;

    LatticeGeometry geometry{10, 10, 1};
    GradientConfig gradient;
    bool gradient_given = false; // any of gx/gy/gz set; otherwise gradients are planned
    std::optional<double> plan_gap_hz;

    NoiseParams noise;

    double sweep_b_min_gauss = 10.0;
    double sweep_b_max_gauss = 20000.0;
    int sweep_steps = 2000;
    double levels_field_gauss = 650.0;

    double ddi_spacing_m = 266e-9;
    double ddi_theta_rad = 0.0;

    double pi_time_s = 100e-6;
    double lattice_depth_recoils = 50.0;
    double operation_time_s = 5.0;

    double gate_field_gauss = 650.0;
    double ladder_rabi_hz = 985e3;
    std::optional<double> cnot_rabi_hz;
    double transfer_duration_s = 4e-3;
    PulseShape transfer_shape = PulseShape::Blackman;
    double rotation_angle_rad = constants::pi;
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline double parse_number(const std::string& key, const std::string& v) {
    std::size_t used = 0;
    double x = 0.0;
    try {
        x = std::stod(v, &used);
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "': expected a number, got '" + v + "'");
    }
    if (used != v.size() || !std::isfinite(x))
        throw ConfigError("key '" + key + "': expected a number, got '" + v + "'");
    return x;
}

inline int parse_count(const std::string& key, const std::string& v) {
    const double x = parse_number(key, v);
    if (x != std::floor(x) || x < 0 || x > 1e9)
        throw ConfigError("key '" + key + "': expected a non-negative integer, got '" + v + "'");
    return static_cast<int>(x);
}

inline bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes")
        return true;
    if (v == "false" || v == "0" || v == "no")
        return false;
    throw ConfigError("key '" + key + "': expected true/false, got '" + v + "'");
}

using Setter = std::function<void(Scenario&, const std::string& key, const std::string& value)>;

inline const std::map<std::string, Setter>& scenario_keys() {
    auto num = [](double Scenario::*m, double scale = 1.0) {
        return Setter([m, scale](Scenario& s, const std::string& k, const std::string& v) {
            s.*m = parse_number(k, v) * scale;
        });
    };
    auto atom = [](double AtomParams::*m, double scale = 1.0) {
        return Setter([m, scale](Scenario& s, const std::string& k, const std::string& v) {
            s.params.*m = parse_number(k, v) * scale;
        });
    };
    auto grad = [](double GradientConfig::*m, double scale) {
        return Setter([m, scale](Scenario& s, const std::string& k, const std::string& v) {
            s.gradient.*m = parse_number(k, v) * scale;
            s.gradient_given = true;
        });
    };
    auto noise = [](double NoiseParams::*m) {
        return Setter([m](Scenario& s, const std::string& k, const std::string& v) {
            s.noise.*m = parse_number(k, v);
        });
    };
    static const std::map<std::string, Setter> keys = {
        {"pipeline",
         [](Scenario& s, const std::string&, const std::string& v) {
             s.pipeline.clear();
             std::stringstream ss(v);
             for (std::string item; std::getline(ss, item, ',');)
                 if (auto t = trim(item); !t.empty())
                     s.pipeline.push_back(t);
         }},
        {"output_dir", [](Scenario& s, const std::string&, const std::string& v) { s.output_dir = v; }},
        {"circuit_path", [](Scenario& s, const std::string&, const std::string& v) { s.circuit_path = v; }},
        {"seed",
         [](Scenario& s, const std::string& k, const std::string& v) {
             std::size_t used = 0;
             unsigned long long x = 0;
             try {
                 x = std::stoull(v, &used);
             } catch (const std::exception&) {
                 throw ConfigError("key '" + k + "': expected an unsigned integer, got '" + v + "'");
             }
             if (used != v.size())
                 throw ConfigError("key '" + k + "': expected an unsigned integer, got '" + v + "'");
             s.seed = x;
         }},
        // atom
        {"hyperfine_a_3p2_hz", atom(&AtomParams::hyperfine_a_3p2_hz)},
        {"g_j_3p2_dimensionless", atom(&AtomParams::g_j_3p2)},
        {"nuclear_moment_mu_n", atom(&AtomParams::nuclear_moment_mu_n)},
        {"lifetime_3p2_s",
         [](Scenario& s, const std::string& k, const std::string& v) {
             s.params.lifetime_3p2_s = s.noise.lifetime_3p2_s = parse_number(k, v);
         }},
        {"linewidth_1s0_3p2_hz", atom(&AtomParams::linewidth_1s0_3p2_hz)},
        {"lifetime_1p1_s", atom(&AtomParams::lifetime_1p1_s)},
        {"wavelength_1s0_3p2_m", atom(&AtomParams::wavelength_1s0_3p2_m)},
        {"wavelength_1s0_1p1_m", atom(&AtomParams::wavelength_1s0_1p1_m)},
        {"wavelength_lattice_m", atom(&AtomParams::wavelength_lattice_m)},
        {"mass_kg", atom(&AtomParams::mass_kg)},
        {"linear_zeeman_bool",
         [](Scenario& s, const std::string& k, const std::string& v) { s.params.linear_zeeman = parse_bool(k, v); }},
        {"calibrate_delta1_hz",
         [](Scenario& s, const std::string& k, const std::string& v) { s.calibrate_delta1_hz = parse_number(k, v); }},
        {"calibrate_field_gauss", num(&Scenario::calibrate_field_gauss)},
        // lattice
        {"n_x_count", [](Scenario& s, const std::string& k, const std::string& v) { s.geometry.n_x = parse_count(k, v); }},
        {"n_y_count", [](Scenario& s, const std::string& k, const std::string& v) { s.geometry.n_y = parse_count(k, v); }},
        {"n_z_count", [](Scenario& s, const std::string& k, const std::string& v) { s.geometry.n_z = parse_count(k, v); }},
        {"spacing_m",
         [](Scenario& s, const std::string& k, const std::string& v) { s.geometry.spacing_m = parse_number(k, v); }},
        // gradients
        {"bias_gauss",
         [](Scenario& s, const std::string& k, const std::string& v) {
             s.gradient.bias_tesla = parse_number(k, v) * constants::gauss;
         }},
        {"gx_gauss_per_cm", grad(&GradientConfig::gx_tesla_per_m, constants::gauss_per_cm)},
        {"gy_gauss_per_cm", grad(&GradientConfig::gy_tesla_per_m, constants::gauss_per_cm)},
        {"gz_gauss_per_cm", grad(&GradientConfig::gz_tesla_per_m, constants::gauss_per_cm)},
        {"safety_factor_ratio",
         [](Scenario& s, const std::string& k, const std::string& v) { s.gradient.safety_factor = parse_number(k, v); }},
        {"plan_gap_hz",
         [](Scenario& s, const std::string& k, const std::string& v) { s.plan_gap_hz = parse_number(k, v); }},
        // noise
        {"photon_scattering_rate_hz", noise(&NoiseParams::photon_scattering_rate_hz)},
        {"tunneling_rate_hz", noise(&NoiseParams::tunneling_rate_hz)},
        {"branching_1p1_to_3d_probability", noise(&NoiseParams::branching_1p1_to_3d)},
        {"detection_time_s", noise(&NoiseParams::detection_time_s)},
        {"mot_scattering_rate_hz", noise(&NoiseParams::mot_scattering_rate_hz)},
        {"noise_enabled_bool",
         [](Scenario& s, const std::string& k, const std::string& v) { s.noise.enabled = parse_bool(k, v); }},
        // sweeps and single evaluations
        {"sweep_b_min_gauss", num(&Scenario::sweep_b_min_gauss)},
        {"sweep_b_max_gauss", num(&Scenario::sweep_b_max_gauss)},
        {"sweep_steps_count",
         [](Scenario& s, const std::string& k, const std::string& v) { s.sweep_steps = parse_count(k, v); }},
        {"levels_field_gauss", num(&Scenario::levels_field_gauss)},
        {"ddi_spacing_m", num(&Scenario::ddi_spacing_m)},
        {"ddi_theta_rad", num(&Scenario::ddi_theta_rad)},
        {"pi_time_s", num(&Scenario::pi_time_s)},
        {"lattice_depth_recoils", num(&Scenario::lattice_depth_recoils)},
        {"operation_time_s", num(&Scenario::operation_time_s)},
        {"gate_field_gauss", num(&Scenario::gate_field_gauss)},
        {"ladder_rabi_hz", num(&Scenario::ladder_rabi_hz)},
        {"cnot_rabi_hz",
         [](Scenario& s, const std::string& k, const std::string& v) { s.cnot_rabi_hz = parse_number(k, v); }},
        {"transfer_duration_s", num(&Scenario::transfer_duration_s)},
        {"transfer_shape",
         [](Scenario& s, const std::string& k, const std::string& v) {
             if (v == "square")
                 s.transfer_shape = PulseShape::Square;
             else if (v == "blackman")
                 s.transfer_shape = PulseShape::Blackman;
             else
                 throw ConfigError("key '" + k + "': expected square or blackman, got '" + v + "'");
         }},
        {"rotation_angle_rad", num(&Scenario::rotation_angle_rad)},
    };
    return keys;
}

} // namespace detail

inline bool is_scenario_key(const std::string& key) { return detail::scenario_keys().count(key) > 0; }

inline void set_scenario_value(Scenario& s, const std::string& key, const std::string& value) {
    const auto& keys = detail::scenario_keys();
    const auto it = keys.find(key);
    if (it == keys.end())
        throw ConfigError("unknown scenario key '" + key + "'");
    it->second(s, key, detail::trim(value));
}

inline void validate_scenario(const Scenario& s) {
    s.params.validate();
    s.geometry.validate();
    s.noise.validate();
    if (!(s.gradient.bias_tesla > 0.0))
        throw ConfigError("key 'bias_gauss' must be > 0");
    static const char* known[] = {"levels", "detunings", "ddi", "address", "plan", "simulate", "feasibility", "compile"};
    for (const auto& p : s.pipeline)
        if (std::find(std::begin(known), std::end(known), p) == std::end(known))
            throw ConfigError("key 'pipeline': unknown step '" + p + "'");
}

inline Scenario parse_scenario(std::istream& in, const std::string& origin) {
    Scenario s;
    s.source = origin;
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        if (auto h = raw.find('#'); h != std::string::npos)
            raw.erase(h);
        const std::string t = detail::trim(raw);
        if (t.empty())
            continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + ":" + std::to_string(line) + ": expected 'key = value'");
        const std::string key = detail::trim(t.substr(0, eq));
        try {
            set_scenario_value(s, key, t.substr(eq + 1));
        } catch (const ConfigError& e) {
            throw ConfigError(origin + ":" + std::to_string(line) + ": " + e.what());
        }
    }
    return s;
}

inline Scenario load_scenario(const std::string& path) {
    std::ifstream f(path);
    if (!f)
        throw ConfigError("cannot open scenario file '" + path + "'");
    return parse_scenario(f, path);
}

} // namespace ybqc
