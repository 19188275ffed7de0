#pragma once

// Site-resolved magnetic fields and optical resonances under linear field
// gradients, and the gradient planner for spectral addressing.
//
// Layout: site (i, j, k) sits at spacing * (i, j, k); B_z = B0 + Gx x + Gy y + Gz z.

#include <algorithm>
#include <cmath>
#include <compare>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "ybqc/atomic_structure.hpp"
#include "ybqc/constants.hpp"
#include "ybqc/errors.hpp"

namespace ybqc {

struct Site {
    int i = 0;
    int j = 0;
    int k = 0;
    auto operator<=>(const Site&) const = default;
};

inline std::string to_string(const Site& s) {
    return "(" + std::to_string(s.i) + "," + std::to_string(s.j) + "," + std::to_string(s.k) + ")";
}

struct LatticeGeometry {
    int n_x = 1;
    int n_y = 1;
    int n_z = 1;
    double spacing_m = 266e-9;

    void validate() const {
        if (n_x < 1 || n_y < 1 || n_z < 1)
            throw ConfigError("lattice site counts must be >= 1");
        if (!(spacing_m > 0.0))
            throw ConfigError("lattice spacing must be > 0");
    }
    bool contains(const Site& s) const {
        return s.i >= 0 && s.i < n_x && s.j >= 0 && s.j < n_y && s.k >= 0 && s.k < n_z;
    }
    Eigen::Vector3d position(const Site& s) const {
        return spacing_m * Eigen::Vector3d(s.i, s.j, s.k);
    }
    std::vector<Site> plane(int k = 0) const {
        std::vector<Site> out;
        out.reserve(static_cast<std::size_t>(n_x) * n_y);
        for (int j = 0; j < n_y; ++j)
            for (int i = 0; i < n_x; ++i)
                out.push_back({i, j, k});
        return out;
    }
    std::vector<Site> all_sites() const {
        std::vector<Site> out;
        for (int k = 0; k < n_z; ++k)
            for (const auto& s : plane(k))
                out.push_back(s);
        return out;
    }
};

/// Bias field and gradients of B_z (all in SI: T and T/m).
struct GradientConfig {
    double bias_tesla = 100.0 * constants::gauss;
    double gx_tesla_per_m = 0.0;
    double gy_tesla_per_m = 0.0;
    double gz_tesla_per_m = 0.0;
    double safety_factor = 10.0;

    static GradientConfig uniform(double bias_tesla) {
        GradientConfig c;
        c.bias_tesla = bias_tesla;
        return c;
    }
    GradientConfig without_gradients() const {
        GradientConfig c = *this;
        c.gx_tesla_per_m = c.gy_tesla_per_m = c.gz_tesla_per_m = 0.0;
        return c;
    }
    GradientConfig z_only() const {
        GradientConfig c = *this;
        c.gx_tesla_per_m = c.gy_tesla_per_m = 0.0;
        return c;
    }
};

inline double site_field(const LatticeGeometry& geom, const GradientConfig& cfg, const Site& s) {
    if (!geom.contains(s))
        throw IndexError("site " + to_string(s) + " outside lattice");
    const double a = geom.spacing_m;
    return cfg.bias_tesla + cfg.gx_tesla_per_m * a * s.i + cfg.gy_tesla_per_m * a * s.j +
           cfg.gz_tesla_per_m * a * s.k;
}

/// Max minus min site field over the whole lattice, by exhaustive scan.
inline double field_range_tesla(const LatticeGeometry& geom, const GradientConfig& cfg) {
    double lo = site_field(geom, cfg, {0, 0, 0}), hi = lo;
    for (const auto& s : geom.all_sites()) {
        const double b = site_field(geom, cfg, s);
        lo = std::min(lo, b);
        hi = std::max(hi, b);
    }
    return hi - lo;
}

/// 1S0(m_I) <-> 3P2 line used for addressing.
struct AddressedTransition {
    int two_mi = 1;
    LevelLabel excited{3, Branch::Lower};
};

/// 1S0(+1/2) <-> 3P2(F=3/2, m_F=+3/2).
inline AddressedTransition default_addressed_transition(const AtomParams& p) {
    return {1, f32_level(p, 3)};
}

struct SiteResonance {
    Site site;
    double field_tesla = 0.0;
    double frequency_hz = 0.0;
};

struct ResonanceMap {
    int layer = 0;
    std::vector<SiteResonance> sites; // plane order: i fastest
    double min_gap_hz = 0.0;
    std::pair<Site, Site> closest_pair{};
};

namespace detail {

inline std::pair<double, std::pair<Site, Site>> min_gap(std::vector<std::pair<double, Site>> v) {
    if (v.size() < 2)
        return {0.0, {}};
    std::sort(v.begin(), v.end());
    double best = std::abs(v[1].first - v[0].first);
    std::pair<Site, Site> pair{v[0].second, v[1].second};
    for (std::size_t n = 2; n < v.size(); ++n) {
        const double gap = std::abs(v[n].first - v[n - 1].first);
        if (gap < best) {
            best = gap;
            pair = {v[n - 1].second, v[n].second};
        }
    }
    return {best, pair};
}

} // namespace detail

inline ResonanceMap resonance_map(const LatticeGeometry& geom, const GradientConfig& cfg,
                                  const AtomParams& p, const AddressedTransition& t, int layer = 0) {
    geom.validate();
    if (layer < 0 || layer >= geom.n_z)
        throw IndexError("layer " + std::to_string(layer) + " outside lattice");
    ResonanceMap m;
    m.layer = layer;
    std::vector<std::pair<double, Site>> freqs;
    for (const auto& s : geom.plane(layer)) {
        const double b = site_field(geom, cfg, s);
        const double f = transition_frequency_hz(p, t.two_mi, t.excited, b);
        m.sites.push_back({s, b, f});
        freqs.emplace_back(f, s);
    }
    std::tie(m.min_gap_hz, m.closest_pair) = detail::min_gap(std::move(freqs));
    return m;
}

struct GradientVerdict {
    bool ordering_condition = false;        // n_x * Gx <= Gy, as written
    bool ordering_condition_strict = false; // n_x * Gx <  Gy
    bool fields_unique = false;             // exhaustive check over the plane
    std::optional<std::pair<Site, Site>> collision;
    double min_field_difference_tesla = 0.0;
};

inline GradientVerdict validate_gradients(const LatticeGeometry& geom, const GradientConfig& cfg) {
    geom.validate();
    GradientVerdict v;
    v.ordering_condition = geom.n_x * cfg.gx_tesla_per_m <= cfg.gy_tesla_per_m;
    v.ordering_condition_strict = geom.n_x * cfg.gx_tesla_per_m < cfg.gy_tesla_per_m;

    std::vector<std::pair<double, Site>> fields;
    for (const auto& s : geom.plane(0))
        fields.emplace_back(site_field(geom, cfg, s), s);
    if (fields.size() < 2) {
        v.fields_unique = true;
        return v;
    }
    auto [gap, pair] = detail::min_gap(std::move(fields));
    v.min_field_difference_tesla = gap;
    const double tol = 1e-12 * std::abs(cfg.bias_tesla) + 1e-18;
    v.fields_unique = gap > tol;
    if (!v.fields_unique)
        v.collision = pair;
    return v;
}

struct PlanOptions {
    double bias_tesla = 100.0 * constants::gauss;
    double safety_factor = 10.0;
    std::optional<AddressedTransition> transition;
};

/// Smallest (Gx, Gy) meeting n_x Gx <= Gy and a nearest-resonance gap of at
/// least `target_gap_hz` in the plane. Gz separates layers by Gy per layer for
/// a single plane, and by n_y Gy per layer in 3D so every lattice site is unique.
inline GradientConfig plan_gradients(const LatticeGeometry& geom, double target_gap_hz,
                                     const AtomParams& p, const PlanOptions& opt = {}) {
    geom.validate();
    if (!(target_gap_hz > 0.0))
        throw PlanningError("target gap must be > 0");
    if (!(opt.bias_tesla > 0.0))
        throw PlanningError("bias field must be > 0");
    const auto t = opt.transition.value_or(default_addressed_transition(p));

    GradientConfig cfg;
    cfg.bias_tesla = opt.bias_tesla;
    cfg.safety_factor = opt.safety_factor;

    const double slope = std::abs(transition_slope_hz_per_tesla(p, t.two_mi, t.excited, opt.bias_tesla));
    const double base = target_gap_hz / (slope * geom.spacing_m);

    double gx = 0.0, gy = 0.0;
    if (geom.n_x > 1) {
        gx = base;
        gy = geom.n_x * base;
    } else if (geom.n_y > 1) {
        gy = base;
    }
    double gz = 0.0;
    if (geom.n_z > 1)
        gz = gy > 0.0 ? geom.n_y * gy : (gx > 0.0 ? geom.n_x * gx : base);
    else
        gz = gy;

    // The local slope drifts across the lattice; rescale until the exact gap holds.
    if (geom.n_x * geom.n_y > 1) {
        for (int iter = 0; iter < 50; ++iter) {
            cfg.gx_tesla_per_m = gx;
            cfg.gy_tesla_per_m = gy;
            cfg.gz_tesla_per_m = gz;
            const double gap = resonance_map(geom, cfg, p, t).min_gap_hz;
            if (gap >= target_gap_hz)
                break;
            const double scale = (gap > 0 ? target_gap_hz / gap : 2.0) * (1.0 + 1e-12);
            gx *= scale;
            gy *= scale;
            gz *= scale;
            if (iter == 49)
                throw PlanningError("gradient planner failed to reach the target gap");
        }
    }
    cfg.gx_tesla_per_m = gx;
    cfg.gy_tesla_per_m = gy;
    cfg.gz_tesla_per_m = gz;

    const double range = field_range_tesla(geom, cfg);
    if (!(cfg.bias_tesla > cfg.safety_factor * range))
        throw PlanningError("infeasible geometry: gradient field range " + std::to_string(range / constants::gauss) +
                            " G times safety factor exceeds the bias field");
    return cfg;
}

} // namespace ybqc
