#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "ybqc/constants.hpp"
#include "ybqc/errors.hpp"
#include "ybqc/lattice_addressing.hpp"

namespace ybqc {

/// Per-atom internal levels kept in the register.
enum class Level : int {
    GroundMinus = 0, // 1S0 m_I = -1/2  (memory qubit |0>)
    GroundPlus = 1,  // 1S0 m_I = +1/2  (memory qubit |1>)
    EMinus3 = 2,     // 3P2 F=3/2 m_F = -3/2 (a, auxiliary |0>)
    EMinus1 = 3,     // b
    EPlus1 = 4,      // c
    EPlus3 = 5,      // d, auxiliary |1>
    Lost = 6,
};

inline constexpr int kLevels = 7;

inline constexpr int idx(Level l) { return static_cast<int>(l); }

inline bool is_ground(int level) { return level == 0 || level == 1; }
inline bool is_metastable(int level) { return level >= 2 && level <= 5; }

enum class TransitionKind {
    SetGradient,          // zero-duration marker: the segment's gradient takes effect
    Idle,                 // free evolution
    OpticalTransfer,      // 1S0(-1/2)<->e(-3/2) and/or 1S0(+1/2)<->e(+3/2)
    GroundRf,             // NMR drive on the 1S0 nuclear qubit
    ThreePhotonLadder,    // single drive on a<->b<->c<->d
    EffectiveThreePhoton, // a<->d coupling at the effective three-photon Rabi frequency
    BlowAway,             // 1S0-1P1 radiation pressure: ground population -> LOST
    Detect,               // MOT fluorescence detection of 1S0 population
};

inline const char* to_string(TransitionKind k) {
    switch (k) {
    case TransitionKind::SetGradient: return "set_gradient";
    case TransitionKind::Idle: return "idle";
    case TransitionKind::OpticalTransfer: return "optical_transfer";
    case TransitionKind::GroundRf: return "ground_rf";
    case TransitionKind::ThreePhotonLadder: return "three_photon_ladder";
    case TransitionKind::EffectiveThreePhoton: return "effective_three_photon";
    case TransitionKind::BlowAway: return "blow_away";
    case TransitionKind::Detect: return "detect";
    }
    return "unknown";
}

enum class PulseShape { Square, Blackman };

inline const char* to_string(PulseShape s) { return s == PulseShape::Square ? "square" : "blackman"; }

/// Which of the two optical qubit transitions a transfer drives.
enum class QubitBranches { Both, PlusOnly, MinusOnly };

inline const char* to_string(QubitBranches b) {
    switch (b) {
    case QubitBranches::Both: return "both";
    case QubitBranches::PlusOnly: return "plus_only";
    case QubitBranches::MinusOnly: return "minus_only";
    }
    return "unknown";
}

/// Mean of the envelope over the pulse (peak-normalised).
inline double envelope_mean(PulseShape s) { return s == PulseShape::Square ? 1.0 : 0.42; }

inline double envelope(PulseShape s, double t, double duration) {
    if (s == PulseShape::Square)
        return 1.0;
    const double x = constants::two_pi * t / duration;
    return 0.42 - 0.5 * std::cos(x) + 0.08 * std::cos(2.0 * x);
}

/// Half-width (Hz) of the main spectral lobe, used for the resolvability check.
inline double spectral_width_hz(PulseShape s, double duration) {
    return (s == PulseShape::Square ? 1.0 : 3.0) / duration;
}

/// One drive segment. Frequencies are set from the fields at `target_sites`
/// under the segment's gradient; `detuning_rad_s` is drive minus that resonance.
/// For the three-photon ladder the reference is omega0 = (E_d - E_a)/3, so a
/// light-shift compensation enters as a detuning. Target sites with different
/// resonance frequencies are driven one after another, each for `duration_s`.
struct Pulse {
    TransitionKind transition = TransitionKind::Idle;
    double rabi_rad_s = 0.0; // peak
    double detuning_rad_s = 0.0;
    double phase_rad = 0.0;
    double duration_s = 0.0;
    PulseShape shape = PulseShape::Square;
    std::vector<Site> target_sites;
    QubitBranches branches = QubitBranches::Both;

    void validate() const {
        if (!(duration_s >= 0.0))
            throw ConfigError("pulse duration must be >= 0");
        if (!(rabi_rad_s >= 0.0))
            throw ConfigError("pulse Rabi frequency must be >= 0");
    }
};

struct Segment {
    GradientConfig gradient;
    Pulse pulse;
    std::string label;
    double duration_s = 0.0;               // wall-clock duration of the whole segment
    double metastable_atom_seconds = 0.0;  // expected atom-time spent in 3P2
};

struct PulseSchedule {
    int n_atoms = 0;
    std::vector<Site> active_sites;
    std::vector<Segment> segments;
    double reference_field_tesla = 100.0 * constants::gauss; // register frame
    double reported_infidelity = 0.0;

    double total_duration_s() const {
        double t = 0.0;
        for (const auto& s : segments)
            t += s.duration_s;
        return t;
    }
};

struct NoiseParams {
    double lifetime_3p2_s = 15.0;
    double photon_scattering_rate_hz = 0.2;   // lattice light, any internal state
    double tunneling_rate_hz = 0.0;           // site loss by tunnelling
    double branching_1p1_to_3d = 1.2e-7;      // per scattered 399 nm photon
    double detection_time_s = 3e-3;
    double mot_scattering_rate_hz = 1.5e7;    // photons per second during detection
    bool enabled = true;

    static NoiseParams off() {
        NoiseParams n;
        n.enabled = false;
        return n;
    }

    void validate() const {
        if (!(lifetime_3p2_s > 0))
            throw ConfigError("3P2 lifetime must be > 0");
        if (photon_scattering_rate_hz < 0 || tunneling_rate_hz < 0 || mot_scattering_rate_hz < 0 ||
            detection_time_s < 0)
            throw ConfigError("noise rates and times must be >= 0");
        if (branching_1p1_to_3d < 0 || branching_1p1_to_3d > 1)
            throw ConfigError("branching ratio must lie in [0, 1]");
    }

    double decay_rate_3p2() const { return enabled ? 1.0 / lifetime_3p2_s : 0.0; }
    double scattering_rate() const { return enabled ? photon_scattering_rate_hz : 0.0; }
    double tunneling_rate() const { return enabled ? tunneling_rate_hz : 0.0; }
};

} // namespace ybqc
