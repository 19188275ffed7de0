#pragma once

// Propagation of the register through one schedule segment.
//
// A segment runs in a frame fixed by its drive tones: level l rotates at
// frame_hz[l], chosen so every tone is stationary. At the end the amplitudes
// are mapped back to the register frame, which rotates with the level energies
// at the reference field. Drive phases are referenced to the segment start.
//
// All atoms see every tone with the same Rabi frequency; atoms at other fields
// are simply off resonance. Loss (3P2 decay, lattice scattering, tunnelling)
// enters as an anti-Hermitian diagonal and is booked per channel.

#include <array>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <unsupported/Eigen/MatrixFunctions>

#include "ybqc/atomic_structure.hpp"
#include "ybqc/constants.hpp"
#include "ybqc/dipole_interaction.hpp"
#include "ybqc/errors.hpp"
#include "ybqc/lattice_addressing.hpp"
#include "ybqc/pulse.hpp"
#include "ybqc/register_state.hpp"

namespace ybqc {

using LevelArray = std::array<double, kLevels>;
using AtomMatrix = Eigen::Matrix<cplx, kLevels, kLevels>;

inline constexpr int kExactDimension = 49;
inline constexpr double kUnitarityTolerance = 1e-6;

/// Energies (Hz) of the register levels of one atom at `field_tesla`. LOST sits at 0.
inline LevelArray level_energies_hz(const AtomParams& p, double field_tesla) {
    LevelArray e{};
    e[idx(Level::GroundMinus)] = ground_energy_hz(p, -1, field_tesla);
    e[idx(Level::GroundPlus)] = ground_energy_hz(p, 1, field_tesla);
    const auto ladder = f32_ladder_hz(p, field_tesla);
    for (int k = 0; k < 4; ++k)
        e[idx(Level::EMinus3) + k] = ladder[k];
    e[idx(Level::Lost)] = 0.0;
    return e;
}

/// Magnetic moments (J/T) of the register levels; LOST carries none.
inline LevelArray level_moments(const AtomParams& p, double field_tesla) {
    LevelArray m{};
    m[idx(Level::GroundMinus)] = ground_moment(p, -1);
    m[idx(Level::GroundPlus)] = ground_moment(p, 1);
    const auto spec = zeeman_spectrum(p, field_tesla);
    for (int k = 0; k < 4; ++k)
        m[idx(Level::EMinus3) + k] = level_moment(spec.level(f32_level(p, 2 * k - 3)), p);
    m[idx(Level::Lost)] = 0.0;
    return m;
}

struct Tone {
    int lower = 0;
    int upper = 0;
    double frequency_hz = 0.0; // E_upper - E_lower seen by the drive
};

/// Drive tones resonant (up to the pulse detuning) at an atom with level energies `e`.
inline std::vector<Tone> site_tones(const Pulse& pulse, const LevelArray& e) {
    const double det = pulse.detuning_rad_s / constants::two_pi;
    const int gm = idx(Level::GroundMinus), gp = idx(Level::GroundPlus);
    const int a = idx(Level::EMinus3), b = idx(Level::EMinus1), c = idx(Level::EPlus1), d = idx(Level::EPlus3);
    std::vector<Tone> t;
    switch (pulse.transition) {
    case TransitionKind::OpticalTransfer:
        if (pulse.branches != QubitBranches::PlusOnly)
            t.push_back({gm, a, e[a] - e[gm] + det});
        if (pulse.branches != QubitBranches::MinusOnly)
            t.push_back({gp, d, e[d] - e[gp] + det});
        break;
    case TransitionKind::GroundRf:
        t.push_back({gp, gm, e[gm] - e[gp] + det});
        break;
    case TransitionKind::ThreePhotonLadder: {
        const double f = (e[d] - e[a]) / 3.0 + det;
        t.push_back({a, b, f});
        t.push_back({b, c, f});
        t.push_back({c, d, f});
        break;
    }
    case TransitionKind::EffectiveThreePhoton:
        t.push_back({a, d, e[d] - e[a] + det});
        break;
    default:
        break;
    }
    return t;
}

inline bool is_drive(TransitionKind k) {
    return k == TransitionKind::OpticalTransfer || k == TransitionKind::GroundRf ||
           k == TransitionKind::ThreePhotonLadder || k == TransitionKind::EffectiveThreePhoton;
}

/// Target sites sharing one set of tone frequencies are driven together.
struct DriveGroup {
    std::vector<Site> sites;
    std::vector<Tone> tones;
};

inline std::vector<DriveGroup> drive_groups(const LatticeGeometry& geom, const AtomParams& p, const Segment& seg) {
    std::vector<DriveGroup> groups;
    const auto& pulse = seg.pulse;
    if (!is_drive(pulse.transition))
        return groups;
    if (pulse.target_sites.empty())
        throw ConfigError(std::string("drive segment '") + to_string(pulse.transition) + "' has no target sites");
    for (const auto& s : pulse.target_sites) {
        const auto tones = site_tones(pulse, level_energies_hz(p, site_field(geom, seg.gradient, s)));
        bool placed = false;
        for (auto& g : groups) {
            bool same = g.tones.size() == tones.size();
            for (std::size_t n = 0; same && n < tones.size(); ++n)
                same = std::abs(g.tones[n].frequency_hz - tones[n].frequency_hz) <= 1e-6;
            if (same) {
                g.sites.push_back(s);
                placed = true;
                break;
            }
        }
        if (!placed)
            groups.push_back({{s}, tones});
    }
    return groups;
}

/// Wall-clock time a segment occupies: one pulse duration per drive group.
inline double segment_wall_time(const LatticeGeometry& geom, const AtomParams& p, const Segment& seg) {
    switch (seg.pulse.transition) {
    case TransitionKind::SetGradient:
    case TransitionKind::BlowAway:
        return 0.0;
    case TransitionKind::Idle:
    case TransitionKind::Detect:
        return seg.pulse.duration_s;
    default:
        return static_cast<double>(drive_groups(geom, p, seg).size()) * seg.pulse.duration_s;
    }
}

namespace detail {

enum Channel { Decay3P2 = 0, Scattering = 1, Tunneling = 2, kChannels = 3 };
inline const char* channel_name(int c) {
    static const char* names[] = {"3p2_decay", "lattice_scattering", "tunneling"};
    return names[c];
}

struct LossRates {
    std::array<LevelArray, kChannels> rate{}; // 1/s, population loss per level
    LevelArray total{};
    bool any = false;
};

inline LossRates loss_rates(const NoiseParams& noise) {
    LossRates r;
    for (int l = 0; l < kLevels; ++l) {
        if (l == idx(Level::Lost))
            continue;
        r.rate[Decay3P2][l] = is_metastable(l) ? noise.decay_rate_3p2() : 0.0;
        r.rate[Scattering][l] = noise.scattering_rate();
        r.rate[Tunneling][l] = noise.tunneling_rate();
        for (int c = 0; c < kChannels; ++c)
            r.total[l] += r.rate[c][l];
        r.any = r.any || r.total[l] > 0.0;
    }
    return r;
}

struct GroupSetup {
    int n_atoms = 1;
    std::vector<LevelArray> energy_hz; // per atom
    LevelArray reference_hz{};
    LevelArray frame_hz{};
    LossRates loss;
    std::vector<Tone> tones;
    double rabi_rad_s = 0.0;
    double phase_rad = 0.0;
    PulseShape shape = PulseShape::Square;
    double duration_s = 0.0;
    Eigen::VectorXd dipole_rad_s; // diagonal, one entry per basis state (empty: none)
};

inline Eigen::Index power7(int n) {
    Eigen::Index d = 1;
    for (int k = 0; k < n; ++k)
        d *= kLevels;
    return d;
}

/// Frame in which every tone is stationary; untouched levels keep the reference frame.
inline LevelArray tone_frame(const LevelArray& reference_hz, const std::vector<Tone>& tones) {
    LevelArray frame = reference_hz;
    std::array<bool, kLevels> fixed{};
    for (const auto& t : tones) {
        if (fixed[t.upper] && fixed[t.lower]) {
            if (std::abs(frame[t.upper] - frame[t.lower] - t.frequency_hz) > 1e-6)
                throw IntegratorError("drive tones do not close a consistent rotating frame");
            continue;
        }
        if (fixed[t.upper] && !fixed[t.lower]) {
            frame[t.lower] = frame[t.upper] - t.frequency_hz;
            fixed[t.lower] = true;
            continue;
        }
        fixed[t.lower] = true;
        frame[t.upper] = frame[t.lower] + t.frequency_hz;
        fixed[t.upper] = true;
    }
    return frame;
}

inline AtomMatrix atom_hamiltonian(const GroupSetup& g, int atom, double env) {
    AtomMatrix h = AtomMatrix::Zero();
    for (int l = 0; l < kLevels; ++l)
        h(l, l) = cplx(constants::two_pi * (g.energy_hz[atom][l] - g.frame_hz[l]), -0.5 * g.loss.total[l]);
    const cplx c = 0.5 * g.rabi_rad_s * env * std::exp(cplx(0.0, g.phase_rad));
    for (const auto& t : g.tones) {
        h(t.upper, t.lower) += c;
        h(t.lower, t.upper) += std::conj(c);
    }
    return h;
}

inline Eigen::MatrixXcd register_hamiltonian(const GroupSetup& g, double env) {
    const Eigen::Index dim = power7(g.n_atoms);
    Eigen::MatrixXcd H = Eigen::MatrixXcd::Zero(dim, dim);
    for (int k = 0; k < g.n_atoms; ++k) {
        const AtomMatrix h = atom_hamiltonian(g, k, env);
        const Eigen::Index s = power7(g.n_atoms - 1 - k);
        for (Eigen::Index i = 0; i < dim; ++i) {
            const int l = static_cast<int>((i / s) % kLevels);
            for (int l2 = 0; l2 < kLevels; ++l2)
                if (h(l2, l) != cplx(0.0))
                    H(i + (l2 - l) * s, i) += h(l2, l);
        }
    }
    if (g.dipole_rad_s.size() == dim)
        H.diagonal() += g.dipole_rad_s.cast<cplx>();
    return H;
}

/// psi <- (1 x .. x U_atom x .. x 1) psi, column by column.
inline void apply_atom_operator(Eigen::MatrixXcd& psi, const AtomMatrix& u, int atom, int n_atoms) {
    const Eigen::Index s = power7(n_atoms - 1 - atom);
    const Eigen::Index block = s * kLevels;
    Eigen::Matrix<cplx, kLevels, 1> v;
    for (Eigen::Index col = 0; col < psi.cols(); ++col)
        for (Eigen::Index base = 0; base < psi.rows(); base += block)
            for (Eigen::Index r = 0; r < s; ++r) {
                for (int l = 0; l < kLevels; ++l)
                    v(l) = psi(base + r + l * s, col);
                v = u * v;
                for (int l = 0; l < kLevels; ++l)
                    psi(base + r + l * s, col) = v(l);
            }
}

inline void apply_dipole_phase(Eigen::MatrixXcd& psi, const Eigen::VectorXd& d, double h) {
    if (d.size() != psi.rows())
        return;
    for (Eigen::Index i = 0; i < psi.rows(); ++i)
        psi.row(i) *= std::exp(cplx(0.0, -d(i) * h));
}

/// Expected per-channel loss over a step of length h, from current populations.
inline std::array<double, kChannels> channel_estimate(const GroupSetup& g, const Eigen::MatrixXcd& psi, double h) {
    std::array<double, kChannels> est{};
    if (!g.loss.any)
        return est;
    for (int k = 0; k < g.n_atoms; ++k) {
        const Eigen::Index s = power7(g.n_atoms - 1 - k);
        for (Eigen::Index i = 0; i < psi.rows(); ++i) {
            const int l = static_cast<int>((i / s) % kLevels);
            if (g.loss.total[l] == 0.0)
                continue;
            const double pop = psi.row(i).squaredNorm();
            for (int c = 0; c < kChannels; ++c)
                est[c] += pop * g.loss.rate[c][l] * h;
        }
    }
    return est;
}

struct StepResult {
    std::array<double, kChannels> lost{}; // summed over columns
};

/// Propagates the columns of `psi` through the group's drive. Returns the
/// norm lost to each channel. Leaves psi in the register (reference) frame.
inline StepResult propagate(const GroupSetup& g, Eigen::MatrixXcd& psi, double dt) {
    StepResult out;
    const double T = g.duration_s;
    if (T <= 0.0)
        return out;
    const Eigen::Index dim = psi.rows();
    const bool exact = dim <= kExactDimension;
    const bool drive = !g.tones.empty() && g.rabi_rad_s > 0.0;
    const bool constant = !drive || g.shape == PulseShape::Square;

    int steps = 1;
    if (!constant || (!exact && drive))
        steps = std::max(1, static_cast<int>(std::ceil(T / std::min(dt, T) - 1e-9)));
    const double h = T / steps;

    auto step_once = [&](Eigen::MatrixXcd& state, double t0, double hh) {
        const double env = drive ? envelope(g.shape, t0 + 0.5 * hh, T) : 0.0;
        if (!drive) {
            // diagonal: exact for any register size
            Eigen::VectorXcd diag = Eigen::VectorXcd::Zero(dim);
            for (int k = 0; k < g.n_atoms; ++k) {
                const AtomMatrix hk = atom_hamiltonian(g, k, 0.0);
                const Eigen::Index s = power7(g.n_atoms - 1 - k);
                for (Eigen::Index i = 0; i < dim; ++i)
                    diag(i) += hk((i / s) % kLevels, (i / s) % kLevels);
            }
            if (g.dipole_rad_s.size() == dim)
                diag += g.dipole_rad_s.cast<cplx>();
            for (Eigen::Index i = 0; i < dim; ++i)
                state.row(i) *= std::exp(cplx(0.0, -1.0) * diag(i) * hh);
            return;
        }
        if (exact) {
            const Eigen::MatrixXcd H = register_hamiltonian(g, env);
            if (g.loss.any) {
                state = (cplx(0.0, -hh) * H).exp() * state;
                return;
            }
            // Hermitian: the spectral form stays unitary even when spectator
            // levels far from the frame give phases of 1e7 rad per step.
            const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(H);
            const Eigen::VectorXcd ph = (cplx(0.0, -hh) * es.eigenvalues().cast<cplx>()).array().exp();
            state = es.eigenvectors() * (ph.asDiagonal() * (es.eigenvectors().adjoint() * state));
            return;
        }
        apply_dipole_phase(state, g.dipole_rad_s, 0.5 * hh);
        for (int k = 0; k < g.n_atoms; ++k) {
            const AtomMatrix u = (cplx(0.0, -hh) * atom_hamiltonian(g, k, env)).exp();
            apply_atom_operator(state, u, k, g.n_atoms);
        }
        apply_dipole_phase(state, g.dipole_rad_s, 0.5 * hh);
    };

    if (!exact && drive && g.dipole_rad_s.size() == dim) {
        // Splitting self-check on the first step: one step vs two half steps.
        Eigen::MatrixXcd a = psi, b = psi;
        step_once(a, 0.0, h);
        step_once(b, 0.0, 0.5 * h);
        step_once(b, 0.5 * h, 0.5 * h);
        if ((a - b).norm() > kUnitarityTolerance * std::max(1.0, psi.norm()))
            throw IntegratorError("operator-splitting step too coarse for the dipole coupling; reduce dt");
    }

    for (int n = 0; n < steps; ++n) {
        const double before = psi.squaredNorm();
        const auto est = channel_estimate(g, psi, h);
        step_once(psi, n * h, h);
        const double after = psi.squaredNorm();
        const double drop = before - after;
        if (!g.loss.any) {
            if (std::abs(drop) > kUnitarityTolerance * std::max(before, 1e-300))
                throw IntegratorError("unitarity deviation " + std::to_string(drop) +
                                      " in a noise-free step; reduce dt");
            continue;
        }
        if (drop < -kUnitarityTolerance * before)
            throw IntegratorError("norm increased during a lossy step; reduce dt");
        const double est_sum = est[0] + est[1] + est[2];
        for (int c = 0; c < kChannels; ++c)
            out.lost[c] += est_sum > 0.0 ? drop * est[c] / est_sum : 0.0;
    }

    // back to the register frame
    for (Eigen::Index i = 0; i < dim; ++i) {
        double phase = 0.0;
        for (int k = 0; k < g.n_atoms; ++k) {
            const int l = static_cast<int>((i / power7(g.n_atoms - 1 - k)) % kLevels);
            phase += g.reference_hz[l] - g.frame_hz[l];
        }
        psi.row(i) *= std::exp(cplx(0.0, constants::two_pi * phase * T));
    }
    return out;
}

/// Secular dipole energy (rad/s) of every basis state, moments at the reference field.
inline Eigen::VectorXd dipole_diagonal(const RegisterState& reg) {
    const int n = reg.n_atoms();
    const Eigen::Index dim = reg.dim();
    Eigen::VectorXd d = Eigen::VectorXd::Zero(dim);
    if (n < 2 || reg.dipole_scale == 0.0)
        return d;
    const LevelArray mu = level_moments(reg.params(), reg.reference_field());
    for (int a = 0; a < n; ++a)
        for (int b = a + 1; b < n; ++b) {
            const double k = constants::two_pi * reg.dipole_scale *
                             dipole_coupling_per_moment2(reg.geometry().position(reg.sites()[b]) -
                                                         reg.geometry().position(reg.sites()[a]));
            for (Eigen::Index i = 0; i < dim; ++i)
                d(i) += k * mu[reg.level_of(i, a)] * mu[reg.level_of(i, b)];
        }
    return d;
}

} // namespace detail

/// Removes all 1S0 population of `atom` from the trap: the {LOST, g-, g+}
/// rows collapse onto LOST through their best rank-1 approximation. The
/// remainder, which only appears when the ground population is entangled
/// with the rest of the register differently from any LOST amplitude, is booked
/// as leaked mass.
inline void blow_away_atom(RegisterState& reg, int atom) {
    auto& psi = reg.amplitudes();
    const Eigen::Index s = reg.stride(atom);
    std::vector<Eigen::Index> rest;
    for (Eigen::Index i = 0; i < reg.dim(); ++i)
        if (reg.level_of(i, atom) == 0)
            rest.push_back(i);
    const int rows[3] = {idx(Level::Lost), idx(Level::GroundMinus), idx(Level::GroundPlus)};
    Eigen::MatrixXcd M(3, static_cast<Eigen::Index>(rest.size()));
    for (int r = 0; r < 3; ++r)
        for (std::size_t c = 0; c < rest.size(); ++c)
            M(r, static_cast<Eigen::Index>(c)) = psi(rest[c] + rows[r] * s);
    const double total = M.squaredNorm();
    if (total == 0.0)
        return;
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(M, Eigen::ComputeThinV);
    const double s1 = svd.singularValues()(0);
    for (std::size_t c = 0; c < rest.size(); ++c) {
        psi(rest[c] + rows[0] * s) = s1 * std::conj(svd.matrixV()(static_cast<Eigen::Index>(c), 0));
        psi(rest[c] + rows[1] * s) = 0.0;
        psi(rest[c] + rows[2] * s) = 0.0;
    }
    const double discarded = total - s1 * s1;
    if (discarded > 0.0)
        reg.add_leak("blow_away", discarded);
}

inline void blow_away(RegisterState& reg) {
    for (int a = 0; a < reg.n_atoms(); ++a)
        blow_away_atom(reg, a);
}

/// Evolves the register through one segment. `dt` bounds the sub-step used for
/// shaped pulses and for split-operator steps on registers above 2 atoms.
inline void evolve(RegisterState& reg, const Segment& seg, const NoiseParams& noise, double dt) {
    if (!(dt > 0.0))
        throw ConfigError("evolve needs dt > 0");
    seg.pulse.validate();
    noise.validate();
    const auto kind = seg.pulse.transition;
    if (kind == TransitionKind::SetGradient)
        return;
    if (kind == TransitionKind::BlowAway) {
        blow_away(reg);
        return;
    }
    if (kind == TransitionKind::Detect)
        throw ProtocolError("detection segments need a seeded sampler (run_schedule or measure_qubit)");

    const auto& p = reg.params();
    detail::GroupSetup g;
    g.n_atoms = reg.n_atoms();
    for (const auto& s : reg.sites())
        g.energy_hz.push_back(level_energies_hz(p, site_field(reg.geometry(), seg.gradient, s)));
    g.reference_hz = level_energies_hz(p, reg.reference_field());
    g.loss = detail::loss_rates(noise);
    g.rabi_rad_s = seg.pulse.rabi_rad_s;
    g.phase_rad = seg.pulse.phase_rad;
    g.shape = seg.pulse.shape;
    g.duration_s = seg.pulse.duration_s;
    g.dipole_rad_s = detail::dipole_diagonal(reg);

    std::vector<std::vector<Tone>> tone_sets;
    if (kind == TransitionKind::Idle)
        tone_sets.emplace_back();
    else
        for (auto& grp : drive_groups(reg.geometry(), p, seg))
            tone_sets.push_back(std::move(grp.tones));

    Eigen::MatrixXcd psi = reg.amplitudes();
    for (const auto& tones : tone_sets) {
        g.tones = tones;
        g.frame_hz = detail::tone_frame(g.reference_hz, tones);
        const auto res = detail::propagate(g, psi, dt);
        for (int c = 0; c < detail::kChannels; ++c)
            if (res.lost[c] != 0.0)
                reg.add_leak(detail::channel_name(c), res.lost[c]);
    }
    reg.amplitudes() = psi.col(0);
}

/// 7x7 single-atom propagator (register frame) for `pulse` applied to an atom
/// at `site_field_tesla`, with tones set from the field at `drive_field_tesla`.
inline AtomMatrix single_atom_propagator(const AtomParams& p, const Pulse& pulse, double site_field_tesla,
                                         double drive_field_tesla, double reference_field_tesla,
                                         const NoiseParams& noise = NoiseParams::off(), double dt = 0.0) {
    detail::GroupSetup g;
    g.n_atoms = 1;
    g.energy_hz = {level_energies_hz(p, site_field_tesla)};
    g.reference_hz = level_energies_hz(p, reference_field_tesla);
    g.loss = detail::loss_rates(noise);
    g.rabi_rad_s = pulse.rabi_rad_s;
    g.phase_rad = pulse.phase_rad;
    g.shape = pulse.shape;
    g.duration_s = pulse.duration_s;
    g.tones = site_tones(pulse, level_energies_hz(p, drive_field_tesla));
    g.frame_hz = detail::tone_frame(g.reference_hz, g.tones);
    Eigen::MatrixXcd psi = Eigen::MatrixXcd::Identity(kLevels, kLevels);
    detail::propagate(g, psi, dt > 0.0 ? dt : std::max(pulse.duration_s / 400.0, 1e-300));
    return psi;
}

} // namespace ybqc
