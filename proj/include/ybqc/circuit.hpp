#pragma once

// Circuit text -> pulse schedule -> simulated run.
//
// One gate per line, '#' starts a comment:
//   X i j [k] theta          rotation of the auxiliary qubit about x (rad)
//   CNOT i1 j1 [k1] i2 j2 [k2]   control first
//   MEAS i j [k]             readout of the 1S0 m_I = +1/2 projector
// Qubits rest in 1S0 between gates; every block transfers its atoms to 3P2
// and back.

#include <algorithm>
#include <cctype>
#include <fstream>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ybqc/errors.hpp"
#include "ybqc/feasibility.hpp"
#include "ybqc/lattice_addressing.hpp"
#include "ybqc/propagator.hpp"
#include "ybqc/protocols.hpp"
#include "ybqc/pulse.hpp"
#include "ybqc/register_state.hpp"
#include "ybqc/three_photon.hpp"

namespace ybqc {

enum class GateKind { X, CNOT, MEAS };

inline const char* to_string(GateKind k) {
    switch (k) {
    case GateKind::X: return "X";
    case GateKind::CNOT: return "CNOT";
    case GateKind::MEAS: return "MEAS";
    }
    return "?";
}

struct CircuitGate {
    GateKind kind = GateKind::X;
    std::vector<Site> sites;
    double theta_rad = 0.0;
    int line = 0;
};

struct Circuit {
    std::vector<CircuitGate> gates;

    /// Qubits in order of first appearance.
    std::vector<Site> qubits() const {
        std::vector<Site> out;
        for (const auto& g : gates)
            for (const auto& s : g.sites)
                if (std::find(out.begin(), out.end(), s) == out.end())
                    out.push_back(s);
        return out;
    }
};

inline Circuit parse_circuit(std::istream& in, const std::string& origin = "<circuit>") {
    Circuit c;
    std::string raw;
    int line_no = 0;
    auto fail = [&](const std::string& msg) {
        throw ConfigError(origin + ":" + std::to_string(line_no) + ": " + msg);
    };
    while (std::getline(in, raw)) {
        ++line_no;
        if (auto h = raw.find('#'); h != std::string::npos)
            raw.erase(h);
        std::istringstream ls(raw);
        std::vector<std::string> tok;
        for (std::string t; ls >> t;)
            tok.push_back(t);
        if (tok.empty())
            continue;
        std::string name = tok[0];
        std::transform(name.begin(), name.end(), name.begin(), [](unsigned char ch) { return std::toupper(ch); });
        auto as_int = [&](const std::string& s) {
            std::size_t used = 0;
            int v = 0;
            try {
                v = std::stoi(s, &used);
            } catch (const std::exception&) {
                fail("expected an integer site index, got '" + s + "'");
            }
            if (used != s.size())
                fail("expected an integer site index, got '" + s + "'");
            return v;
        };
        auto site = [&](const std::vector<std::string>& t, std::size_t from, int n) {
            Site s{as_int(t[from]), as_int(t[from + 1]), n == 3 ? as_int(t[from + 2]) : 0};
            return s;
        };
        CircuitGate g;
        g.line = line_no;
        const std::size_t args = tok.size() - 1;
        if (name == "X") {
            if (args != 3 && args != 4)
                fail("X takes 'i j [k] theta'");
            g.kind = GateKind::X;
            g.sites = {site(tok, 1, static_cast<int>(args) - 1)};
            std::size_t used = 0;
            try {
                g.theta_rad = std::stod(tok.back(), &used);
            } catch (const std::exception&) {
                fail("bad rotation angle '" + tok.back() + "'");
            }
            if (used != tok.back().size())
                fail("bad rotation angle '" + tok.back() + "'");
        } else if (name == "CNOT") {
            if (args != 4 && args != 6)
                fail("CNOT takes 'i1 j1 [k1] i2 j2 [k2]'");
            const int n = static_cast<int>(args) / 2;
            g.kind = GateKind::CNOT;
            g.sites = {site(tok, 1, n), site(tok, 1 + n, n)};
        } else if (name == "MEAS") {
            if (args != 2 && args != 3)
                fail("MEAS takes 'i j [k]'");
            g.kind = GateKind::MEAS;
            g.sites = {site(tok, 1, static_cast<int>(args))};
        } else {
            fail("unknown gate '" + tok[0] + "'");
        }
        c.gates.push_back(g);
    }
    return c;
}

inline Circuit parse_circuit_file(const std::string& path) {
    std::ifstream f(path);
    if (!f)
        throw ConfigError("cannot open circuit file '" + path + "'");
    return parse_circuit(f, path);
}

struct CompileOptions {
    GradientConfig gradient;                         // addressing gradient for transfers and the CNOT
    double gate_field_tesla = 650.0 * constants::gauss; // bias during three-photon rotations
    double ladder_rabi_rad_s = constants::two_pi * 985e3;
    TransferOptions transfer;
    std::optional<double> cnot_rabi_rad_s;
    bool allow_non_axial_cnot = true;
};

namespace detail {

class ScheduleBuilder {
public:
    ScheduleBuilder(const LatticeGeometry& geom, const AtomParams& p, PulseSchedule& out)
        : geom_(geom), p_(p), out_(out), weight_(out.active_sites.size(), 0.0) {}

    void set_gradient(const GradientConfig& cfg, const std::string& label) {
        Segment s;
        s.gradient = cfg;
        s.label = label;
        s.pulse.transition = TransitionKind::SetGradient;
        out_.segments.push_back(s);
    }

    /// Transfer segment; `after` gives the 3P2 weight each target ends with.
    void transfer(Segment s, double after) {
        const auto groups = drive_groups(geom_, p_, s);
        const double T = s.pulse.duration_s;
        s.duration_s = groups.size() * T;
        std::vector<double> next = weight_;
        std::vector<bool> driven(weight_.size(), false);
        for (std::size_t g = 0; g < groups.size(); ++g)
            for (const auto& site : groups[g].sites) {
                const int a = atom(site);
                if (a < 0)
                    continue;
                const double t_mid = (g + 0.5) * T;
                s.metastable_atom_seconds += weight_[a] * t_mid + after * (s.duration_s - t_mid);
                next[a] = after;
                driven[a] = true;
            }
        for (std::size_t a = 0; a < weight_.size(); ++a)
            if (!driven[a])
                s.metastable_atom_seconds += weight_[a] * s.duration_s;
        weight_ = next;
        out_.segments.push_back(s);
    }

    /// Any other timed segment: atoms keep their current 3P2 weight.
    void hold(Segment s) {
        s.duration_s = segment_wall_time(geom_, p_, s);
        for (double w : weight_)
            s.metastable_atom_seconds += w * s.duration_s;
        out_.segments.push_back(s);
    }

    double weight(const Site& s) const { return weight_[atom(s)]; }

private:
    int atom(const Site& s) const {
        for (std::size_t a = 0; a < out_.active_sites.size(); ++a)
            if (out_.active_sites[a] == s)
                return static_cast<int>(a);
        return -1;
    }
    const LatticeGeometry& geom_;
    const AtomParams& p_;
    PulseSchedule& out_;
    std::vector<double> weight_;
};

} // namespace detail

inline PulseSchedule compile_circuit(const Circuit& circuit, const LatticeGeometry& geom, const AtomParams& p,
                                     const NoiseParams& noise, const CompileOptions& opt = {}) {
    geom.validate();
    p.validate();
    PulseSchedule sched;
    sched.reference_field_tesla = opt.gradient.bias_tesla;
    sched.active_sites = circuit.qubits();
    sched.n_atoms = static_cast<int>(sched.active_sites.size());
    if (sched.n_atoms > kMaxActiveAtoms)
        throw ConfigError("circuit touches " + std::to_string(sched.n_atoms) + " qubits; at most " +
                          std::to_string(kMaxActiveAtoms) + " are simulated");
    for (const auto& s : sched.active_sites)
        if (!geom.contains(s))
            throw IndexError("circuit qubit " + to_string(s) + " outside lattice");

    detail::ScheduleBuilder b(geom, p, sched);
    const auto& addr = opt.gradient;
    double intrinsic_error = 0.0;
    TransferOptions both = opt.transfer;
    both.branches = QubitBranches::Both;

    for (const auto& g : circuit.gates) {
        const std::string where = std::string(to_string(g.kind)) + " (line " + std::to_string(g.line) + ")";
        switch (g.kind) {
        case GateKind::X: {
            double angle = g.theta_rad, axis = 0.0;
            if (angle < 0.0) {
                angle = -angle;
                axis = constants::pi;
            }
            if (angle == 0.0)
                break;
            const Site s = g.sites[0];
            GradientConfig gate_cfg = addr;
            gate_cfg.bias_tesla = opt.gate_field_tesla;
            const double bf = site_field(geom, gate_cfg, s);
            const auto drv = calibrate_three_photon_drive(p, bf, opt.ladder_rabi_rad_s);
            b.set_gradient(addr, where + ": addressing gradient");
            b.transfer(transfer_segment({s}, addr, both, where + ": transfer up"), 1.0);
            b.set_gradient(gate_cfg, where + ": gate field");
            auto ladder = ladder_segment(drv, s, angle, axis, gate_cfg);
            ladder.label = where + ": three-photon rotation";
            b.hold(ladder);
            b.set_gradient(addr, where + ": addressing gradient");
            b.transfer(transfer_segment({s}, addr, both, where + ": transfer down"), 0.0);
            const AtomMatrix u = single_atom_propagator(p, ladder.pulse, bf, bf, sched.reference_field_tesla);
            const int a = idx(Level::EMinus3), d = idx(Level::EPlus3);
            intrinsic_error += 1.0 - std::norm(u(a, a)) - std::norm(u(d, a));
            break;
        }
        case GateKind::CNOT: {
            const Site c = g.sites[0], t = g.sites[1];
            check_cnot_geometry(c, t, opt.allow_non_axial_cnot);
            const auto cal = calibrate_cnot(geom, p, sched.reference_field_tesla, c, t, opt.cnot_rabi_rad_s);
            b.set_gradient(addr, where + ": addressing gradient");
            b.transfer(transfer_segment({c, t}, addr, both, where + ": transfer up"), 1.0);
            auto pulse = cnot_segment(cal, t, addr);
            pulse.label = where + ": pi pulse on |10>-|11>";
            b.hold(pulse);
            b.transfer(transfer_segment({c, t}, addr, both, where + ": transfer down"), 0.0);
            intrinsic_error += off_resonant_rabi_probability(cal.rabi_rad_s, cal.shift_rad_s, cal.duration_s);
            break;
        }
        case GateKind::MEAS: {
            const Site s = g.sites[0];
            MeasureOptions mo;
            mo.gradient = addr;
            mo.transfer = opt.transfer;
            auto r = readout_segments(sched.active_sites, s, noise, mo);
            for (auto* seg : {&r.prepare[0], &r.prepare[1]})
                seg->label = where + ": " + seg->label;
            for (auto& seg : r.restore)
                seg.label = where + ": " + seg.label;
            b.set_gradient(addr, where + ": addressing gradient");
            b.transfer(r.prepare[0], 1.0);
            b.transfer(r.prepare[1], b.weight(s)); // conservative: the returned branch is not discounted
            Segment det = r.detect;
            det.label = where + ": detection";
            b.hold(det);
            if (r.restore.size() == 2)
                b.transfer(r.restore[0], 0.0);
            b.transfer(r.restore.back(), 0.0);
            break;
        }
        }
    }
    sched.reported_infidelity = std::min(1.0, 1.0 - decoherence_budget(sched, noise).survival + intrinsic_error);
    return sched;
}

inline RegisterState initial_register(const PulseSchedule& sched, const LatticeGeometry& geom, const AtomParams& p) {
    return RegisterState(geom, sched.active_sites, p, sched.reference_field_tesla);
}

struct RunResult {
    std::vector<DetectionReport> detections;
    double duration_s = 0.0;
};

/// Executes a schedule on `reg` (whose sites must be the schedule's active sites).
inline RunResult run_schedule(const PulseSchedule& sched, RegisterState& reg, const NoiseParams& noise,
                              std::optional<std::uint64_t> seed, int substeps = 400) {
    if (reg.sites() != sched.active_sites)
        throw ConfigError("register sites do not match the schedule's active sites");
    const bool stochastic = std::any_of(sched.segments.begin(), sched.segments.end(), [](const Segment& s) {
        return s.pulse.transition == TransitionKind::Detect;
    });
    std::optional<std::mt19937_64> rng;
    if (stochastic)
        rng = make_rng(seed, true);
    RunResult res;
    for (const auto& s : sched.segments) {
        if (s.pulse.transition == TransitionKind::Detect)
            res.detections.push_back(run_detection(reg, s, noise, *rng));
        else
            evolve(reg, s, noise, default_dt(s.pulse, substeps));
        res.duration_s += s.duration_s;
    }
    return res;
}

} // namespace ybqc
