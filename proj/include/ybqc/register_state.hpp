#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ybqc/atomic_structure.hpp"
#include "ybqc/errors.hpp"
#include "ybqc/lattice_addressing.hpp"
#include "ybqc/pulse.hpp"

namespace ybqc {

using cplx = std::complex<double>;
using AtomVector = Eigen::Matrix<cplx, kLevels, 1>;

inline constexpr int kMaxActiveAtoms = 4;

/// State vector over the active atoms, each with kLevels internal levels.
/// Atom 0 is the most significant digit of the basis index. Phases are those of
/// the frame rotating with every level's energy at the reference field.
class RegisterState {
public:
    RegisterState(LatticeGeometry geom, std::vector<Site> sites, AtomParams params,
                  double reference_field_tesla)
        : geom_(geom), sites_(std::move(sites)), params_(params), reference_field_(reference_field_tesla) {
        geom_.validate();
        params_.validate();
        if (sites_.empty() || static_cast<int>(sites_.size()) > kMaxActiveAtoms)
            throw ConfigError("register holds 1.." + std::to_string(kMaxActiveAtoms) + " active atoms");
        for (std::size_t a = 0; a < sites_.size(); ++a) {
            if (!geom_.contains(sites_[a]))
                throw IndexError("active site " + to_string(sites_[a]) + " outside lattice");
            for (std::size_t b = 0; b < a; ++b)
                if (sites_[a] == sites_[b])
                    throw ConfigError("duplicate active site " + to_string(sites_[a]));
        }
        dim_ = 1;
        for (std::size_t a = 0; a < sites_.size(); ++a)
            dim_ *= kLevels;
        amps_ = Eigen::VectorXcd::Zero(dim_);
        amps_(0) = 1.0; // all atoms in GroundMinus
    }

    /// Product state from per-atom amplitude vectors (normalised on input).
    static RegisterState product(LatticeGeometry geom, std::vector<Site> sites, AtomParams params,
                                 double reference_field_tesla, const std::vector<AtomVector>& atoms) {
        RegisterState r(geom, std::move(sites), params, reference_field_tesla);
        if (static_cast<int>(atoms.size()) != r.n_atoms())
            throw ConfigError("one amplitude vector per active atom required");
        Eigen::VectorXcd v = Eigen::VectorXcd::Ones(1);
        for (const auto& a : atoms) {
            Eigen::VectorXcd next(v.size() * kLevels);
            for (Eigen::Index i = 0; i < v.size(); ++i)
                next.segment(i * kLevels, kLevels) = v(i) * a;
            v = std::move(next);
        }
        const double n = v.norm();
        if (!(n > 0))
            throw ConfigError("zero product state");
        r.amps_ = v / n;
        return r;
    }

    static AtomVector basis(Level l) {
        AtomVector v = AtomVector::Zero();
        v(idx(l)) = 1.0;
        return v;
    }

    /// alpha |lo> + beta |hi>
    static AtomVector qubit(Level lo, Level hi, cplx alpha, cplx beta) {
        AtomVector v = AtomVector::Zero();
        v(idx(lo)) = alpha;
        v(idx(hi)) = beta;
        return v;
    }

    int n_atoms() const { return static_cast<int>(sites_.size()); }
    Eigen::Index dim() const { return dim_; }
    const std::vector<Site>& sites() const { return sites_; }
    const LatticeGeometry& geometry() const { return geom_; }
    const AtomParams& params() const { return params_; }
    double reference_field() const { return reference_field_; }

    const Eigen::VectorXcd& amplitudes() const { return amps_; }
    Eigen::VectorXcd& amplitudes() { return amps_; }

    double norm2() const { return amps_.squaredNorm(); }
    double leaked() const { return leaked_; }
    const std::map<std::string, double>& leaked_by_channel() const { return channels_; }

    void add_leak(const std::string& channel, double mass) {
        leaked_ += mass;
        channels_[channel] += mass;
    }

    /// Survival bookkeeping: norm^2 + leaked mass.
    double accounted_probability() const { return norm2() + leaked_; }

    int atom_index(const Site& s) const {
        for (int a = 0; a < n_atoms(); ++a)
            if (sites_[a] == s)
                return a;
        throw IndexError("site " + to_string(s) + " is not an active register site");
    }

    Eigen::Index stride(int atom) const {
        Eigen::Index s = 1;
        for (int a = atom + 1; a < n_atoms(); ++a)
            s *= kLevels;
        return s;
    }

    int level_of(Eigen::Index basis_index, int atom) const {
        return static_cast<int>((basis_index / stride(atom)) % kLevels);
    }

    Eigen::Index basis_index(const std::vector<Level>& levels) const {
        if (static_cast<int>(levels.size()) != n_atoms())
            throw ConfigError("basis label needs one level per atom");
        Eigen::Index i = 0;
        for (Level l : levels)
            i = i * kLevels + idx(l);
        return i;
    }

    /// Unnormalised population of `level` on `atom`.
    double population(int atom, Level level) const {
        double p = 0.0;
        for (Eigen::Index i = 0; i < dim_; ++i)
            if (level_of(i, atom) == idx(level))
                p += std::norm(amps_(i));
        return p;
    }

    double population(int atom, std::initializer_list<Level> levels) const {
        double p = 0.0;
        for (Level l : levels)
            p += population(atom, l);
        return p;
    }

    /// 2x2 reduced density matrix of `atom` on {lo, hi}, unnormalised.
    Eigen::Matrix2cd reduced_qubit(int atom, Level lo, Level hi) const {
        Eigen::Matrix2cd rho = Eigen::Matrix2cd::Zero();
        const Eigen::Index st = stride(atom);
        const std::array<int, 2> lv{idx(lo), idx(hi)};
        for (Eigen::Index i = 0; i < dim_; ++i) {
            if (level_of(i, atom) != 0)
                continue; // enumerate the "rest" index once
            for (int r = 0; r < 2; ++r)
                for (int c = 0; c < 2; ++c)
                    rho(r, c) += amps_(i + lv[r] * st) * std::conj(amps_(i + lv[c] * st));
        }
        return rho;
    }

    double dipole_scale = 1.0; // multiplies every pair coupling; 0 switches the interaction off

private:
    LatticeGeometry geom_;
    std::vector<Site> sites_;
    AtomParams params_;
    double reference_field_;
    Eigen::Index dim_ = 1;
    Eigen::VectorXcd amps_;
    double leaked_ = 0.0;
    std::map<std::string, double> channels_;
};

/// Fidelity of a reduced qubit state with the pure state (c0, c1), maximised over
/// a relative Z phase: deterministic frame phases are not counted as errors.
inline double phase_insensitive_fidelity(const Eigen::Matrix2cd& rho, cplx c0, cplx c1) {
    const double n = std::norm(c0) + std::norm(c1);
    return (rho(0, 0).real() * std::norm(c0) + rho(1, 1).real() * std::norm(c1) +
            2.0 * std::abs(rho(0, 1)) * std::abs(c0) * std::abs(c1)) /
           n;
}

} // namespace ybqc
