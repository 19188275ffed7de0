#pragma once

// Drive calibration for the a <-> d three-photon transition of the F = 3/2 ladder.
//
// In the frame rotating with a drive at omega0 + eps the ladder Hamiltonian is
//   diag(0, Delta1 - eps, -Delta2 - 2 eps, -3 eps) + Omega/2 (nearest neighbours).
// Unequal |Delta1|, |Delta2| light-shift a and d differently; eps is chosen at the
// minimum of the a/d dressed-state splitting, where that splitting is the
// three-photon Rabi frequency.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <boost/math/tools/minima.hpp>

#include "ybqc/atomic_structure.hpp"
#include "ybqc/constants.hpp"

namespace ybqc {

inline Eigen::Matrix4d ladder_hamiltonian(const ThreePhotonDetunings& d, double rabi_rad_s, double eps_rad_s) {
    Eigen::Matrix4d h = Eigen::Matrix4d::Zero();
    h(1, 1) = d.delta1_rad_s - eps_rad_s;
    h(2, 2) = -d.delta2_rad_s - 2.0 * eps_rad_s;
    h(3, 3) = -3.0 * eps_rad_s;
    for (int k = 0; k < 3; ++k)
        h(k, k + 1) = h(k + 1, k) = rabi_rad_s / 2.0;
    return h;
}

/// Splitting of the two dressed states with the most a/d character.
inline double ad_dressed_splitting(const ThreePhotonDetunings& d, double rabi_rad_s, double eps_rad_s) {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(ladder_hamiltonian(d, rabi_rad_s, eps_rad_s));
    std::array<std::pair<double, int>, 4> weight;
    for (int k = 0; k < 4; ++k)
        weight[k] = {es.eigenvectors()(0, k) * es.eigenvectors()(0, k) +
                         es.eigenvectors()(3, k) * es.eigenvectors()(3, k),
                     k};
    std::sort(weight.begin(), weight.end());
    return std::abs(es.eigenvalues()(weight[3].second) - es.eigenvalues()(weight[2].second));
}

struct ThreePhotonDrive {
    ThreePhotonDetunings detunings;
    double rabi_rad_s = 0.0;
    double compensation_rad_s = 0.0;      // eps: drive offset from omega0
    double dressed_rabi_rad_s = 0.0;      // a<->d oscillation frequency at eps
    double effective_formula_rad_s = 0.0; // Omega^3 / (4 |Delta1 Delta2|)
    double coupling_sign = 1.0;           // sign of the effective a<->d matrix element

    double pi_time_s() const { return constants::pi / dressed_rabi_rad_s; }
    double detuning_ratio() const {
        return rabi_rad_s / std::min(std::abs(detunings.delta1_rad_s), std::abs(detunings.delta2_rad_s));
    }
};

inline double effective_three_photon_rabi(double rabi_rad_s, const ThreePhotonDetunings& d) {
    return rabi_rad_s * rabi_rad_s * rabi_rad_s / (4.0 * std::abs(d.delta1_rad_s * d.delta2_rad_s));
}

inline ThreePhotonDrive calibrate_three_photon_drive(const AtomParams& p, double field_tesla, double rabi_rad_s) {
    if (!(rabi_rad_s > 0.0))
        throw ConfigError("three-photon drive needs a positive Rabi frequency");
    ThreePhotonDrive drv;
    drv.detunings = three_photon_detunings(p, field_tesla);
    drv.rabi_rad_s = rabi_rad_s;
    const auto& d = drv.detunings;
    if (d.delta1_rad_s == 0.0 || d.delta2_rad_s == 0.0)
        throw DomainError("three-photon drive undefined for a linear ladder (Delta1 = Delta2 = 0)");
    drv.effective_formula_rad_s = effective_three_photon_rabi(rabi_rad_s, d);

    const double bound = rabi_rad_s * rabi_rad_s / 4.0 *
                         (1.0 / std::abs(d.delta1_rad_s) + 1.0 / std::abs(d.delta2_rad_s));
    std::uintmax_t iters = 500;
    const auto best = boost::math::tools::brent_find_minima(
        [&](double eps) { return ad_dressed_splitting(d, rabi_rad_s, eps); }, -bound, bound, 52, iters);
    drv.compensation_rad_s = best.first;
    drv.dressed_rabi_rad_s = best.second;

    const auto h = ladder_hamiltonian(d, rabi_rad_s, drv.compensation_rad_s);
    drv.coupling_sign = (h(1, 1) * h(2, 2) > 0.0) ? 1.0 : -1.0;
    return drv;
}

/// Time-domain check of the a -> d oscillation from exact propagation of the
/// 4-level Hamiltonian: the P_d maximum within half a period of the dressed
/// estimate, refined locally.
struct LadderOscillation {
    double pi_time_s = 0.0;
    double peak_transfer = 0.0;
    double leakage = 0.0; // b + c population at t_pi
    double rabi_rad_s() const { return constants::pi / pi_time_s; }
};

inline LadderOscillation simulate_ladder_oscillation(const ThreePhotonDrive& drv, int grid = 20000) {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(
        ladder_hamiltonian(drv.detunings, drv.rabi_rad_s, drv.compensation_rad_s));
    const Eigen::Matrix4d& v = es.eigenvectors();
    const Eigen::Vector4d& w = es.eigenvalues();
    auto amp = [&](double t, int to) {
        std::complex<double> s = 0.0;
        for (int k = 0; k < 4; ++k)
            s += v(to, k) * v(0, k) * std::exp(std::complex<double>(0.0, -w(k) * t));
        return s;
    };
    auto pd = [&](double t) { return std::norm(amp(t, 3)); };

    const double guess = constants::pi / drv.dressed_rabi_rad_s;
    const double lo = 0.5 * guess;
    const double dt = guess / grid;
    double t_best = lo, p_best = -1.0;
    for (int n = 0; n <= grid; ++n) {
        const double t = lo + n * dt;
        const double p = pd(t);
        if (p > p_best) {
            p_best = p;
            t_best = t;
        }
    }
    if (p_best < 0.5)
        throw IntegratorError("no a->d transfer peak near the dressed-state estimate");
    std::uintmax_t iters = 200;
    const auto peak = boost::math::tools::brent_find_minima([&](double t) { return -pd(t); },
                                                             t_best - dt, t_best + dt, 52, iters);
    LadderOscillation out;
    out.pi_time_s = peak.first;
    out.peak_transfer = -peak.second;
    out.leakage = std::norm(amp(out.pi_time_s, 1)) + std::norm(amp(out.pi_time_s, 2));
    return out;
}

} // namespace ybqc
