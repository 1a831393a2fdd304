#pragma once

// Domain types and closed-form evaluators: ULA steering vectors, transmit
// beampattern gains, per-user SINR for both receiver types, beampattern
// matching error and total transmit power.
//
// Units: angles in radians, powers in watts, SINR thresholds linear. All
// transmitted symbols (information and radar) are taken as unit variance.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "isac/errors.hpp"
#include "isac/linalg.hpp"

namespace isac {

class UlaConfig {
public:
    explicit UlaConfig(int num_antennas, double spacing_ratio = 0.5)
        : num_antennas_(num_antennas), spacing_ratio_(spacing_ratio) {
        if (num_antennas <= 1) throw ContractError("UlaConfig: need more than one antenna");
        if (!(spacing_ratio > 0.0)) throw ContractError("UlaConfig: spacing ratio must be positive");
    }

    int num_antennas() const { return num_antennas_; }
    /// Antenna spacing over carrier wavelength, d / lambda.
    double spacing_ratio() const { return spacing_ratio_; }

private:
    int num_antennas_;
    double spacing_ratio_;
};

enum class PowerMode { Equality, Inequality };

struct SystemConfig {
    double total_power = 0.1;
    PowerMode power_mode = PowerMode::Equality;

    void validate() const {
        if (!(total_power > 0.0)) throw ContractError("SystemConfig: total power must be positive");
    }
};

struct UserChannel {
    CVec h;
    double sigma2 = 1.0;
    double gamma_min = 0.0;

    void validate(int n) const {
        if (h.size() != n) throw ContractError("UserChannel: channel length does not match array");
        if (!(sigma2 > 0.0)) throw ContractError("UserChannel: noise power must be positive");
        if (!(gamma_min >= 0.0)) throw ContractError("UserChannel: SINR threshold must be >= 0");
        if (h.squaredNorm() == 0.0) throw ContractError("UserChannel: all-zero channel");
    }
};

/// Desired beampattern sampled on an increasing angle grid.
struct DesiredBeampattern {
    std::vector<double> grid_angles;
    std::vector<double> values;

    std::size_t size() const { return grid_angles.size(); }

    void validate() const {
        if (grid_angles.empty() || grid_angles.size() != values.size())
            throw ContractError("DesiredBeampattern: grid and values must be non-empty and equal length");
        for (std::size_t m = 0; m < grid_angles.size(); ++m) {
            if (std::abs(grid_angles[m]) > kPi / 2 + 1e-12)
                throw ContractError("DesiredBeampattern: grid angle outside [-pi/2, pi/2]");
            if (m > 0 && !(grid_angles[m] > grid_angles[m - 1]))
                throw ContractError("DesiredBeampattern: grid must be strictly increasing");
            if (!(values[m] >= 0.0)) throw ContractError("DesiredBeampattern: negative desired gain");
        }
    }
};

/// Angles of interest for max-min gain design, each with a positive weight.
struct SensingAngleSet {
    std::vector<double> angles;
    std::vector<double> weights;

    std::size_t size() const { return angles.size(); }

    void validate() const {
        if (angles.empty() || angles.size() != weights.size())
            throw ContractError("SensingAngleSet: need at least one angle and one weight per angle");
        for (std::size_t q = 0; q < angles.size(); ++q) {
            if (std::abs(angles[q]) > kPi / 2 + 1e-12)
                throw ContractError("SensingAngleSet: angle outside [-pi/2, pi/2]");
            if (!(weights[q] > 0.0)) throw ContractError("SensingAngleSet: weights must be positive");
        }
    }
};

/// Beamformer-domain solution: x = sum_k t_k s_k + s_0 with E[s_0 s_0^H] = R_d.
struct BeamformingSolution {
    std::vector<CVec> info_beamformers;
    CMat radar_covariance;
    double alpha = 0.0;
    double min_gain = 0.0;
    double objective = 0.0;

    int num_users() const { return static_cast<int>(info_beamformers.size()); }
};

/// Covariance-domain solution: T_k = t_k t_k^H relaxed to any PSD matrix.
struct CovarianceSolution {
    std::vector<CMat> info_covariances;
    CMat radar_covariance;
    double alpha = 0.0;
    double min_gain = 0.0;
    double objective = 0.0;

    int num_users() const { return static_cast<int>(info_covariances.size()); }
};

enum class ReceiverType { TypeI, TypeII };

// ---------------------------------------------------------------------------

/// a(theta)_n = exp(j 2 pi (d/lambda) n sin(theta)), n = 0..N-1.
inline CVec steering_vector(const UlaConfig& ula, double theta) {
    if (!(std::abs(theta) <= kPi / 2 + 1e-12)) {
        throw DomainError("steering_vector: angle must lie in [-pi/2, pi/2]");
    }
    const int n = ula.num_antennas();
    const double phase = 2.0 * kPi * ula.spacing_ratio() * std::sin(theta);
    CVec a(n);
    a(0) = cd(1.0, 0.0);
    for (int k = 1; k < n; ++k) a(k) = std::polar(1.0, phase * k);
    return a;
}

/// ULA phase vector v(phi)_n = exp(j n phi); steering_vector(theta) == phase_vector(2 pi (d/lambda) sin theta).
inline CVec phase_vector(int n, double phi) {
    CVec v(n);
    for (int k = 0; k < n; ++k) v(k) = std::polar(1.0, phi * k);
    return v;
}

/// a(theta)^H X a(theta).
inline double beampattern_gain(const UlaConfig& ula, const CMat& x, double theta) {
    if (x.rows() != ula.num_antennas() || x.cols() != ula.num_antennas())
        throw ContractError("beampattern_gain: matrix size does not match array");
    const double scale = x.norm();
    if ((x - x.adjoint()).norm() > kHermitianTol * scale)
        throw ContractError("beampattern_gain: matrix is not Hermitian");
    const CVec a = steering_vector(ula, theta);
    const cd g = (a.adjoint() * x * a)(0, 0);
    if (std::abs(g.imag()) > kHermitianTol * std::max(scale, 1e-300) * ula.num_antennas())
        throw ContractError("beampattern_gain: non-negligible imaginary residue");
    return g.real();
}

/// sum_k T_k + R_d. An empty R_d means no radar signal.
inline CMat aggregate_covariance(const CovarianceSolution& cov) {
    CMat total = cov.radar_covariance;
    for (const auto& t : cov.info_covariances) {
        if (total.size() == 0) total = CMat::Zero(t.rows(), t.cols());
        total += t;
    }
    return total;
}

inline CMat aggregate_covariance(const BeamformingSolution& sol) {
    CMat total = sol.radar_covariance;
    for (const auto& t : sol.info_beamformers) {
        if (total.size() == 0) total = CMat::Zero(t.size(), t.size());
        total += t * t.adjoint();
    }
    return total;
}

inline CovarianceSolution to_covariance(const BeamformingSolution& sol) {
    CovarianceSolution cov;
    for (const auto& t : sol.info_beamformers) cov.info_covariances.push_back(t * t.adjoint());
    cov.radar_covariance = sol.radar_covariance;
    cov.alpha = sol.alpha;
    cov.min_gain = sol.min_gain;
    cov.objective = sol.objective;
    return cov;
}

/// sum_m |alpha P~(theta_m) - a^H(theta_m) (sum_k T_k + R_d) a(theta_m)|^2.
inline double matching_error(const UlaConfig& ula, const CovarianceSolution& cov, const DesiredBeampattern& desired) {
    const CMat total = aggregate_covariance(cov);
    if (total.rows() != ula.num_antennas()) throw ContractError("matching_error: dimension mismatch");
    double err = 0.0;
    for (std::size_t m = 0; m < desired.size(); ++m) {
        const double r = cov.alpha * desired.values[m] - beampattern_gain(ula, total, desired.grid_angles[m]);
        err += r * r;
    }
    return err;
}

/// Least-squares optimal scaling alpha* = sum P~_m g_m / sum P~_m^2 for the given gains.
inline double optimal_alpha(const DesiredBeampattern& desired, const std::vector<double>& gains) {
    double num = 0.0;
    double den = 0.0;
    for (std::size_t m = 0; m < desired.size(); ++m) {
        num += desired.values[m] * gains[m];
        den += desired.values[m] * desired.values[m];
    }
    return den > 0.0 ? num / den : 0.0;
}

/// Minimum over the set of a^H X a / eta_theta.
inline double min_weighted_gain(const UlaConfig& ula, const CMat& x, const SensingAngleSet& set) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t q = 0; q < set.size(); ++q)
        best = std::min(best, beampattern_gain(ula, x, set.angles[q]) / set.weights[q]);
    return best;
}

namespace detail {

inline void check_user_index(int i, int k) {
    if (i < 0 || i >= k) throw ContractError("sinr: user index out of range");
}

inline double sinr_from_powers(ReceiverType rx, double signal, double interference, double radar, double noise) {
    const double denom = interference + (rx == ReceiverType::TypeI ? radar : 0.0) + noise;
    return signal / denom;
}

}  // namespace detail

/// SINR of user i. Type-I counts h^H R_d h as interference; Type-II has cancelled it.
inline double sinr(ReceiverType rx, const std::vector<UserChannel>& channels, const BeamformingSolution& sol, int i) {
    detail::check_user_index(i, static_cast<int>(channels.size()));
    if (sol.num_users() != static_cast<int>(channels.size()))
        throw ContractError("sinr: beamformer count does not match user count");
    const CVec& h = channels[i].h;
    double interference = 0.0;
    for (int k = 0; k < sol.num_users(); ++k) {
        if (k == i) continue;
        interference += std::norm(h.dot(sol.info_beamformers[k]));
    }
    const double signal = std::norm(h.dot(sol.info_beamformers[i]));
    const double radar = sol.radar_covariance.size() ? quad_form(h, sol.radar_covariance) : 0.0;
    return detail::sinr_from_powers(rx, signal, interference, radar, channels[i].sigma2);
}

/// Covariance form: |h^H t_k|^2 is replaced by tr(h h^H T_k).
inline double sinr(ReceiverType rx, const std::vector<UserChannel>& channels, const CovarianceSolution& cov, int i) {
    detail::check_user_index(i, static_cast<int>(channels.size()));
    if (cov.num_users() != static_cast<int>(channels.size()))
        throw ContractError("sinr: covariance count does not match user count");
    const CVec& h = channels[i].h;
    double interference = 0.0;
    for (int k = 0; k < cov.num_users(); ++k) {
        if (k == i) continue;
        interference += quad_form(h, cov.info_covariances[k]);
    }
    const double signal = quad_form(h, cov.info_covariances[i]);
    const double radar = cov.radar_covariance.size() ? quad_form(h, cov.radar_covariance) : 0.0;
    return detail::sinr_from_powers(rx, signal, interference, radar, channels[i].sigma2);
}

/// sum_k ||t_k||^2 + tr(R_d).
inline double total_power(const BeamformingSolution& sol) {
    double p = sol.radar_covariance.size() ? real_trace(sol.radar_covariance) : 0.0;
    for (const auto& t : sol.info_beamformers) p += t.squaredNorm();
    return p;
}

inline double total_power(const CovarianceSolution& cov) {
    double p = cov.radar_covariance.size() ? real_trace(cov.radar_covariance) : 0.0;
    for (const auto& t : cov.info_covariances) p += real_trace(t);
    return p;
}

// ---------------------------------------------------------------------------
// Unit conversions (boundaries only).

inline double dbm_to_watts(double dbm) { return std::pow(10.0, dbm / 10.0) * 1e-3; }
inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double deg_to_rad(double deg) { return deg * kPi / 180.0; }
inline double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

// ---------------------------------------------------------------------------
// Desired beampattern of several flat main beams on a uniform grid.

/// Uniform grid of `points` angles spanning [-pi/2, pi/2].
inline std::vector<double> uniform_angle_grid(int points) {
    if (points < 2) throw ContractError("uniform_angle_grid: need at least two points");
    std::vector<double> grid(static_cast<std::size_t>(points));
    for (int m = 0; m < points; ++m) grid[m] = -kPi / 2 + kPi * m / (points - 1);
    return grid;
}

/// P~(theta) = 1 within beam_width/2 of any center, 0 elsewhere.
inline DesiredBeampattern multibeam_desired_pattern(const std::vector<double>& centers, double beam_width,
                                                     int grid_points) {
    if (!(beam_width > 0.0)) throw ContractError("multibeam_desired_pattern: beam width must be positive");
    DesiredBeampattern d;
    d.grid_angles = uniform_angle_grid(grid_points);
    d.values.assign(d.grid_angles.size(), 0.0);
    for (std::size_t m = 0; m < d.grid_angles.size(); ++m) {
        for (double c : centers) {
            if (std::abs(d.grid_angles[m] - c) <= beam_width / 2 + 1e-12) d.values[m] = 1.0;
        }
    }
    d.validate();
    return d;
}

/// Angles of the desired pattern with a non-zero gain, all with weight `weight`.
inline SensingAngleSet sensing_set_from_desired(const DesiredBeampattern& desired, double weight = 1.0) {
    SensingAngleSet set;
    for (std::size_t m = 0; m < desired.size(); ++m) {
        if (desired.values[m] > 0.0) {
            set.angles.push_back(desired.grid_angles[m]);
            set.weights.push_back(weight);
        }
    }
    set.validate();
    return set;
}

}  // namespace isac
