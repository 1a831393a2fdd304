#pragma once

// Constructive recovery of beamformers from relaxed covariance solutions:
// rank-one reconstruction, folding the radar covariance into the information
// covariances, EVD radar beamformers and root-based spectral factorization of
// ULA beampatterns.

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "isac/model.hpp"

namespace isac {

// ---------------------------------------------------------------------------
// Rank diagnostics

struct RankReport {
    RVec eigenvalues;  // descending
    int rank = 0;
    double threshold = 0.0;
};

/// Number of eigenvalues above threshold * lambda_max.
inline RankReport effective_rank(const CMat& x, double threshold = 1e-6) {
    const CMat h = hermitian_part(x);
    RVec ev = hermitian_eigenvalues(h).reverse();
    RankReport rep;
    rep.threshold = threshold;
    rep.eigenvalues = ev;
    if (ev.size() == 0 || !(ev(0) > 0.0)) return rep;
    for (Eigen::Index i = 0; i < ev.size(); ++i)
        if (ev(i) > threshold * ev(0)) ++rep.rank;
    return rep;
}

/// Sets the global phase so that the first nonzero entry is real and positive.
inline CVec canonical_phase(CVec v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        const double mag = std::abs(v(i));
        if (mag > 0.0) {
            v *= std::conj(v(i)) / mag;
            v(i) = cd(v(i).real(), 0.0);
            break;
        }
    }
    return v;
}

// ---------------------------------------------------------------------------
// Rank-one reconstruction

namespace detail {

inline constexpr double kReconPsdTol = 1e-7;
inline constexpr double kReconGainTol = 1e-9;

}  // namespace detail

/// t_k = (h_k^H T_k h_k)^{-1/2} T_k h_k,  R_d = sum T_k + R_d - sum t_k t_k^H.
///
/// The aggregate covariance, every beampattern value, the total power and
/// h_k^H t_k t_k^H h_k are preserved; Type-II interference can only shrink.
/// Users with a zero threshold and h^H T h = 0 get a zero beamformer.
inline BeamformingSolution rank_one_reconstruct(const CovarianceSolution& cov, const std::vector<UserChannel>& channels) {
    const int k_users = cov.num_users();
    if (static_cast<int>(channels.size()) != k_users)
        throw ContractError("rank_one_reconstruct: channel count does not match user count");
    if (k_users == 0 && cov.radar_covariance.size() == 0)
        throw ContractError("rank_one_reconstruct: empty solution");
    const Eigen::Index n = k_users ? cov.info_covariances[0].rows() : cov.radar_covariance.rows();

    BeamformingSolution out;
    out.alpha = cov.alpha;
    out.min_gain = cov.min_gain;
    out.objective = cov.objective;
    CMat aggregate = cov.radar_covariance.size() ? hermitian_part(cov.radar_covariance) : CMat::Zero(n, n);
    CMat rank_one_sum = CMat::Zero(n, n);
    for (int k = 0; k < k_users; ++k) {
        const CMat t = hermitian_part(cov.info_covariances[k]);
        if (t.rows() != n) throw ContractError("rank_one_reconstruct: covariance size mismatch");
        channels[k].validate(static_cast<int>(n));
        aggregate += t;
        const CVec& h = channels[k].h;
        const double q = quad_form(h, t);
        CVec tk = CVec::Zero(n);
        if (q > 0.0) {
            tk = t * h / std::sqrt(q);
            const double back = std::norm(h.dot(tk));
            if (std::abs(back - q) > detail::kReconGainTol * q)
                throw ReconstructionError("rank_one_reconstruct: gain not preserved for user " + std::to_string(k));
        } else if (channels[k].gamma_min > 0.0) {
            throw ReconstructionError("rank_one_reconstruct: h^H T h <= 0 for user " + std::to_string(k) +
                                      " with a positive SINR target (source solution infeasible)");
        }
        rank_one_sum += tk * tk.adjoint();
        out.info_beamformers.push_back(std::move(tk));
    }
    CMat r = aggregate - rank_one_sum;
    r = (r + r.adjoint()) * 0.5;
    const double scale = std::max(real_trace(aggregate), std::numeric_limits<double>::min());
    const double lmin = min_eigenvalue(r);
    if (lmin < -detail::kReconPsdTol * scale) {
        std::ostringstream msg;
        msg << "rank_one_reconstruct: residual radar covariance is indefinite (lambda_min " << lmin << ")";
        throw ReconstructionError(msg.str());
    }
    out.radar_covariance = std::move(r);
    return out;
}

// ---------------------------------------------------------------------------
// Radar-to-information merging

/// T_k <- T_k + beta_k R_d, R_d <- 0. beta must be nonnegative and sum to one.
inline CovarianceSolution merge_radar_into_info(const CovarianceSolution& cov, const std::vector<double>& beta) {
    const int k_users = cov.num_users();
    if (k_users == 0) throw ContractError("merge_radar_into_info: no information covariances to merge into");
    if (static_cast<int>(beta.size()) != k_users) throw ContractError("merge_radar_into_info: need one weight per user");
    double sum = 0.0;
    for (double b : beta) {
        if (!(b >= 0.0)) throw ContractError("merge_radar_into_info: weights must be nonnegative");
        sum += b;
    }
    if (std::abs(sum - 1.0) > 1e-12) throw ContractError("merge_radar_into_info: weights must sum to one");
    const Eigen::Index n = cov.info_covariances[0].rows();
    const CMat rd = cov.radar_covariance.size() ? cov.radar_covariance : CMat::Zero(n, n);
    CovarianceSolution out = cov;
    for (int k = 0; k < k_users; ++k) out.info_covariances[k] = cov.info_covariances[k] + beta[k] * rd;
    out.radar_covariance = CMat::Zero(n, n);
    return out;
}

/// Uniform weights 1/K.
inline CovarianceSolution merge_radar_into_info(const CovarianceSolution& cov) {
    const int k_users = cov.num_users();
    if (k_users == 0) throw ContractError("merge_radar_into_info: no information covariances to merge into");
    return merge_radar_into_info(cov, std::vector<double>(static_cast<std::size_t>(k_users), 1.0 / k_users));
}

// ---------------------------------------------------------------------------
// Radar beamformers

/// w_i = sqrt(lambda_i) u_i for eigenvalues above rel_threshold * lambda_max, so sum w w^H = R_d.
inline std::vector<CVec> radar_beamformers(const CMat& rd, double rel_threshold = 1e-12) {
    std::vector<CVec> out;
    if (rd.size() == 0) return out;
    const CMat r = hermitian_part(rd);
    Eigen::SelfAdjointEigenSolver<CMat> es(r);
    const RVec& ev = es.eigenvalues();
    const double lmax = ev(ev.size() - 1);
    if (!(lmax > 0.0)) return out;
    if (ev(0) < -1e-9 * lmax) throw ContractError("radar_beamformers: covariance is not PSD");
    for (Eigen::Index i = ev.size() - 1; i >= 0; --i) {
        if (!(ev(i) > rel_threshold * lmax)) break;
        out.push_back(canonical_phase(std::sqrt(ev(i)) * es.eigenvectors().col(i)));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Spectral factorization of ULA beampatterns

struct SpectralFactorOptions {
    /// Partner acceptance for root refinement: |z_i conj(z_j) - 1| < pair_tol (1 + |z_i|^2).
    double pair_tol = 1e-6;
    /// Roots this close to the unit circle are boundary roots (even multiplicity).
    double boundary_tol = 1e-7;
    /// Trailing lags below deflation_tol * r_0 are dropped.
    double deflation_tol = 1e-12;
    /// Indefiniteness check: beampattern may dip to -probe_tol * tr(T) on the probe grid.
    double probe_tol = 1e-9;
    /// Postcondition: beampattern residual at most residual_tol * tr(T) on the probe grid.
    double residual_tol = 1e-6;
};

namespace detail {

/// r_d = sum_k T(k + d, k), d = 0..N-1.
inline CVec diagonal_autocorrelation(const CMat& t) {
    const Eigen::Index n = t.rows();
    CVec r = CVec::Zero(n);
    for (Eigen::Index d = 0; d < n; ++d)
        for (Eigen::Index k = 0; k + d < n; ++k) r(d) += t(k + d, k);
    return r;
}

/// Roots of sum_k coeffs[k] z^k via companion-matrix eigenvalues.
inline std::vector<cd> polynomial_roots(const CVec& coeffs) {
    const Eigen::Index deg = coeffs.size() - 1;
    std::vector<cd> roots;
    if (deg < 1) return roots;
    CMat comp = CMat::Zero(deg, deg);
    for (Eigen::Index i = 1; i < deg; ++i) comp(i, i - 1) = 1.0;
    for (Eigen::Index i = 0; i < deg; ++i) comp(i, deg - 1) = -coeffs(i) / coeffs(deg);
    Eigen::ComplexEigenSolver<CMat> es(comp, false);
    if (es.info() != Eigen::Success) throw NumericalError("spectral factorization: root finding did not converge");
    for (Eigen::Index i = 0; i < deg; ++i) roots.push_back(es.eigenvalues()(i));
    return roots;
}

/// Newton refinement of an approximate simple root of sum_k coeffs[k] z^k.
inline cd polish_root(const CVec& coeffs, cd z, int max_steps = 8) {
    for (int step = 0; step < max_steps; ++step) {
        cd p = 0.0, dp = 0.0;
        for (Eigen::Index k = coeffs.size() - 1; k >= 0; --k) {
            dp = dp * z + p;
            p = p * z + coeffs(k);
        }
        if (dp == cd(0.0, 0.0)) break;
        const cd dz = p / dp;
        // Stop on convergence, or when Newton leaves the basin (multiple roots).
        if (!(std::abs(dz) < 0.1 * (1.0 + std::abs(z)))) break;
        z -= dz;
        if (std::abs(dz) <= 4.0 * std::numeric_limits<double>::epsilon() * std::abs(z)) break;
    }
    return z;
}

/// Ascending coefficients of prod (z - r_i).
inline CVec expand_roots(const std::vector<cd>& roots) {
    CVec c = CVec::Zero(static_cast<Eigen::Index>(roots.size()) + 1);
    c(0) = 1.0;
    Eigen::Index deg = 0;
    for (const cd& r : roots) {
        ++deg;
        for (Eigen::Index k = deg; k >= 1; --k) c(k) = c(k - 1) - r * c(k);
        c(0) = -r * c(0);
    }
    return c;
}

}  // namespace detail

/// w with |v(phi)^H w|^2 = v(phi)^H T v(phi) for all phi and ||w||^2 = tr(T),
/// where v(phi)_n = exp(j n phi). The minimum-phase factor is returned, with
/// w_0 real and nonnegative.
inline CVec ula_spectral_factorize(const CMat& t_in, const SpectralFactorOptions& opt = {}) {
    const CMat t = hermitian_part(t_in);
    const Eigen::Index n = t.rows();
    if (n == 0) throw ContractError("ula_spectral_factorize: empty matrix");
    const double tr = real_trace(t);
    if (!(tr >= 0.0)) throw FactorizationError("ula_spectral_factorize: negative trace");
    if (tr == 0.0) return CVec::Zero(n);

    // Probe the beampattern for indefiniteness.
    const int probes = static_cast<int>(std::max<Eigen::Index>(64, 16 * n));
    for (int i = 0; i < probes; ++i) {
        const double phi = -kPi + 2.0 * kPi * i / probes;
        const double p = quad_form(phase_vector(static_cast<int>(n), phi), t);
        if (p < -opt.probe_tol * tr) {
            std::ostringstream msg;
            msg << "ula_spectral_factorize: negative beampattern " << p << " at phi=" << phi << " (input is not PSD)";
            throw FactorizationError(msg.str());
        }
    }

    const CVec r = detail::diagonal_autocorrelation(t);
    const double r0 = r(0).real();
    Eigen::Index lags = n - 1;
    while (lags > 0 && std::abs(r(lags)) < opt.deflation_tol * r0) --lags;

    CVec w = CVec::Zero(n);
    if (lags == 0) {
        w(0) = std::sqrt(r0);
        return w;
    }

    // Q(z) = z^L P(z), ascending coefficients (conj r_L, .., r_0, .., r_L).
    CVec q(2 * lags + 1);
    for (Eigen::Index k = 0; k <= 2 * lags; ++k) {
        const Eigen::Index d = k - lags;
        q(k) = d >= 0 ? r(d) : std::conj(r(-d));
    }
    std::vector<cd> roots = detail::polynomial_roots(q);

    // Minimum-phase selection: the L roots of smallest modulus. Unit-circle
    // roots have even multiplicity and split across the circle numerically.
    std::sort(roots.begin(), roots.end(), [](cd x, cd y) { return std::abs(x) < std::abs(y); });
    std::vector<cd> chosen(roots.begin(), roots.begin() + lags);
    for (cd& root : chosen) root = detail::polish_root(q, root);
    std::vector<cd> outer(roots.begin() + lags, roots.end());
    std::vector<bool> used(outer.size(), false);
    for (cd& root : chosen) {
        // Average with the reflection of the conjugate-reciprocal partner when one is found.
        double best = std::numeric_limits<double>::infinity();
        std::size_t bj = 0;
        for (std::size_t j = 0; j < outer.size(); ++j) {
            if (used[j]) continue;
            const double err = std::abs(root * std::conj(outer[j]) - 1.0) / (1.0 + std::norm(root));
            if (err < best) {
                best = err;
                bj = j;
            }
        }
        if (best < opt.pair_tol) {
            used[bj] = true;
            root = 0.5 * (root + 1.0 / std::conj(detail::polish_root(q, outer[bj])));
        }
        if (std::abs(std::abs(root) - 1.0) < opt.boundary_tol) root /= std::abs(root);
    }

    const CVec monic = detail::expand_roots(chosen);
    for (Eigen::Index k = 0; k <= lags; ++k) w(k) = monic(k);
    w *= std::sqrt(r0 / w.squaredNorm());

    // Postcondition: the factor reproduces the beampattern on the probe grid.
    double mismatch = 0.0;
    for (int i = 0; i < probes; ++i) {
        const CVec v = phase_vector(static_cast<int>(n), -kPi + 2.0 * kPi * i / probes);
        mismatch = std::max(mismatch, std::abs(std::norm(v.dot(w)) - quad_form(v, t)));
    }
    if (mismatch > opt.residual_tol * tr) {
        std::ostringstream msg;
        msg << "ula_spectral_factorize: beampattern residual " << mismatch / tr << " tr(T) exceeds tolerance";
        throw NumericalError(msg.str());
    }
    return canonical_phase(w);
}

/// Rank-one information beamformers for a no-radar covariance solution via
/// spectral factorization of each T_k. Preserves every ULA beampattern value
/// and, for line-of-sight users, every SINR.
inline BeamformingSolution spectral_beamformers(const CovarianceSolution& cov, const SpectralFactorOptions& opt = {}) {
    BeamformingSolution out;
    for (const auto& t : cov.info_covariances) out.info_beamformers.push_back(ula_spectral_factorize(t, opt));
    const Eigen::Index n = cov.num_users() ? cov.info_covariances[0].rows() : cov.radar_covariance.rows();
    out.radar_covariance = CMat::Zero(n, n);
    out.alpha = cov.alpha;
    out.min_gain = cov.min_gain;
    out.objective = cov.objective;
    return out;
}

}  // namespace isac
