#pragma once

// End-to-end design: build -> solve -> extract -> recover beamformers -> verify.

#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "isac/conic.hpp"
#include "isac/model.hpp"
#include "isac/recover.hpp"
#include "isac/solver.hpp"
#include "isac/verify.hpp"

namespace isac {

enum class Recovery { None, RankOne, Spectral, Eigen };

inline const char* to_string(Recovery r) {
    switch (r) {
        case Recovery::None: return "none";
        case Recovery::RankOne: return "rank-one";
        case Recovery::Spectral: return "spectral";
        case Recovery::Eigen: return "eigen";
    }
    return "?";
}

struct PipelineOptions {
    solver::Settings settings;
    /// Channels are scaled steering vectors; no-radar designs then use spectral factorization.
    bool los_channels = false;
    double feasibility_tol = 1e-6;
    /// Relative objective gap below which the relaxation counts as tight.
    double tight_rel_tol = 1e-5;
};

struct DesignOutcome {
    conic::Criterion criterion = conic::Criterion::Matching;
    conic::Receiver receiver = conic::Receiver::TypeII;
    solver::Result solve;
    std::optional<CovarianceSolution> relaxed;
    std::optional<BeamformingSolution> recovered;
    Recovery recovery = Recovery::None;
    double sdr_objective = std::numeric_limits<double>::quiet_NaN();
    double recovered_objective = std::numeric_limits<double>::quiet_NaN();
    double objective_gap = std::numeric_limits<double>::quiet_NaN();  // relative
    std::vector<int> relaxed_ranks;
    verify::FeasibilityReport feasibility;
    bool tight = false;
    double seconds = 0.0;  // whole pipeline

    bool solved() const { return solve.solved() && relaxed.has_value(); }
    bool infeasible() const { return solve.status == solver::Status::PrimalInfeasible; }
};

/// Squared matching error at the solution's alpha, or the minimum weighted gain.
inline double design_objective(const conic::ProblemSpec& spec, const CovarianceSolution& cov) {
    if (spec.criterion == conic::Criterion::Matching) return matching_error(spec.ula, cov, *spec.desired);
    return min_weighted_gain(spec.ula, aggregate_covariance(cov), *spec.sensing);
}

inline double design_objective(const conic::ProblemSpec& spec, const BeamformingSolution& sol) {
    return design_objective(spec, to_covariance(sol));
}

inline double relative_gap(double a, double b) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), std::numeric_limits<double>::min()});
}

/// Leading eigenvector sqrt(lambda_1) u_1 of each T_k; exact when every T_k has rank one.
inline BeamformingSolution eigen_beamformers(const CovarianceSolution& cov) {
    BeamformingSolution out;
    for (const auto& t : cov.info_covariances) {
        Eigen::SelfAdjointEigenSolver<CMat> es(hermitian_part(t));
        const Eigen::Index last = t.rows() - 1;
        const double lam = std::max(0.0, es.eigenvalues()(last));
        out.info_beamformers.push_back(canonical_phase(std::sqrt(lam) * es.eigenvectors().col(last)));
    }
    const Eigen::Index n = cov.num_users() ? cov.info_covariances[0].rows() : cov.radar_covariance.rows();
    out.radar_covariance = cov.radar_covariance.size() ? cov.radar_covariance : CMat::Zero(n, n);
    out.alpha = cov.alpha;
    out.min_gain = cov.min_gain;
    out.objective = cov.objective;
    return out;
}

/// Rank-one beamformers for a relaxed solution of `spec`.
///
/// Type-I/II: rank-one reconstruction (the residual goes to R_d). No radar:
/// spectral factorization on LOS channels, leading eigenvectors otherwise.
/// Radar only: R_d as is.
inline std::pair<BeamformingSolution, Recovery> recover(const conic::ProblemSpec& spec, const CovarianceSolution& cov,
                                                        bool los_channels) {
    switch (spec.receiver) {
        case conic::Receiver::TypeI:
        case conic::Receiver::TypeII: return {rank_one_reconstruct(cov, spec.channels), Recovery::RankOne};
        case conic::Receiver::NoRadar:
            if (los_channels) return {spectral_beamformers(cov), Recovery::Spectral};
            return {eigen_beamformers(cov), Recovery::Eigen};
        case conic::Receiver::RadarOnly: break;
    }
    BeamformingSolution out;
    out.radar_covariance = cov.radar_covariance;
    out.alpha = cov.alpha;
    out.min_gain = cov.min_gain;
    out.objective = cov.objective;
    return {out, Recovery::None};
}

inline DesignOutcome run_design(const conic::ProblemSpec& spec, const PipelineOptions& opt = {}) {
    const auto t0 = std::chrono::steady_clock::now();
    DesignOutcome out;
    out.criterion = spec.criterion;
    out.receiver = spec.receiver;
    const conic::ConicProgram prog = conic::build(spec);
    out.solve = solver::solve(prog, opt.settings);
    if (out.solve.solved()) {
        CovarianceSolution cov = conic::extract(prog, out.solve.x);
        out.sdr_objective = cov.objective;
        for (const auto& t : cov.info_covariances) out.relaxed_ranks.push_back(effective_rank(t).rank);
        auto [sol, how] = recover(spec, cov, opt.los_channels);
        out.recovery = how;
        out.recovered_objective = design_objective(spec, sol);
        out.objective_gap = relative_gap(out.recovered_objective, out.sdr_objective);
        out.feasibility = verify::check_feasibility(sol, spec, opt.feasibility_tol);
        out.tight = out.feasibility.feasible && out.objective_gap <= opt.tight_rel_tol;
        out.relaxed = std::move(cov);
        out.recovered = std::move(sol);
    }
    out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

}  // namespace isac
