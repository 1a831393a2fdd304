#pragma once

// Feasibility certification of designs and the ordering/equality relations
// between the receiver variants.

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "isac/conic.hpp"
#include "isac/model.hpp"

namespace isac::verify {

using conic::Criterion;
using conic::ProblemSpec;
using conic::Receiver;

// ---------------------------------------------------------------------------
// Feasibility

struct ConstraintCheck {
    std::string name;
    /// Signed normalized margin; negative means the constraint is violated.
    double margin = 0.0;
    /// max(0, -margin), or |margin| for equality constraints.
    double violation = 0.0;
    bool passed = true;
};

struct FeasibilityReport {
    std::vector<ConstraintCheck> checks;
    double tol = 0.0;
    double max_violation = 0.0;
    bool feasible = true;

    const ConstraintCheck* worst() const {
        const ConstraintCheck* w = nullptr;
        for (const auto& c : checks)
            if (!w || c.violation > w->violation) w = &c;
        return w;
    }

    std::string summary() const {
        std::ostringstream os;
        os << (feasible ? "feasible" : "infeasible") << " (max violation " << max_violation << ", tol " << tol << ")";
        for (const auto& c : checks)
            if (!c.passed) os << "\n  " << c.name << ": margin " << c.margin;
        return os.str();
    }
};

namespace detail {

inline void add_check(FeasibilityReport& rep, std::string name, double margin, bool equality = false) {
    ConstraintCheck c;
    c.name = std::move(name);
    c.margin = margin;
    c.violation = equality ? std::abs(margin) : std::max(0.0, -margin);
    c.passed = c.violation <= rep.tol;
    rep.max_violation = std::max(rep.max_violation, c.violation);
    rep.feasible = rep.feasible && c.passed;
    rep.checks.push_back(std::move(c));
}

inline ReceiverType receiver_type(Receiver r) {
    return r == Receiver::TypeII ? ReceiverType::TypeII : ReceiverType::TypeI;
}

}  // namespace detail

/// Per-constraint residuals of a covariance design against the problem it claims to solve.
///
/// Margins are normalized: SINR by Gamma_i, power and eigenvalues by P0, sensing
/// gains by eta t. The objective variables (alpha, t) are taken from the solution.
inline FeasibilityReport check_feasibility(const CovarianceSolution& cov, const ProblemSpec& spec, double tol = 1e-6) {
    spec.validate();
    FeasibilityReport rep;
    rep.tol = tol;
    const int n = spec.ula.num_antennas();
    const int k_users = spec.num_users();
    const double p0 = spec.system.total_power;

    if (cov.num_users() != k_users) {
        detail::add_check(rep, "structure:user_count", -1.0);
        return rep;
    }
    for (int k = 0; k < k_users; ++k) {
        if (cov.info_covariances[k].rows() != n || cov.info_covariances[k].cols() != n) {
            detail::add_check(rep, "structure:T[" + std::to_string(k) + "]", -1.0);
            return rep;
        }
    }
    const bool has_r = cov.radar_covariance.size() > 0;
    if (has_r && (cov.radar_covariance.rows() != n || cov.radar_covariance.cols() != n)) {
        detail::add_check(rep, "structure:R_d", -1.0);
        return rep;
    }

    const double power = total_power(cov);
    const double power_margin = (p0 - power) / p0;
    detail::add_check(rep, "power", power_margin, spec.system.power_mode == PowerMode::Equality);

    for (int k = 0; k < k_users; ++k)
        detail::add_check(rep, "psd:T[" + std::to_string(k) + "]", min_eigenvalue(cov.info_covariances[k]) / p0);
    if (has_r) {
        if (spec.has_radar()) {
            detail::add_check(rep, "psd:R_d", min_eigenvalue(cov.radar_covariance) / p0);
        } else {
            detail::add_check(rep, "radar:absent", -cov.radar_covariance.norm() / p0);
        }
    }

    const ReceiverType rx = detail::receiver_type(spec.receiver);
    for (int i = 0; i < k_users; ++i) {
        const double gamma = spec.channels[i].gamma_min;
        if (gamma == 0.0) continue;
        const double s = sinr(rx, spec.channels, cov, i);
        detail::add_check(rep, "sinr[" + std::to_string(i) + "]", s / gamma - 1.0);
    }

    if (spec.criterion == Criterion::MaxMin) {
        const CMat total = aggregate_covariance(cov);
        const auto& set = *spec.sensing;
        for (std::size_t q = 0; q < set.size(); ++q) {
            const double target = set.weights[q] * cov.min_gain;
            const double g = beampattern_gain(spec.ula, total, set.angles[q]);
            const double scale = std::max(std::abs(target), 1e-12 * p0);
            detail::add_check(rep, "gain[" + std::to_string(q) + "]", (g - target) / scale);
        }
    }
    return rep;
}

inline FeasibilityReport check_feasibility(const BeamformingSolution& sol, const ProblemSpec& spec, double tol = 1e-6) {
    return check_feasibility(to_covariance(sol), spec, tol);
}

// ---------------------------------------------------------------------------
// Ordering chains

/// Optimal values of the three communication designs on one channel realization.
/// An empty value marks an infeasible (or unsolved) design.
struct ChainInstance {
    std::string label;
    bool los = false;
    std::optional<double> matching_type1;
    std::optional<double> matching_type2;
    std::optional<double> matching_noradar;
    std::optional<double> maxmin_type1;
    std::optional<double> maxmin_type2;
    std::optional<double> maxmin_noradar;
    /// Free-form solution dump attached to violation messages.
    std::string details;
};

struct ChainOptions {
    double slack = 1e-6;      // ordering slack, times (1 + |value|)
    double los_rel_tol = 1e-5;
};

struct ChainReport {
    int instances = 0;
    int matching_checked = 0;
    int maxmin_checked = 0;
    int excluded = 0;  // realizations with at least one infeasible design
    int violations = 0;
    std::vector<std::string> messages;

    bool passed() const { return violations == 0; }
};

namespace detail {

inline bool ordered(double hi, double lo, double slack) { return hi >= lo - slack * (1.0 + std::abs(lo)); }

inline bool rel_equal(double a, double b, double tol) {
    return std::abs(a - b) <= tol * std::max({std::abs(a), std::abs(b), 1e-300});
}

inline void violation(ChainReport& rep, const ChainInstance& inst, const std::string& what) {
    ++rep.violations;
    std::string msg = inst.label + ": " + what;
    if (!inst.details.empty()) msg += "\n" + inst.details;
    rep.messages.push_back(std::move(msg));
}

inline std::string fmt3(const char* a, double x, const char* b, double y, const char* c, double z) {
    std::ostringstream os;
    os.precision(12);
    os << a << "=" << x << " " << b << "=" << y << " " << c << "=" << z;
    return os.str();
}

}  // namespace detail

/// Matching: f(NoRadar) >= f(TypeI) >= f(TypeII). MaxMin: t(TypeII) >= t(TypeI) >= t(NoRadar).
/// On LOS realizations additionally f(TypeI) = f(NoRadar) and t(TypeI) = t(NoRadar).
inline ChainReport check_chain(const std::vector<ChainInstance>& instances, const ChainOptions& opt = {}) {
    ChainReport rep;
    for (const auto& inst : instances) {
        ++rep.instances;
        bool excluded = false;
        if (inst.matching_type1 && inst.matching_type2 && inst.matching_noradar) {
            ++rep.matching_checked;
            const double f1 = *inst.matching_type1, f2 = *inst.matching_type2, f3 = *inst.matching_noradar;
            if (!detail::ordered(f3, f1, opt.slack) || !detail::ordered(f1, f2, opt.slack))
                detail::violation(rep, inst, "matching order broken: " + detail::fmt3("f_noradar", f3, "f_type1", f1, "f_type2", f2));
            if (inst.los && !detail::rel_equal(f1, f3, opt.los_rel_tol))
                detail::violation(rep, inst, "LOS matching equality broken: " + detail::fmt3("f_noradar", f3, "f_type1", f1, "f_type2", f2));
        } else if (inst.matching_type1 || inst.matching_type2 || inst.matching_noradar) {
            excluded = true;
        }
        if (inst.maxmin_type1 && inst.maxmin_type2 && inst.maxmin_noradar) {
            ++rep.maxmin_checked;
            const double t1 = *inst.maxmin_type1, t2 = *inst.maxmin_type2, t3 = *inst.maxmin_noradar;
            if (!detail::ordered(t2, t1, opt.slack) || !detail::ordered(t1, t3, opt.slack))
                detail::violation(rep, inst, "max-min order broken: " + detail::fmt3("t_type2", t2, "t_type1", t1, "t_noradar", t3));
            if (inst.los && !detail::rel_equal(t1, t3, opt.los_rel_tol))
                detail::violation(rep, inst, "LOS max-min equality broken: " + detail::fmt3("t_type2", t2, "t_type1", t1, "t_noradar", t3));
        } else if (inst.maxmin_type1 || inst.maxmin_type2 || inst.maxmin_noradar) {
            excluded = true;
        }
        if (!inst.matching_type1 && !inst.matching_type2 && !inst.matching_noradar && !inst.maxmin_type1 &&
            !inst.maxmin_type2 && !inst.maxmin_noradar)
            excluded = true;
        if (excluded) ++rep.excluded;
    }
    return rep;
}

/// Feasible-set nesting in Gamma: matching optima nondecreasing, max-min optima
/// nonincreasing. Values must be ordered by increasing Gamma; empty entries
/// (infeasible points) are skipped.
inline ChainReport check_gamma_monotone(Criterion criterion, const std::vector<std::optional<double>>& values,
                                        const std::string& label = "", double slack = 1e-6) {
    ChainReport rep;
    rep.instances = 1;
    std::optional<double> prev;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!values[i]) continue;
        if (prev) {
            const bool ok = criterion == Criterion::Matching ? detail::ordered(*values[i], *prev, slack)
                                                             : detail::ordered(*prev, *values[i], slack);
            if (!ok) {
                ++rep.violations;
                std::ostringstream os;
                os.precision(12);
                os << label << ": not monotone in Gamma at point " << i << " (" << *prev << " -> " << *values[i] << ")";
                rep.messages.push_back(os.str());
            }
        }
        prev = values[i];
    }
    return rep;
}

}  // namespace isac::verify
