#pragma once

// Assembly of the beamforming relaxations into one canonical cone program
//
//     minimize  c'x   subject to   A x + s = b,   s in K,
//
// where K is an ordered product of a zero cone, a nonnegative orthant,
// second-order cones and real PSD cones (svec-vectorized). Each complex
// Hermitian matrix variable is parametrized by its n^2 real parameters and
// constrained through the real embedding [[Re, -Im], [Im, Re]] of side 2n.

#include <iomanip>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "isac/channels.hpp"
#include "isac/linalg.hpp"
#include "isac/model.hpp"

namespace isac::conic {

enum class Criterion { Matching, MaxMin };
enum class Receiver { TypeI, TypeII, NoRadar, RadarOnly };

inline const char* to_string(Criterion c) { return c == Criterion::Matching ? "matching" : "maxmin"; }

inline const char* to_string(Receiver r) {
    switch (r) {
        case Receiver::TypeI: return "type1";
        case Receiver::TypeII: return "type2";
        case Receiver::NoRadar: return "noradar";
        case Receiver::RadarOnly: return "radaronly";
    }
    return "?";
}

struct ConeDims {
    int zero = 0;
    int nonneg = 0;
    std::vector<int> soc;  // cone dimensions
    std::vector<int> psd;  // matrix side lengths

    int rows() const {
        int m = zero + nonneg;
        for (int q : soc) m += q;
        for (int s : psd) m += svec_size(s);
        return m;
    }

    /// Barrier degree: one per orthant row and per second-order cone, the side per PSD cone.
    int degree() const {
        int d = nonneg + static_cast<int>(soc.size());
        for (int s : psd) d += s;
        return d;
    }
};

struct Triplet {
    int row;
    int col;
    double value;
};

/// One complex Hermitian variable: n^2 parameters at `var_offset`, PSD slack rows at `cone_row_offset`.
struct HermitianBlock {
    int var_offset = 0;
    int side = 0;
    int cone_row_offset = 0;
};

/// Where each decision variable lives inside x.
struct VarMap {
    int num_antennas = 0;
    std::vector<HermitianBlock> info;
    std::optional<HermitianBlock> radar;
    int alpha = -1;
    int epigraph = -1;
    int min_gain = -1;
};

struct ConicProgram {
    int num_vars = 0;
    std::vector<Triplet> a;
    RVec b;
    RVec c;
    ConeDims cones;
    VarMap var_map;
    Criterion criterion = Criterion::MaxMin;
    Receiver receiver = Receiver::RadarOnly;

    int num_rows() const { return static_cast<int>(b.size()); }

    /// A x.
    RVec apply(const RVec& x) const {
        RVec out = RVec::Zero(num_rows());
        for (const auto& t : a) out(t.row) += t.value * x(t.col);
        return out;
    }

    /// b - A x.
    RVec slack(const RVec& x) const { return b - apply(x); }
};

struct ProblemSpec {
    Criterion criterion = Criterion::MaxMin;
    Receiver receiver = Receiver::RadarOnly;
    UlaConfig ula{8};
    SystemConfig system;
    std::vector<UserChannel> channels;
    std::optional<DesiredBeampattern> desired;
    std::optional<SensingAngleSet> sensing;

    bool has_radar() const { return receiver != Receiver::NoRadar; }
    int num_users() const { return receiver == Receiver::RadarOnly ? 0 : static_cast<int>(channels.size()); }

    void validate() const {
        system.validate();
        if (criterion == Criterion::Matching) {
            if (!desired) throw ContractError("ProblemSpec: matching criterion requires a desired beampattern");
            desired->validate();
        } else {
            if (!sensing) throw ContractError("ProblemSpec: max-min criterion requires a sensing angle set");
            sensing->validate();
        }
        if (receiver != Receiver::RadarOnly) {
            if (channels.empty()) throw ContractError("ProblemSpec: communication designs need at least one user");
            for (const auto& ch : channels) ch.validate(ula.num_antennas());
        }
    }
};

struct BuildOptions {
    /// Build on (h / sigma, 1) channels; SINR rows are then O(1) instead of O(sigma^2).
    bool normalize_channels = true;
};

namespace detail {

/// Sparse row under construction: b_row - sum coeff x >= / = / in-cone.
struct Row {
    std::vector<std::pair<int, double>> terms;
    double rhs = 0.0;

    void add(int col, double v) {
        if (v != 0.0) terms.emplace_back(col, v);
    }

    void add_block(int offset, const RVec& coeffs, double scale) {
        for (Eigen::Index i = 0; i < coeffs.size(); ++i) add(offset + static_cast<int>(i), scale * coeffs(i));
    }
};

/// -(d svec(E(X)) / d params) rows for one Hermitian variable; slack = svec(E(X)).
inline std::vector<Row> embedding_rows(const HermitianBlock& blk) {
    const int n = blk.side;
    const int side = 2 * n;
    std::vector<Row> rows(static_cast<std::size_t>(svec_size(side)));
    const auto layout = herm_param_layout(n);
    for (std::size_t p = 0; p < layout.size(); ++p) {
        const int col = blk.var_offset + static_cast<int>(p);
        const auto& e = layout[p];
        if (e.i == e.j) {
            rows[svec_index(side, e.i, e.i)].add(col, -1.0);
            rows[svec_index(side, n + e.i, n + e.i)].add(col, -1.0);
        } else if (!e.imaginary) {
            rows[svec_index(side, e.i, e.j)].add(col, -kSqrt2);
            rows[svec_index(side, n + e.i, n + e.j)].add(col, -kSqrt2);
        } else {
            // B(i,j) = y, B(j,i) = -y sit in the lower-left block; lower-triangle entries (n+i, j) and (n+j, i).
            rows[svec_index(side, n + e.i, e.j)].add(col, -kSqrt2);
            rows[svec_index(side, n + e.j, e.i)].add(col, kSqrt2);
        }
    }
    return rows;
}

}  // namespace detail

/// Assembles the relaxation selected by (criterion, receiver).
inline ConicProgram build(const ProblemSpec& spec, BuildOptions options = {}) {
    spec.validate();
    using detail::Row;

    const int n = spec.ula.num_antennas();
    const int k_users = spec.num_users();
    const std::vector<UserChannel> channels =
        options.normalize_channels ? condition_normalize(spec.channels) : spec.channels;

    ConicProgram prog;
    prog.criterion = spec.criterion;
    prog.receiver = spec.receiver;
    prog.var_map.num_antennas = n;

    int next_var = 0;
    for (int k = 0; k < k_users; ++k) {
        prog.var_map.info.push_back({next_var, n, 0});
        next_var += herm_param_count(n);
    }
    if (spec.has_radar()) {
        prog.var_map.radar = HermitianBlock{next_var, n, 0};
        next_var += herm_param_count(n);
    }
    if (spec.criterion == Criterion::Matching) {
        prog.var_map.alpha = next_var++;
        prog.var_map.epigraph = next_var++;
    } else {
        prog.var_map.min_gain = next_var++;
    }
    prog.num_vars = next_var;

    auto all_blocks = [&prog] {
        std::vector<HermitianBlock> blocks = prog.var_map.info;
        if (prog.var_map.radar) blocks.push_back(*prog.var_map.radar);
        return blocks;
    };

    const RVec tr = trace_coeffs(n);

    std::vector<Row> zero_rows;
    std::vector<Row> nonneg_rows;
    std::vector<std::vector<Row>> soc_blocks;

    // Sum power: sum tr(T_k) + tr(R_d) (= or <=) P0.
    {
        Row power;
        for (const auto& blk : all_blocks()) power.add_block(blk.var_offset, tr, 1.0);
        power.rhs = spec.system.total_power;
        (spec.system.power_mode == PowerMode::Equality ? zero_rows : nonneg_rows).push_back(std::move(power));
    }

    // SINR rows, multiplied through by Gamma_i:
    //   h^H T_i h - Gamma_i sum_{k != i} h^H T_k h - Gamma_i [Type-I] h^H R_d h - Gamma_i sigma^2 >= 0.
    // A zero threshold makes the row vacuous and it is omitted.
    for (int i = 0; i < k_users; ++i) {
        const double gamma = channels[i].gamma_min;
        if (gamma == 0.0) continue;
        const RVec q = quad_form_coeffs(channels[i].h);
        Row row;
        for (int k = 0; k < k_users; ++k) {
            row.add_block(prog.var_map.info[k].var_offset, q, k == i ? -1.0 : gamma);
        }
        if (spec.receiver == Receiver::TypeI) row.add_block(prog.var_map.radar->var_offset, q, gamma);
        row.rhs = -gamma * channels[i].sigma2;
        nonneg_rows.push_back(std::move(row));
    }

    if (spec.criterion == Criterion::Matching) {
        // (s; alpha P~_m - g_m(x)) in SOC, minimize s.
        const auto& desired = *spec.desired;
        std::vector<Row> soc(desired.size() + 1);
        soc[0].add(prog.var_map.epigraph, -1.0);
        for (std::size_t m = 0; m < desired.size(); ++m) {
            const RVec g = quad_form_coeffs(steering_vector(spec.ula, desired.grid_angles[m]));
            Row& row = soc[m + 1];
            for (const auto& blk : all_blocks()) row.add_block(blk.var_offset, g, 1.0);
            row.add(prog.var_map.alpha, -desired.values[m]);
        }
        soc_blocks.push_back(std::move(soc));
    } else {
        // g_q(x) - eta_q t >= 0, maximize t.
        const auto& set = *spec.sensing;
        for (std::size_t q = 0; q < set.size(); ++q) {
            const RVec g = quad_form_coeffs(steering_vector(spec.ula, set.angles[q]));
            Row row;
            for (const auto& blk : all_blocks()) row.add_block(blk.var_offset, g, -1.0);
            row.add(prog.var_map.min_gain, set.weights[q]);
            nonneg_rows.push_back(std::move(row));
        }
    }

    // Emit rows in cone order.
    std::vector<double> rhs;
    auto emit = [&prog, &rhs](const Row& row) {
        const int r = static_cast<int>(rhs.size());
        for (const auto& [col, v] : row.terms) prog.a.push_back({r, col, v});
        rhs.push_back(row.rhs);
    };
    for (const auto& r : zero_rows) emit(r);
    prog.cones.zero = static_cast<int>(zero_rows.size());
    for (const auto& r : nonneg_rows) emit(r);
    prog.cones.nonneg = static_cast<int>(nonneg_rows.size());
    for (const auto& blk : soc_blocks) {
        for (const auto& r : blk) emit(r);
        prog.cones.soc.push_back(static_cast<int>(blk.size()));
    }
    auto emit_psd = [&](HermitianBlock& blk) {
        blk.cone_row_offset = static_cast<int>(rhs.size());
        for (const auto& r : detail::embedding_rows(blk)) emit(r);
        prog.cones.psd.push_back(2 * n);
    };
    for (auto& blk : prog.var_map.info) emit_psd(blk);
    if (prog.var_map.radar) emit_psd(*prog.var_map.radar);

    prog.b = Eigen::Map<const RVec>(rhs.data(), static_cast<Eigen::Index>(rhs.size()));
    prog.c = RVec::Zero(prog.num_vars);
    if (spec.criterion == Criterion::Matching) {
        prog.c(prog.var_map.epigraph) = 1.0;
    } else {
        prog.c(prog.var_map.min_gain) = -1.0;
    }
    return prog;
}

/// Design objective at x: squared matching error (s^2) or the minimum weighted gain t.
inline double objective_value(const ConicProgram& prog, const RVec& x) {
    if (prog.criterion == Criterion::Matching) {
        const double s = x(prog.var_map.epigraph);
        return s * s;
    }
    return x(prog.var_map.min_gain);
}

/// Threshold below which negative eigenvalues of extracted blocks are treated as rounding.
inline constexpr double kEigenClip = 1e-9;
/// Maximum allowed deviation of a PSD slack block from real-embedding structure.
inline constexpr double kSymplecticTol = 1e-7;

namespace detail {

inline CMat extract_block(const ConicProgram& prog, const HermitianBlock& blk, const RVec& x, const RVec& slack) {
    const int side = 2 * blk.side;
    const RMat e = smat(slack.segment(blk.cone_row_offset, svec_size(side)), side);
    const double defect = symplectic_defect(e);
    if (defect > kSymplecticTol) {
        throw NumericalError("extract: PSD block at row " + std::to_string(blk.cone_row_offset) +
                             " is not a complex embedding (defect " + std::to_string(defect) + ")");
    }
    (void)prog;
    CMat m = params_to_herm(x.segment(blk.var_offset, herm_param_count(blk.side)), blk.side);
    Eigen::SelfAdjointEigenSolver<CMat> es(m);
    RVec lam = es.eigenvalues();
    bool clipped = false;
    for (Eigen::Index i = 0; i < lam.size(); ++i) {
        if (lam(i) < 0.0 && lam(i) >= -kEigenClip) {
            lam(i) = 0.0;
            clipped = true;
        }
    }
    if (clipped) {
        m = es.eigenvectors() * lam.cast<cd>().asDiagonal() * es.eigenvectors().adjoint();
        m = (m + m.adjoint()) * 0.5;
    }
    return m;
}

}  // namespace detail

/// Maps a primal vector back to covariance matrices. For designs without a
/// radar signal R_d is returned as the zero matrix.
inline CovarianceSolution extract(const ConicProgram& prog, const RVec& x) {
    if (x.size() != prog.num_vars) throw ContractError("extract: primal vector has wrong length");
    const RVec slack = prog.slack(x);
    const int n = prog.var_map.num_antennas;
    CovarianceSolution cov;
    for (const auto& blk : prog.var_map.info) cov.info_covariances.push_back(detail::extract_block(prog, blk, x, slack));
    cov.radar_covariance =
        prog.var_map.radar ? detail::extract_block(prog, *prog.var_map.radar, x, slack) : CMat::Zero(n, n);
    if (prog.var_map.alpha >= 0) cov.alpha = x(prog.var_map.alpha);
    if (prog.var_map.min_gain >= 0) cov.min_gain = x(prog.var_map.min_gain);
    cov.objective = objective_value(prog, x);
    return cov;
}

/// Inverse of extract on the Hermitian blocks; alpha / s / t are filled from the solution.
/// For matching programs s is set to the residual norm so the point lies on the cone boundary.
inline RVec pack(const ConicProgram& prog, const CovarianceSolution& cov, double epigraph = -1.0) {
    RVec x = RVec::Zero(prog.num_vars);
    if (static_cast<int>(cov.info_covariances.size()) != static_cast<int>(prog.var_map.info.size()))
        throw ContractError("pack: user count mismatch");
    for (std::size_t k = 0; k < prog.var_map.info.size(); ++k) {
        const auto& blk = prog.var_map.info[k];
        x.segment(blk.var_offset, herm_param_count(blk.side)) = herm_to_params(cov.info_covariances[k]);
    }
    if (prog.var_map.radar) {
        const auto& blk = *prog.var_map.radar;
        x.segment(blk.var_offset, herm_param_count(blk.side)) = herm_to_params(cov.radar_covariance);
    }
    if (prog.var_map.alpha >= 0) x(prog.var_map.alpha) = cov.alpha;
    if (prog.var_map.min_gain >= 0) x(prog.var_map.min_gain) = cov.min_gain;
    if (prog.var_map.epigraph >= 0) {
        if (epigraph < 0.0) {
            const RVec s = prog.slack(x);
            const int off = prog.cones.zero + prog.cones.nonneg;
            epigraph = s.segment(off + 1, prog.cones.soc.at(0) - 1).norm();
        }
        x(prog.var_map.epigraph) = epigraph;
    }
    return x;
}

// ---------------------------------------------------------------------------
// Plain-text dump for cross-checking with external solvers:
//
//   isac-conic 1
//   vars <n> rows <m> nnz <nnz>
//   zero <z>
//   nonneg <l>
//   soc <count> <dims...>
//   psd <count> <sides...>
//   c <n values>
//   b <m values>
//   <row> <col> <value>     (nnz lines, 0-based)
//
// PSD cones use lower-triangle column-major svec with sqrt(2)-scaled off-diagonals.

inline void dump(const ConicProgram& prog, std::ostream& os) {
    os << "isac-conic 1\n";
    os << "vars " << prog.num_vars << " rows " << prog.num_rows() << " nnz " << prog.a.size() << "\n";
    os << "zero " << prog.cones.zero << "\n";
    os << "nonneg " << prog.cones.nonneg << "\n";
    os << "soc " << prog.cones.soc.size();
    for (int q : prog.cones.soc) os << ' ' << q;
    os << "\npsd " << prog.cones.psd.size();
    for (int s : prog.cones.psd) os << ' ' << s;
    os << "\n" << std::setprecision(17);
    os << "c";
    for (Eigen::Index i = 0; i < prog.c.size(); ++i) os << ' ' << prog.c(i);
    os << "\nb";
    for (Eigen::Index i = 0; i < prog.b.size(); ++i) os << ' ' << prog.b(i);
    os << "\n";
    for (const auto& t : prog.a) os << t.row << ' ' << t.col << ' ' << t.value << "\n";
}

/// Reads the dump format back. Variable metadata is not part of the format.
inline ConicProgram load_dump(std::istream& is) {
    auto expect = [&is](const std::string& word) {
        std::string got;
        if (!(is >> got) || got != word) throw ContractError("load_dump: expected '" + word + "'");
    };
    ConicProgram prog;
    int version = 0;
    expect("isac-conic");
    is >> version;
    if (version != 1) throw ContractError("load_dump: unsupported version");
    int rows = 0;
    std::size_t nnz = 0;
    expect("vars");
    is >> prog.num_vars;
    expect("rows");
    is >> rows;
    expect("nnz");
    is >> nnz;
    expect("zero");
    is >> prog.cones.zero;
    expect("nonneg");
    is >> prog.cones.nonneg;
    std::size_t count = 0;
    expect("soc");
    is >> count;
    prog.cones.soc.resize(count);
    for (auto& q : prog.cones.soc) is >> q;
    expect("psd");
    is >> count;
    prog.cones.psd.resize(count);
    for (auto& s : prog.cones.psd) is >> s;
    expect("c");
    prog.c.resize(prog.num_vars);
    for (Eigen::Index i = 0; i < prog.c.size(); ++i) is >> prog.c(i);
    expect("b");
    prog.b.resize(rows);
    for (Eigen::Index i = 0; i < prog.b.size(); ++i) is >> prog.b(i);
    prog.a.resize(nnz);
    for (auto& t : prog.a) is >> t.row >> t.col >> t.value;
    if (!is) throw ContractError("load_dump: truncated input");
    if (prog.cones.rows() != rows) throw ContractError("load_dump: cone dimensions do not sum to row count");
    return prog;
}

}  // namespace isac::conic
