#pragma once

// Primal-dual interior-point method for ConicProgram.
//
// The program  min c'x  s.t.  A x + s = b, s in K  is split into equality rows
// (zero cone) and cone rows, then solved through the homogeneous self-dual
// embedding
//
//     A'y + G'z + c tau = 0,   A x - b tau = 0,   G x + s - h tau = 0,
//     kappa + c'x + b'y + h'z = 0,   s o z = 0,   tau kappa = 0,
//
// with Nesterov-Todd scaling for the nonnegative, second-order and PSD cones
// and Mehrotra predictor-corrector steps. Each iteration factors one dense
// reduced KKT matrix H = G'W^{-1}W^{-T}G (+ A'A) by Cholesky; the equality
// rows are eliminated through their Schur complement.

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <Eigen/Sparse>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "isac/conic.hpp"

namespace isac::solver {

/// AlmostOptimal: the full tolerances stalled, but the best iterate meets the
/// reduced ones (reduced_tol_gap / reduced_tol_feas).
enum class Status { Optimal, AlmostOptimal, PrimalInfeasible, DualInfeasible, IterLimit, Numerical };

inline const char* to_string(Status s) {
    switch (s) {
        case Status::Optimal: return "optimal";
        case Status::AlmostOptimal: return "almost_optimal";
        case Status::PrimalInfeasible: return "primal_infeasible";
        case Status::DualInfeasible: return "dual_infeasible";
        case Status::IterLimit: return "iteration_limit";
        case Status::Numerical: return "numerical";
    }
    return "?";
}

struct Settings {
    double tol_gap = 1e-8;
    double tol_feas = 1e-8;
    int max_iters = 200;
    double reduced_tol_gap = 1e-6;
    double reduced_tol_feas = 1e-6;
    /// Stop once the best iterate has not improved for this many iterations.
    int stall_iters = 8;
    bool verbose = false;
    bool record_history = false;
    int ruiz_passes = 3;

    void validate() const {
        if (!(tol_gap > 0.0) || !(tol_feas > 0.0)) throw ContractError("solver::Settings: tolerances must be > 0");
        if (!(reduced_tol_gap >= tol_gap) || !(reduced_tol_feas >= tol_feas))
            throw ContractError("solver::Settings: reduced tolerances must be >= the full ones");
        if (stall_iters < 1) throw ContractError("solver::Settings: stall_iters must be >= 1");
        if (max_iters < 1) throw ContractError("solver::Settings: max_iters must be >= 1");
        if (ruiz_passes < 0) throw ContractError("solver::Settings: ruiz_passes must be >= 0");
    }
};

/// Per-iteration diagnostics, in the units of the original program.
struct IterationLog {
    int iteration = 0;
    double primal_objective = 0.0;
    double dual_objective = 0.0;
    double gap = 0.0;
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    double tau = 0.0;
    double kappa = 0.0;
    double step = 0.0;
};

struct Result {
    Status status = Status::Numerical;
    /// Primal point, slack (one entry per program row) and dual multipliers
    /// (one per row; the zero-cone part is free). For infeasible programs x/s or
    /// y hold the normalized certificate instead.
    RVec x;
    RVec s;
    RVec y;
    double primal_objective = std::numeric_limits<double>::quiet_NaN();
    double dual_objective = std::numeric_limits<double>::quiet_NaN();
    /// s'z at the returned point.
    double gap = std::numeric_limits<double>::quiet_NaN();
    /// gap / max(1, min(|primal|, |dual|)); Optimal implies rel_gap <= tol_gap.
    double rel_gap = std::numeric_limits<double>::quiet_NaN();
    double primal_residual = std::numeric_limits<double>::quiet_NaN();
    double dual_residual = std::numeric_limits<double>::quiet_NaN();
    int iterations = 0;
    double solve_seconds = 0.0;
    std::string message;
    std::vector<IterationLog> history;

    bool optimal() const { return status == Status::Optimal; }
    bool solved() const { return status == Status::Optimal || status == Status::AlmostOptimal; }
};

namespace detail {

using SpMat = Eigen::SparseMatrix<double, Eigen::RowMajor>;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class BlockKind { Nonneg, Soc, Psd };

struct ConeBlock {
    BlockKind kind;
    int offset;
    int dim;
    int side = 0;
};

struct BlockScaling {
    RVec d;            // nonnegative: W = diag(d)
    double beta = 1.0; // second-order: W = beta (2 v v' - J)
    RVec v;
    RMat r;            // PSD: W(U) = R' U R
    RMat rinv;
};

struct Scaling {
    std::vector<BlockScaling> blocks;
    RVec lambda;
};

enum class WOp { W, Wt, Winv, WinvT };

/// Product cone of nonnegative, second-order and PSD (svec) blocks.
class Cone {
public:
    Cone() = default;
    Cone(std::vector<ConeBlock> blocks, int dim) : blocks_(std::move(blocks)), dim_(dim) {
        for (const auto& b : blocks_) degree_ += b.kind == BlockKind::Nonneg ? b.dim : b.kind == BlockKind::Soc ? 1 : b.side;
    }

    int dim() const { return dim_; }
    int degree() const { return degree_; }
    const std::vector<ConeBlock>& blocks() const { return blocks_; }

    RVec identity() const {
        RVec e = RVec::Zero(dim_);
        for (const auto& b : blocks_) {
            switch (b.kind) {
                case BlockKind::Nonneg: e.segment(b.offset, b.dim).setOnes(); break;
                case BlockKind::Soc: e(b.offset) = 1.0; break;
                case BlockKind::Psd:
                    for (int i = 0; i < b.side; ++i) e(b.offset + svec_index(b.side, i, i)) = 1.0;
                    break;
            }
        }
        return e;
    }

    /// Jordan product u o v.
    RVec product(const RVec& u, const RVec& v) const {
        RVec out(dim_);
        for (const auto& b : blocks_) {
            const auto ub = u.segment(b.offset, b.dim);
            const auto vb = v.segment(b.offset, b.dim);
            auto ob = out.segment(b.offset, b.dim);
            switch (b.kind) {
                case BlockKind::Nonneg: ob = ub.cwiseProduct(vb); break;
                case BlockKind::Soc:
                    ob(0) = ub.dot(vb);
                    ob.tail(b.dim - 1) = ub(0) * vb.tail(b.dim - 1) + vb(0) * ub.tail(b.dim - 1);
                    break;
                case BlockKind::Psd: {
                    const RMat um = smat(ub, b.side);
                    const RMat vm = smat(vb, b.side);
                    ob = svec(0.5 * (um * vm + vm * um));
                    break;
                }
            }
        }
        return out;
    }

    /// x with lambda o x = r, for lambda as produced by nt_scaling (PSD blocks diagonal).
    RVec inverse_product(const RVec& lambda, const RVec& r) const {
        RVec out(dim_);
        for (const auto& b : blocks_) {
            const auto lb = lambda.segment(b.offset, b.dim);
            const auto rb = r.segment(b.offset, b.dim);
            auto ob = out.segment(b.offset, b.dim);
            switch (b.kind) {
                case BlockKind::Nonneg: ob = rb.cwiseQuotient(lb); break;
                case BlockKind::Soc: {
                    const double l0 = lb(0);
                    const auto l1 = lb.tail(b.dim - 1);
                    const double x0 = (l0 * rb(0) - l1.dot(rb.tail(b.dim - 1))) / (l0 * l0 - l1.squaredNorm());
                    ob(0) = x0;
                    ob.tail(b.dim - 1) = (rb.tail(b.dim - 1) - x0 * l1) / l0;
                    break;
                }
                case BlockKind::Psd: {
                    int k = 0;
                    for (int j = 0; j < b.side; ++j) {
                        const double sj = lb(svec_index(b.side, j, j));
                        for (int i = j; i < b.side; ++i, ++k) {
                            const double si = lb(svec_index(b.side, i, i));
                            ob(k) = 2.0 * rb(k) / (si + sj);
                        }
                    }
                    break;
                }
            }
        }
        return out;
    }

    /// Largest t with u - t e in K (positive iff u is interior).
    double margin(const RVec& u) const {
        double m = kInf;
        for (const auto& b : blocks_) {
            const auto ub = u.segment(b.offset, b.dim);
            switch (b.kind) {
                case BlockKind::Nonneg: m = std::min(m, ub.minCoeff()); break;
                case BlockKind::Soc: m = std::min(m, ub(0) - ub.tail(b.dim - 1).norm()); break;
                case BlockKind::Psd: {
                    Eigen::SelfAdjointEigenSolver<RMat> es(smat(ub, b.side), Eigen::EigenvaluesOnly);
                    m = std::min(m, es.eigenvalues()(0));
                    break;
                }
            }
        }
        return m;
    }

    /// sup { a >= 0 : u + a d in K } for interior u (+inf when unbounded).
    double max_step(const RVec& u, const RVec& d) const {
        double step = kInf;
        for (const auto& b : blocks_) {
            const auto ub = u.segment(b.offset, b.dim);
            const auto db = d.segment(b.offset, b.dim);
            switch (b.kind) {
                case BlockKind::Nonneg:
                    for (int i = 0; i < b.dim; ++i)
                        if (db(i) < 0.0) step = std::min(step, -ub(i) / db(i));
                    break;
                case BlockKind::Soc: step = std::min(step, soc_step(ub, db)); break;
                case BlockKind::Psd: {
                    const RMat um = smat(ub, b.side);
                    const RMat dm = smat(db, b.side);
                    Eigen::LLT<RMat> llt(um);
                    const RMat l = llt.matrixL();
                    RMat x = l.triangularView<Eigen::Lower>().solve(dm);
                    x = l.triangularView<Eigen::Lower>().solve(x.transpose()).transpose();
                    Eigen::SelfAdjointEigenSolver<RMat> es(0.5 * (x + x.transpose()), Eigen::EigenvaluesOnly);
                    const double lmin = es.eigenvalues()(0);
                    if (lmin < 0.0) step = std::min(step, -1.0 / lmin);
                    break;
                }
            }
        }
        return step;
    }

    Scaling identity_scaling() const {
        Scaling w;
        for (const auto& b : blocks_) {
            BlockScaling bs;
            switch (b.kind) {
                case BlockKind::Nonneg: bs.d = RVec::Ones(b.dim); break;
                case BlockKind::Soc:
                    bs.v = RVec::Zero(b.dim);
                    bs.v(0) = 1.0;
                    break;
                case BlockKind::Psd:
                    bs.r = RMat::Identity(b.side, b.side);
                    bs.rinv = bs.r;
                    break;
            }
            w.blocks.push_back(std::move(bs));
        }
        w.lambda = identity();
        return w;
    }

    /// Nesterov-Todd scaling point of interior (s, z): W z = W^{-T} s = lambda.
    std::optional<Scaling> nt_scaling(const RVec& s, const RVec& z) const {
        Scaling w;
        w.lambda = RVec::Zero(dim_);
        for (const auto& b : blocks_) {
            const auto sb = s.segment(b.offset, b.dim);
            const auto zb = z.segment(b.offset, b.dim);
            auto lb = w.lambda.segment(b.offset, b.dim);
            BlockScaling bs;
            switch (b.kind) {
                case BlockKind::Nonneg:
                    if (sb.minCoeff() <= 0.0 || zb.minCoeff() <= 0.0) return std::nullopt;
                    bs.d = sb.cwiseQuotient(zb).cwiseSqrt();
                    lb = sb.cwiseProduct(zb).cwiseSqrt();
                    break;
                case BlockKind::Soc: {
                    const double sjs = sb(0) * sb(0) - sb.tail(b.dim - 1).squaredNorm();
                    const double zjz = zb(0) * zb(0) - zb.tail(b.dim - 1).squaredNorm();
                    if (sb(0) <= 0.0 || zb(0) <= 0.0 || sjs <= 0.0 || zjz <= 0.0) return std::nullopt;
                    const double an = std::sqrt(sjs);
                    const double bn = std::sqrt(zjz);
                    const RVec sbar = sb / an;
                    const RVec zbar = zb / bn;
                    const double gamma = std::sqrt((1.0 + sbar.dot(zbar)) / 2.0);
                    RVec wbar = sbar;
                    wbar(0) += zbar(0);
                    wbar.tail(b.dim - 1) -= zbar.tail(b.dim - 1);
                    wbar /= 2.0 * gamma;
                    bs.v = wbar;
                    bs.v(0) += 1.0;
                    bs.v /= std::sqrt(2.0 * (wbar(0) + 1.0));
                    bs.beta = std::sqrt(an / bn);
                    lb = soc_apply(bs, WOp::W, zb);
                    break;
                }
                case BlockKind::Psd: {
                    Eigen::LLT<RMat> ls(smat(sb, b.side));
                    Eigen::LLT<RMat> lz(smat(zb, b.side));
                    if (ls.info() != Eigen::Success || lz.info() != Eigen::Success) return std::nullopt;
                    const RMat l_s = ls.matrixL();
                    const RMat l_z = lz.matrixL();
                    Eigen::JacobiSVD<RMat> svd(l_z.transpose() * l_s, Eigen::ComputeFullU | Eigen::ComputeFullV);
                    const RVec sigma = svd.singularValues();
                    if (!(sigma.minCoeff() > 0.0)) return std::nullopt;
                    const RVec isq = sigma.cwiseSqrt().cwiseInverse();
                    bs.r = l_s * svd.matrixV() * isq.asDiagonal();
                    bs.rinv = isq.asDiagonal() * svd.matrixU().transpose() * l_z.transpose();
                    for (int i = 0; i < b.side; ++i) lb(svec_index(b.side, i, i)) = sigma(i);
                    break;
                }
            }
            w.blocks.push_back(std::move(bs));
        }
        return w;
    }

    RVec apply(const Scaling& w, WOp op, const RVec& u) const {
        RVec out(dim_);
        for (std::size_t k = 0; k < blocks_.size(); ++k) {
            const auto& b = blocks_[k];
            const auto& bs = w.blocks[k];
            const RVec ub = u.segment(b.offset, b.dim);
            auto ob = out.segment(b.offset, b.dim);
            switch (b.kind) {
                case BlockKind::Nonneg:
                    ob = (op == WOp::W || op == WOp::Wt) ? RVec(bs.d.cwiseProduct(ub)) : RVec(ub.cwiseQuotient(bs.d));
                    break;
                case BlockKind::Soc: ob = soc_apply(bs, op, ub); break;
                case BlockKind::Psd: {
                    const RMat um = smat(ub, b.side);
                    RMat res;
                    switch (op) {
                        case WOp::W: res = bs.r.transpose() * um * bs.r; break;
                        case WOp::Wt: res = bs.r * um * bs.r.transpose(); break;
                        case WOp::Winv: res = bs.rinv.transpose() * um * bs.rinv; break;
                        case WOp::WinvT: res = bs.rinv * um * bs.rinv.transpose(); break;
                    }
                    ob = svec(res);
                    break;
                }
            }
        }
        return out;
    }

private:
    static RVec soc_apply(const BlockScaling& bs, WOp op, const RVec& u) {
        RVec ju = u;
        ju.tail(u.size() - 1) *= -1.0;
        if (op == WOp::W || op == WOp::Wt) return bs.beta * (2.0 * bs.v.dot(u) * bs.v - ju);
        RVec jv = bs.v;
        jv.tail(u.size() - 1) *= -1.0;
        return (2.0 * jv.dot(u) * jv - ju) / bs.beta;
    }

    static double soc_step(const Eigen::Ref<const RVec>& u, const Eigen::Ref<const RVec>& d) {
        const Eigen::Index q = u.size();
        const double a = d(0) * d(0) - d.tail(q - 1).squaredNorm();
        const double bq = 2.0 * (u(0) * d(0) - u.tail(q - 1).dot(d.tail(q - 1)));
        const double c = u(0) * u(0) - u.tail(q - 1).squaredNorm();
        double step = kInf;
        if (a == 0.0) {
            if (bq < 0.0) step = -c / bq;
        } else {
            const double disc = bq * bq - 4.0 * a * c;
            if (disc >= 0.0) {
                const double root = std::sqrt(disc);
                const double qq = -0.5 * (bq + (bq >= 0.0 ? root : -root));
                for (double t : {qq / a, qq != 0.0 ? c / qq : kInf})
                    if (t > 0.0) step = std::min(step, t);
            }
        }
        // The first coordinate must stay positive as well.
        if (d(0) < 0.0) step = std::min(step, -u(0) / d(0));
        return step;
    }

    std::vector<ConeBlock> blocks_;
    int dim_ = 0;
    int degree_ = 0;
};

/// Reduced KKT system  [[0, A', G'], [A, 0, 0], [G, 0, -W'W]] (x, y, z) = (r1, r2, r3).
///
/// z is eliminated, leaving F = G'W^{-1}W^{-T}G + A'A, factored densely by
/// Cholesky. PSD cones contribute tr(U_j M U_k M) entries over the variables
/// they touch; nonnegative rows, second-order cones and equality rows
/// contribute a low-rank term U U'. The equality multipliers come from the
/// Schur complement A F^{-1} A'.
class Kkt {
public:
    Kkt(const SpMat& a, const SpMat& g, const Cone& cone) : a_(a), g_(g), cone_(cone) {
        n_ = static_cast<int>(g.cols());
        p_ = static_cast<int>(a.rows());
        at_ = RMat(a.transpose());
        for (const auto& b : cone.blocks())
            if (b.kind != BlockKind::Psd) lowrank_rows_ += b.dim;

        for (const auto& b : cone.blocks()) {
            if (b.kind != BlockKind::Psd) continue;
            PsdPattern pat;
            std::vector<std::vector<Entry>> by_col(static_cast<std::size_t>(n_));
            int k = 0;
            for (int j = 0; j < b.side; ++j) {
                for (int i = j; i < b.side; ++i, ++k) {
                    for (SpMat::InnerIterator it(g, b.offset + k); it; ++it) {
                        auto& col = by_col[static_cast<std::size_t>(it.col())];
                        if (i == j) {
                            col.push_back({i, i, it.value()});
                        } else {
                            col.push_back({i, j, it.value() / kSqrt2});
                            col.push_back({j, i, it.value() / kSqrt2});
                        }
                    }
                }
            }
            for (int c = 0; c < n_; ++c) {
                if (by_col[c].empty()) continue;
                pat.cols.push_back(c);
                pat.entries.push_back(std::move(by_col[c]));
            }
            psd_.push_back(std::move(pat));
        }
    }

    /// Factors the system for scaling w; false if it is numerically singular.
    bool factor(const Scaling& w) {
        w_ = &w;
        const RMat u = lowrank(w);
        RMat h = RMat::Zero(n_, n_);
        if (u.cols() > 0) h.selfadjointView<Eigen::Lower>().rankUpdate(u);
        psd_hessian(w, [&h](int ca, int cb, double t) { h(cb, ca) += t; });
        if (!robust_llt(h, f_)) return false;
        if (p_ > 0) {
            finv_at_ = f_.solve(at_);
            const RMat s = a_ * finv_at_;
            if (!robust_llt(0.5 * (s + s.transpose()), schur_)) return false;
        }
        return true;
    }

    void solve(const RVec& r1, const RVec& r2, const RVec& r3, RVec& x, RVec& y, RVec& z) const {
        solve_once(r1, r2, r3, x, y, z);
        auto inf_norm = [](const RVec& v) { return v.size() ? v.lpNorm<Eigen::Infinity>() : 0.0; };
        const double scale = 1.0 + std::max({inf_norm(r1), inf_norm(r2), inf_norm(r3)});
        for (int it = 0; it < 4; ++it) {
            const RVec e1 = r1 - a_.transpose() * y - g_.transpose() * z;
            const RVec e2 = r2 - a_ * x;
            const RVec e3 = r3 - (g_ * x - cone_.apply(*w_, WOp::Wt, cone_.apply(*w_, WOp::W, z)));
            const double err = std::max({inf_norm(e1), inf_norm(e2), inf_norm(e3)});
            if (!(err > 1e-15 * scale)) break;
            RVec dx, dy, dz;
            solve_once(e1, e2, e3, dx, dy, dz);
            x += dx;
            y += dy;
            z += dz;
        }
    }

private:
    struct Entry {
        int i;
        int j;
        double v;
    };
    struct PsdPattern {
        std::vector<int> cols;
        std::vector<std::vector<Entry>> entries;
    };

    /// Cholesky with escalating diagonal regularization.
    static bool robust_llt(const RMat& m, Eigen::LLT<RMat>& llt) {
        llt.compute(m);
        if (m.rows() == 0) return true;
        const double diag_max = std::max(1.0, m.diagonal().cwiseAbs().maxCoeff());
        double reg = 1e-14 * diag_max;
        for (int attempt = 0; llt.info() != Eigen::Success || !llt.matrixLLT().diagonal().allFinite(); ++attempt) {
            if (attempt == 10) return false;
            RMat mr = m;
            mr.diagonal().array() += reg;
            llt.compute(mr);
            reg *= 10.0;
        }
        return true;
    }

    /// Columns: W^{-T} applied to nonnegative / second-order rows of G, then A'.
    RMat lowrank(const Scaling& w) const {
        RMat u(n_, lowrank_rows_ + p_);
        int col = 0;
        for (std::size_t k = 0; k < cone_.blocks().size(); ++k) {
            const auto& b = cone_.blocks()[k];
            const auto& bs = w.blocks[k];
            if (b.kind == BlockKind::Psd) continue;
            RMat gc = RMat::Zero(b.dim, n_);
            for (int r = 0; r < b.dim; ++r)
                for (SpMat::InnerIterator it(g_, b.offset + r); it; ++it) gc(r, it.col()) = it.value();
            if (b.kind == BlockKind::Nonneg) {
                gc = bs.d.cwiseInverse().asDiagonal() * gc;
            } else {
                RVec jv = bs.v;
                jv.tail(b.dim - 1) *= -1.0;
                const Eigen::RowVectorXd t = jv.transpose() * gc;
                gc.bottomRows(b.dim - 1) *= -1.0;
                gc = (2.0 * jv * t - gc) / bs.beta;
            }
            u.middleCols(col, b.dim) = gc.transpose();
            col += b.dim;
        }
        if (p_ > 0) u.rightCols(p_) = at_;
        return u;
    }

    /// Calls add(col_a, col_b, value) for every PSD Hessian entry with col_a <= col_b.
    template <typename Add>
    void psd_hessian(const Scaling& w, Add&& add) const {
        std::size_t pk = 0;
        for (std::size_t k = 0; k < cone_.blocks().size(); ++k) {
            if (cone_.blocks()[k].kind != BlockKind::Psd) continue;
            const auto& bs = w.blocks[k];
            const RMat m = bs.rinv.transpose() * bs.rinv;
            const auto& pat = psd_[pk++];
            const std::size_t nc = pat.cols.size();
            for (std::size_t ja = 0; ja < nc; ++ja) {
                const auto& ea = pat.entries[ja];
                for (std::size_t jb = ja; jb < nc; ++jb) {
                    double t = 0.0;
                    for (const auto& x : ea)
                        for (const auto& y : pat.entries[jb]) t += x.v * y.v * m(x.j, y.i) * m(y.j, x.i);
                    add(pat.cols[ja], pat.cols[jb], t);
                }
            }
        }
    }

    void solve_once(const RVec& r1, const RVec& r2, const RVec& r3, RVec& x, RVec& y, RVec& z) const {
        const RVec r3h = cone_.apply(*w_, WOp::WinvT, r3);
        RVec rhs = r1 + g_.transpose() * cone_.apply(*w_, WOp::Winv, r3h);
        if (p_ > 0) {
            rhs += a_.transpose() * r2;
            y = schur_.solve(a_ * f_.solve(rhs) - r2);
            x = f_.solve(RVec(rhs - at_ * y));
        } else {
            y = RVec::Zero(0);
            x = f_.solve(rhs);
        }
        const RVec gx = g_ * x;
        z = cone_.apply(*w_, WOp::Winv, RVec(cone_.apply(*w_, WOp::WinvT, gx) - r3h));
    }

    const SpMat& a_;
    const SpMat& g_;
    const Cone& cone_;
    const Scaling* w_ = nullptr;
    int n_ = 0;
    int p_ = 0;
    int lowrank_rows_ = 0;
    RMat at_;
    std::vector<PsdPattern> psd_;
    Eigen::LLT<RMat> f_;
    Eigen::LLT<RMat> schur_;
    RMat finv_at_;
};

/// Program split into equality and cone rows, empty rows removed, Ruiz-equilibrated.
struct Prepared {
    int n = 0;
    int rows = 0;
    SpMat a0, g0;  // unscaled
    RVec b0, h0, c0;
    SpMat a, g;    // scaled: A~ = E_A A D, G~ = E_G G D
    RVec b, h, c;
    RVec col_scale;
    RVec eq_scale;
    RVec cone_scale;
    Cone cone;
    std::vector<int> eq_rows;    // program row of each equality row
    std::vector<int> cone_rows;  // program row of each cone row
    std::string infeasible_row;  // set when an empty row cannot be satisfied
};

inline Prepared prepare(const conic::ConicProgram& prog, int ruiz_passes) {
    const int n = prog.num_vars;
    const int rows = prog.num_rows();
    if (prog.c.size() != n) throw ContractError("solver: objective length does not match variable count");
    if (prog.cones.rows() != rows) throw ContractError("solver: cone dimensions do not sum to the row count");
    for (int q : prog.cones.soc)
        if (q < 1) throw ContractError("solver: second-order cone of dimension < 1");
    for (int s : prog.cones.psd)
        if (s < 1) throw ContractError("solver: PSD cone of side < 1");
    std::vector<int> nnz(static_cast<std::size_t>(rows), 0);
    for (const auto& t : prog.a) {
        if (t.row < 0 || t.row >= rows || t.col < 0 || t.col >= n)
            throw ContractError("solver: constraint triplet out of range");
        if (!std::isfinite(t.value)) throw ContractError("solver: non-finite constraint coefficient");
        if (t.value != 0.0) ++nnz[static_cast<std::size_t>(t.row)];
    }
    if (!prog.b.allFinite() || !prog.c.allFinite()) throw ContractError("solver: non-finite program data");

    Prepared p;
    p.n = n;
    p.rows = rows;
    std::vector<int> map(static_cast<std::size_t>(rows), -1);  // >= 0 eq index, <= -2 cone index
    const int z = prog.cones.zero;
    const int l = prog.cones.nonneg;
    for (int r = 0; r < z + l; ++r) {
        if (nnz[r] == 0) {
            const bool ok = r < z ? prog.b(r) == 0.0 : prog.b(r) >= 0.0;
            if (!ok && p.infeasible_row.empty()) p.infeasible_row = "row " + std::to_string(r) + " has no coefficients";
            continue;
        }
        if (r < z) {
            map[r] = static_cast<int>(p.eq_rows.size());
            p.eq_rows.push_back(r);
        } else {
            map[r] = -2 - static_cast<int>(p.cone_rows.size());
            p.cone_rows.push_back(r);
        }
    }

    std::vector<ConeBlock> blocks;
    int off = 0;
    const int kept_l = static_cast<int>(p.cone_rows.size());
    if (kept_l > 0) blocks.push_back({BlockKind::Nonneg, 0, kept_l, 0});
    off = kept_l;
    int prog_row = z + l;
    for (int q : prog.cones.soc) {
        for (int i = 0; i < q; ++i) {
            map[prog_row] = -2 - static_cast<int>(p.cone_rows.size());
            p.cone_rows.push_back(prog_row++);
        }
        blocks.push_back({BlockKind::Soc, off, q, 0});
        off += q;
    }
    for (int s : prog.cones.psd) {
        const int len = svec_size(s);
        for (int i = 0; i < len; ++i) {
            map[prog_row] = -2 - static_cast<int>(p.cone_rows.size());
            p.cone_rows.push_back(prog_row++);
        }
        blocks.push_back({BlockKind::Psd, off, len, s});
        off += len;
    }
    const int pe = static_cast<int>(p.eq_rows.size());
    const int m = off;
    p.cone = Cone(blocks, m);

    std::vector<Eigen::Triplet<double>> ta, tg;
    for (const auto& t : prog.a) {
        if (t.value == 0.0) continue;
        const int mr = map[t.row];
        if (mr >= 0) ta.emplace_back(mr, t.col, t.value);
        else if (mr <= -2) tg.emplace_back(-2 - mr, t.col, t.value);
    }
    p.a0.resize(pe, n);
    p.a0.setFromTriplets(ta.begin(), ta.end());
    p.g0.resize(m, n);
    p.g0.setFromTriplets(tg.begin(), tg.end());
    p.b0.resize(pe);
    for (int i = 0; i < pe; ++i) p.b0(i) = prog.b(p.eq_rows[i]);
    p.h0.resize(m);
    for (int i = 0; i < m; ++i) p.h0(i) = prog.b(p.cone_rows[i]);
    p.c0 = prog.c;

    // Ruiz equilibration; rows of one second-order or PSD block share a scale.
    std::vector<int> group(static_cast<std::size_t>(m));
    int ngroups = 0;
    for (const auto& b : blocks) {
        if (b.kind == BlockKind::Nonneg) {
            for (int i = 0; i < b.dim; ++i) group[b.offset + i] = ngroups++;
        } else {
            for (int i = 0; i < b.dim; ++i) group[b.offset + i] = ngroups;
            ++ngroups;
        }
    }
    RVec dcol = RVec::Ones(n);
    RVec ea = RVec::Ones(pe);
    RVec eg_group = RVec::Ones(ngroups);
    for (int pass = 0; pass < ruiz_passes; ++pass) {
        RVec cn = RVec::Zero(n);
        RVec rn_a = RVec::Zero(pe);
        RVec rn_g = RVec::Zero(ngroups);
        for (int r = 0; r < pe; ++r)
            for (SpMat::InnerIterator it(p.a0, r); it; ++it) {
                const double v = std::abs(ea(r) * it.value() * dcol(it.col()));
                rn_a(r) = std::max(rn_a(r), v);
                cn(it.col()) = std::max(cn(it.col()), v);
            }
        for (int r = 0; r < m; ++r)
            for (SpMat::InnerIterator it(p.g0, r); it; ++it) {
                const double v = std::abs(eg_group(group[r]) * it.value() * dcol(it.col()));
                rn_g(group[r]) = std::max(rn_g(group[r]), v);
                cn(it.col()) = std::max(cn(it.col()), v);
            }
        for (int j = 0; j < n; ++j)
            if (cn(j) > 0.0) dcol(j) /= std::sqrt(cn(j));
        for (int r = 0; r < pe; ++r)
            if (rn_a(r) > 0.0) ea(r) /= std::sqrt(rn_a(r));
        for (int gi = 0; gi < ngroups; ++gi)
            if (rn_g(gi) > 0.0) eg_group(gi) /= std::sqrt(rn_g(gi));
    }
    p.col_scale = dcol;
    p.eq_scale = ea;
    p.cone_scale.resize(m);
    for (int r = 0; r < m; ++r) p.cone_scale(r) = eg_group(group[r]);

    p.a = ea.asDiagonal() * p.a0 * dcol.asDiagonal();
    p.g = p.cone_scale.asDiagonal() * p.g0 * dcol.asDiagonal();
    p.b = ea.cwiseProduct(p.b0);
    p.h = p.cone_scale.cwiseProduct(p.h0);
    p.c = dcol.cwiseProduct(p.c0);
    return p;
}

/// Iterate mapped back to the original program (not divided by tau).
struct Unscaled {
    RVec x, y, z, s;
};

inline Unscaled unscale(const Prepared& p, const RVec& x, const RVec& y, const RVec& z, const RVec& s) {
    return {p.col_scale.cwiseProduct(x), p.eq_scale.cwiseProduct(y), p.cone_scale.cwiseProduct(z),
            s.cwiseQuotient(p.cone_scale)};
}

inline double safe_norm(const RVec& v) { return v.size() ? v.norm() : 0.0; }

}  // namespace detail

/// Solves with the in-repo homogeneous self-dual interior-point method.
inline Result solve_interior_point(const conic::ConicProgram& program, const Settings& settings = {}) {
    using namespace detail;
    settings.validate();
    const auto t_start = std::chrono::steady_clock::now();
    auto elapsed = [&t_start] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    };

    const Prepared p = prepare(program, settings.ruiz_passes);
    Result res;
    const int n = p.n;
    const int pe = static_cast<int>(p.eq_rows.size());
    const int m = p.cone.dim();

    auto to_program_rows = [&p](const RVec& eq_part, const RVec& cone_part) {
        RVec out = RVec::Zero(p.rows);
        for (std::size_t i = 0; i < p.eq_rows.size(); ++i) out(p.eq_rows[i]) = eq_part(static_cast<Eigen::Index>(i));
        for (std::size_t i = 0; i < p.cone_rows.size(); ++i)
            out(p.cone_rows[i]) = cone_part(static_cast<Eigen::Index>(i));
        return out;
    };

    if (!p.infeasible_row.empty()) {
        res.status = Status::PrimalInfeasible;
        res.message = "presolve: " + p.infeasible_row;
        res.solve_seconds = elapsed();
        return res;
    }

    const double nb = std::max(1.0, safe_norm(p.b0));
    const double nh = std::max(1.0, safe_norm(p.h0));
    const double nc = std::max(1.0, safe_norm(p.c0));

    Kkt kkt(p.a, p.g, p.cone);

    // Starting point: least-norm primal slack and dual point under W = I, shifted into the interior.
    RVec x, y, z, s;
    {
        const Scaling ident = p.cone.identity_scaling();
        if (!kkt.factor(ident)) {
            res.status = Status::Numerical;
            res.message = "initial KKT system is singular (rank-deficient constraints?)";
            res.solve_seconds = elapsed();
            return res;
        }
        RVec x0, y0, z0;
        kkt.solve(RVec::Zero(n), p.b, p.h, x0, y0, z0);
        x = x0;
        s = -z0;
        kkt.solve(-p.c, RVec::Zero(pe), RVec::Zero(m), x0, y0, z0);
        y = y0;
        z = z0;
        const RVec e = p.cone.identity();
        if (m > 0) {
            const double ts = -p.cone.margin(s);
            if (ts >= -1e-8 * std::max(1.0, s.norm())) s += (1.0 + ts) * e;
            const double tz = -p.cone.margin(z);
            if (tz >= -1e-8 * std::max(1.0, z.norm())) z += (1.0 + tz) * e;
        }
    }
    double tau = 1.0;
    double kappa = 1.0;
    const RVec e = p.cone.identity();
    const double nu = static_cast<double>(p.cone.degree());

    struct Snapshot {
        double score = kInf;
        RVec x, y, z, s;
        double tau = 1.0;
        IterationLog log;
    } best;

    auto fill_from = [&](const RVec& xs, const RVec& ys, const RVec& zs, const RVec& ss, double t, Result& r) {
        const Unscaled u = unscale(p, xs, ys, zs, ss);
        r.x = u.x / t;
        r.y = to_program_rows(u.y / t, u.z / t);
        r.s = to_program_rows(RVec::Zero(pe), u.s / t);
    };

    auto report = [&](const char* tag, const IterationLog& lg) {
        if (!settings.verbose) return;
        std::fprintf(stderr, "%4d %s pcost % .8e dcost % .8e gap %.2e pres %.2e dres %.2e tau %.2e kappa %.2e step %.3f\n",
                     lg.iteration, tag, lg.primal_objective, lg.dual_objective, lg.gap, lg.primal_residual,
                     lg.dual_residual, lg.tau, lg.kappa, lg.step);
    };

    double last_step = 0.0;
    int stalls = 0;
    std::optional<Scaling> next_w;
    for (int iter = 0;; ++iter) {
        // Residuals of the embedding (scaled space).
        const RVec rx = p.a.transpose() * y + p.g.transpose() * z + tau * p.c;
        const RVec ry = p.a * x - tau * p.b;
        const RVec rz = p.g * x + s - tau * p.h;
        const double cx = p.c.dot(x);
        const double by_hz = p.b.dot(y) + p.h.dot(z);
        const double rt = kappa + cx + by_hz;

        // Convergence tests in original units.
        const Unscaled u = unscale(p, x, y, z, s);
        const double pcost = cx / tau;
        const double dcost = -by_hz / tau;
        const double gap = s.dot(z) / (tau * tau);
        // Residuals relative to the size of the terms they balance.
        const RVec ax = p.a0 * u.x / tau;
        const RVec gx = p.g0 * u.x / tau;
        const double pres = std::max(safe_norm(RVec(ax - p.b0)) / std::max(nb, safe_norm(ax)),
                                     safe_norm(RVec(gx + u.s / tau - p.h0)) / std::max({nh, safe_norm(gx), safe_norm(u.s) / tau}));
        const RVec dual_lin = p.a0.transpose() * u.y + p.g0.transpose() * u.z;
        const double dres = (dual_lin / tau + p.c0).norm() / std::max(nc, dual_lin.norm() / tau);
        const double rel_gap = gap / std::max(1.0, std::min(std::abs(pcost), std::abs(dcost)));

        IterationLog lg{iter, pcost, dcost, gap, pres, dres, tau, kappa, last_step};
        if (settings.record_history) res.history.push_back(lg);
        report("", lg);
        res.iterations = iter;

        const double score = std::max({pres / settings.tol_feas, dres / settings.tol_feas, rel_gap / settings.tol_gap});
        if (std::isfinite(score) && score < best.score) best = {score, x, y, z, s, tau, lg};
        const auto reduced_ok = [&](const IterationLog& l) {
            const double rg = l.gap / std::max(1.0, std::min(std::abs(l.primal_objective), std::abs(l.dual_objective)));
            return l.primal_residual <= settings.reduced_tol_feas && l.dual_residual <= settings.reduced_tol_feas &&
                   rg <= settings.reduced_tol_gap;
        };

        auto finish_optimal = [&] {
            res.status = Status::Optimal;
            fill_from(x, y, z, s, tau, res);
            res.primal_objective = pcost;
            res.dual_objective = dcost;
            res.gap = gap;
            res.rel_gap = rel_gap;
            res.primal_residual = pres;
            res.dual_residual = dres;
        };

        if (pres <= settings.tol_feas && dres <= settings.tol_feas && rel_gap <= settings.tol_gap) {
            finish_optimal();
            break;
        }
        // Infeasibility certificates.
        if (by_hz < 0.0) {
            const double pinf = dual_lin.norm() / nc / (-by_hz);
            if (pinf <= settings.tol_feas) {
                res.status = Status::PrimalInfeasible;
                const double scale = -by_hz;
                res.y = to_program_rows(u.y / scale, u.z / scale);
                res.dual_residual = pinf;
                res.message = "dual ray certifies primal infeasibility";
                break;
            }
        }
        if (cx < 0.0) {
            const double dinf = std::max(safe_norm(RVec(p.a0 * u.x)) / nb, safe_norm(RVec(p.g0 * u.x + u.s)) / nh) / (-cx);
            if (dinf <= settings.tol_feas) {
                res.status = Status::DualInfeasible;
                res.x = u.x / (-cx);
                res.s = to_program_rows(RVec::Zero(pe), u.s / (-cx));
                res.primal_residual = dinf;
                res.message = "primal ray certifies dual infeasibility";
                break;
            }
        }
        if (iter - best.log.iteration >= settings.stall_iters && reduced_ok(best.log)) {
            res.status = Status::AlmostOptimal;
            res.message = "progress stalled; best iterate meets the reduced tolerances";
            break;
        }
        if (iter >= settings.max_iters) {
            res.status = Status::IterLimit;
            res.message = "iteration limit reached";
            break;
        }

        std::optional<Scaling> w_opt = next_w ? std::move(next_w) : p.cone.nt_scaling(s, z);
        next_w.reset();
        if (!w_opt || !kkt.factor(*w_opt)) {
            res.status = Status::Numerical;
            res.message = !w_opt ? "iterate left the cone interior" : "KKT factorization failed";
            break;
        }
        const Scaling& w = *w_opt;
        const RVec& lambda = w.lambda;
        const double mu = (s.dot(z) + tau * kappa) / (nu + 1.0);

        RVec x1, y1, z1;
        kkt.solve(-p.c, p.b, p.h, x1, y1, z1);
        const double qu1 = p.c.dot(x1) + p.b.dot(y1) + p.h.dot(z1);

        RVec dsa, dza;
        double dtau_a = 0.0, dkappa_a = 0.0;
        double sigma = 0.0;
        RVec dx, dy, dz, ds;
        double dtau = 0.0, dkappa = 0.0, step = 0.0;
        const RVec lambda_sq = m > 0 ? p.cone.product(lambda, lambda) : RVec();
        for (int phase = 0; phase < 2; ++phase) {
            const double eta = phase == 0 ? 1.0 : 1.0 - sigma;
            RVec rc = -lambda_sq;
            double rtk = -tau * kappa;
            if (phase == 1) {
                if (m > 0) rc += -p.cone.product(dsa, dza) + sigma * mu * e;
                rtk += -dtau_a * dkappa_a + sigma * mu;
            }
            const RVec lrc = m > 0 ? p.cone.inverse_product(lambda, rc) : RVec();
            RVec x2, y2, z2;
            const RVec r3 = m > 0 ? RVec(-eta * rz - p.cone.apply(w, WOp::Wt, lrc)) : RVec();
            kkt.solve(-eta * rx, -eta * ry, r3, x2, y2, z2);
            const double qu2 = p.c.dot(x2) + p.b.dot(y2) + p.h.dot(z2);
            dtau = (-eta * rt - rtk / tau - qu2) / (qu1 - kappa / tau);
            dx = x2 + dtau * x1;
            dy = y2 + dtau * y1;
            dz = z2 + dtau * z1;
            dkappa = (rtk - kappa * dtau) / tau;
            RVec dzt, dst;
            double amax = kInf;
            if (m > 0) {
                dzt = p.cone.apply(w, WOp::W, dz);
                dst = lrc - dzt;
                amax = std::min(p.cone.max_step(lambda, dst), p.cone.max_step(lambda, dzt));
            }
            if (dtau < 0.0) amax = std::min(amax, -tau / dtau);
            if (dkappa < 0.0) amax = std::min(amax, -kappa / dkappa);
            if (phase == 0) {
                const double aa = std::min(1.0, amax);
                sigma = std::pow(1.0 - aa, 3);
                dsa = dst;
                dza = dzt;
                dtau_a = dtau;
                dkappa_a = dkappa;
            } else {
                step = std::min(1.0, 0.99 * amax);
                ds = m > 0 ? RVec(p.cone.apply(w, WOp::Wt, dst)) : RVec();
            }
        }
        if (!(std::isfinite(step) && dx.allFinite() && dz.allFinite() && std::isfinite(dtau))) {
            res.status = Status::Numerical;
            res.message = "non-finite search direction";
            break;
        }
        // The step is computed in the scaled space; rounding can still push the
        // unscaled iterate out of the cone near convergence. Backtrack until the
        // next scaling exists.
        if (m > 0) {
            for (int tries = 0;; ++tries) {
                next_w = p.cone.nt_scaling(RVec(s + step * ds), RVec(z + step * dz));
                if (next_w || tries == 20) break;
                step *= 0.5;
            }
            if (!next_w) {
                res.status = Status::Numerical;
                res.message = "iterate left the cone interior";
                break;
            }
        }
        x += step * dx;
        y += step * dy;
        if (m > 0) {
            z += step * dz;
            s += step * ds;
        }
        tau += step * dtau;
        kappa += step * dkappa;
        last_step = step;
        stalls = step < 1e-8 ? stalls + 1 : 0;
        if (stalls >= 3) {
            res.status = Status::Numerical;
            res.message = "step length collapsed";
            break;
        }
    }

    if (res.status == Status::IterLimit || res.status == Status::Numerical || res.status == Status::AlmostOptimal) {
        if (std::isfinite(best.score)) {
            const double rg = best.log.gap / std::max(1.0, std::min(std::abs(best.log.primal_objective),
                                                                  std::abs(best.log.dual_objective)));
            if (best.log.primal_residual <= settings.reduced_tol_feas &&
                best.log.dual_residual <= settings.reduced_tol_feas && rg <= settings.reduced_tol_gap) {
                if (res.status != Status::AlmostOptimal) res.message += "; best iterate meets the reduced tolerances";
                res.status = Status::AlmostOptimal;
            }
            fill_from(best.x, best.y, best.z, best.s, best.tau, res);
            res.primal_objective = best.log.primal_objective;
            res.dual_objective = best.log.dual_objective;
            res.gap = best.log.gap;
            res.rel_gap = best.log.gap / std::max(1.0, std::min(std::abs(best.log.primal_objective),
                                                               std::abs(best.log.dual_objective)));
            res.primal_residual = best.log.primal_residual;
            res.dual_residual = best.log.dual_residual;
        }
    }
    res.solve_seconds = elapsed();
    return res;
}

/// Seam for substituting another conic solver behind the same contract.
class Backend {
public:
    virtual ~Backend() = default;
    virtual std::string name() const = 0;
    virtual Result solve(const conic::ConicProgram& program, const Settings& settings) const = 0;
};

class InteriorPointBackend final : public Backend {
public:
    std::string name() const override { return "isac-hsde-ipm"; }
    Result solve(const conic::ConicProgram& program, const Settings& settings) const override {
        return solve_interior_point(program, settings);
    }
};

inline Result solve(const conic::ConicProgram& program, const Settings& settings = {}) {
    return solve_interior_point(program, settings);
}

}  // namespace isac::solver
