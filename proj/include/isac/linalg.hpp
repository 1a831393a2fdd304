#pragma once

// Dense linear-algebra helpers shared by every module: Hermitian validation,
// symmetric vectorization (svec) and the real embedding of complex Hermitian
// matrices used to express complex PSD constraints with real PSD cones.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <vector>

#include "isac/errors.hpp"

namespace isac {

using cd = std::complex<double>;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using RVec = Eigen::VectorXd;
using RMat = Eigen::MatrixXd;

inline constexpr double kPi = 3.14159265358979323846;
inline const double kSqrt2 = std::sqrt(2.0);

/// Tolerance for accepting a matrix as Hermitian, relative to its Frobenius norm.
inline constexpr double kHermitianTol = 1e-9;

/// Validates that `x` is square and Hermitian within `rel_tol * ||x||_F` and returns (x + x^H)/2.
inline CMat hermitian_part(const CMat& x, double rel_tol = kHermitianTol) {
    if (x.rows() != x.cols()) {
        throw ContractError("hermitian_part: matrix is not square");
    }
    const double scale = x.norm();
    const double skew = (x - x.adjoint()).norm();
    if (skew > rel_tol * scale) {
        throw ContractError("hermitian_part: matrix is not Hermitian (skew residual " +
                            std::to_string(skew) + ")");
    }
    return (x + x.adjoint()) * 0.5;
}

/// Ascending eigenvalues of a Hermitian matrix.
inline RVec hermitian_eigenvalues(const CMat& x) {
    Eigen::SelfAdjointEigenSolver<CMat> es(x, Eigen::EigenvaluesOnly);
    return es.eigenvalues();
}

inline double min_eigenvalue(const CMat& x) {
    if (x.size() == 0) return 0.0;
    return hermitian_eigenvalues(x)(0);
}

inline double real_trace(const CMat& x) { return x.trace().real(); }

/// h^H X h for Hermitian X (imaginary part is rounding noise and is dropped).
inline double quad_form(const CVec& h, const CMat& x) { return (h.adjoint() * x * h)(0, 0).real(); }

// ---------------------------------------------------------------------------
// svec: lower triangle, column-major, off-diagonals scaled by sqrt(2) so that
// svec(U).dot(svec(V)) == trace(U V) for symmetric U, V.

inline int svec_size(int side) { return side * (side + 1) / 2; }

/// Position of entry (i, j), i >= j, inside svec of a side-n matrix.
inline int svec_index(int side, int i, int j) {
    // Column j starts after columns 0..j-1 which hold side, side-1, ... entries.
    return j * side - j * (j - 1) / 2 + (i - j);
}

inline RVec svec(const RMat& u) {
    const int n = static_cast<int>(u.rows());
    RVec out(svec_size(n));
    int k = 0;
    for (int j = 0; j < n; ++j) {
        out(k++) = u(j, j);
        for (int i = j + 1; i < n; ++i) out(k++) = kSqrt2 * 0.5 * (u(i, j) + u(j, i));
    }
    return out;
}

template <typename Derived>
RMat smat(const Eigen::MatrixBase<Derived>& v, int side) {
    RMat u(side, side);
    int k = 0;
    for (int j = 0; j < side; ++j) {
        u(j, j) = v(k++);
        for (int i = j + 1; i < side; ++i) {
            const double x = v(k++) / kSqrt2;
            u(i, j) = x;
            u(j, i) = x;
        }
    }
    return u;
}

/// Side length n such that svec_size(n) == len, or -1.
inline int svec_side(int len) {
    const int n = static_cast<int>(std::lround((std::sqrt(8.0 * len + 1.0) - 1.0) / 2.0));
    return svec_size(n) == len ? n : -1;
}

// ---------------------------------------------------------------------------
// Real embedding of complex Hermitian matrices:
//   X = A + jB  <->  E(X) = [[A, -B], [B, A]],  X PSD  <=>  E(X) PSD.
// Parameter vector of X (length n^2): diagonal reals first, then for every
// strictly-lower pair (i > j) in column-major order the pair (Re X_ij, Im X_ij).

inline int herm_param_count(int n) { return n * n; }

struct HermParamEntry {
    int i;
    int j;
    bool imaginary;
};

/// Meaning of each entry of the Hermitian parameter vector.
inline std::vector<HermParamEntry> herm_param_layout(int n) {
    std::vector<HermParamEntry> layout;
    layout.reserve(static_cast<std::size_t>(n) * n);
    for (int i = 0; i < n; ++i) layout.push_back({i, i, false});
    for (int j = 0; j < n; ++j) {
        for (int i = j + 1; i < n; ++i) {
            layout.push_back({i, j, false});
            layout.push_back({i, j, true});
        }
    }
    return layout;
}

inline RVec herm_to_params(const CMat& x) {
    const int n = static_cast<int>(x.rows());
    RVec p(herm_param_count(n));
    int k = 0;
    for (int i = 0; i < n; ++i) p(k++) = x(i, i).real();
    for (int j = 0; j < n; ++j) {
        for (int i = j + 1; i < n; ++i) {
            p(k++) = x(i, j).real();
            p(k++) = x(i, j).imag();
        }
    }
    return p;
}

template <typename Derived>
CMat params_to_herm(const Eigen::MatrixBase<Derived>& p, int n) {
    CMat x = CMat::Zero(n, n);
    int k = 0;
    for (int i = 0; i < n; ++i) x(i, i) = cd(p(k++), 0.0);
    for (int j = 0; j < n; ++j) {
        for (int i = j + 1; i < n; ++i) {
            const double re = p(k++);
            const double im = p(k++);
            x(i, j) = cd(re, im);
            x(j, i) = cd(re, -im);
        }
    }
    return x;
}

inline RMat real_embed(const CMat& x) {
    const Eigen::Index n = x.rows();
    RMat e(2 * n, 2 * n);
    e.topLeftCorner(n, n) = x.real();
    e.topRightCorner(n, n) = -x.imag();
    e.bottomLeftCorner(n, n) = x.imag();
    e.bottomRightCorner(n, n) = x.real();
    return e;
}

/// Inverse of real_embed; averages the two copies of each block.
inline CMat real_unembed(const RMat& e) {
    const Eigen::Index n = e.rows() / 2;
    const RMat re = 0.5 * (e.topLeftCorner(n, n) + e.bottomRightCorner(n, n));
    const RMat im = 0.5 * (e.bottomLeftCorner(n, n) - e.topRightCorner(n, n));
    CMat x(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) x(i, j) = cd(re(i, j), im(i, j));
    return x;
}

/// ||E J - J E||_F / (1 + ||E||_F) with J = [[0, -I], [I, 0]]: zero iff E is a real embedding.
inline double symplectic_defect(const RMat& e) {
    const Eigen::Index n = e.rows() / 2;
    RMat j = RMat::Zero(2 * n, 2 * n);
    j.topRightCorner(n, n) = -RMat::Identity(n, n);
    j.bottomLeftCorner(n, n) = RMat::Identity(n, n);
    return (e * j - j * e).norm() / (1.0 + e.norm());
}

/// Linear coefficients c such that v^H X v == c . herm_to_params(X) for every Hermitian X.
inline RVec quad_form_coeffs(const CVec& v) {
    const int n = static_cast<int>(v.size());
    RVec c(herm_param_count(n));
    int k = 0;
    for (int i = 0; i < n; ++i) c(k++) = std::norm(v(i));
    for (int j = 0; j < n; ++j) {
        for (int i = j + 1; i < n; ++i) {
            // conj(v_i) X_ij v_j + conj(v_j) X_ji v_i = 2 Re(conj(v_i) v_j X_ij)
            const cd w = std::conj(v(i)) * v(j);
            c(k++) = 2.0 * w.real();
            c(k++) = -2.0 * w.imag();
        }
    }
    return c;
}

/// Coefficients of trace(X) in the Hermitian parameter vector.
inline RVec trace_coeffs(int n) {
    RVec c = RVec::Zero(herm_param_count(n));
    c.head(n).setOnes();
    return c;
}

}  // namespace isac
