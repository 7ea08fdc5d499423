#pragma once

// Dense kernels used by the optimizer. Matrices are Eigen column-major
// double matrices throughout; every kernel is a pure function of its inputs.

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <string>

#include "jsmc/error.hpp"

namespace jsmc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct Tolerances {
    /// Largest |m - m^T| (relative to max(1, max|m|)) accepted as symmetric.
    double symmetry = 1e-10;
    /// Smallest |lambda_a + lambda_b| (relative to the coefficient scale)
    /// before a Sylvester system is declared singular.
    double sylvester_gap = 1e-12;
    /// Smallest squared Cholesky pivot (relative to max diagonal entry)
    /// before a matrix is declared not positive definite.
    double spd_pivot = 1e-13;
};

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

inline void require_finite(const Matrix& m, const char* what) {
    if (!m.allFinite())
        throw InputError(std::string(what) + ": matrix has non-finite entries");
}

inline void require_square(const Matrix& m, const char* what) {
    if (m.rows() != m.cols())
        throw InputError(std::string(what) + ": expected a square matrix, got " +
                         std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
}

inline bool is_symmetric(const Matrix& m, double tol = Tolerances{}.symmetry) {
    if (m.rows() != m.cols()) return false;
    if (m.size() == 0) return true;
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    return (m - m.transpose()).cwiseAbs().maxCoeff() <= tol * scale;
}

// ---------------------------------------------------------------------------
// Singular value decomposition
// ---------------------------------------------------------------------------

/// Thin SVD, m = u * diag(sigma) * vt, sigma nonincreasing.
struct SvdFactors {
    Matrix u;
    Vector sigma;
    Matrix vt;

    Matrix reconstruct() const { return u * sigma.asDiagonal() * vt; }
};

inline SvdFactors svd(const Matrix& m) {
    require_finite(m, "svd");
    SvdFactors out;
    const Eigen::Index k = std::min(m.rows(), m.cols());
    if (k == 0) {
        out.u = Matrix(m.rows(), 0);
        out.sigma = Vector(0);
        out.vt = Matrix(0, m.cols());
        return out;
    }
    Eigen::BDCSVD<Matrix> dec(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (dec.info() != Eigen::Success)
        throw NonConvergenceError("svd: decomposition did not converge");
    out.u = dec.matrixU();
    out.sigma = dec.singularValues();
    out.vt = dec.matrixV().transpose();
    if (!out.u.allFinite() || !out.sigma.allFinite() || !out.vt.allFinite())
        throw NonConvergenceError("svd: decomposition produced non-finite factors");
    return out;
}

inline Vector singular_values(const Matrix& m) {
    require_finite(m, "singular_values");
    if (m.size() == 0) return Vector(0);
    Eigen::BDCSVD<Matrix> dec(m);
    if (dec.info() != Eigen::Success)
        throw NonConvergenceError("singular_values: decomposition did not converge");
    return dec.singularValues();
}

inline double nuclear_norm(const Matrix& m) { return singular_values(m).sum(); }

/// Result of singular value shrinkage: the shrunk matrix and its spectrum.
struct Shrinkage {
    Matrix value;
    Vector sigma;  // max(sigma_i(m) - tau, 0), nonincreasing

    double nuclear_norm() const { return sigma.sum(); }
};

/// Proximal map of tau * ||.||_*: argmin_c tau ||c||_* + 0.5 ||c - m||_F^2.
inline Shrinkage shrink_singular_values(const Matrix& m, double tau) {
    if (!(tau >= 0.0) || !std::isfinite(tau))
        throw InputError("svt: threshold must be finite and nonnegative");
    if (tau == 0.0) {
        Shrinkage out{m, singular_values(m)};
        return out;
    }
    const SvdFactors f = svd(m);
    Shrinkage out;
    out.sigma = (f.sigma.array() - tau).max(0.0).matrix();
    Eigen::Index rank = 0;
    while (rank < out.sigma.size() && out.sigma(rank) > 0.0) ++rank;
    out.value = f.u.leftCols(rank) * out.sigma.head(rank).asDiagonal() * f.vt.topRows(rank);
    if (rank == 0) out.value = Matrix::Zero(m.rows(), m.cols());
    return out;
}

inline Matrix svt(const Matrix& m, double tau) { return shrink_singular_values(m, tau).value; }

// ---------------------------------------------------------------------------
// Symmetric eigendecomposition
// ---------------------------------------------------------------------------

struct SymEig {
    Vector values;   // ascending
    Matrix vectors;  // orthonormal columns
};

inline SymEig sym_eig(const Matrix& m, double symmetry_tol = Tolerances{}.symmetry) {
    require_square(m, "sym_eig");
    require_finite(m, "sym_eig");
    if (!is_symmetric(m, symmetry_tol)) throw InputError("sym_eig: matrix is not symmetric");
    if (m.size() == 0) return {Vector(0), Matrix(0, 0)};
    Eigen::SelfAdjointEigenSolver<Matrix> es(m);
    if (es.info() != Eigen::Success)
        throw NonConvergenceError("sym_eig: eigensolver did not converge");
    return {es.eigenvalues(), es.eigenvectors()};
}

// ---------------------------------------------------------------------------
// SPD solves
// ---------------------------------------------------------------------------

/// Cholesky factorization of a symmetric positive definite matrix, reusable
/// across right-hand sides.
class SpdSolver {
public:
    explicit SpdSolver(const Matrix& a, const Tolerances& tol = {}) {
        require_square(a, "solve_spd");
        require_finite(a, "solve_spd");
        if (!is_symmetric(a, tol.symmetry)) throw InputError("solve_spd: matrix is not symmetric");
        llt_.compute(a);
        if (llt_.info() != Eigen::Success)
            throw NotPositiveDefiniteError("solve_spd: matrix is not positive definite");
        if (a.rows() > 0) {
            const double scale = a.diagonal().cwiseAbs().maxCoeff();
            const Vector pivots = llt_.matrixLLT().diagonal();
            const double min_pivot_sq = pivots.cwiseProduct(pivots).minCoeff();
            if (!(scale > 0.0) || min_pivot_sq <= tol.spd_pivot * scale)
                throw NotPositiveDefiniteError(
                    "solve_spd: matrix is numerically singular (not positive definite)");
        }
    }

    Eigen::Index size() const { return llt_.rows(); }

    Matrix solve(const Matrix& rhs) const {
        if (rhs.rows() != llt_.rows())
            throw InputError("solve_spd: right-hand side has " + std::to_string(rhs.rows()) +
                             " rows, expected " + std::to_string(llt_.rows()));
        require_finite(rhs, "solve_spd");
        return llt_.solve(rhs);
    }

private:
    Eigen::LLT<Matrix> llt_;
};

inline Matrix solve_spd(const Matrix& a, const Matrix& rhs, const Tolerances& tol = {}) {
    return SpdSolver(a, tol).solve(rhs);
}

// ---------------------------------------------------------------------------
// Sylvester equation a*s + s*b = q
// ---------------------------------------------------------------------------

namespace detail {

inline void check_sylvester_shapes(const Matrix& a, const Matrix& b, const Matrix& q) {
    require_square(a, "solve_sylvester(a)");
    require_square(b, "solve_sylvester(b)");
    if (q.rows() != a.rows() || q.cols() != b.rows())
        throw InputError("solve_sylvester: q must be " + std::to_string(a.rows()) + "x" +
                         std::to_string(b.rows()));
    require_finite(a, "solve_sylvester(a)");
    require_finite(b, "solve_sylvester(b)");
    require_finite(q, "solve_sylvester(q)");
}

inline double coefficient_scale(const Matrix& a, const Matrix& b) {
    const double sa = a.size() ? a.cwiseAbs().maxCoeff() : 0.0;
    const double sb = b.size() ? b.cwiseAbs().maxCoeff() : 0.0;
    return std::max({1.0, sa, sb});
}

} // namespace detail

/// Sylvester solver for symmetric a and b. Both coefficients are
/// diagonalized once; each solve then costs four matrix products.
class SymmetricSylvesterSolver {
public:
    SymmetricSylvesterSolver(const Matrix& a, const Matrix& b, const Tolerances& tol = {}) {
        require_square(a, "solve_sylvester(a)");
        require_square(b, "solve_sylvester(b)");
        const SymEig ea = sym_eig(a, tol.symmetry);
        const SymEig eb = sym_eig(b, tol.symmetry);
        pa_ = ea.vectors;
        pb_ = eb.vectors;
        denom_ = ea.values.replicate(1, eb.values.size()) +
                 eb.values.transpose().replicate(ea.values.size(), 1);
        if (denom_.size() > 0) {
            const double gap = denom_.cwiseAbs().minCoeff();
            if (gap <= tol.sylvester_gap * detail::coefficient_scale(a, b))
                throw SingularSystemError(
                    "solve_sylvester: spectra of a and -b overlap (singular system)");
        }
    }

    Matrix solve(const Matrix& q) const {
        if (q.rows() != pa_.rows() || q.cols() != pb_.rows())
            throw InputError("solve_sylvester: q has wrong shape");
        require_finite(q, "solve_sylvester(q)");
        Matrix t = pa_.transpose() * q * pb_;
        t.array() /= denom_.array();
        return pa_ * t * pb_.transpose();
    }

private:
    Matrix pa_, pb_, denom_;
};

/// Bartels-Stewart on complex Schur forms: a = U T U*, b = V R V*, then
/// T x + x R = U* q V is solved column by column by triangular substitution.
inline Matrix solve_sylvester_schur(const Matrix& a, const Matrix& b, const Matrix& q,
                                    const Tolerances& tol = {}) {
    detail::check_sylvester_shapes(a, b, q);
    using CMatrix = Eigen::MatrixXcd;
    const Eigen::Index n = a.rows(), m = b.rows();
    if (n == 0 || m == 0) return Matrix::Zero(n, m);

    Eigen::ComplexSchur<Matrix> sa(a), sb(b);
    if (sa.info() != Eigen::Success || sb.info() != Eigen::Success)
        throw NonConvergenceError("solve_sylvester: Schur reduction did not converge");
    const CMatrix& ua = sa.matrixU();
    const CMatrix& ta = sa.matrixT();
    const CMatrix& ub = sb.matrixU();
    const CMatrix& tb = sb.matrixT();

    const double floor = tol.sylvester_gap * detail::coefficient_scale(a, b);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index k = 0; k < m; ++k)
            if (std::abs(ta(i, i) + tb(k, k)) <= floor)
                throw SingularSystemError(
                    "solve_sylvester: spectra of a and -b overlap (singular system)");

    const CMatrix f = ua.adjoint() * q.cast<std::complex<double>>() * ub;
    CMatrix x(n, m);
    CMatrix shifted = ta;
    for (Eigen::Index k = 0; k < m; ++k) {
        Eigen::VectorXcd rhs = f.col(k);
        if (k > 0) rhs.noalias() -= x.leftCols(k) * tb.col(k).head(k);
        shifted.diagonal() = ta.diagonal().array() + tb(k, k);
        x.col(k) = shifted.triangularView<Eigen::Upper>().solve(rhs);
    }
    return (ua * x * ub.adjoint()).real();
}

/// Solves a*s + s*b = q. Symmetric coefficient pairs take the
/// eigendecomposition route; anything else goes through Bartels-Stewart.
inline Matrix solve_sylvester(const Matrix& a, const Matrix& b, const Matrix& q,
                              const Tolerances& tol = {}) {
    detail::check_sylvester_shapes(a, b, q);
    if (is_symmetric(a, tol.symmetry) && is_symmetric(b, tol.symmetry))
        return SymmetricSylvesterSolver(a, b, tol).solve(q);
    return solve_sylvester_schur(a, b, q, tol);
}

} // namespace jsmc
