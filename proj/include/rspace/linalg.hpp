#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <utility>

#include "rspace/errors.hpp"
#include "rspace/tolerances.hpp"

namespace rspace {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

inline void require_finite(const Matrix& m, const char* where) {
    if (!m.allFinite()) throw NonFiniteValue(std::string("non-finite entries in ") + where);
}

/// A linear subspace of R^n held as an orthonormal column basis.  Subspaces
/// are canonicalised at construction so that equality is projector distance,
/// never basis comparison.
class Subspace {
  public:
    Subspace() = default;

    /// Wraps an already-orthonormal basis (checked).
    static Subspace from_orthonormal(Matrix basis, double tol = rank_tol()) {
        require_finite(basis, "Subspace basis");
        Subspace s;
        s.ambient_ = static_cast<int>(basis.rows());
        s.tol_ = tol;
        if (basis.cols() > 0) {
            Matrix g = basis.transpose() * basis;
            if ((g - Matrix::Identity(basis.cols(), basis.cols())).norm() > 1e-12)
                throw Error("Subspace::from_orthonormal: basis not orthonormal");
        }
        s.basis_ = std::move(basis);
        return s;
    }

    int ambient_dim() const { return ambient_; }
    int dim() const { return static_cast<int>(basis_.cols()); }
    const Matrix& basis() const { return basis_; }
    double tol() const { return tol_; }

    /// Orthogonal projector onto the subspace.
    Matrix projector() const { return basis_ * basis_.transpose(); }

    /// Distance of a vector to the subspace.
    double distance_to(const Vector& v) const { return (v - basis_ * (basis_.transpose() * v)).norm(); }

    bool contains(const Vector& v, double eps) const {
        double n = v.norm();
        if (n == 0) return true;
        return distance_to(v) <= eps * std::max(1.0, n);
    }

  private:
    int ambient_ = 0;
    double tol_ = 1e-9;
    Matrix basis_;  // ambient_ x k, orthonormal columns
};

/// Orthonormal basis of the column span; numerical rank decided by singular
/// values above tol * (largest singular value).  A zero matrix yields the
/// zero subspace.
inline Subspace subspace_from_spanning(const Matrix& vectors, double tol = rank_tol()) {
    require_finite(vectors, "subspace_from_spanning");
    if (tol <= 0) throw Error("subspace_from_spanning: tol must be positive");
    const int n = static_cast<int>(vectors.rows());
    if (vectors.cols() == 0) return Subspace::from_orthonormal(Matrix::Zero(n, 0), tol);
    Eigen::JacobiSVD<Matrix> svd(vectors, Eigen::ComputeThinU);
    const auto& sv = svd.singularValues();
    double smax = sv.size() ? sv(0) : 0.0;
    int r = 0;
    for (int i = 0; i < sv.size(); ++i)
        if (sv(i) > tol * smax) ++r;
    if (smax == 0.0) r = 0;
    return Subspace::from_orthonormal(svd.matrixU().leftCols(r), tol);
}

/// Frobenius norm of the difference of orthogonal projectors.
inline double subspace_distance(const Subspace& a, const Subspace& b) {
    if (a.ambient_dim() != b.ambient_dim())
        throw DimensionMismatch("subspace_distance: ambient dimensions differ");
    return (a.projector() - b.projector()).norm();
}

/// Orthonormal basis of the nullspace of m (rows may exceed columns).
inline Subspace nullspace(const Matrix& m, double tol = rank_tol()) {
    require_finite(m, "nullspace");
    const int n = static_cast<int>(m.cols());
    if (m.rows() == 0) return Subspace::from_orthonormal(Matrix::Identity(n, n), tol);
    Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    double smax = sv.size() ? sv(0) : 0.0;
    int r = 0;
    for (int i = 0; i < sv.size(); ++i)
        if (sv(i) > tol * smax) ++r;
    if (smax == 0.0) r = 0;
    return Subspace::from_orthonormal(svd.matrixV().rightCols(n - r), tol);
}

/// A \cap B via the nullspace of the stacked projector-complement system.
inline Subspace subspace_intersect(const Subspace& a, const Subspace& b, double tol = rank_tol()) {
    if (a.ambient_dim() != b.ambient_dim())
        throw DimensionMismatch("subspace_intersect: ambient dimensions differ");
    const int n = a.ambient_dim();
    Matrix stacked(2 * n, n);
    stacked.topRows(n) = Matrix::Identity(n, n) - a.projector();
    stacked.bottomRows(n) = Matrix::Identity(n, n) - b.projector();
    return nullspace(stacked, tol);
}

/// Direct sum of the spans.
inline Subspace subspace_sum(const Subspace& a, const Subspace& b, double tol = rank_tol()) {
    if (a.ambient_dim() != b.ambient_dim())
        throw DimensionMismatch("subspace_sum: ambient dimensions differ");
    Matrix joined(a.ambient_dim(), a.dim() + b.dim());
    joined.leftCols(a.dim()) = a.basis();
    joined.rightCols(b.dim()) = b.basis();
    return subspace_from_spanning(joined, tol);
}

/// Matrix exponential.  Nilpotent inputs with M^k = 0 for k <= 4 take the
/// exact finite series; everything else goes through scaling-and-squaring
/// with a Taylor kernel.
inline Matrix mat_exp(const Matrix& m) {
    require_finite(m, "mat_exp");
    if (m.rows() != m.cols()) throw DimensionMismatch("mat_exp: matrix not square");
    const int n = static_cast<int>(m.rows());
    const Matrix id = Matrix::Identity(n, n);
    double scale = m.cwiseAbs().maxCoeff();
    if (scale == 0.0) return id;

    // Nilpotency probe up to order 4.
    Matrix pw = m;
    Matrix series = id + m;
    double fact = 1.0;
    for (int k = 2; k <= 4; ++k) {
        pw = pw * m;
        fact *= k;
        if (pw.norm() <= 1e-14 * std::pow(scale, k) * std::pow(double(n), k - 1)) return series;
        series += pw / fact;
    }

    int squarings = 0;
    double nrm = m.lpNorm<1>();
    while (nrm > 0.5) {
        nrm /= 2;
        ++squarings;
    }
    Matrix a = m / std::pow(2.0, squarings);
    Matrix term = id;
    Matrix sum = id;
    for (int k = 1; k <= 24; ++k) {
        term = term * a / double(k);
        sum += term;
        if (term.norm() <= 1e-17 * sum.norm()) break;
    }
    for (int i = 0; i < squarings; ++i) sum = sum * sum;
    require_finite(sum, "mat_exp result");
    return sum;
}

/// Minimum-norm least-squares solution and 2-norm residual (Frobenius for
/// multiple right-hand sides).
inline std::pair<Matrix, double> least_squares(const Matrix& a, const Matrix& b) {
    require_finite(a, "least_squares A");
    require_finite(b, "least_squares b");
    if (a.rows() != b.rows()) throw DimensionMismatch("least_squares: incompatible shapes");
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(a);
    Matrix x = cod.solve(b);
    double residual = (a * x - b).norm();
    return {std::move(x), residual};
}

/// Eigenvalue signature (positives, negatives) of a symmetric matrix, with
/// zeros decided by tol relative to the largest magnitude.
inline std::pair<int, int> symmetric_signature(const Matrix& s, double tol = rank_tol()) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (s + s.transpose()));
    const auto& ev = es.eigenvalues();
    double scale = ev.cwiseAbs().maxCoeff();
    int pos = 0, neg = 0;
    for (int i = 0; i < ev.size(); ++i) {
        if (ev(i) > tol * scale) ++pos;
        else if (ev(i) < -tol * scale) ++neg;
    }
    return {pos, neg};
}

inline int numerical_rank(const Matrix& m, double tol = rank_tol()) {
    if (m.size() == 0) return 0;
    Eigen::JacobiSVD<Matrix> svd(m);
    const auto& sv = svd.singularValues();
    double smax = sv.size() ? sv(0) : 0.0;
    if (smax == 0.0) return 0;
    int r = 0;
    for (int i = 0; i < sv.size(); ++i)
        if (sv(i) > tol * smax) ++r;
    return r;
}

}  // namespace rspace
