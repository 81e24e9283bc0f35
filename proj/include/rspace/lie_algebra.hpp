#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "rspace/linalg.hpp"
#include "rspace/rng.hpp"

namespace rspace {

class LieAlgebraSpace;
using AlgebraPtr = std::shared_ptr<const LieAlgebraSpace>;

/// A real semisimple Lie algebra given by an ordered basis, structure
/// constants and Killing matrix.  A defining representation is kept alongside
/// so that the model dictionaries can do their point recovery on small
/// matrices.
class LieAlgebraSpace : public std::enable_shared_from_this<LieAlgebraSpace> {
  public:
    std::string name;
    int dim = 0;
    std::vector<std::string> basis_labels;
    std::vector<Matrix> ad_basis;     // ad(e_i) as dim x dim matrices
    Matrix killing;                   // dim x dim, symmetric, nondegenerate
    std::vector<Matrix> defining_rep; // N x N matrix per basis element
    int defining_dim = 0;

    /// Matrix of ad(X) in the chosen basis for X given by coordinates.
    Matrix ad(const Vector& coords) const {
        Matrix m = Matrix::Zero(dim, dim);
        for (int i = 0; i < dim; ++i)
            if (coords(i) != 0.0) m += coords(i) * ad_basis[i];
        return m;
    }

    /// Coordinates of [X, Y].
    Vector bracket(const Vector& x, const Vector& y) const { return ad(x) * y; }

    double killing_form(const Vector& x, const Vector& y) const { return x.dot(killing * y); }

    /// Defining-representation matrix of an element.
    Matrix defining(const Vector& coords) const {
        Matrix m = Matrix::Zero(defining_dim, defining_dim);
        for (int i = 0; i < dim; ++i)
            if (coords(i) != 0.0) m += coords(i) * defining_rep[i];
        return m;
    }

    /// Coordinates of a defining-representation matrix (least squares over
    /// the flattened basis; residual must vanish for genuine elements).
    Vector coords_from_defining(const Matrix& m, double* residual = nullptr) const {
        Vector rhs(Eigen::Map<const Vector>(m.data(), m.size()));
        auto [x, r] = least_squares(defining_flat_, rhs);
        if (residual) *residual = r;
        return x;
    }

    void finalize_defining() {
        defining_flat_.resize(defining_dim * defining_dim, dim);
        for (int i = 0; i < dim; ++i)
            defining_flat_.col(i) = Eigen::Map<const Vector>(defining_rep[i].data(), defining_rep[i].size());
    }

  private:
    Matrix defining_flat_;
};

/// An element of a fixed Lie algebra, held by coordinates.
struct AlgebraElement {
    AlgebraPtr algebra;
    Vector coords;

    AlgebraElement() = default;
    AlgebraElement(AlgebraPtr alg, Vector c) : algebra(std::move(alg)), coords(std::move(c)) {
        if (coords.size() != algebra->dim)
            throw DimensionMismatch("AlgebraElement: coordinate length mismatch");
    }

    double norm() const { return coords.norm(); }

    AlgebraElement operator+(const AlgebraElement& o) const { return {algebra, coords + o.coords}; }
    AlgebraElement operator-(const AlgebraElement& o) const { return {algebra, coords - o.coords}; }
    AlgebraElement operator*(double s) const { return {algebra, coords * s}; }
    AlgebraElement operator-() const { return {algebra, -coords}; }
};

inline AlgebraElement operator*(double s, const AlgebraElement& x) { return x * s; }

/// Algebras produced by the builders are deterministic, so two instances with
/// the same name describe the same structure constants.
inline bool same_algebra(const AlgebraPtr& a, const AlgebraPtr& b) {
    return a == b || (a && b && a->dim == b->dim && a->name == b->name);
}

inline AlgebraElement bracket(const AlgebraElement& x, const AlgebraElement& y) {
    if (!same_algebra(x.algebra, y.algebra)) throw DimensionMismatch("bracket: algebra mismatch");
    return {x.algebra, x.algebra->bracket(x.coords, y.coords)};
}

inline double killing_form(const AlgebraElement& x, const AlgebraElement& y) {
    if (!same_algebra(x.algebra, y.algebra)) throw DimensionMismatch("killing_form: algebra mismatch");
    return x.algebra->killing_form(x.coords, y.coords);
}

/// Matrix of ad X in the chosen basis.
inline Matrix ad_operator(const AlgebraElement& x) { return x.algebra->ad(x.coords); }

/// An automorphism of the algebra, acting on coordinates.  Group elements are
/// always handled in this adjoint picture.
class Automorphism {
  public:
    Automorphism() = default;
    Automorphism(AlgebraPtr alg, Matrix m) : algebra_(std::move(alg)), mat_(std::move(m)) {
        require_finite(mat_, "Automorphism");
        if (mat_.rows() != algebra_->dim || mat_.cols() != algebra_->dim)
            throw DimensionMismatch("Automorphism: matrix size mismatch");
    }

    static Automorphism identity(AlgebraPtr alg) {
        int d = alg->dim;
        return Automorphism(std::move(alg), Matrix::Identity(d, d));
    }

    const AlgebraPtr& algebra() const { return algebra_; }
    const Matrix& matrix() const { return mat_; }

    AlgebraElement apply(const AlgebraElement& x) const { return {algebra_, mat_ * x.coords}; }

    Subspace apply(const Subspace& s) const {
        return subspace_from_spanning(mat_ * s.basis(), s.tol());
    }

    Automorphism compose(const Automorphism& o) const {  // (*this) after o
        return Automorphism(algebra_, mat_ * o.mat_);
    }

    Automorphism inverse() const {
        return Automorphism(algebra_, mat_.partialPivLu().solve(Matrix::Identity(mat_.rows(), mat_.cols())));
    }

    /// Max violation of bracket preservation over the basis pairs.
    double bracket_defect() const {
        const auto& g = *algebra_;
        double worst = 0.0;
        for (int i = 0; i < g.dim; ++i) {
            Matrix lhs = mat_ * g.ad_basis[i];  // columns: g[e_i, e_j]
            Matrix gi = g.ad(mat_.col(i));
            Matrix rhs = gi * mat_;  // columns: [g e_i, g e_j]
            worst = std::max(worst, (lhs - rhs).cwiseAbs().maxCoeff());
        }
        return worst;
    }

    /// Max violation of Killing-form preservation.
    double killing_defect() const {
        return (mat_.transpose() * algebra_->killing * mat_ - algebra_->killing).cwiseAbs().maxCoeff();
    }

  private:
    AlgebraPtr algebra_;
    Matrix mat_;
};

inline AlgebraElement random_element(const AlgebraPtr& g, Rng& rng, double scale = 1.0) {
    return {g, scale * rng.normal_vector(g->dim)};
}

// ---------------------------------------------------------------------------
// Construction of concrete algebras
// ---------------------------------------------------------------------------

namespace detail {

/// Computes structure constants, Killing matrix and validates the algebra
/// axioms, given the defining-representation basis matrices.
inline std::shared_ptr<LieAlgebraSpace> algebra_from_defining(std::string name,
                                                              std::vector<Matrix> rep,
                                                              std::vector<std::string> labels) {
    auto g = std::make_shared<LieAlgebraSpace>();
    g->name = std::move(name);
    g->dim = static_cast<int>(rep.size());
    g->defining_rep = std::move(rep);
    g->defining_dim = static_cast<int>(g->defining_rep[0].rows());
    g->basis_labels = std::move(labels);
    g->finalize_defining();

    // Structure constants from defining-rep commutators.
    std::vector<Matrix> ad(g->dim, Matrix::Zero(g->dim, g->dim));
    for (int i = 0; i < g->dim; ++i) {
        for (int j = 0; j < g->dim; ++j) {
            Matrix comm = g->defining_rep[i] * g->defining_rep[j] - g->defining_rep[j] * g->defining_rep[i];
            double res = 0;
            Vector c = g->coords_from_defining(comm, &res);
            if (res > 1e-9 * std::max(1.0, comm.norm()))
                throw Error("algebra_from_defining: bracket leaves the span of the basis");
            ad[i].col(j) = c;
        }
    }
    g->ad_basis = std::move(ad);

    // Killing form: always trace(ad . ad).
    g->killing.resize(g->dim, g->dim);
    for (int i = 0; i < g->dim; ++i)
        for (int j = i; j < g->dim; ++j) {
            double k = (g->ad_basis[i] * g->ad_basis[j]).trace();
            g->killing(i, j) = k;
            g->killing(j, i) = k;
        }

    // Axioms: antisymmetry, Jacobi, Killing consistency and nondegeneracy.
    for (int i = 0; i < g->dim; ++i)
        for (int j = 0; j < g->dim; ++j)
            if ((g->ad_basis[i].col(j) + g->ad_basis[j].col(i)).norm() > 1e-10)
                throw Error("algebra axioms: antisymmetry violated");
    for (int i = 0; i < g->dim; ++i)
        for (int j = i + 1; j < g->dim; ++j) {
            Vector ij = g->ad_basis[i].col(j);
            for (int k = j + 1; k < g->dim; ++k) {
                Vector jac = g->ad_basis[i] * g->ad_basis[j].col(k) + g->ad_basis[j] * g->ad_basis[k].col(i) +
                             g->ad_basis[k] * ij;
                if (jac.norm() > 1e-10) throw Error("algebra axioms: Jacobi identity violated");
            }
        }
    Eigen::SelfAdjointEigenSolver<Matrix> es(g->killing);
    double emax = es.eigenvalues().cwiseAbs().maxCoeff();
    double emin = es.eigenvalues().cwiseAbs().minCoeff();
    if (emin <= 1e-9 * emax) throw Error("algebra axioms: Killing form degenerate");
    return g;
}

}  // namespace detail

/// sl(n, R): off-diagonal elementary matrices plus diagonal differences.
/// All structure constants are integers.
inline AlgebraPtr build_sl(int n) {
    if (n < 2) throw UnsupportedModel("build_sl: need n >= 2");
    std::vector<Matrix> rep;
    std::vector<std::string> labels;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            Matrix e = Matrix::Zero(n, n);
            e(i, j) = 1.0;
            rep.push_back(e);
            labels.push_back("E" + std::to_string(i + 1) + std::to_string(j + 1));
        }
    for (int k = 0; k + 1 < n; ++k) {
        Matrix h = Matrix::Zero(n, n);
        h(k, k) = 1.0;
        h(k + 1, k + 1) = -1.0;
        rep.push_back(h);
        labels.push_back("H" + std::to_string(k + 1));
    }
    return detail::algebra_from_defining("sl(" + std::to_string(n) + ",R)", std::move(rep), std::move(labels));
}

/// so(p, q) with metric diag(+..+, -..-): basis e_i ^ e_j, i < j, under
/// u ^ v -> (u,.)v - (v,.)u.  Integer structure constants again.
inline AlgebraPtr build_so(int p, int q) {
    const int n = p + q;
    if (n < 3) throw UnsupportedModel("build_so: need p + q >= 3");
    Vector metric(n);
    for (int i = 0; i < n; ++i) metric(i) = i < p ? 1.0 : -1.0;
    std::vector<Matrix> rep;
    std::vector<std::string> labels;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            // e_i ^ e_j maps x to (e_i,x) e_j - (e_j,x) e_i.
            Matrix m = Matrix::Zero(n, n);
            m(j, i) = metric(i);
            m(i, j) = -metric(j);
            rep.push_back(m);
            labels.push_back("e" + std::to_string(i + 1) + "^e" + std::to_string(j + 1));
        }
    auto g = detail::algebra_from_defining("so(" + std::to_string(p) + "," + std::to_string(q) + ")",
                                           std::move(rep), std::move(labels));
    return g;
}

/// Wedge u ^ v as an algebra element of so(p,q).
inline AlgebraElement wedge(const AlgebraPtr& g, const Vector& metric, const Vector& u, const Vector& v) {
    Matrix m = (metric.asDiagonal() * u) * v.transpose() - (metric.asDiagonal() * v) * u.transpose();
    m.transposeInPlace();  // (u,.)v - (v,.)u acts as v (u^T G) - u (v^T G)
    double res = 0;
    Vector c = g->coords_from_defining(m, &res);
    if (res > 1e-9 * std::max(1.0, m.norm())) throw Error("wedge: not an algebra element");
    return {g, c};
}

/// {X : B(X, s) = 0 for all s in S}; with a nondegenerate Killing form the
/// polar has complementary dimension.
inline Subspace killing_polar(const AlgebraPtr& g, const Subspace& s) {
    Matrix system = s.basis().transpose() * g->killing;  // k x dim
    return nullspace(system);
}

/// Adjoint automorphism from a defining-representation group element:
/// X -> g X g^{-1}, expanded back into coordinates.
inline Automorphism adjoint_from_defining(const AlgebraPtr& g, const Matrix& group_elem) {
    Matrix inv = group_elem.partialPivLu().solve(Matrix::Identity(g->defining_dim, g->defining_dim));
    Matrix m(g->dim, g->dim);
    for (int i = 0; i < g->dim; ++i) {
        Matrix conj = group_elem * g->defining_rep[i] * inv;
        double res = 0;
        m.col(i) = g->coords_from_defining(conj, &res);
        if (res > 1e-8 * std::max(1.0, conj.norm()))
            throw Error("adjoint_from_defining: conjugation leaves the algebra");
    }
    return Automorphism(g, m);
}

/// exp(ad x) through the dense matrix exponential.
inline Automorphism exp_ad(const AlgebraElement& x) {
    return Automorphism(x.algebra, mat_exp(ad_operator(x)));
}

}  // namespace rspace
