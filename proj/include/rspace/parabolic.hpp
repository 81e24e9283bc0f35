#pragma once

#include <utility>

#include "rspace/lie_algebra.hpp"

namespace rspace {

/// A height-one parabolic subalgebra with its cached Killing polar (the
/// nilradical).
class Parabolic {
  public:
    Parabolic() = default;

    const AlgebraPtr& algebra() const { return algebra_; }
    const Subspace& space() const { return space_; }
    const Subspace& nilradical() const { return nilradical_; }

    friend Parabolic make_parabolic(const AlgebraPtr& g, const Subspace& s);
    friend Parabolic act_on_parabolic_unchecked(const Automorphism& aut, const Parabolic& p);

  private:
    AlgebraPtr algebra_;
    Subspace space_;
    Subspace nilradical_;
};

inline double parabolic_distance(const Parabolic& a, const Parabolic& b) {
    return subspace_distance(a.space(), b.space());
}

/// Validates that s is a subalgebra whose Killing polar is abelian and
/// contained in s, i.e. a height-one parabolic.
inline Parabolic make_parabolic(const AlgebraPtr& g, const Subspace& s) {
    const Matrix& basis = s.basis();
    const int k = s.dim();
    // Subalgebra: every basis bracket stays in the span.
    Matrix proj = Matrix::Identity(g->dim, g->dim) - s.projector();
    for (int i = 0; i < k; ++i) {
        Matrix adi = g->ad(basis.col(i));
        for (int j = i + 1; j < k; ++j) {
            Vector br = adi * basis.col(j);
            if ((proj * br).norm() > 1e-8 * std::max(1.0, br.norm()))
                throw NotASubalgebra("make_parabolic: [S,S] leaves S");
        }
    }
    Subspace polar = killing_polar(g, s);
    // Height one: polar contained in s and abelian.
    for (int i = 0; i < polar.dim(); ++i)
        if ((proj * polar.basis().col(i)).norm() > 1e-8)
            throw NotParabolicHeightOne("make_parabolic: Killing polar not contained in the subalgebra");
    for (int i = 0; i < polar.dim(); ++i) {
        Matrix adi = g->ad(polar.basis().col(i));
        for (int j = i + 1; j < polar.dim(); ++j)
            if ((adi * polar.basis().col(j)).norm() > tol::nilradical_abelian)
                throw NotParabolicHeightOne("make_parabolic: nilradical not abelian");
    }
    Parabolic p;
    p.algebra_ = g;
    p.space_ = s;
    p.nilradical_ = polar;
    return p;
}

inline Parabolic act_on_parabolic(const Automorphism& aut, const Parabolic& p) {
    if (!same_algebra(aut.algebra(), p.algebra())) throw DimensionMismatch("act_on_parabolic: algebra mismatch");
    return make_parabolic(p.algebra(), aut.apply(p.space()));
}

/// Image of a parabolic without the defensive re-validation: the image of a
/// height-one parabolic under a Killing-orthogonal automorphism is again one,
/// with nilradical the image of the nilradical.  For ill-conditioned factors
/// the caller is expected to validate the result at its own level.
inline Parabolic act_on_parabolic_unchecked(const Automorphism& aut, const Parabolic& p) {
    if (!same_algebra(aut.algebra(), p.algebra()))
        throw DimensionMismatch("act_on_parabolic_unchecked: algebra mismatch");
    Parabolic out;
    out.algebra_ = p.algebra();
    out.space_ = aut.apply(p.space());
    out.nilradical_ = aut.apply(p.nilradical());
    return out;
}

/// Complementarity test per the height-one criterion: the nilradicals meet
/// only in zero.
inline bool complementary(const Parabolic& p, const Parabolic& q, double tolerance = rank_tol()) {
    return subspace_intersect(p.nilradical(), q.nilradical(), tolerance).dim() == 0;
}

/// A complementary pair (p, q) with its grading element and the three-term
/// eigenspace decomposition g = p^perp + (p cap q) + q^perp.
class ComplementaryPair {
  public:
    ComplementaryPair() = default;

    const Parabolic& p() const { return p_; }
    const Parabolic& q() const { return q_; }
    const AlgebraElement& xi() const { return xi_; }
    const Subspace& eig_minus() const { return p_.nilradical(); }
    const Subspace& eig_zero() const { return zero_; }
    const Subspace& eig_plus() const { return q_.nilradical(); }
    double residual() const { return residual_; }
    const AlgebraPtr& algebra() const { return p_.algebra(); }

    /// Basis change to (p^perp | p cap q | q^perp) block coordinates, cached
    /// for the Gamma factors.
    const Matrix& block_basis() const { return block_basis_; }
    const Matrix& block_basis_inv() const { return block_basis_inv_; }

    friend ComplementaryPair make_pair(const Parabolic& p, const Parabolic& q);
    friend ComplementaryPair make_pair_with_xi(const Parabolic& p, const Parabolic& q, const AlgebraElement& xi);

  private:
    Parabolic p_, q_;
    AlgebraElement xi_;
    Subspace zero_;
    Matrix block_basis_, block_basis_inv_;
    double residual_ = 0.0;
};

ComplementaryPair make_pair_with_xi(const Parabolic& p, const Parabolic& q, const AlgebraElement& xi);

/// Builds a pair from a grading element known in closed form (the model
/// dictionaries provide one); the eigenstructure is validated and the zero
/// eigenspace comes from the well-gapped nullspace of ad xi.
inline ComplementaryPair make_pair_with_xi(const Parabolic& p, const Parabolic& q, const AlgebraElement& xi) {
    const auto& g = p.algebra();
    Matrix ad = g->ad(xi.coords);
    double residual = 0.0;
    const Matrix& bm = p.nilradical().basis();
    for (int i = 0; i < bm.cols(); ++i) residual = std::max(residual, (ad * bm.col(i) + bm.col(i)).norm());
    const Matrix& bp = q.nilradical().basis();
    for (int i = 0; i < bp.cols(); ++i) residual = std::max(residual, (ad * bp.col(i) - bp.col(i)).norm());
    if (residual > tol::grading_residual)
        throw NotComplementary("make_pair_with_xi: eigen residual " + std::to_string(residual));
    Subspace zero = subspace_intersect(p.space(), q.space());
    const int rm = bm.cols(), k = zero.dim(), rp = bp.cols();
    if (rm + k + rp != g->dim)
        throw NotComplementary("make_pair_with_xi: decomposition does not fill the algebra");
    ComplementaryPair pair;
    pair.p_ = p;
    pair.q_ = q;
    pair.zero_ = zero;
    pair.xi_ = xi;
    pair.residual_ = residual;
    Matrix b(g->dim, g->dim);
    b.leftCols(rm) = bm;
    b.middleCols(rm, k) = zero.basis();
    b.rightCols(rp) = bp;
    pair.block_basis_ = b;
    pair.block_basis_inv_ = b.partialPivLu().solve(Matrix::Identity(g->dim, g->dim));
    return pair;
}

/// Solves for the grading element by least squares over p cap q and accepts
/// iff the residual certifies complementarity.
inline ComplementaryPair make_pair(const Parabolic& p, const Parabolic& q) {
    if (!same_algebra(p.algebra(), q.algebra())) throw DimensionMismatch("make_pair: algebra mismatch");
    const auto& g = p.algebra();
    if (subspace_intersect(p.nilradical(), q.nilradical()).dim() != 0)
        throw NotComplementary("make_pair: nilradicals intersect");
    Subspace zero = subspace_intersect(p.space(), q.space());
    const Matrix& z = zero.basis();
    const int k = zero.dim();
    const int rm = p.nilradical().dim();
    const int rp = q.nilradical().dim();
    // [xi, x] = -x for x in p^perp, [xi, y] = +y for y in q^perp.
    Matrix lhs(g->dim * (rm + rp), k);
    Vector rhs(g->dim * (rm + rp));
    for (int c = 0; c < rm; ++c) {
        Vector x = p.nilradical().basis().col(c);
        for (int a = 0; a < k; ++a) lhs.block(c * g->dim, a, g->dim, 1) = g->bracket(z.col(a), x);
        rhs.segment(c * g->dim, g->dim) = -x;
    }
    for (int c = 0; c < rp; ++c) {
        Vector y = q.nilradical().basis().col(c);
        for (int a = 0; a < k; ++a) lhs.block((rm + c) * g->dim, a, g->dim, 1) = g->bracket(z.col(a), y);
        rhs.segment((rm + c) * g->dim, g->dim) = y;
    }
    auto [sol, residual] = least_squares(lhs, rhs);
    if (residual > tol::grading_residual)
        throw NotComplementary("make_pair: grading-element residual " + std::to_string(residual));

    ComplementaryPair pair;
    pair.p_ = p;
    pair.q_ = q;
    pair.zero_ = zero;
    pair.xi_ = AlgebraElement(g, z * Vector(sol));
    pair.residual_ = residual;
    Matrix b(g->dim, g->dim);
    if (rm + k + rp != g->dim) throw NotComplementary("make_pair: decomposition does not fill the algebra");
    b.leftCols(rm) = p.nilradical().basis();
    b.middleCols(rm, k) = z;
    b.rightCols(rp) = q.nilradical().basis();
    pair.block_basis_ = b;
    pair.block_basis_inv_ = b.partialPivLu().solve(Matrix::Identity(g->dim, g->dim));
    return pair;
}

/// Gamma_p^q(s): s on q^perp, 1 on p cap q, 1/s on p^perp.
inline Automorphism gamma_factor(const ComplementaryPair& pair, double s) {
    if (s == 0.0) throw PoleParameter("gamma_factor: s must be nonzero");
    const auto& g = pair.algebra();
    const int rm = pair.eig_minus().dim();
    const int k = pair.eig_zero().dim();
    const int rp = pair.eig_plus().dim();
    Vector d(g->dim);
    d.segment(0, rm).setConstant(1.0 / s);
    d.segment(rm, k).setConstant(1.0);
    d.segment(rm + k, rp).setConstant(s);
    Matrix m = pair.block_basis() * d.asDiagonal() * pair.block_basis_inv();
    return Automorphism(g, m);
}

/// Projection onto the eigenspace of ad xi with the given eigenvalue
/// (-1, 0, +1), along the other two summands.
inline Matrix pair_projector(const ComplementaryPair& pair, int eigenvalue) {
    const auto& g = pair.algebra();
    const int rm = pair.eig_minus().dim();
    const int k = pair.eig_zero().dim();
    const int rp = pair.eig_plus().dim();
    Vector d = Vector::Zero(g->dim);
    if (eigenvalue < 0) d.segment(0, rm).setOnes();
    else if (eigenvalue == 0) d.segment(rm, k).setOnes();
    else d.segment(rm + k, rp).setOnes();
    return pair.block_basis() * d.asDiagonal() * pair.block_basis_inv();
}

/// Exact finite series I + ad x + (ad x)^2 / 2 for x in a nilradical.
inline Automorphism exp_nilpotent_action(const AlgebraElement& x) {
    Matrix a = ad_operator(x);
    Matrix a2 = a * a;
    double scale = std::max(1.0, std::pow(a.norm(), 3));
    if ((a2 * a).norm() > 1e-9 * scale)
        throw NotNilpotent("exp_nilpotent_action: (ad x)^3 does not vanish");
    return Automorphism(x.algebra, Matrix::Identity(a.rows(), a.cols()) + a + 0.5 * a2);
}

/// A fixed complementary pair (p0, pinf) serving as a stereoprojection chart.
/// The bases of the two nilradicals are frozen here; any reported coordinate
/// vector is relative to them.
class Chart {
  public:
    Chart() = default;
    explicit Chart(ComplementaryPair pair) : pair_(std::move(pair)) {}
    Chart(const Parabolic& p0, const Parabolic& pinf) : pair_(make_pair(p0, pinf)) {}

    const Parabolic& p0() const { return pair_.p(); }
    const Parabolic& pinf() const { return pair_.q(); }
    const ComplementaryPair& pair() const { return pair_; }
    const AlgebraPtr& algebra() const { return pair_.algebra(); }

    /// Basis of pinf^perp (chart coordinates of M) and p0^perp (of M*).
    const Matrix& basis_pinf_perp() const { return pair_.eig_plus().basis(); }
    const Matrix& basis_p0_perp() const { return pair_.eig_minus().basis(); }

    /// Coordinates of an element of pinf^perp in the frozen basis.
    Vector coords_in_pinf_perp(const AlgebraElement& x) const {
        return basis_pinf_perp().transpose() * x.coords;
    }

  private:
    ComplementaryPair pair_;
};

/// The unique F in pinf^perp with exp(F) . p0 = p, computed linearly as the
/// grading-element difference of the pairs (pinf, p) and (pinf, p0).
inline AlgebraElement stereoproject(const Chart& chart, const Parabolic& p) {
    ComplementaryPair through;
    try {
        through = make_pair(chart.pinf(), p);
    } catch (const NotComplementary& e) {
        throw NotInChart(std::string("stereoproject: point not complementary to pinf: ") + e.what());
    }
    ComplementaryPair base = make_pair(chart.pinf(), chart.p0());
    AlgebraElement f = through.xi() - base.xi();
    // residual check on the subspace image alone (no re-validation)
    Subspace image = exp_nilpotent_action(f).apply(chart.p0().space());
    if (subspace_distance(image, p.space()) > 1e-8)
        throw NotInChart("stereoproject: residual exceeds tolerance");
    return f;
}

/// Convenience: exp(x) . p for nilradical-valued x.
inline Parabolic exp_act(const AlgebraElement& x, const Parabolic& p) {
    return act_on_parabolic(exp_nilpotent_action(x), p);
}

}  // namespace rspace
