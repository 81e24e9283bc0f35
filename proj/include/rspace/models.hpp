#pragma once

#include <optional>
#include <string>
#include <utility>

#include "rspace/parabolic.hpp"

namespace rspace {

enum class ModelKind { conformal, grassmannian };

/// A point of a model space: a null line representative for the conformal
/// quadric, an n x k basis of a plane for the real Grassmannian (k = 1,
/// n = 2 gives RP^1).
struct ModelPoint {
    ModelKind kind;
    Matrix rep;
};

/// Dictionary between the conformal quadric P(L^{p+1,q+1}) or the real
/// Grassmannian G_k(R^n) and parabolic stabilizers in so(p+1,q+1) or
/// sl(n,R).  Static per-model constants mirror the classification table.
class Model {
  public:
    static Model conformal(int p, int q) {
        Model m;
        m.kind_ = ModelKind::conformal;
        m.p_ = p;
        m.q_ = q;
        if (p < 1 || q < 0 || p + q < 2) throw UnsupportedModel("conformal model needs p >= 1, p + q >= 2");
        m.algebra_ = build_so(p + 1, q + 1);
        const int n = p + q + 2;
        m.metric_ = Vector::Ones(n);
        for (int i = p + 1; i < n; ++i) m.metric_(i) = -1.0;
        // v0, vinf from the last positive/negative pair, (v0, vinf) = -1.
        Vector u = Vector::Zero(n), w = Vector::Zero(n);
        u(p) = 1.0;      // last positive direction
        w(n - 1) = 1.0;  // last negative direction
        m.v0_ = (u + w) / std::sqrt(2.0);
        m.vinf_ = (w - u) / std::sqrt(2.0);
        m.wbasis_.resize(n, n - 2);
        int c = 0;
        for (int i = 0; i < n; ++i) {
            if (i == p || i == n - 1) continue;
            m.wbasis_.col(c) = Vector::Unit(n, i);
            ++c;
        }
        return m;
    }

    static Model grassmannian(int k, int n) {
        Model m;
        m.kind_ = ModelKind::grassmannian;
        m.k_ = k;
        m.n_ = n;
        if (k < 1 || k >= n || n < 2) throw UnsupportedModel("grassmannian model needs 1 <= k < n");
        m.algebra_ = build_sl(n);
        return m;
    }

    static Model rp1() { return grassmannian(1, 2); }

    /// Parses "conformal:p,q" / "grassmannian:k,n" / "rp1".
    static Model parse(const std::string& spec) {
        auto split = [](const std::string& s, char sep) {
            auto pos = s.find(sep);
            if (pos == std::string::npos) throw UnsupportedModel("bad model spec: " + s);
            return std::pair<int, int>{std::stoi(s.substr(0, pos)), std::stoi(s.substr(pos + 1))};
        };
        if (spec == "rp1") return rp1();
        auto colon = spec.find(':');
        if (colon == std::string::npos) throw UnsupportedModel("bad model spec: " + spec);
        std::string head = spec.substr(0, colon);
        auto [a, b] = split(spec.substr(colon + 1), ',');
        if (head == "conformal") return conformal(a, b);
        if (head == "grassmannian") return grassmannian(a, b);
        throw UnsupportedModel("unknown model kind: " + head);
    }

    ModelKind kind() const { return kind_; }
    const AlgebraPtr& algebra() const { return algebra_; }

    std::string name() const {
        if (kind_ == ModelKind::conformal)
            return "conformal:" + std::to_string(p_) + "," + std::to_string(q_);
        return "grassmannian:" + std::to_string(k_) + "," + std::to_string(n_);
    }

    int dim_m() const { return kind_ == ModelKind::conformal ? p_ + q_ : k_ * (n_ - k_); }
    bool self_dual() const { return kind_ == ModelKind::conformal || n_ == 2 * k_; }
    int rank_z() const { return kind_ == ModelKind::conformal ? 2 : std::min(k_, n_ - k_); }

    /// Conjugacy class of the complementary stabilizers.  For non-self-dual
    /// Grassmannians this is the class of (n-k)-plane stabilizers.
    std::string dual_class_tag() const {
        if (self_dual()) return name();
        return "grassmannian:" + std::to_string(n_ - k_) + "," + std::to_string(n_);
    }

    int p() const { return p_; }
    int q() const { return q_; }
    int k() const { return k_; }
    int n() const { return n_; }
    int ambient_dim() const { return algebra_->defining_dim; }

    const Vector& metric() const { return metric_; }
    const Vector& v0() const { return v0_; }
    const Vector& vinf() const { return vinf_; }
    const Matrix& wbasis() const { return wbasis_; }

    double inner(const Vector& a, const Vector& b) const {
        return a.dot(metric_.asDiagonal() * b);
    }

    bool is_valid_point(const ModelPoint& pt) const {
        if (pt.kind != kind_) return false;
        if (kind_ == ModelKind::conformal) {
            if (pt.rep.cols() != 1 || pt.rep.rows() != ambient_dim()) return false;
            double nn = pt.rep.norm();
            if (nn == 0) return false;
            return std::abs(inner(pt.rep.col(0), pt.rep.col(0))) <= 1e-10 * nn * nn;
        }
        if (pt.rep.rows() != n_ || pt.rep.cols() != k_) return false;
        return numerical_rank(pt.rep) == k_;
    }

    ModelPoint make_point(const Matrix& rep) const {
        ModelPoint pt{kind_, canonical_rep(rep)};
        if (!is_valid_point(pt)) throw UnsupportedModel("make_point: invalid representative for " + name());
        return pt;
    }

    /// Canonical representative: unit norm with deterministic sign for null
    /// lines (snapped onto the light cone first), SVD-orthonormalised
    /// sign-fixed basis for planes.
    Matrix canonical_rep(const Matrix& rep) const {
        if (kind_ == ModelKind::conformal) {
            Vector v = rep.col(0);
            // nearest point of the cone: rescale the definite halves to a
            // common norm
            Vector pos = Vector::Zero(v.size()), neg = Vector::Zero(v.size());
            for (int i = 0; i < v.size(); ++i) (metric_(i) > 0 ? pos(i) : neg(i)) = v(i);
            double np = pos.norm(), nn = neg.norm();
            if (np > 1e-14 && nn > 1e-14) {
                double a = 0.5 * (np + nn);
                v = (a / np) * pos + (a / nn) * neg;
            }
            v /= v.norm();
            for (int i = 0; i < v.size(); ++i) {
                if (std::abs(v(i)) > 1e-8) {
                    if (v(i) < 0) v = -v;
                    break;
                }
            }
            return v;
        }
        Subspace s = subspace_from_spanning(rep);
        Matrix b = s.basis();
        for (int c = 0; c < b.cols(); ++c) {
            int arg = 0;
            b.col(c).cwiseAbs().maxCoeff(&arg);
            if (b(arg, c) < 0) b.col(c) = -b.col(c);
        }
        return b;
    }

    /// Inverse-stereoprojection of chart coordinates x (in the fixed basis of
    /// W = span(v0, vinf)^perp): the null line of v0 + x + (x,x)/2 vinf.
    ModelPoint inverse_stereo_point(const Vector& x) const {
        if (kind_ != ModelKind::conformal) throw UnsupportedModel("inverse_stereo_point: conformal only");
        Vector xa = wbasis_ * x;
        Vector v = v0_ + xa + 0.5 * inner(xa, xa) * vinf_;
        return make_point(v);
    }

    /// Forward stereoprojection; fails on the point at infinity.
    Vector stereo_coords(const ModelPoint& pt) const {
        if (kind_ != ModelKind::conformal) throw UnsupportedModel("stereo_coords: conformal only");
        Vector v = pt.rep.col(0);
        double s = inner(v, vinf_);
        if (std::abs(s) < 1e-12 * v.norm()) throw NotInChart("stereo_coords: point at infinity");
        v /= -s;  // now (v, vinf) = -1
        return wbasis_.transpose() * metric_.asDiagonal() * v;
    }

    ModelPoint random_point(Rng& rng) const {
        if (kind_ == ModelKind::conformal) {
            Vector u = rng.unit_vector(p_ + 1);
            Vector w = rng.unit_vector(q_ + 1);
            Vector v(ambient_dim());
            v.head(p_ + 1) = u;
            v.tail(q_ + 1) = w;
            return make_point(v);
        }
        return make_point(rng.normal_matrix(n_, k_));
    }

    /// The infinitesimal stabilizer of a point as a height-one parabolic.
    Parabolic point_to_parabolic(const ModelPoint& pt) const {
        if (!is_valid_point(pt)) throw UnsupportedModel("point_to_parabolic: invalid point");
        const auto& g = algebra_;
        const int nn = ambient_dim();
        if (kind_ == ModelKind::conformal) {
            Vector v = pt.rep.col(0);
            Matrix pp = Matrix::Identity(nn, nn) - (v * v.transpose()) / v.squaredNorm();
            Matrix cond(nn, g->dim);
            for (int i = 0; i < g->dim; ++i) cond.col(i) = pp * (g->defining_rep[i] * v);
            return make_parabolic(g, nullspace(cond));
        }
        Matrix w = pt.rep;  // n x k orthonormal
        Matrix pp = Matrix::Identity(nn, nn) - w * w.transpose();
        Matrix cond(nn * k_, g->dim);
        for (int i = 0; i < g->dim; ++i) {
            Matrix img = pp * (g->defining_rep[i] * w);
            cond.col(i) = Eigen::Map<const Vector>(img.data(), img.size());
        }
        return make_parabolic(g, nullspace(cond));
    }

    /// Recovers the point from a stabilizer via the common image of the
    /// nilradical in the defining representation.  The image subspaces are
    /// taken as leading singular subspaces (best approximations), so noisy
    /// but genuine stabilizers recover cleanly; the conclusive test is the
    /// round-trip distance at the end.
    ModelPoint parabolic_to_point(const Parabolic& par) const {
        if (!same_algebra(par.algebra(), algebra_))
            throw WrongConjugacyClass("parabolic_to_point: parabolic from a different algebra");
        const auto& g = algebra_;
        const int nn = ambient_dim();
        const Subspace& nil = par.nilradical();
        auto leading = [](const Matrix& m, int k) {
            Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU);
            if (svd.matrixU().cols() < k) throw WrongConjugacyClass("parabolic_to_point: image rank deficient");
            return Matrix(svd.matrixU().leftCols(k));
        };
        Matrix images(nn, nn * nil.dim());
        for (int i = 0; i < nil.dim(); ++i) images.middleCols(nn * i, nn) = g->defining(nil.basis().col(i));
        ModelPoint pt{kind_, Matrix()};
        if (kind_ == ModelKind::grassmannian) {
            pt.rep = canonical_rep(leading(images, k_));
        } else {
            // For stab(L) the nilradical maps the ambient space into L^perp
            // and L^perp into L: two image steps recover the null line.
            Matrix lperp = leading(images, nn - 1);
            Matrix second(nn, lperp.cols() * nil.dim());
            for (int i = 0; i < nil.dim(); ++i)
                second.middleCols(lperp.cols() * i, lperp.cols()) = g->defining(nil.basis().col(i)) * lperp;
            pt.rep = canonical_rep(leading(second, 1));
        }
        if (!is_valid_point(pt)) throw WrongConjugacyClass("parabolic_to_point: recovered representative invalid");
        Parabolic back = point_to_parabolic(pt);
        if (parabolic_distance(back, par) > 1e-7)
            throw WrongConjugacyClass("parabolic_to_point: round-trip mismatch");
        return pt;
    }

    /// Quantitative transversality of two points: the pairing |(v, vhat)| of
    /// unit null vectors, resp. the smallest singular value of the joint
    /// plane basis.  Zero iff the stabilizers fail to be complementary.
    double complementarity_margin(const ModelPoint& a, const ModelPoint& b) const {
        if (kind_ == ModelKind::conformal)
            return std::abs(inner(a.rep.col(0), b.rep.col(0))) / (a.rep.norm() * b.rep.norm());
        Matrix joint(n_, a.rep.cols() + b.rep.cols());
        joint.leftCols(a.rep.cols()) = a.rep;
        joint.rightCols(b.rep.cols()) = b.rep;
        Eigen::JacobiSVD<Matrix> svd(joint);
        return svd.singularValues().minCoeff();
    }

    /// Complementarity of stabilizers at the level of points.
    bool points_complementary(const ModelPoint& a, const ModelPoint& b) const {
        if (kind_ == ModelKind::conformal) {
            // stab(L), stab(L') complementary iff L != L'.
            Matrix joint(ambient_dim(), 2);
            joint.col(0) = a.rep.col(0);
            joint.col(1) = b.rep.col(0);
            return numerical_rank(joint) == 2;
        }
        Matrix joint(n_, 2 * k_);
        joint.leftCols(k_) = a.rep;
        joint.rightCols(k_) = b.rep;
        return numerical_rank(joint) == n_;  // W + W' = R^n (k = n - k here)
    }

    /// Base chart: the stabilizers of (v0, vinf), resp. of the first k
    /// coordinate plane and its complement.
    Chart base_chart() const {
        if (kind_ == ModelKind::conformal) {
            Parabolic a = point_to_parabolic(make_point(v0_));
            Parabolic b = point_to_parabolic(make_point(vinf_));
            return Chart(a, b);
        }
        Matrix w0 = Matrix::Identity(n_, n_).leftCols(k_);
        Matrix winf = Matrix::Identity(n_, n_).rightCols(n_ - k_);
        Parabolic a = point_to_parabolic(make_point(w0));
        Parabolic b = stabilizer_of_plane(winf);
        return Chart(a, b);
    }

    /// Stabilizer of an arbitrary-dimension plane (used for the dual chart
    /// points of non-self-dual Grassmannians).
    Parabolic stabilizer_of_plane(const Matrix& plane) const {
        if (kind_ != ModelKind::grassmannian) throw UnsupportedModel("stabilizer_of_plane: grassmannian only");
        const auto& g = algebra_;
        Subspace w = subspace_from_spanning(plane);
        Matrix pp = Matrix::Identity(n_, n_) - w.projector();
        Matrix cond(n_ * w.dim(), g->dim);
        for (int i = 0; i < g->dim; ++i) {
            Matrix img = pp * (g->defining_rep[i] * w.basis());
            cond.col(i) = Eigen::Map<const Vector>(img.data(), img.size());
        }
        return make_parabolic(g, nullspace(cond));
    }

    /// Grading element of the stabilizer pair of two complementary points,
    /// in closed form: for null lines, (vhat ^ v) with (v, vhat) = -1; for
    /// planes, the weighted projector difference with ad-eigenvalues -1, 0,
    /// +1 on the three summands.
    AlgebraElement grading_element_of_points(const ModelPoint& a, const ModelPoint& b) const {
        if (!points_complementary(a, b))
            throw NotComplementary("grading_element_of_points: points not complementary");
        if (kind_ == ModelKind::conformal) {
            Vector v = a.rep.col(0);
            Vector vhat = b.rep.col(0);
            vhat *= -1.0 / inner(v, vhat);
            Matrix xi = v * (metric_.asDiagonal() * vhat).transpose() -
                        vhat * (metric_.asDiagonal() * v).transpose();
            double res = 0;
            Vector c = algebra_->coords_from_defining(xi, &res);
            if (res > 1e-9) throw Error("grading_element_of_points: expansion failed");
            return {algebra_, c};
        }
        if (b.rep.cols() != n_ - k_)
            throw NotComplementary("grading_element_of_points: dimension of the second plane");
        Matrix joint(n_, n_);
        joint.leftCols(k_) = a.rep;
        joint.rightCols(n_ - k_) = b.rep;
        Matrix inv = joint.partialPivLu().solve(Matrix::Identity(n_, n_));
        Matrix pw = a.rep * inv.topRows(k_);
        Matrix pwhat = b.rep * inv.bottomRows(n_ - k_);
        Matrix xi = (double(k_ - n_) / n_) * pw + (double(k_) / n_) * pwhat;
        double res = 0;
        Vector c = algebra_->coords_from_defining(xi, &res);
        if (res > 1e-9) throw Error("grading_element_of_points: expansion failed");
        return {algebra_, c};
    }

    /// The stabilizer pair with its closed-form grading element; accepts the
    /// already-computed stabilizers to avoid recomputation.
    ComplementaryPair pair_from_points(const ModelPoint& a, const ModelPoint& b, const Parabolic* pa = nullptr,
                                       const Parabolic* pb = nullptr) const {
        Parabolic p = pa ? *pa : point_to_parabolic(a);
        Parabolic q = pb ? *pb : point_to_parabolic(b);
        return make_pair_with_xi(p, q, grading_element_of_points(a, b));
    }

    /// A random adjoint automorphism together with its defining-rep partner:
    /// exp of a random algebra element, scaled small enough to stay tame.
    std::pair<Matrix, Automorphism> random_group_element(Rng& rng, double scale = 0.4) const {
        AlgebraElement x = random_element(algebra_, rng, scale / std::sqrt(double(algebra_->dim)));
        Matrix gdef = mat_exp(algebra_->defining(x.coords));
        return {gdef, adjoint_from_defining(algebra_, gdef)};
    }

  private:
    ModelKind kind_ = ModelKind::conformal;
    int p_ = 0, q_ = 0;  // conformal signature
    int k_ = 0, n_ = 0;  // grassmannian plane/ambient dims
    AlgebraPtr algebra_;
    Vector metric_, v0_, vinf_;
    Matrix wbasis_;
};

/// Stored classification constants for an implemented model.
struct ModelTableRow {
    std::string name;
    int dim_m;
    bool self_dual;
    int rank_z;
    std::string dual_class;
};

inline ModelTableRow model_table_row(const Model& m) {
    return {m.name(), m.dim_m(), m.self_dual(), m.rank_z(), m.dual_class_tag()};
}

inline int rank_z(const Model& m) { return m.rank_z(); }

}  // namespace rspace
