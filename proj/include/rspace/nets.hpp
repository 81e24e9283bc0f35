#pragma once

#include <cstdlib>
#include <utility>
#include <vector>

#include "rspace/circles.hpp"
#include "rspace/models.hpp"

namespace rspace {

/// A discrete isothermic net on a rectangle in Z^2.  Vertices are carried as
/// model points (stabilizer data is derived from them), so every propagated
/// vertex sits exactly on the stabilizer manifold and the closed-form
/// grading elements stay available; the factorising function lives on edge
/// classes with equal values on opposite edges by construction.
class Net {
  public:
    Net() = default;

    const Model& model() const { return model_; }
    int width() const { return width_; }
    int height() const { return height_; }
    long vertex_count() const { return static_cast<long>(width_) * height_; }
    long flatten(int x, int y) const { return static_cast<long>(y) * width_ + x; }

    const ModelPoint& point(int x, int y) const { return points_[flatten(x, y)]; }
    const std::vector<ModelPoint>& points() const { return points_; }
    const Parabolic& at(int x, int y) const { return f_[flatten(x, y)]; }
    const std::vector<Parabolic>& vertices() const { return f_; }
    const std::vector<double>& m_horizontal() const { return m_h_; }
    const std::vector<double>& m_vertical() const { return m_v_; }

    /// m on the unoriented edge between two adjacent lattice points.
    double m_edge(int x1, int y1, int x2, int y2) const {
        if (y1 == y2 && std::abs(x1 - x2) == 1) return m_h_[std::min(x1, x2)];
        if (x1 == x2 && std::abs(y1 - y2) == 1) return m_v_[std::min(y1, y2)];
        throw DimensionMismatch("Net::m_edge: vertices not adjacent");
    }

    /// Pairwise complementarity, concircularity and the cross-ratio
    /// condition on every elementary quadrilateral.
    double invariant_residual() const {
        double worst = 0.0;
        for (int y = 0; y + 1 < height_; ++y)
            for (int x = 0; x + 1 < width_; ++x) {
                const Parabolic& fi = at(x, y);
                const Parabolic& fj = at(x + 1, y);
                const Parabolic& fk = at(x + 1, y + 1);
                const Parabolic& fl = at(x, y + 1);
                double target = m_v_[y] / m_h_[x];
                ExtReal cr = cross_ratio(fi, fj, fk, fl);
                if (cr.is_inf()) throw NotConcircular("Net invariant: infinite cross-ratio on a quad");
                worst = std::max(worst, std::abs(cr.value() - target));
            }
        return worst;
    }

    static Net from_points(Model model, int width, int height, std::vector<ModelPoint> points,
                           std::vector<double> m_h, std::vector<double> m_v, bool validate = true) {
        if (!model.self_dual())
            throw UnsupportedModel("Net: circles need a self-dual model class; " + model.name() + " is not");
        if (width < 1 || height < 1) throw DimensionMismatch("Net: empty domain");
        if (static_cast<long>(points.size()) != static_cast<long>(width) * height)
            throw DimensionMismatch("Net: vertex count mismatch");
        if (static_cast<int>(m_h.size()) != std::max(0, width - 1) ||
            static_cast<int>(m_v.size()) != std::max(0, height - 1))
            throw DimensionMismatch("Net: factorising function size mismatch");
        for (double m : m_h)
            if (m == 0.0) throw DegenerateQuad("Net: zero factorising value");
        for (double m : m_v)
            if (m == 0.0) throw DegenerateQuad("Net: zero factorising value");
        Net net;
        net.model_ = std::move(model);
        net.width_ = width;
        net.height_ = height;
        net.points_ = std::move(points);
        net.f_.reserve(net.points_.size());
        for (const ModelPoint& pt : net.points_) net.f_.push_back(net.model_.point_to_parabolic(pt));
        net.m_h_ = std::move(m_h);
        net.m_v_ = std::move(m_v);
        if (validate && width > 1 && height > 1) {
            double res = net.invariant_residual();
            if (res > 1e-8)
                throw NotConcircular("Net: cross-ratio invariant residual " + std::to_string(res));
        }
        return net;
    }

  private:
    Model model_;
    int width_ = 0, height_ = 0;
    std::vector<ModelPoint> points_;
    std::vector<Parabolic> f_;
    std::vector<double> m_h_, m_v_;
};

/// Fills the rectangle from values on the two coordinate axes, quad by quad
/// in row-major order: f(k) = Gamma_{f(l)}^{f(j)}(m(i,l)/m(i,j)) . f(i).
inline Net net_from_boundary(const Model& model, const std::vector<ModelPoint>& row0,
                             const std::vector<ModelPoint>& col0, std::vector<double> m_h,
                             std::vector<double> m_v) {
    const int width = static_cast<int>(row0.size());
    const int height = static_cast<int>(col0.size());
    if (width < 1 || height < 1) throw DimensionMismatch("net_from_boundary: empty axes");
    if ((row0[0].rep - col0[0].rep).norm() > 1e-9)
        throw DimensionMismatch("net_from_boundary: axes disagree at the base vertex");
    std::vector<ModelPoint> pts(static_cast<long>(width) * height);
    std::vector<Parabolic> f(pts.size());
    for (int x = 0; x < width; ++x) pts[x] = row0[x];
    for (int y = 0; y < height; ++y) pts[static_cast<long>(y) * width] = col0[y];
    auto stab = [&](long v) -> const Parabolic& {
        if (f[v].algebra() == nullptr) f[v] = model.point_to_parabolic(pts[v]);
        return f[v];
    };
    for (int y = 0; y + 1 < height; ++y) {
        for (int x = 0; x + 1 < width; ++x) {
            long i = static_cast<long>(y) * width + x;
            long j = i + 1;
            long l = i + width;
            long k = l + 1;
            double target = m_v[y] / m_h[x];
            if (target == 0.0 || target == 1.0)
                throw DegenerateQuad("net_from_boundary: cross-ratio target " + std::to_string(target) +
                                     " at quad (" + std::to_string(x) + "," + std::to_string(y) + ")");
            ComplementaryPair pair_lj = [&] {
                try {
                    ComplementaryPair pr = model.pair_from_points(pts[l], pts[j], &stab(l), &stab(j));
                    if (!model.points_complementary(pts[i], pts[j]) ||
                        !model.points_complementary(pts[i], pts[l]))
                        throw NotComplementary("adjacent boundary points coincide");
                    return pr;
                } catch (const NotComplementary& e) {
                    throw NotPairwiseComplementary(std::string("net_from_boundary: quad (") +
                                                   std::to_string(x) + "," + std::to_string(y) + "): " + e.what());
                }
            }();
            Parabolic moved = act_on_parabolic_unchecked(gamma_factor(pair_lj, target), stab(i));
            pts[k] = model.parabolic_to_point(moved);
            f[k] = model.point_to_parabolic(pts[k]);
        }
    }
    return Net::from_points(model, width, height, std::move(pts), std::move(m_h), std::move(m_v));
}

/// Gamma^t(to, from) = Gamma_{f(from)}^{f(to)}(1 - t / m(edge)): the discrete
/// flat connection of the net, through the closed-form grading elements.
inline Automorphism net_edge_factor(const Net& net, int from_x, int from_y, int to_x, int to_y, double t) {
    double m = net.m_edge(from_x, from_y, to_x, to_y);
    if (t == m) throw PoleParameter("net_edge_factor: t equals the edge's factorising value");
    const Parabolic& pa = net.at(from_x, from_y);
    const Parabolic& pb = net.at(to_x, to_y);
    ComplementaryPair pair = net.model().pair_from_points(net.point(from_x, from_y), net.point(to_x, to_y), &pa, &pb);
    return gamma_factor(pair, 1.0 - t / m);
}

/// Max deviation from discrete flatness over all elementary quadrilaterals;
/// an exact identity for valid nets, not a discretisation residual.
inline double net_flatness_residual(const Net& net, double t) {
    double worst = 0.0;
    for (int y = 0; y + 1 < net.height(); ++y)
        for (int x = 0; x + 1 < net.width(); ++x) {
            Matrix one = net_edge_factor(net, x + 1, y, x + 1, y + 1, t).matrix() *
                         net_edge_factor(net, x, y, x + 1, y, t).matrix();
            Matrix two = net_edge_factor(net, x, y + 1, x + 1, y + 1, t).matrix() *
                         net_edge_factor(net, x, y, x, y + 1, t).matrix();
            worst = std::max(worst, (one - two).norm());
        }
    return worst;
}

namespace detail {

/// Spanning-tree visit from the base vertex: up column 0 first, then along
/// each row.  fn(from_x, from_y, to_x, to_y).
template <typename F>
void net_tree_walk(int width, int height, F&& fn) {
    for (int y = 0; y + 1 < height; ++y) fn(0, y, 0, y + 1);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x + 1 < width; ++x) fn(x, y, x + 1, y);
}

}  // namespace detail

/// Darboux transform of a net: a Gamma^{mhat}-parallel vertex field grown
/// from the seed over the spanning tree.  Flatness makes the result
/// tree-independent; the residual on the remaining edges is checked.
inline Net net_darboux(const Net& net, double mhat, const ModelPoint& seed) {
    for (double m : net.m_horizontal())
        if (m == mhat) throw PoleParameter("net_darboux: mhat hits a horizontal edge pole");
    for (double m : net.m_vertical())
        if (m == mhat) throw PoleParameter("net_darboux: mhat hits a vertical edge pole");
    if (!net.model().points_complementary(net.point(0, 0), seed))
        throw ComplementarityLost("net_darboux: seed not complementary at the base vertex", 0);

    const Model& model = net.model();
    std::vector<ModelPoint> hat(net.vertex_count());
    hat[0] = seed;
    detail::net_tree_walk(net.width(), net.height(), [&](int fx, int fy, int tx, int ty) {
        Automorphism tr = net_edge_factor(net, fx, fy, tx, ty, mhat);
        long to = net.flatten(tx, ty);
        Parabolic moved = act_on_parabolic_unchecked(tr, model.point_to_parabolic(hat[net.flatten(fx, fy)]));
        hat[to] = model.parabolic_to_point(moved);
        if (!model.points_complementary(net.point(tx, ty), hat[to]))
            throw ComplementarityLost("net_darboux: transform not complementary", to);
    });

    Net out = Net::from_points(model, net.width(), net.height(), std::move(hat), net.m_horizontal(),
                               net.m_vertical());

    // tree independence via the unused edges (subspace-level comparison)
    double worst = 0.0;
    for (int y = 1; y < net.height(); ++y)
        for (int x = 0; x + 1 < net.width(); ++x) {
            Automorphism tr = net_edge_factor(net, x + 1, y - 1, x + 1, y, mhat);
            Subspace via = tr.apply(out.at(x + 1, y - 1).space());
            worst = std::max(worst, subspace_distance(via, out.at(x + 1, y).space()));
        }
    if (worst > 1e-8)
        throw PathDependence("net_darboux: propagated field is path dependent: " + std::to_string(worst));
    return out;
}

/// Per-edge cross-ratio certificate of a net Darboux pair:
/// cross(f(i), f(j), fhat(j), fhat(i)) = mhat / m(i,j) on every edge.
inline double net_darboux_edge_residual(const Net& net, const Net& hat, double mhat) {
    double worst = 0.0;
    auto edge = [&](int x1, int y1, int x2, int y2) {
        double target = mhat / net.m_edge(x1, y1, x2, y2);
        ExtReal cr = cross_ratio(net.at(x1, y1), net.at(x2, y2), hat.at(x2, y2), hat.at(x1, y1));
        if (cr.is_inf()) throw NotConcircular("net_darboux_edge_residual: infinite cross-ratio");
        worst = std::max(worst, std::abs(cr.value() - target));
    };
    for (int y = 0; y < net.height(); ++y)
        for (int x = 0; x + 1 < net.width(); ++x) edge(x, y, x + 1, y);
    for (int y = 0; y + 1 < net.height(); ++y)
        for (int x = 0; x < net.width(); ++x) edge(x, y, x, y + 1);
    return worst;
}

/// Tetrahedron property: fhat(k) depends only on fhat(i), f(j), f(l):
/// fhat(k) = Gamma_{f(l)}^{f(j)}((1 - mhat/m(i,j)) / (1 - mhat/m(i,l))) fhat(i).
inline double net_tetrahedron_residual(const Net& net, const Net& hat, double mhat) {
    double worst = 0.0;
    for (int y = 0; y + 1 < net.height(); ++y)
        for (int x = 0; x + 1 < net.width(); ++x) {
            double s = (1.0 - mhat / net.m_horizontal()[x]) / (1.0 - mhat / net.m_vertical()[y]);
            const Parabolic& pl = net.at(x, y + 1);
            const Parabolic& pj = net.at(x + 1, y);
            ComplementaryPair pair_lj = net.model().pair_from_points(net.point(x, y + 1), net.point(x + 1, y),
                                                                     &pl, &pj);
            Subspace predicted = gamma_factor(pair_lj, s).apply(hat.at(x, y).space());
            worst = std::max(worst, subspace_distance(predicted, hat.at(x + 1, y + 1).space()));
        }
    return worst;
}

struct NetTTransform {
    Net net;
    std::vector<Automorphism> phi;
};

/// T-transform: trivialise Gamma^s over the spanning tree (identity at the
/// base vertex) and push the vertices through; the factorising function
/// shifts to m - s.
inline NetTTransform net_t_transform(const Net& net, double s) {
    for (double m : net.m_horizontal())
        if (m == s) throw PoleParameter("net_t_transform: s hits a horizontal edge pole");
    for (double m : net.m_vertical())
        if (m == s) throw PoleParameter("net_t_transform: s hits a vertical edge pole");

    const Model& model = net.model();
    std::vector<Automorphism> phi(net.vertex_count(), Automorphism::identity(model.algebra()));
    detail::net_tree_walk(net.width(), net.height(), [&](int fx, int fy, int tx, int ty) {
        // Gamma^s(to, from) = Phi(to)^{-1} Phi(from)
        Automorphism tr = net_edge_factor(net, fx, fy, tx, ty, s);
        phi[net.flatten(tx, ty)] =
            Automorphism(model.algebra(), phi[net.flatten(fx, fy)].matrix() * tr.inverse().matrix());
    });

    std::vector<ModelPoint> moved(net.vertex_count());
    for (long v = 0; v < net.vertex_count(); ++v) {
        auto xy = std::div(v, static_cast<long>(net.width()));
        Parabolic image =
            act_on_parabolic_unchecked(phi[v], net.at(static_cast<int>(xy.rem), static_cast<int>(xy.quot)));
        moved[v] = model.parabolic_to_point(image);
    }
    std::vector<double> mh = net.m_horizontal(), mv = net.m_vertical();
    for (double& m : mh) m -= s;
    for (double& m : mv) m -= s;
    Net out = Net::from_points(model, net.width(), net.height(), std::move(moved), std::move(mh), std::move(mv));
    return {std::move(out), std::move(phi)};
}

/// Gauge identity of the T-transform: the transformed net's connection at t
/// equals the Phi_s-gauge of Gamma^{t+s}.  The defect is normalised by the
/// norms of the conjugating factors, which grow exponentially across the
/// grid by construction.
inline double net_t_gauge_residual(const Net& net, const NetTTransform& tt, double s,
                                   const std::vector<double>& ts = {0.23, -1.7, 0.9}) {
    double worst = 0.0;
    auto edge = [&](int x1, int y1, int x2, int y2, double t) {
        Matrix lhs = net_edge_factor(tt.net, x1, y1, x2, y2, t).matrix();
        Matrix a = tt.phi[net.flatten(x2, y2)].matrix();
        Matrix b = net_edge_factor(net, x1, y1, x2, y2, t + s).matrix();
        Matrix c = tt.phi[net.flatten(x1, y1)].inverse().matrix();
        Matrix rhs = a * b * c;
        double scale = std::max(1.0, a.norm() * b.norm() * c.norm());
        worst = std::max(worst, (lhs - rhs).norm() / scale);
    };
    for (double t : ts) {
        bool pole = false;
        for (double m : tt.net.m_horizontal()) pole = pole || m == t || m + s == t + s;
        for (double m : net.m_horizontal()) pole = pole || m == t + s;
        for (double m : net.m_vertical()) pole = pole || m == t + s;
        for (double m : tt.net.m_vertical()) pole = pole || m == t;
        if (pole) continue;
        for (int y = 0; y < net.height(); ++y)
            for (int x = 0; x + 1 < net.width(); ++x) edge(x, y, x + 1, y, t);
        for (int y = 0; y + 1 < net.height(); ++y)
            for (int x = 0; x < net.width(); ++x) edge(x, y, x, y + 1, t);
    }
    return worst;
}

struct Net3DConsistency {
    Net hat1, hat2;
    Net common_a, common_b;
    double agreement = 0.0;
};

/// Two Darboux transforms and their common transform computed both ways; the
/// Bianchi-style seed at the base vertex is shared.
inline Net3DConsistency net_3d_consistency(const Net& net, double mhat1, double mhat2, const ModelPoint& seed1,
                                           const ModelPoint& seed2) {
    if (mhat1 == mhat2) throw PoleParameter("net_3d_consistency: parameters must be distinct");
    if (!net.model().points_complementary(seed1, seed2))
        throw ComplementarityLost("net_3d_consistency: seeds not complementary", 0);
    Net3DConsistency out{net_darboux(net, mhat1, seed1), net_darboux(net, mhat2, seed2), Net{}, Net{}, 0.0};
    ComplementaryPair p21 = net.model().pair_from_points(out.hat2.point(0, 0), out.hat1.point(0, 0));
    Parabolic common0 = act_on_parabolic_unchecked(gamma_factor(p21, mhat2 / mhat1), net.at(0, 0));
    ModelPoint seed12 = net.model().parabolic_to_point(common0);
    out.common_a = net_darboux(out.hat1, mhat2, seed12);
    out.common_b = net_darboux(out.hat2, mhat1, seed12);
    double worst = 0.0;
    for (long v = 0; v < net.vertex_count(); ++v)
        worst = std::max(worst, parabolic_distance(out.common_a.vertices()[v], out.common_b.vertices()[v]));
    out.agreement = worst;
    return out;
}

/// Applies one automorphism to every vertex; the invariant is G-equivariant.
inline Net net_act(const Automorphism& g, const Net& net) {
    std::vector<ModelPoint> moved(net.vertex_count());
    for (long v = 0; v < net.vertex_count(); ++v) {
        auto xy = std::div(v, static_cast<long>(net.width()));
        moved[v] = net.model().parabolic_to_point(
            act_on_parabolic_unchecked(g, net.at(static_cast<int>(xy.rem), static_cast<int>(xy.quot))));
    }
    return Net::from_points(net.model(), net.width(), net.height(), std::move(moved), net.m_horizontal(),
                            net.m_vertical());
}

}  // namespace rspace
