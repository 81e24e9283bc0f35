#pragma once

#include <array>
#include <cmath>

#include "rspace/parabolic.hpp"

namespace rspace {

/// A point of R u {inf}: circle parameters and cross-ratios live here.
/// Infinity is an explicit state, never a sentinel float.
class ExtReal {
  public:
    ExtReal() = default;
    ExtReal(double v) : value_(v) {}  // NOLINT: implicit by design
    static ExtReal inf() {
        ExtReal e;
        e.infinite_ = true;
        return e;
    }

    bool is_inf() const { return infinite_; }
    double value() const {
        if (infinite_) throw Error("ExtReal: value() of infinity");
        return value_;
    }

    bool close_to(const ExtReal& o, double eps) const {
        if (infinite_ || o.infinite_) return infinite_ == o.infinite_;
        return std::abs(value_ - o.value_) <= eps;
    }

  private:
    double value_ = 0.0;
    bool infinite_ = false;
};

/// Linear fractional transformation t -> (a t + b) / (c t + d).
struct Mobius {
    double a = 1, b = 0, c = 0, d = 1;

    ExtReal operator()(const ExtReal& t) const {
        if (t.is_inf()) {
            if (c == 0) return ExtReal::inf();
            return a / c;
        }
        double num = a * t.value() + b, den = c * t.value() + d;
        if (std::abs(den) < 1e-14 * (std::abs(num) + 1)) return ExtReal::inf();
        return num / den;
    }

    /// The unique Mobius map sending t1, t2, t3 to s1, s2, s3.  Solved via
    /// cross-ratio transport; all six parameters must be finite here.
    static Mobius through(const std::array<double, 3>& t, const std::array<double, 3>& s) {
        // z -> cross(z; t1,t2,t3) = ((z-t1)(t2-t3)) / ((z-t3)(t2-t1)) sends
        // t1,t2,t3 to 0,1,inf; compose one such map with the inverse of the
        // other.
        auto normal = [](double p1, double p2, double p3) {
            // matrix of z -> ((z-p1)(p2-p3)) / ((z-p3)(p2-p1))
            double a = p2 - p3, b = -p1 * (p2 - p3);
            double c = p2 - p1, d = -p3 * (p2 - p1);
            return Mobius{a, b, c, d};
        };
        Mobius mt = normal(t[0], t[1], t[2]);
        Mobius ms = normal(s[0], s[1], s[2]);
        // ms^{-1} o mt
        Mobius inv{ms.d, -ms.b, -ms.c, ms.a};
        return Mobius{inv.a * mt.a + inv.b * mt.c, inv.a * mt.b + inv.b * mt.d,
                      inv.c * mt.a + inv.d * mt.c, inv.c * mt.b + inv.d * mt.d};
    }
};

/// Scalar cross-ratio ((a-b)(c-d)) / ((c-b)(a-d)) on R u {inf}; the ordering
/// convention is pinned so that cross(p1, pinf, pt, p0) = t.
inline ExtReal scalar_cross_ratio(const ExtReal& a, const ExtReal& b, const ExtReal& c, const ExtReal& d) {
    // Reduce infinities by the usual limit rules.
    auto diff = [](const ExtReal& x, const ExtReal& y) -> double {
        return x.value() - y.value();  // both finite when called
    };
    // Handle each infinite slot by cancelling its two factors.
    if (a.is_inf() && c.is_inf()) throw Error("scalar_cross_ratio: degenerate (a = c = inf)");
    if (b.is_inf() && d.is_inf()) throw Error("scalar_cross_ratio: degenerate (b = d = inf)");
    if (a.is_inf()) {  // (c-d)/(c-b)
        if (b.is_inf()) return ExtReal::inf();
        if (d.is_inf()) return 0.0;
        double den = diff(c, b);
        if (den == 0) return ExtReal::inf();
        return diff(c, d) / den;
    }
    if (b.is_inf()) {  // (c-d)/(a-d)
        if (c.is_inf()) return ExtReal::inf();
        double den = diff(a, d);
        if (den == 0) return ExtReal::inf();
        return diff(c, d) / den;
    }
    if (c.is_inf()) {  // (a-b)/(a-d)
        if (d.is_inf()) return 0.0;
        double den = diff(a, d);
        if (den == 0) return ExtReal::inf();
        return diff(a, b) / den;
    }
    if (d.is_inf()) {  // (a-b)/(c-b)
        double den = diff(c, b);
        if (den == 0) return ExtReal::inf();
        return diff(a, b) / den;
    }
    double num = diff(a, b) * diff(c, d);
    double den = diff(c, b) * diff(a, d);
    if (std::abs(den) < 1e-300) return ExtReal::inf();
    return num / den;
}

/// The circle through three mutually complementary points of a self-dual
/// symmetric R-space, carried by the element x_inf with
/// exp(t x_inf) . p0 = p_t and the sl(2)-span of the grading elements.
class Circle {
  public:
    const Parabolic& p0() const { return p0_; }
    const Parabolic& p1() const { return p1_; }
    const Parabolic& pinf() const { return pinf_; }
    const AlgebraElement& x_inf() const { return x_inf_; }
    const Subspace& sl2_span() const { return sl2_span_; }

    friend Circle circle_through(const Parabolic& p0, const Parabolic& p1, const Parabolic& pinf);

  private:
    Parabolic p0_, p1_, pinf_;
    AlgebraElement x_inf_;
    Subspace sl2_span_;
};

inline Circle circle_through(const Parabolic& p0, const Parabolic& p1, const Parabolic& pinf) {
    ComplementaryPair inf1, inf0, pair01;
    try {
        inf1 = make_pair(pinf, p1);
        inf0 = make_pair(pinf, p0);
        pair01 = make_pair(p0, p1);
    } catch (const NotComplementary& e) {
        throw NotPairwiseComplementary(std::string("circle_through: ") + e.what());
    }
    Circle c;
    c.p0_ = p0;
    c.p1_ = p1;
    c.pinf_ = pinf;
    c.x_inf_ = inf1.xi() - inf0.xi();

    const auto& g = p0.algebra();
    Subspace image = exp_nilpotent_action(c.x_inf_).apply(p0.space());
    if (subspace_distance(image, p1.space()) > 1e-8)
        throw NotPairwiseComplementary("circle_through: exp(x_inf) . p0 misses p1");

    // ker (ad x_inf)^2 = pinf.
    Matrix a2 = ad_operator(c.x_inf_);
    a2 = a2 * a2;
    Subspace ker = nullspace(a2);
    if (subspace_distance(ker, pinf.space()) > 1e-8)
        throw NotPairwiseComplementary("circle_through: ker (ad x_inf)^2 is not pinf");

    // Span of the three grading elements: a 3-dim subalgebra of Killing
    // signature (2,1).
    Matrix span(g->dim, 3);
    span.col(0) = pair01.xi().coords;   // xi_0^1
    span.col(1) = inf1.xi().coords;     // -xi_1^inf up to sign conventions
    span.col(2) = inf0.xi().coords;     // xi_0^inf family
    Subspace s = subspace_from_spanning(span);
    if (s.dim() != 3) throw NotPairwiseComplementary("circle_through: grading elements do not span sl(2)");
    Matrix off = Matrix::Identity(g->dim, g->dim) - s.projector();
    for (int i = 0; i < 3; ++i)
        for (int j = i + 1; j < 3; ++j) {
            Vector br = g->bracket(s.basis().col(i), s.basis().col(j));
            if ((off * br).norm() > 1e-9 * std::max(1.0, br.norm()))
                throw NotPairwiseComplementary("circle_through: grading span not closed under bracket");
        }
    Matrix gram(3, 3);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            gram(i, j) = g->killing_form(s.basis().col(i), s.basis().col(j));
    auto [pos, neg] = symmetric_signature(gram, 1e-9);
    if (pos != 2 || neg != 1)
        throw NotPairwiseComplementary("circle_through: sl(2)-span has wrong Killing signature");
    c.sl2_span_ = s;
    return c;
}

/// p_t = exp(t x_inf) . p0, with p_inf at t = inf.
inline Parabolic circle_point(const Circle& c, const ExtReal& t) {
    if (t.is_inf()) return c.pinf();
    return exp_act(t.value() * c.x_inf(), c.p0());
}

/// The circle parameter of c on the circle through (d, a, b): the t with
/// c = Gamma_d^b(t) . a.  Computed by stereoprojecting c in the chart (d, b)
/// and reading the ratio against x_inf.
inline ExtReal cross_ratio(const Parabolic& a, const Parabolic& b, const Parabolic& c, const Parabolic& d) {
    const double eq_eps = tol::parabolic_equality;
    if (parabolic_distance(c, d) < eq_eps) return 0.0;
    if (parabolic_distance(c, a) < eq_eps) return 1.0;
    if (parabolic_distance(c, b) < eq_eps) return ExtReal::inf();
    Circle circ;
    try {
        circ = circle_through(d, a, b);
    } catch (const NotPairwiseComplementary& e) {
        throw NotPairwiseComplementary(std::string("cross_ratio: ") + e.what());
    }
    Chart chart(make_pair(d, b));
    AlgebraElement f = [&] {
        try {
            return stereoproject(chart, c);
        } catch (const NotInChart& e) {
            throw NotConcircular(std::string("cross_ratio: ") + e.what());
        }
    }();
    const Vector& x = circ.x_inf().coords;
    double t = f.coords.dot(x) / x.squaredNorm();
    double off_line = (f.coords - t * x).norm();
    if (off_line > 1e-7 * std::max(1.0, f.coords.norm()))
        throw NotConcircular("cross_ratio: stereoprojection leaves the x_inf line");
    return t;
}

/// The point c with cross_ratio(a, b, c, d) = lambda: c = Gamma_d^b(lambda) . a.
inline Parabolic fourth_point(const Parabolic& a, const Parabolic& b, const Parabolic& d, const ExtReal& lambda) {
    if (lambda.is_inf()) return b;
    if (lambda.value() == 0.0) return d;
    ComplementaryPair db;
    try {
        db = make_pair(d, b);
        make_pair(d, a);
        make_pair(a, b);
    } catch (const NotComplementary& e) {
        throw NotPairwiseComplementary(std::string("fourth_point: ") + e.what());
    }
    return act_on_parabolic(gamma_factor(db, lambda.value()), a);
}

}  // namespace rspace
