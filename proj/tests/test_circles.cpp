#include <catch2/catch_amalgamated.hpp>

#include "rspace/circles.hpp"
#include "rspace/models.hpp"
#include "test_helpers.hpp"

using namespace rspace;
using namespace rspace::testing;

namespace {

Parabolic rp1_point(const Model& m, const ExtReal& t) {
    Matrix v(2, 1);
    if (t.is_inf()) v << 0, 1;
    else v << 1, t.value();
    return m.point_to_parabolic(m.make_point(v));
}

// Three mutually complementary random points of a model, as parabolics.
// Resamples until the configuration is generic: every mutual stereoprojection
// stays bounded, which keeps the conditioning of exp-actions tame.
std::array<Parabolic, 3> random_triple(const Model& m, Rng& rng) {
    for (;;) {
        ModelPoint a = m.random_point(rng), b = m.random_point(rng), c = m.random_point(rng);
        if (!m.points_complementary(a, b) || !m.points_complementary(b, c) || !m.points_complementary(a, c))
            continue;
        std::array<Parabolic, 3> tri = {m.point_to_parabolic(a), m.point_to_parabolic(b),
                                        m.point_to_parabolic(c)};
        bool tame = true;
        try {
            for (int i = 0; i < 3 && tame; ++i)
                for (int j = 0; j < 3 && tame; ++j) {
                    if (i == j) continue;
                    int k = 3 - i - j;
                    Chart chart(make_pair(tri[i], tri[j]));
                    if (stereoproject(chart, tri[k]).norm() > 8.0) tame = false;
                }
        } catch (const Error&) {
            tame = false;
        }
        if (tame) return tri;
    }
}

}  // namespace

TEST_CASE("sl(2,R) canonical circle") {
    Model m = Model::rp1();
    auto g = m.algebra();
    Parabolic p0 = rp1_point(m, 0.0);    // stab<e1>
    Parabolic p1 = rp1_point(m, 1.0);    // stab<e1+e2>
    Parabolic pinf = rp1_point(m, ExtReal::inf());  // stab<e2>

    Circle c = circle_through(p0, p1, pinf);
    // x_inf = F from the grading-element difference
    REQUIRE((c.x_inf().coords - sl2_F(g).coords).norm() < 1e-10);

    // circle_point follows stab<e1 + t e2>
    REQUIRE(parabolic_distance(circle_point(c, 0.0), p0) < 1e-12);
    REQUIRE(parabolic_distance(circle_point(c, 1.0), p1) < 1e-10);
    REQUIRE(parabolic_distance(circle_point(c, ExtReal::inf()), pinf) < 1e-12);
    for (double t : {0.5, -2.0, 3.25}) {
        REQUIRE(parabolic_distance(circle_point(c, t), rp1_point(m, t)) < 1e-9);
    }

    // degenerate input
    REQUIRE_THROWS_AS(circle_through(p0, p0, pinf), NotPairwiseComplementary);
}

TEST_CASE("Gamma parametrises the circle") {
    Model m = Model::conformal(2, 0);
    Rng rng(44);
    auto [p0, p1, pinf] = random_triple(m, rng);
    Circle c = circle_through(p0, p1, pinf);
    ComplementaryPair pair = make_pair(p0, pinf);
    for (double t : {0.7, -1.3, 2.0}) {
        Parabolic via_gamma = act_on_parabolic(gamma_factor(pair, t), p1);
        REQUIRE(parabolic_distance(via_gamma, circle_point(c, t)) < 1e-9);
    }
    // distinct parameters give complementary points
    REQUIRE(complementary(circle_point(c, 0.3), circle_point(c, -0.8)));
}

TEST_CASE("circle exists through random conformal triples and closes under bracket") {
    Model m = Model::conformal(2, 1);
    Rng rng(45);
    for (int trial = 0; trial < 5; ++trial) {
        auto [a, b, c] = random_triple(m, rng);
        Circle circ = circle_through(a, b, c);
        REQUIRE(circ.sl2_span().dim() == 3);
    }
}

TEST_CASE("cross_ratio pins Eq-(12) convention") {
    Rng rng(46);
    for (Model m : {Model::rp1(), Model::conformal(2, 0), Model::conformal(3, 1)}) {
        auto [p0, p1, pinf] = random_triple(m, rng);
        Circle c = circle_through(p0, p1, pinf);
        for (int k = 0; k < 10; ++k) {
            double t = rng.uniform(-4.0, 4.0);
            if (std::abs(t) < 0.05 || std::abs(t - 1) < 0.05) continue;
            ExtReal r = cross_ratio(p1, pinf, circle_point(c, t), p0);
            REQUIRE_FALSE(r.is_inf());
            REQUIRE(r.value() == Catch::Approx(t).margin(1e-9));
        }
        // endpoints
        REQUIRE(cross_ratio(p1, pinf, p0, p0).close_to(0.0, 1e-12));
        REQUIRE(cross_ratio(p1, pinf, p1, p0).close_to(1.0, 1e-12));
        REQUIRE(cross_ratio(p1, pinf, pinf, p0).is_inf());
    }
}

TEST_CASE("cross_ratio matches the scalar formula on RP1") {
    Model m = Model::rp1();
    Rng rng(47);
    for (int trial = 0; trial < 20; ++trial) {
        double a = rng.uniform(-3, 3), c = rng.uniform(-3, 3), d = rng.uniform(-3, 3);
        if (std::abs(a - c) < 0.1 || std::abs(a - d) < 0.1 || std::abs(c - d) < 0.1) continue;
        // affine points a, inf, c, d: formula limit is (c - d)/(a - d)
        ExtReal lib = cross_ratio(rp1_point(m, a), rp1_point(m, ExtReal::inf()), rp1_point(m, c), rp1_point(m, d));
        ExtReal oracle = scalar_cross_ratio(a, ExtReal::inf(), c, d);
        REQUIRE(lib.value() == Catch::Approx(oracle.value()).margin(1e-9));
        // and with four finite points
        double b = rng.uniform(4, 6);
        ExtReal lib2 = cross_ratio(rp1_point(m, a), rp1_point(m, b), rp1_point(m, c), rp1_point(m, d));
        ExtReal oracle2 = scalar_cross_ratio(a, b, c, d);
        REQUIRE(lib2.value() == Catch::Approx(oracle2.value()).margin(1e-8));
    }
}

TEST_CASE("cross_ratio rejects non-concircular points") {
    Model m = Model::conformal(2, 1);
    Rng rng(48);
    auto [a, b, d] = random_triple(m, rng);
    // a generic fourth point is off the circle in dim > 1 models
    int rejected = 0;
    for (int trial = 0; trial < 6; ++trial) {
        Parabolic c = m.point_to_parabolic(m.random_point(rng));
        try {
            cross_ratio(a, b, c, d);
        } catch (const NotConcircular&) {
            ++rejected;
        } catch (const NotPairwiseComplementary&) {
        }
    }
    REQUIRE(rejected >= 5);
}

TEST_CASE("fourth_point") {
    Model m = Model::rp1();
    Parabolic a = rp1_point(m, 1.0), b = rp1_point(m, ExtReal::inf()), d = rp1_point(m, 0.0);
    // lambda = 1 -> a
    REQUIRE(parabolic_distance(fourth_point(a, b, d, 1.0), a) < 1e-12);
    // affine t
    for (double t : {0.4, -2.5, 3.0}) {
        Parabolic c = fourth_point(a, b, d, t);
        REQUIRE(parabolic_distance(c, rp1_point(m, t)) < 1e-9);
    }

    Model conf = Model::conformal(3, 1);
    Rng rng(49);
    auto [x, y, z] = random_triple(conf, rng);
    Parabolic c = fourth_point(x, y, z, -1.0);
    ExtReal r = cross_ratio(x, y, c, z);
    REQUIRE(r.value() == Catch::Approx(-1.0).margin(1e-9));
}

TEST_CASE("Mobius reparametrisation between triples of one circle") {
    Model m = Model::conformal(2, 0);
    Rng rng(50);
    auto [p0, p1, pinf] = random_triple(m, rng);
    Circle c = circle_through(p0, p1, pinf);
    // second triple sampled from the circle
    Parabolic q0 = circle_point(c, 0.4), q1 = circle_point(c, -1.1), qinf = circle_point(c, 2.3);
    Circle c2 = circle_through(q0, q1, qinf);

    std::array<double, 3> ts = {0.9, -0.6, 3.1};
    std::array<double, 3> ss{};
    for (int i = 0; i < 3; ++i) {
        ExtReal s = cross_ratio(c2.p1(), c2.pinf(), circle_point(c, ts[i]), c2.p0());
        REQUIRE_FALSE(s.is_inf());
        ss[i] = s.value();
    }
    Mobius mob = Mobius::through(ts, ss);
    for (int k = 0; k < 10; ++k) {
        double t = rng.uniform(-2.0, 2.0);
        Parabolic pt = circle_point(c, t);
        ExtReal s_direct = cross_ratio(c2.p1(), c2.pinf(), pt, c2.p0());
        ExtReal s_fit = mob(t);
        if (s_direct.is_inf() || s_fit.is_inf()) continue;
        REQUIRE(s_direct.value() == Catch::Approx(s_fit.value()).margin(1e-7));
    }
}

TEST_CASE("cross_ratio is G-invariant") {
    Model m = Model::conformal(2, 1);
    Rng rng(51);
    auto [a, b, d] = random_triple(m, rng);
    Parabolic c = fourth_point(a, b, d, 1.8);
    double base = cross_ratio(a, b, c, d).value();
    for (int trial = 0; trial < 5; ++trial) {
        auto [gdef, aut] = m.random_group_element(rng);
        (void)gdef;
        double moved = cross_ratio(act_on_parabolic(aut, a), act_on_parabolic(aut, b),
                                   act_on_parabolic(aut, c), act_on_parabolic(aut, d))
                           .value();
        REQUIRE(moved == Catch::Approx(base).margin(1e-8));
    }
}

TEST_CASE("five-point concircularity (real-w dressing data)") {
    Rng rng(52);
    for (Model m : {Model::conformal(2, 0), Model::conformal(3, 1)}) {
        for (double w : {0.45, 1.8, -0.7}) {
            auto [p, p1, p2] = random_triple(m, rng);
            ComplementaryPair pp1 = make_pair(p, p1);
            Parabolic r = act_on_parabolic(gamma_factor(pp1, w), p2);
            Parabolic tau_r = act_on_parabolic(gamma_factor(pp1, -1.0), r);
            // tau r = Gamma(-w) p2
            REQUIRE(parabolic_distance(tau_r, act_on_parabolic(gamma_factor(pp1, -w), p2)) < 1e-9);
            REQUIRE(complementary(r, tau_r));
            // all five concircular: r and tau r sit on the circle through
            // (p, p2, p1) at parameters w and -w of the Gamma parametrisation
            ExtReal cr_r = cross_ratio(p2, p1, r, p);
            ExtReal cr_tau = cross_ratio(p2, p1, tau_r, p);
            REQUIRE(cr_r.value() == Catch::Approx(w).margin(1e-8));
            REQUIRE(cr_tau.value() == Catch::Approx(-w).margin(1e-8));
        }
    }
}
