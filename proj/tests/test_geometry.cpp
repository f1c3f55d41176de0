#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "ellipse_calib/geometry.hpp"
#include "ellipse_calib/rng.hpp"

using namespace ecal;

namespace {

constexpr double kPi = 3.14159265358979323846;

// Independent arc-length oracle: adaptive Simpson on the raw integrand.
double simpson_arc(const DelayEllipse& e, double lo, double hi, double tol,
                   int depth = 0) {
    auto f = [&](double t) {
        const double c = std::cos(t);
        return e.a * std::sqrt(1.0 - e.eccentricity * e.eccentricity * c * c);
    };
    const double mid = 0.5 * (lo + hi);
    const double h = hi - lo;
    const double whole = h / 6.0 * (f(lo) + 4.0 * f(mid) + f(hi));
    const double left =
        h / 12.0 * (f(lo) + 4.0 * f(0.5 * (lo + mid)) + f(mid));
    const double right =
        h / 12.0 * (f(mid) + 4.0 * f(0.5 * (mid + hi)) + f(hi));
    if (std::abs(left + right - whole) < 15.0 * tol || depth > 24) {
        return left + right + (left + right - whole) / 15.0;
    }
    return simpson_arc(e, lo, mid, tol / 2.0, depth + 1) +
           simpson_arc(e, mid, hi, tol / 2.0, depth + 1);
}

// Bisection oracle for the inverse arc length.
double bisect_inverse(const DelayEllipse& e, double s) {
    double lo = 0.0;
    double hi = 2.0 * kPi;
    for (int i = 0; i < 80; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (arc_length(e, mid) < s) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

DelayEllipse three_four_five() {
    return make_delay_ellipse({{-3.0, 0.0}, {3.0, 0.0}},
                              Mpc::from_path_length(10.0));
}

DelayEllipse setup2_ellipse() {
    return make_delay_ellipse({{-15.685, 0.0}, {15.685, 0.0}},
                              Mpc::from_path_length(38.673));
}

DelayEllipse unit_circle() {
    DelayEllipse e;
    e.link = {{0.0, 0.0}, {0.0, 0.0}};
    e.a = 1.0;
    e.b = 1.0;
    e.d = 2.0;
    e.center = {0.0, 0.0};
    e.rotation_angle = 0.0;
    e.eccentricity = 0.0;
    e.circumference = 2.0 * kPi;
    return e;
}

}  // namespace

TEST_CASE("make_delay_ellipse reproduces the measured link geometry") {
    const DelayEllipse e = setup2_ellipse();
    CHECK(std::abs(e.a - 19.337) < 1e-3);
    CHECK(std::abs(e.b - 11.308) < 1e-3);
    // Closed-form circumference of these axes; the figure published for
    // this link (97.633 m) is not consistent with its own axes.
    CHECK(std::abs(e.circumference - 97.932931) < 1e-3);
    CHECK(e.circumference ==
          doctest::Approx(4.0 * e.a * std::comp_ellint_2(e.eccentricity))
              .epsilon(1e-12));
}

TEST_CASE("make_delay_ellipse on the 3-4-5 focal triangle") {
    const DelayEllipse e = three_four_five();
    CHECK(e.a == doctest::Approx(5.0));
    CHECK(e.b == doctest::Approx(4.0));
    CHECK(e.center.x == doctest::Approx(0.0));
    CHECK(e.center.y == doctest::Approx(0.0));
    CHECK(e.rotation_angle == doctest::Approx(0.0));
}

TEST_CASE("make_delay_ellipse rotation for a vertical link") {
    const DelayEllipse e = make_delay_ellipse({{0.0, -3.0}, {0.0, 3.0}},
                                              Mpc::from_path_length(10.0));
    CHECK(std::abs(std::abs(e.rotation_angle) - kPi / 2.0) < 1e-12);
    CHECK(e.a == doctest::Approx(5.0));
    CHECK(e.b == doctest::Approx(4.0));
    // tx and rx are the foci.
    const Vec2 p = arc_to_point(e, 1.0);
    CHECK(distance(p, e.link.tx) + distance(p, e.link.rx) ==
          doctest::Approx(10.0).epsilon(1e-9));
}

TEST_CASE("make_delay_ellipse rejects degenerate path lengths") {
    const NetworkLink link{{-3.0, 0.0}, {3.0, 0.0}};
    CHECK_THROWS_AS(make_delay_ellipse(link, Mpc::from_path_length(6.0)),
                    DegenerateEllipse);
    CHECK_THROWS_AS(make_delay_ellipse(link, Mpc::from_path_length(5.0)),
                    DegenerateEllipse);
}

TEST_CASE("arc_length on the circle limit and domain edges") {
    const DelayEllipse c = unit_circle();
    CHECK(arc_length(c, kPi / 2.0) == doctest::Approx(kPi / 2.0));
    CHECK(arc_length(c, 0.0) == 0.0);
    CHECK_THROWS_AS(arc_length(c, -0.1), DomainError);
    CHECK_THROWS_AS(arc_length(c, 2.0 * kPi + 0.1), DomainError);
}

TEST_CASE("arc_length full revolution matches the circumference") {
    const DelayEllipse e = setup2_ellipse();
    CHECK(std::abs(arc_length(e, 2.0 * kPi) - 97.932931) < 1e-3);
    // Independent quadrature oracle.
    const double oracle = simpson_arc(e, 0.0, 2.0 * kPi, 1e-12 * e.a);
    CHECK(arc_length(e, 2.0 * kPi) ==
          doctest::Approx(oracle).epsilon(1e-10));
    // And the standard-library elliptic integral.
    CHECK(e.circumference ==
          doctest::Approx(4.0 * e.a * std::comp_ellint_2(e.eccentricity))
              .epsilon(1e-10));
}

TEST_CASE("arc_length quarter symmetry and monotonicity") {
    const DelayEllipse e = three_four_five();
    const double L = e.circumference;
    CHECK(arc_length(e, kPi) == doctest::Approx(L / 2.0).epsilon(1e-12));
    CHECK(arc_length(e, kPi / 2.0) == doctest::Approx(L / 4.0).epsilon(1e-12));
    double prev = 0.0;
    for (int i = 1; i <= 200; ++i) {
        const double s = arc_length(e, 2.0 * kPi * i / 200.0);
        CHECK(s >= prev);
        prev = s;
    }
}

TEST_CASE("circle degeneration: arc_length approaches a*theta") {
    const DelayEllipse e = make_delay_ellipse({{-1e-9, 0.0}, {1e-9, 0.0}},
                                              Mpc::from_path_length(2.0));
    for (double theta : {0.3, 1.0, 2.5, 5.0}) {
        CHECK(arc_length(e, theta) ==
              doctest::Approx(e.a * theta).epsilon(1e-6));
    }
}

TEST_CASE("inverse_arc_length basics") {
    const DelayEllipse c = unit_circle();
    CHECK(inverse_arc_length(c, kPi) == doctest::Approx(kPi));
    CHECK(inverse_arc_length(c, 0.0) == 0.0);
    const DelayEllipse e = setup2_ellipse();
    const double L = e.circumference;
    CHECK(inverse_arc_length(e, L / 4.0) ==
          doctest::Approx(kPi / 2.0).epsilon(1e-9));
    CHECK(inverse_arc_length(e, L / 4.0) ==
          doctest::Approx(bisect_inverse(e, L / 4.0)).epsilon(1e-9));
    CHECK_THROWS_AS(inverse_arc_length(e, -1.0), DomainError);
    CHECK_THROWS_AS(inverse_arc_length(e, L), DomainError);
}

TEST_CASE("arc_length / inverse_arc_length round trip") {
    const DelayEllipse e = setup2_ellipse();
    const double L = e.circumference;
    CounterRng rng(7);
    for (int i = 0; i < 200; ++i) {
        const double s = rng.next_double() * L * 0.999999;
        const double theta = inverse_arc_length(e, s);
        CHECK(std::abs(arc_length(e, theta) - s) < 1e-9 * L);
    }
}

TEST_CASE("arc_to_point named positions") {
    const DelayEllipse e = three_four_five();
    const double L = e.circumference;
    const Vec2 p0 = arc_to_point(e, 0.0);
    CHECK(p0.x == doctest::Approx(5.0).epsilon(1e-9));
    CHECK(p0.y == doctest::Approx(0.0).scale(1).epsilon(1e-9));
    const Vec2 ph = arc_to_point(e, L / 2.0);
    CHECK(ph.x == doctest::Approx(-5.0).epsilon(1e-9));
    const Vec2 pq = arc_to_point(e, L / 4.0);
    CHECK(std::abs(pq.x) < 1e-9);
    CHECK(pq.y == doctest::Approx(4.0).epsilon(1e-9));
}

TEST_CASE("focal-sum property over random arcs") {
    const DelayEllipse e = setup2_ellipse();
    CounterRng rng(11);
    for (int i = 0; i < 2000; ++i) {
        const double s = rng.next_double() * e.circumference * 0.9999999;
        const Vec2 p = arc_to_point(e, s);
        const double focal =
            distance(p, e.link.tx) + distance(p, e.link.rx);
        CHECK(std::abs(focal - e.d) < 1e-6);
    }
}

TEST_CASE("point_to_arc projection") {
    const DelayEllipse e = three_four_five();
    const double L = e.circumference;
    // Round trip for points on the ellipse.
    CounterRng rng(13);
    for (int i = 0; i < 200; ++i) {
        const double s = rng.next_double() * L * 0.9999999;
        const Vec2 p = arc_to_point(e, s);
        const Vec2 q = arc_to_point(e, point_to_arc(e, p));
        CHECK(distance(p, q) < 1e-6);
    }
    // Exterior point on the major axis projects to the vertex.
    CHECK(point_to_arc(e, {10.0, 0.0}) == doctest::Approx(0.0).scale(1));
    // The center ties between both co-vertices; smallest arc wins.
    CHECK(point_to_arc(e, {0.0, 0.0}) ==
          doctest::Approx(L / 4.0).epsilon(1e-9));
}

TEST_CASE("distance_to_ellipse") {
    const DelayEllipse e = three_four_five();
    const Vec2 on = arc_to_point(e, 3.0);
    CHECK(distance_to_ellipse(e, on) < 1e-9);
    CHECK(distance_to_ellipse(e, {10.0, 0.0}) == doctest::Approx(5.0));
    CHECK(distance_to_ellipse(e, {0.0, 0.0}) == doctest::Approx(4.0));
}

TEST_CASE("virtual_nodes named examples") {
    const DelayEllipse e = three_four_five();
    const VirtualNodes vn1 = virtual_nodes(e, {0.0, 4.0});
    CHECK(vn1.vt.x == doctest::Approx(-3.0));
    CHECK(vn1.vt.y == doctest::Approx(8.0));
    CHECK(vn1.vr.x == doctest::Approx(3.0));
    CHECK(vn1.vr.y == doctest::Approx(8.0));
    const VirtualNodes vn2 = virtual_nodes(e, {5.0, 0.0});
    CHECK(vn2.vt.x == doctest::Approx(13.0));
    CHECK(vn2.vt.y == doctest::Approx(0.0).scale(1));
    CHECK(vn2.vr.x == doctest::Approx(7.0));
    const VirtualNodes vn3 = virtual_nodes(e, {0.0, -4.0});
    CHECK(vn3.vt.y == doctest::Approx(-8.0));
    CHECK(vn3.vr.y == doctest::Approx(-8.0));
    CHECK_THROWS_AS(virtual_nodes(e, e.link.tx), DegenerateRp);
}

TEST_CASE("virtual-node distances hold for random reflection points") {
    const DelayEllipse e = setup2_ellipse();
    CounterRng rng(17);
    for (int i = 0; i < 500; ++i) {
        const double s = rng.next_double() * e.circumference * 0.9999999;
        const VirtualNodes vn = virtual_nodes(e, arc_to_point(e, s));
        CHECK(distance(vn.vt, e.link.rx) == doctest::Approx(e.d).epsilon(1e-12));
        CHECK(distance(vn.vr, e.link.tx) == doctest::Approx(e.d).epsilon(1e-12));
    }
}

TEST_CASE("excess_paths named examples") {
    const DelayEllipse e = three_four_five();
    const Vec2 rp{0.0, 4.0};
    // User on the tx->rp segment.
    const ExcessPaths a = excess_paths(e, rp, {-1.5, 2.0});
    CHECK(std::abs(a.xi_tx) < 1e-12);
    // User at the reflection point sits on both segments.
    const ExcessPaths b = excess_paths(e, rp, rp);
    CHECK(std::abs(b.xi_tx) < 1e-12);
    CHECK(std::abs(b.xi_rx) < 1e-12);
    // User at the center.
    const ExcessPaths c = excess_paths(e, rp, {0.0, 0.0});
    const double expected = 3.0 + std::sqrt(73.0) - 10.0;
    CHECK(c.xi_tx == doctest::Approx(expected).epsilon(1e-12));
    CHECK(c.xi_rx == doctest::Approx(expected).epsilon(1e-12));
    CHECK(c.xi_min == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("excess paths are nonnegative for on-ellipse reflection points") {
    const DelayEllipse e = three_four_five();
    CounterRng rng(19);
    for (int i = 0; i < 500; ++i) {
        const double s = rng.next_double() * e.circumference * 0.9999999;
        const Vec2 rp = arc_to_point(e, s);
        const Vec2 user{(rng.next_double() - 0.5) * 20.0,
                        (rng.next_double() - 0.5) * 20.0};
        const ExcessPaths xp = excess_paths(e, rp, user);
        CHECK(xp.xi_tx > -1e-9);
        CHECK(xp.xi_rx > -1e-9);
    }
}

TEST_CASE("find_reflection_points tangency and crossings") {
    const DelayEllipse e = three_four_five();
    const double L = e.circumference;
    // Horizontal wall tangent at the co-vertex.
    const std::vector<double> tangent =
        find_reflection_points(e, {{{-10.0, 4.0}, {10.0, 4.0}}});
    REQUIRE(tangent.size() == 1);
    CHECK(tangent[0] == doctest::Approx(L / 4.0).epsilon(1e-6));
    // Wall outside the ellipse extent.
    CHECK(find_reflection_points(e, {{{-10.0, 6.0}, {10.0, 6.0}}}).empty());
    // Vertical wall through both co-vertices.
    const std::vector<double> two =
        find_reflection_points(e, {{{0.0, -10.0}, {0.0, 10.0}}});
    REQUIRE(two.size() == 2);
    CHECK(two[0] == doctest::Approx(L / 4.0).epsilon(1e-6));
    CHECK(two[1] == doctest::Approx(3.0 * L / 4.0).epsilon(1e-6));
    // Dense-sampling oracle: every returned arc lies on the wall.
    for (double s : two) {
        const Vec2 p = arc_to_point(e, s);
        CHECK(std::abs(p.x) < 1e-6);
    }
}
