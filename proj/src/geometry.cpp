#include "ellipse_calib/geometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace ecal {
namespace {

constexpr double kPi = 3.14159265358979323846;

// Gauss-Kronrod 7-15 pair on [-1, 1].
constexpr std::array<double, 15> kKronrodNodes = {
    -0.991455371120813, -0.949107912342759, -0.864864423359769,
    -0.741531185599394, -0.586087235467691, -0.405845151377397,
    -0.207784955007898, 0.0,
    0.207784955007898,  0.405845151377397,  0.586087235467691,
    0.741531185599394,  0.864864423359769,  0.949107912342759,
    0.991455371120813};
constexpr std::array<double, 15> kKronrodWeights = {
    0.022935322010529, 0.063092092629979, 0.104790010322250,
    0.140653259715525, 0.169004726639267, 0.190350578064785,
    0.204432940075298, 0.209482141084728,
    0.204432940075298, 0.190350578064785, 0.169004726639267,
    0.140653259715525, 0.104790010322250, 0.063092092629979,
    0.022935322010529};
constexpr std::array<double, 4> kGaussWeights = {
    0.129484966168870, 0.279705391489277, 0.381830050505119,
    0.417959183673469};

template <typename F>
void gauss_kronrod(F&& f, double lo, double hi, double* result, double* err) {
    const double mid = 0.5 * (lo + hi);
    const double half = 0.5 * (hi - lo);
    double gk = 0.0;
    double g = 0.0;
    std::array<double, 15> fv;
    for (int i = 0; i < 15; ++i) {
        fv[i] = f(mid + half * kKronrodNodes[i]);
        gk += kKronrodWeights[i] * fv[i];
    }
    // Gauss points are the odd-indexed Kronrod nodes.
    g = kGaussWeights[3] * fv[7];
    for (int i = 0; i < 3; ++i) {
        g += kGaussWeights[i] * (fv[2 * i + 1] + fv[13 - 2 * i]);
    }
    *result = half * gk;
    *err = std::abs(half * (gk - g));
}

template <typename F>
double integrate_adaptive(F&& f, double lo, double hi, double abs_tol,
                          int depth = 0) {
    double result = 0.0;
    double err = 0.0;
    gauss_kronrod(f, lo, hi, &result, &err);
    if (err <= abs_tol || depth >= 30) {
        return result;
    }
    const double mid = 0.5 * (lo + hi);
    return integrate_adaptive(f, lo, mid, 0.5 * abs_tol, depth + 1) +
           integrate_adaptive(f, mid, hi, 0.5 * abs_tol, depth + 1);
}

// Arc-length integrand ds/dtheta for local parameterization (a cos, b sin).
double arc_speed(const DelayEllipse& e, double theta) {
    const double c = std::cos(theta);
    return e.a * std::sqrt(1.0 - e.eccentricity * e.eccentricity * c * c);
}

// Incomplete arc integral on [0, theta] for theta in [0, pi/2].
double quarter_arc(const DelayEllipse& e, double theta) {
    if (theta <= 0.0) {
        return 0.0;
    }
    const double tol = 1e-11 * std::max(e.a, 1.0);
    return integrate_adaptive([&](double t) { return arc_speed(e, t); }, 0.0,
                              theta, tol);
}

double wrap_angle(double theta) {
    theta = std::fmod(theta, 2.0 * kPi);
    if (theta < 0.0) {
        theta += 2.0 * kPi;
    }
    return theta;
}

// Newton refinement of the closest-point parameter, started from theta0.
// Minimizes |point(theta) - q|^2 in the local frame.
double project_newton(const DelayEllipse& e, const Vec2& q, double theta0) {
    double theta = theta0;
    for (int it = 0; it < 60; ++it) {
        const double c = std::cos(theta);
        const double s = std::sin(theta);
        const double dx = e.a * c - q.x;
        const double dy = e.b * s - q.y;
        // d/dtheta of squared distance / 2 and its derivative.
        const double g = -dx * e.a * s + dy * e.b * c;
        const double h = e.a * e.a * s * s + e.b * e.b * c * c -
                         dx * e.a * c - dy * e.b * s;
        if (std::abs(h) < 1e-300) {
            break;
        }
        const double step = g / h;
        theta -= step;
        if (std::abs(step) < 1e-14) {
            break;
        }
    }
    return wrap_angle(theta);
}

}  // namespace

Vec2 Vec2::normalized() const {
    const double n = norm();
    if (n <= 0.0) {
        throw DomainError("cannot normalize zero vector");
    }
    return {x / n, y / n};
}

Vec2 DelayEllipse::local_to_world(const Vec2& local) const {
    const double c = std::cos(rotation_angle);
    const double s = std::sin(rotation_angle);
    return {c * local.x - s * local.y + center.x,
            s * local.x + c * local.y + center.y};
}

Vec2 DelayEllipse::world_to_local(const Vec2& world) const {
    const double c = std::cos(rotation_angle);
    const double s = std::sin(rotation_angle);
    const Vec2 t = world - center;
    return {c * t.x + s * t.y, -s * t.x + c * t.y};
}

Vec2 DelayEllipse::point_at_parameter(double theta) const {
    return {a * std::cos(theta), b * std::sin(theta)};
}

double complete_ellint_2(double k) {
    DelayEllipse e;
    e.a = 1.0;
    e.eccentricity = k;
    return quarter_arc(e, kPi / 2.0);
}

DelayEllipse make_delay_ellipse(const NetworkLink& link, const Mpc& mpc) {
    const double d_los = link.los_distance();
    if (!(d_los > 0.0)) {
        throw DegenerateEllipse("tx and rx coincide");
    }
    if (!(mpc.path_length_m > d_los)) {
        throw DegenerateEllipse("MPC path length must exceed the LoS distance");
    }
    DelayEllipse e;
    e.link = link;
    e.d = mpc.path_length_m;
    e.a = 0.5 * mpc.path_length_m;
    e.b = 0.5 * std::sqrt(mpc.path_length_m * mpc.path_length_m - d_los * d_los);
    e.center = (link.tx + link.rx) * 0.5;
    const Vec2 ex_l = (link.rx - link.tx).normalized();
    // Rotation from world x-axis to local major axis, signed by the
    // determinant of [e_x, e_xl].
    double cosang = std::clamp(ex_l.x, -1.0, 1.0);
    const double det = ex_l.y;  // det([1 0; ex_l])
    const double sgn = (det < 0.0) ? -1.0 : 1.0;
    e.rotation_angle = sgn * std::acos(cosang);
    e.eccentricity = std::sqrt(1.0 - (e.b * e.b) / (e.a * e.a));
    e.circumference = 4.0 * e.a * complete_ellint_2(e.eccentricity);
    return e;
}

double arc_length(const DelayEllipse& e, double theta) {
    if (!(theta >= 0.0 && theta <= 2.0 * kPi)) {
        throw DomainError("theta outside [0, 2pi]");
    }
    const double L = e.circumference;
    // The integrand is symmetric about pi/2; fold into the first quadrant.
    if (theta <= 0.5 * kPi) {
        return quarter_arc(e, theta);
    }
    if (theta <= kPi) {
        return 0.5 * L - quarter_arc(e, kPi - theta);
    }
    if (theta <= 1.5 * kPi) {
        return 0.5 * L + quarter_arc(e, theta - kPi);
    }
    return L - quarter_arc(e, 2.0 * kPi - theta);
}

double inverse_arc_length(const DelayEllipse& e, double s) {
    const double L = e.circumference;
    if (!(s >= 0.0 && s < L)) {
        throw DomainError("arc length outside [0, L)");
    }
    if (s == 0.0) {
        return 0.0;
    }
    // Newton with the arc-speed derivative, safeguarded by a bracket.
    double lo = 0.0;
    double hi = 2.0 * kPi;
    double theta = 2.0 * kPi * s / L;
    const double tol = 1e-10 * L;
    for (int it = 0; it < 100; ++it) {
        const double f = arc_length(e, theta) - s;
        if (std::abs(f) < tol) {
            break;
        }
        if (f > 0.0) {
            hi = theta;
        } else {
            lo = theta;
        }
        const double deriv = arc_speed(e, theta);
        double next = theta - f / deriv;
        if (!(next > lo && next < hi)) {
            next = 0.5 * (lo + hi);
        }
        theta = next;
    }
    return wrap_angle(theta);
}

Vec2 arc_to_point(const DelayEllipse& e, double s) {
    const double theta = inverse_arc_length(e, s);
    return e.local_to_world(e.point_at_parameter(theta));
}

double point_to_arc(const DelayEllipse& e, const Vec2& p) {
    const Vec2 q = e.world_to_local(p);
    // Multi-start Newton to escape local minima of the distance function.
    const std::array<double, 5> starts = {std::atan2(q.y * e.a, q.x * e.b), 0.0,
                                          0.5 * kPi, kPi, 1.5 * kPi};
    double best_dist = std::numeric_limits<double>::infinity();
    const double tie_tol = 1e-9 * std::max(e.a, 1.0);
    std::vector<double> candidates;
    for (double t0 : starts) {
        const double theta = project_newton(e, q, t0);
        const double dist = (e.point_at_parameter(theta) - q).norm();
        if (dist < best_dist - tie_tol) {
            best_dist = dist;
            candidates.clear();
            candidates.push_back(theta);
        } else if (dist < best_dist + tie_tol) {
            candidates.push_back(theta);
        }
    }
    // Ties resolve to the smallest arc length.
    double best_s = std::numeric_limits<double>::infinity();
    for (double theta : candidates) {
        double s = arc_length(e, theta);
        if (s >= e.circumference) {
            s = 0.0;
        }
        best_s = std::min(best_s, s);
    }
    return best_s;
}

double distance_to_ellipse(const DelayEllipse& e, const Vec2& p) {
    const double s = point_to_arc(e, p);
    return distance(arc_to_point(e, s), p);
}

VirtualNodes virtual_nodes(const DelayEllipse& e, const Vec2& rp) {
    const Vec2 from_rx = rp - e.link.rx;
    const Vec2 from_tx = rp - e.link.tx;
    if (from_rx.norm() <= 0.0 || from_tx.norm() <= 0.0) {
        throw DegenerateRp("reflection point coincides with a focus");
    }
    VirtualNodes vn;
    vn.vt = e.link.rx + from_rx.normalized() * e.d;
    vn.vr = e.link.tx + from_tx.normalized() * e.d;
    return vn;
}

ExcessPaths excess_paths(const DelayEllipse& e, const Vec2& rp,
                         const Vec2& user) {
    const VirtualNodes vn = virtual_nodes(e, rp);
    ExcessPaths xp;
    xp.xi_tx = distance(e.link.tx, user) + distance(vn.vr, user) - e.d;
    xp.xi_rx = distance(vn.vt, user) + distance(e.link.rx, user) - e.d;
    xp.xi_min = std::min(xp.xi_tx, xp.xi_rx);
    return xp;
}

std::vector<double> find_reflection_points(
    const DelayEllipse& e, const std::vector<Surface>& surfaces) {
    std::vector<double> arcs;
    for (const Surface& surf : surfaces) {
        const Vec2 p0 = e.world_to_local(surf.p0);
        const Vec2 p1 = e.world_to_local(surf.p1);
        const Vec2 dir = p1 - p0;
        // Quadratic in the segment parameter t for the local ellipse equation.
        const double A = (dir.x * dir.x) / (e.a * e.a) +
                         (dir.y * dir.y) / (e.b * e.b);
        const double B = 2.0 * (p0.x * dir.x / (e.a * e.a) +
                                p0.y * dir.y / (e.b * e.b));
        const double C = (p0.x * p0.x) / (e.a * e.a) +
                         (p0.y * p0.y) / (e.b * e.b) - 1.0;
        if (A <= 0.0) {
            continue;  // degenerate zero-length segment
        }
        const double disc = B * B - 4.0 * A * C;
        const double scale = std::max({B * B, std::abs(4.0 * A * C), 1e-30});
        std::vector<double> roots;
        if (std::abs(disc) < 1e-12 * scale) {
            roots.push_back(-B / (2.0 * A));  // tangency
        } else if (disc > 0.0) {
            const double sq = std::sqrt(disc);
            roots.push_back((-B - sq) / (2.0 * A));
            roots.push_back((-B + sq) / (2.0 * A));
        }
        for (double t : roots) {
            if (t < -1e-12 || t > 1.0 + 1e-12) {
                continue;
            }
            const Vec2 pt = p0 + dir * std::clamp(t, 0.0, 1.0);
            const double theta =
                wrap_angle(std::atan2(pt.y / e.b, pt.x / e.a));
            arcs.push_back(arc_length(e, theta));
        }
    }
    std::sort(arcs.begin(), arcs.end());
    // Deduplicate points closer than 1 mm along the arc (incl. wrap-around).
    std::vector<double> out;
    for (double s : arcs) {
        if (out.empty() || s - out.back() > 1e-3) {
            out.push_back(s);
        }
    }
    if (out.size() > 1 &&
        (out.front() + e.circumference - out.back()) <= 1e-3) {
        out.pop_back();
    }
    return out;
}

}  // namespace ecal
