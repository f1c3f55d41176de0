#ifndef ELLIPSE_CALIB_GEOMETRY_HPP
#define ELLIPSE_CALIB_GEOMETRY_HPP

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace ecal {

inline constexpr double kSpeedOfLight = 299792458.0;  // m/s

struct GeometryError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DegenerateEllipse : GeometryError {
    using GeometryError::GeometryError;
};
struct DomainError : GeometryError {
    using GeometryError::GeometryError;
};
struct DegenerateRp : GeometryError {
    using GeometryError::GeometryError;
};

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    Vec2 operator/(double s) const { return {x / s, y / s}; }
    double dot(const Vec2& o) const { return x * o.x + y * o.y; }
    double cross(const Vec2& o) const { return x * o.y - y * o.x; }
    double norm() const { return std::hypot(x, y); }
    Vec2 normalized() const;
    bool finite() const { return std::isfinite(x) && std::isfinite(y); }
};

inline Vec2 operator*(double s, const Vec2& v) { return v * s; }

inline double distance(const Vec2& a, const Vec2& b) { return (a - b).norm(); }

// Transmitter/receiver pair; the foci of every delay ellipse of this link.
struct NetworkLink {
    Vec2 tx;
    Vec2 rx;

    double los_distance() const { return distance(tx, rx); }
};

// One multipath component, identified by its propagation delay. The path
// length is tied to the delay through the speed of light.
struct Mpc {
    double delay_s = 0.0;
    double path_length_m = 0.0;

    static Mpc from_delay(double delay_s) {
        return {delay_s, kSpeedOfLight * delay_s};
    }
    static Mpc from_path_length(double d_m) {
        return {d_m / kSpeedOfLight, d_m};
    }
};

// The locus of feasible single-bounce reflection points for one MPC:
// an ellipse with the link's nodes as foci and focal-sum equal to the
// MPC path length.
struct DelayEllipse {
    NetworkLink link;
    double a = 0.0;               // semi-major axis [m]
    double b = 0.0;               // semi-minor axis [m]
    double d = 0.0;               // MPC path length (focal sum) [m]
    Vec2 center;                  // midpoint of tx and rx
    double rotation_angle = 0.0;  // world x-axis to local major axis [rad]
    double eccentricity = 0.0;
    double circumference = 0.0;   // L [m]

    // Local frame: origin at center, x along the major axis (towards rx).
    Vec2 local_to_world(const Vec2& local) const;
    Vec2 world_to_local(const Vec2& world) const;

    // Local point for ellipse parameter theta: (a cos, b sin).
    Vec2 point_at_parameter(double theta) const;
};

// A reflecting wall segment; used for ground-truth RP construction.
struct Surface {
    Vec2 p0;
    Vec2 p1;
};

struct VirtualNodes {
    Vec2 vt;  // mirror image of tx; at distance d from rx along rx->rp
    Vec2 vr;  // mirror image of rx; at distance d from tx along tx->rp
};

struct ExcessPaths {
    double xi_tx = 0.0;   // detour over tx -> user -> vr vs direct path
    double xi_rx = 0.0;   // detour over vt -> user -> rx vs direct path
    double xi_min = 0.0;
};

DelayEllipse make_delay_ellipse(const NetworkLink& link, const Mpc& mpc);

// Arc length from parameter 0 along increasing theta; theta in [0, 2pi].
double arc_length(const DelayEllipse& e, double theta);

// Parameter theta in [0, 2pi) with arc_length(e, theta) == s; s in [0, L).
double inverse_arc_length(const DelayEllipse& e, double s);

// World coordinates of the ellipse point at arc length s.
Vec2 arc_to_point(const DelayEllipse& e, double s);

// Arc length of the ellipse point nearest to p (Euclidean projection).
// Ties resolve to the smallest arc length.
double point_to_arc(const DelayEllipse& e, const Vec2& p);

// Distance from p to the nearest point of the ellipse.
double distance_to_ellipse(const DelayEllipse& e, const Vec2& p);

VirtualNodes virtual_nodes(const DelayEllipse& e, const Vec2& rp);

ExcessPaths excess_paths(const DelayEllipse& e, const Vec2& rp, const Vec2& user);

// Arc lengths of all intersection or tangency points between the ellipse
// and the given wall segments; sorted ascending, deduplicated within 1 mm.
std::vector<double> find_reflection_points(const DelayEllipse& e,
                                           const std::vector<Surface>& surfaces);

// Complete elliptic integral of the second kind, E(k) with modulus k.
double complete_ellint_2(double k);

}  // namespace ecal

#endif
