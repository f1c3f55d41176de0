#include "ellipse_calib/scenario.hpp"

#include <cmath>

#include "ellipse_calib/rng.hpp"

namespace ecal {

std::vector<TrajectorySample> sample_trajectory(const Trajectory& t) {
    if (t.waypoints.size() < 2) {
        throw ScenarioError("trajectory needs at least 2 waypoints");
    }
    if (!(t.speed_mps > 0.0) || !(t.update_time_s > 0.0)) {
        throw ScenarioError("speed and update time must be positive");
    }
    double total = 0.0;
    for (std::size_t i = 1; i < t.waypoints.size(); ++i) {
        total += distance(t.waypoints[i - 1], t.waypoints[i]);
    }
    if (!(total > 0.0)) {
        throw ScenarioError("trajectory has zero length");
    }
    const double step = t.speed_mps * t.update_time_s;
    std::vector<TrajectorySample> samples;
    std::size_t seg = 0;
    double seg_start = 0.0;  // path distance at the start of segment `seg`
    double seg_len = distance(t.waypoints[0], t.waypoints[1]);
    for (int k = 0;; ++k) {
        const double s = k * step;
        if (s > total + 1e-12) {
            break;
        }
        while (s > seg_start + seg_len + 1e-12 &&
               seg + 2 < t.waypoints.size()) {
            seg_start += seg_len;
            ++seg;
            seg_len = distance(t.waypoints[seg], t.waypoints[seg + 1]);
        }
        const double f =
            seg_len > 0.0 ? std::min((s - seg_start) / seg_len, 1.0) : 0.0;
        const Vec2 pos = t.waypoints[seg] +
                         (t.waypoints[seg + 1] - t.waypoints[seg]) * f;
        samples.push_back({k * t.update_time_s, pos});
    }
    return samples;
}

GroundTruth derive_ground_truth(const Scenario& scenario) {
    GroundTruth gt;
    for (std::size_t li = 0; li < scenario.links.size(); ++li) {
        const ScenarioLink& sl = scenario.links[li];
        for (std::size_t mi = 0; mi < sl.mpcs.size(); ++mi) {
            const DelayEllipse e = make_delay_ellipse(sl.link, sl.mpcs[mi]);
            const std::vector<double> arcs =
                find_reflection_points(e, scenario.surfaces);
            if (arcs.empty()) {
                throw NoRpFound("no surface intersects the delay ellipse of "
                                "link " +
                                std::to_string(li) + " mpc " +
                                std::to_string(mi));
            }
            if (arcs.size() > 1) {
                throw AmbiguousRp("multiple candidate RPs for link " +
                                  std::to_string(li) + " mpc " +
                                  std::to_string(mi));
            }
            gt.rps.push_back({static_cast<int>(li), static_cast<int>(mi),
                              arcs[0], arc_to_point(e, arcs[0])});
        }
    }
    return gt;
}

std::vector<std::vector<Measurement>> synthesize_measurements(
    const Scenario& scenario, const GroundTruth& gt) {
    const std::vector<TrajectorySample> samples =
        sample_trajectory(scenario.trajectory);
    std::vector<std::vector<Measurement>> out;
    std::uint64_t stream = 0;
    for (const MpcGroundTruth& rp : gt.rps) {
        const ScenarioLink& sl = scenario.links[rp.link_index];
        const DelayEllipse e =
            make_delay_ellipse(sl.link, sl.mpcs[rp.mpc_index]);
        CounterRng rng(scenario.seed ^ (0x5851F42D4C957F2DULL * ++stream));
        std::vector<Measurement> ms;
        ms.reserve(samples.size());
        for (std::size_t k = 0; k < samples.size(); ++k) {
            const Vec2& user = samples[k].position;
            const ExcessPaths xp = excess_paths(e, rp.rp_point, user);
            const double sigma = noise_sigma(scenario.noise, xp.xi_min);
            double z = predicted_change(scenario.fading,
                                        std::max(xp.xi_tx, 0.0),
                                        std::max(xp.xi_rx, 0.0)) +
                       sigma * rng.next_gauss();
            if (scenario.inject_scatter &&
                distance_to_ellipse(e, user) < scenario.scatter_distance) {
                z += 3.0 * sigma * rng.next_gauss();
            }
            ms.push_back({static_cast<int>(k), samples[k].time_s, z, user});
        }
        out.push_back(std::move(ms));
    }
    return out;
}

}  // namespace ecal
