#ifndef ELLIPSE_CALIB_SCENARIO_HPP
#define ELLIPSE_CALIB_SCENARIO_HPP

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "ellipse_calib/fading.hpp"
#include "ellipse_calib/geometry.hpp"
#include "ellipse_calib/inference.hpp"

namespace ecal {

struct ScenarioError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct AmbiguousRp : ScenarioError {
    using ScenarioError::ScenarioError;
};
struct NoRpFound : ScenarioError {
    using ScenarioError::ScenarioError;
};

// Piecewise-linear path walked at constant speed, sampled every T_g.
struct Trajectory {
    std::vector<Vec2> waypoints;
    double speed_mps = 1.0;
    double update_time_s = 0.1;
};

struct TrajectorySample {
    double time_s = 0.0;
    Vec2 position;
};

struct ScenarioLink {
    NetworkLink link;
    std::vector<Mpc> mpcs;
};

struct Scenario {
    std::vector<ScenarioLink> links;
    std::vector<Surface> surfaces;
    Trajectory trajectory;
    FadingParams fading;
    NoiseModel noise;
    std::uint64_t seed = 0;
    // Optional direct-scatter perturbation near the delay ellipse: extra
    // Gaussian noise (3x sigma) when the user is within scatter_distance.
    bool inject_scatter = false;
    double scatter_distance = 0.0;
};

struct MpcGroundTruth {
    int link_index = 0;
    int mpc_index = 0;
    double rp_arc = 0.0;
    Vec2 rp_point;
};

struct GroundTruth {
    std::vector<MpcGroundTruth> rps;  // one entry per (link, mpc)
};

std::vector<TrajectorySample> sample_trajectory(const Trajectory& t);

// Per MPC, the unique surface intersection arc on its delay ellipse.
// Multiple candidates reject the scenario as ambiguous.
GroundTruth derive_ground_truth(const Scenario& scenario);

// Measurement sequences from the fading and noise models at the true RP.
// Deterministic per seed; per-MPC streams derive as seed xor mpc counter.
std::vector<std::vector<Measurement>> synthesize_measurements(
    const Scenario& scenario, const GroundTruth& gt);

}  // namespace ecal

#endif
