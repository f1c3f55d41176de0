#ifndef ELLIPSE_CALIB_INFERENCE_HPP
#define ELLIPSE_CALIB_INFERENCE_HPP

#include <optional>
#include <stdexcept>
#include <vector>

#include "ellipse_calib/fading.hpp"
#include "ellipse_calib/geometry.hpp"

namespace ecal {

struct InferenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NumericalUnderflow : InferenceError {
    using InferenceError::InferenceError;
};

// Von Mises density transformed to a closed curve of circumference L.
struct EllipticNormal {
    double circumference = 0.0;  // L
    double concentration = 0.0;  // eta >= 0
    double mean_arc = 0.0;       // s_bar in [0, L)
};

// Density 1/(L I0(eta)) exp(eta cos(2 pi (s - s_bar) / L)).
double elliptic_normal_pdf(const EllipticNormal& d, double s);

struct Measurement {
    int k = 0;
    double time_s = 0.0;
    double z_db = 0.0;
    Vec2 user;
};

// Wrapped distance min(|a - b|, L - |a - b|) between two arc positions.
double elliptic_error(double L, double s_hat, double s_true);

// False (skip) when the user is within gate_distance of the delay ellipse,
// where direct scattering corrupts the MPC amplitude.
bool gate_measurement(const DelayEllipse& e, const Measurement& m,
                      double gate_distance);

struct MmseResult {
    double s_hat = 0.0;
    bool multimodal = false;
};

// Indices of circular local maxima whose prominence is at least
// prominence_frac times the global maximum weight.
std::vector<int> find_modes(const std::vector<double>& weights,
                            double prominence_frac = 0.1);

// Point-mass filter on the equidistant arc-length grid of a delay ellipse.
// Grid geometry (world points and virtual nodes per grid point) is
// precomputed once; predict/update mutate the weights in place.
class EllipticPmf {
  public:
    EllipticPmf(const DelayEllipse& ellipse, double dx);

    int size() const { return static_cast<int>(weights_.size()); }
    double spacing() const { return spacing_; }
    double grid_arc(int i) const { return arcs_[i]; }
    const std::vector<double>& weights() const { return weights_; }
    const std::vector<Vec2>& grid_points() const { return points_; }
    const DelayEllipse& ellipse() const { return ellipse_; }

    // Replaces the weights (normalizing); intended for tests and restarts.
    void set_weights(std::vector<double> w);

    // Circular convolution with the elliptic normal transition kernel.
    void predict(double eta);

    // Bayes update with the exponential fading likelihood, in log domain.
    void update(const Measurement& m, const FadingParams& fading,
                const NoiseModel& noise);

    // Modeled power change for grid point i and the given user location.
    double predicted_change_at(int i, const Vec2& user,
                               const FadingParams& fading) const;
    // Hypothesized minimum excess path for grid point i.
    double xi_min_at(int i, const Vec2& user) const;

    // Grid point minimizing the expected squared wrapped distance.
    // Ties resolve to the smallest arc length.
    MmseResult mmse() const;

  private:
    DelayEllipse ellipse_;
    double spacing_ = 0.0;
    std::vector<double> arcs_;
    std::vector<double> weights_;
    std::vector<Vec2> points_;
    std::vector<VirtualNodes> vnodes_;
};

struct CalibrationConfig {
    FadingParams fading;
    NoiseModel noise;
    double dx = 0.05;
    double eta = 100.0;
    double gate_distance = 0.0;
};

struct CalibrationResult {
    std::vector<double> estimates;   // per-step MMSE estimate
    std::vector<bool> gated;         // true where the measurement was skipped
    std::vector<bool> multimodal;
    std::vector<double> errors;      // per-step elliptic error, if truth given
    std::vector<std::vector<double>> weight_history;  // optional, per step
    EllipticPmf final_state;
    bool low_information = false;    // no measurement survived gating
};

// Algorithm: gate -> predict -> update -> mmse per measurement, in order.
CalibrationResult run_calibration(const DelayEllipse& ellipse,
                                  const std::vector<Measurement>& measurements,
                                  const CalibrationConfig& config,
                                  std::optional<double> truth_arc = std::nullopt,
                                  bool record_weights = false);

}  // namespace ecal

#endif
