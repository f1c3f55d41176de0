#ifndef ELLIPSE_CALIB_FADING_HPP
#define ELLIPSE_CALIB_FADING_HPP

#include <stdexcept>
#include <vector>

namespace ecal {

struct FadingError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct FitDiverged : FadingError {
    using FadingError::FadingError;
};
struct InsufficientData : FadingError {
    using FadingError::FadingError;
};

enum class UserType { pedestrian, bike, car, custom };

// Exponential fading model: maximum power change phi (signed, dB) and
// spatial decay rate kappa (m).
struct FadingParams {
    double phi_db = 0.0;
    double kappa_m = 0.0;
    UserType user_type = UserType::custom;
};

enum class NoiseKind { uniform, location_dependent };

// Measurement noise: either one global sigma or a two-regime model split
// at the excess-path threshold xi_th (near side inclusive).
struct NoiseModel {
    NoiseKind kind = NoiseKind::uniform;
    double sigma_db = 0.0;    // uniform case
    double sigma1_db = 0.0;   // far regime
    double sigma2_db = 0.0;   // near regime, sigma1 < sigma2
    double xi_th_m = 0.0;

    static NoiseModel uniform(double sigma_db);
    static NoiseModel location_dependent(double sigma1_db, double sigma2_db,
                                         double xi_th_m);
};

struct FresnelConfig {
    double wavelength_m = 0.0;
    int zone_number = 3;
};

// Sample for model fitting: excess paths and the measured power change.
struct FadingSample {
    double xi_tx = 0.0;
    double xi_rx = 0.0;
    double z_db = 0.0;
};

struct FadingFit {
    FadingParams params;
    bool identifiable = true;  // false when no sample carries signal
    double residual_sse = 0.0;
};

struct NoiseFit {
    double sigma1_db = 0.0;
    double sigma2_db = 0.0;
    bool degenerate = false;  // all residuals identical
};

// Modeled power change phi * (exp(-xi_tx/kappa) + exp(-xi_rx/kappa)).
double predicted_change(const FadingParams& params, double xi_tx, double xi_rx);

// Excess-path threshold n_F * lambda / 2 separating the noise regimes.
double fresnel_threshold(const FresnelConfig& cfg);

// Maximum Fresnel-zone radius sqrt(n_F * lambda * d) / 2.
double fresnel_max_radius(const FresnelConfig& cfg, double d);

double noise_sigma(const NoiseModel& model, double xi_min);

// Damped least squares on (phi, log kappa); see FadingFit for the
// unidentifiable-data flag.
FadingFit fit_fading_params(const std::vector<FadingSample>& samples);

// Sample standard deviations of residuals split at xi_th.
NoiseFit fit_noise_sigmas(const std::vector<std::pair<double, double>>& residuals,
                          double xi_th);

}  // namespace ecal

#endif
