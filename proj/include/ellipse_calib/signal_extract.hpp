#ifndef ELLIPSE_CALIB_SIGNAL_EXTRACT_HPP
#define ELLIPSE_CALIB_SIGNAL_EXTRACT_HPP

#include <complex>
#include <stdexcept>
#include <vector>

namespace ecal {

struct SignalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DelayOutOfWindow : SignalError {
    using SignalError::SignalError;
};
struct EmptyIdleSet : SignalError {
    using SignalError::SignalError;
};

// Uniformly sampled complex baseband signal.
struct SampledSignal {
    std::vector<std::complex<double>> samples;
    double sample_interval_s = 0.0;

    double duration() const {
        return static_cast<double>(samples.size()) * sample_interval_s;
    }
};

struct MpcTemplate {
    double mean_delay_s = 0.0;
    double reference_power_db = 0.0;
};

struct ExtractResult {
    std::vector<std::complex<double>> amplitudes;
    bool overlap_warning = false;  // delays closer than the pulse width
};

struct PowerChange {
    double z_db = 0.0;
    bool zero_amplitude = false;  // clamped at the floor
};

struct ReferencePower {
    double alpha_magnitude = 0.0;
    double gamma_db = 0.0;
    bool phase_unstable = false;  // complex mean much smaller than magnitudes
};

// Unit-energy copy of the pulse (discrete energy sum = 1).
SampledSignal normalize_pulse(const SampledSignal& pulse);

// Band-limited (sinc-interpolated) pulse delayed by tau, on the grid of y.
std::vector<std::complex<double>> delayed_pulse(
    const SampledSignal& pulse, double tau, std::size_t length,
    double sample_interval);

// Projection sum conj(y[i]) * s(t_i - tau) * dt. The pulse must be
// normalized to unit energy; the result is the conjugate of the channel
// amplitude.
std::complex<double> project_amplitude(const SampledSignal& y,
                                       const SampledSignal& pulse,
                                       double tau);

// Successive projection with residual subtraction, delays sorted ascending.
ExtractResult extract_sequentially(const SampledSignal& y,
                                   const SampledSignal& pulse,
                                   const std::vector<double>& delays);

// 20 log10 |alpha| minus the reference power; |alpha| = 0 clamps to the
// floor (-120 dB) with the zero_amplitude flag set.
PowerChange power_change(const std::complex<double>& alpha, double gamma_db,
                         double floor_db = -120.0);

// Complex mean over idle-period amplitude estimates.
ReferencePower reference_power(
    const std::vector<std::complex<double>>& idle_amplitudes);

}  // namespace ecal

#endif
