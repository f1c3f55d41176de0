#include "ellipse_calib/signal_extract.hpp"

#include <algorithm>
#include <cmath>

namespace ecal {
namespace {

double sinc(double x) {
    if (std::abs(x) < 1e-12) {
        return 1.0;
    }
    const double px = 3.14159265358979323846 * x;
    return std::sin(px) / px;
}

}  // namespace

SampledSignal normalize_pulse(const SampledSignal& pulse) {
    double energy = 0.0;
    for (const auto& s : pulse.samples) {
        energy += std::norm(s);
    }
    energy *= pulse.sample_interval_s;
    SampledSignal out = pulse;
    if (energy > 0.0) {
        const double scale = 1.0 / std::sqrt(energy);
        for (auto& s : out.samples) {
            s *= scale;
        }
    }
    return out;
}

std::vector<std::complex<double>> delayed_pulse(const SampledSignal& pulse,
                                                double tau, std::size_t length,
                                                double sample_interval) {
    std::vector<std::complex<double>> out(length, {0.0, 0.0});
    const double dtp = pulse.sample_interval_s;
    for (std::size_t i = 0; i < length; ++i) {
        const double u = static_cast<double>(i) * sample_interval - tau;
        if (u < -2.0 * pulse.duration() || u > 3.0 * pulse.duration()) {
            continue;
        }
        std::complex<double> acc{0.0, 0.0};
        for (std::size_t j = 0; j < pulse.samples.size(); ++j) {
            acc += pulse.samples[j] * sinc((u - static_cast<double>(j) * dtp) / dtp);
        }
        out[i] = acc;
    }
    return out;
}

std::complex<double> project_amplitude(const SampledSignal& y,
                                       const SampledSignal& pulse,
                                       double tau) {
    if (!(tau >= 0.0 && tau < y.duration())) {
        throw DelayOutOfWindow("mean delay outside the observation window");
    }
    const SampledSignal unit = normalize_pulse(pulse);
    const std::vector<std::complex<double>> s =
        delayed_pulse(unit, tau, y.samples.size(), y.sample_interval_s);
    std::complex<double> acc{0.0, 0.0};
    for (std::size_t i = 0; i < y.samples.size(); ++i) {
        acc += std::conj(y.samples[i]) * s[i];
    }
    return acc * y.sample_interval_s;
}

ExtractResult extract_sequentially(const SampledSignal& y,
                                   const SampledSignal& pulse,
                                   const std::vector<double>& delays) {
    if (!std::is_sorted(delays.begin(), delays.end())) {
        throw SignalError("delays must be sorted ascending");
    }
    ExtractResult result;
    const double width = pulse.duration();
    for (std::size_t i = 1; i < delays.size(); ++i) {
        if (delays[i] - delays[i - 1] < width) {
            result.overlap_warning = true;
        }
    }
    const SampledSignal unit = normalize_pulse(pulse);
    SampledSignal residual = y;
    for (double tau : delays) {
        const std::complex<double> alpha_hat =
            project_amplitude(residual, unit, tau);
        result.amplitudes.push_back(alpha_hat);
        // Subtract the reconstructed component; the projection returns the
        // conjugate of the channel amplitude.
        const std::vector<std::complex<double>> s = delayed_pulse(
            unit, tau, residual.samples.size(), residual.sample_interval_s);
        const std::complex<double> alpha = std::conj(alpha_hat);
        for (std::size_t i = 0; i < residual.samples.size(); ++i) {
            residual.samples[i] -= alpha * s[i];
        }
    }
    return result;
}

PowerChange power_change(const std::complex<double>& alpha, double gamma_db,
                         double floor_db) {
    PowerChange pc;
    const double mag = std::abs(alpha);
    if (mag <= 0.0) {
        pc.z_db = floor_db;
        pc.zero_amplitude = true;
        return pc;
    }
    pc.z_db = 20.0 * std::log10(mag) - gamma_db;
    return pc;
}

ReferencePower reference_power(
    const std::vector<std::complex<double>>& idle_amplitudes) {
    if (idle_amplitudes.empty()) {
        throw EmptyIdleSet("no idle-channel amplitude estimates");
    }
    std::complex<double> mean{0.0, 0.0};
    double mean_mag = 0.0;
    for (const auto& a : idle_amplitudes) {
        mean += a;
        mean_mag += std::abs(a);
    }
    mean /= static_cast<double>(idle_amplitudes.size());
    mean_mag /= static_cast<double>(idle_amplitudes.size());
    ReferencePower ref;
    ref.alpha_magnitude = std::abs(mean);
    ref.phase_unstable = mean_mag > 0.0 && ref.alpha_magnitude < 0.1 * mean_mag;
    ref.gamma_db = 20.0 * std::log10(std::max(ref.alpha_magnitude, 1e-12));
    return ref;
}

}  // namespace ecal
