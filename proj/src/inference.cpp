#include "ellipse_calib/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace ecal {
namespace {

constexpr double kTwoPi = 2.0 * 3.14159265358979323846;

void normalize(std::vector<double>& w) {
    double sum = std::accumulate(w.begin(), w.end(), 0.0);
    if (!(sum > 0.0) || !std::isfinite(sum)) {
        throw NumericalUnderflow("weight normalization failed");
    }
    for (double& x : w) {
        x /= sum;
    }
}

// Mass per mode with each grid point assigned to its circularly nearest mode.
std::vector<double> mode_masses(const std::vector<double>& w,
                                const std::vector<int>& modes) {
    const int n = static_cast<int>(w.size());
    std::vector<double> masses(modes.size(), 0.0);
    for (int i = 0; i < n; ++i) {
        int best = 0;
        int best_dist = n;
        for (std::size_t m = 0; m < modes.size(); ++m) {
            const int diff = std::abs(i - modes[m]);
            const int dist = std::min(diff, n - diff);
            if (dist < best_dist) {
                best_dist = dist;
                best = static_cast<int>(m);
            }
        }
        masses[best] += w[i];
    }
    return masses;
}

}  // namespace

double elliptic_normal_pdf(const EllipticNormal& d, double s) {
    const double L = d.circumference;
    const double i0 = std::cyl_bessel_i(0.0, d.concentration);
    return std::exp(d.concentration *
                    std::cos(kTwoPi * (s - d.mean_arc) / L)) /
           (L * i0);
}

double elliptic_error(double L, double s_hat, double s_true) {
    const double diff = std::abs(s_hat - s_true);
    return std::min(diff, L - diff);
}

bool gate_measurement(const DelayEllipse& e, const Measurement& m,
                      double gate_distance) {
    if (gate_distance <= 0.0) {
        return true;
    }
    return distance_to_ellipse(e, m.user) >= gate_distance;
}

std::vector<int> find_modes(const std::vector<double>& w,
                            double prominence_frac) {
    const int n = static_cast<int>(w.size());
    if (n < 3) {
        return {};
    }
    const double wmax = *std::max_element(w.begin(), w.end());
    const double threshold = prominence_frac * wmax;
    std::vector<int> peaks;
    for (int i = 0; i < n; ++i) {
        const double prev = w[(i + n - 1) % n];
        const double next = w[(i + 1) % n];
        if (w[i] > prev && w[i] >= next) {
            peaks.push_back(i);
        }
    }
    // Circular prominence: drop to the lowest valley on the way to the
    // nearest higher peak, on either side.
    std::vector<int> modes;
    for (int p : peaks) {
        double prominence = w[p];
        for (int dir : {1, -1}) {
            double valley = w[p];
            for (int step = 1; step < n; ++step) {
                const int j = (p + dir * step % n + n) % n;
                valley = std::min(valley, w[j]);
                if (w[j] > w[p]) {
                    prominence = std::min(prominence, w[p] - valley);
                    break;
                }
            }
        }
        if (prominence >= threshold) {
            modes.push_back(p);
        }
    }
    return modes;
}

EllipticPmf::EllipticPmf(const DelayEllipse& ellipse, double dx)
    : ellipse_(ellipse) {
    const double L = ellipse.circumference;
    if (!(dx > 0.0 && dx < L)) {
        throw DomainError("grid spacing must be in (0, L)");
    }
    const int n = std::max(1, static_cast<int>(std::llround(L / dx)));
    spacing_ = L / n;
    arcs_.resize(n);
    weights_.assign(n, 1.0 / n);
    points_.resize(n);
    vnodes_.resize(n);
    for (int i = 0; i < n; ++i) {
        arcs_[i] = i * spacing_;
        points_[i] = arc_to_point(ellipse_, arcs_[i]);
        vnodes_[i] = virtual_nodes(ellipse_, points_[i]);
    }
}

void EllipticPmf::set_weights(std::vector<double> w) {
    if (static_cast<int>(w.size()) != size()) {
        throw DomainError("weight vector size mismatch");
    }
    normalize(w);
    weights_ = std::move(w);
}

void EllipticPmf::predict(double eta) {
    const int n = size();
    // Transition kernel over grid offsets; exp(eta (cos - 1)) keeps the
    // values bounded for arbitrarily large concentrations.
    std::vector<double> kernel(n);
    for (int m = 0; m < n; ++m) {
        kernel[m] = std::exp(eta * (std::cos(kTwoPi * m / n) - 1.0));
    }
    double ksum = std::accumulate(kernel.begin(), kernel.end(), 0.0);
    for (double& k : kernel) {
        k /= ksum;
    }
    // Symmetric support beyond which kernel entries are negligible.
    int support = n / 2;
    for (int m = 1; m <= n / 2; ++m) {
        if (kernel[m] < 1e-18 * kernel[0]) {
            support = m - 1;
            break;
        }
    }
    std::vector<double> out(n, 0.0);
    if (2 * support + 1 >= n) {
        for (int i = 0; i < n; ++i) {
            double acc = 0.0;
            for (int j = 0; j < n; ++j) {
                acc += kernel[(i - j % n + n) % n] * weights_[j];
            }
            out[i] = acc;
        }
    } else {
        for (int i = 0; i < n; ++i) {
            double acc = kernel[0] * weights_[i];
            for (int m = 1; m <= support; ++m) {
                acc += kernel[m] *
                       (weights_[(i - m + n) % n] + weights_[(i + m) % n]);
            }
            out[i] = acc;
        }
    }
    normalize(out);
    weights_ = std::move(out);
}

double EllipticPmf::predicted_change_at(int i, const Vec2& user,
                                        const FadingParams& fading) const {
    const double xi_tx = distance(ellipse_.link.tx, user) +
                         distance(vnodes_[i].vr, user) - ellipse_.d;
    const double xi_rx = distance(vnodes_[i].vt, user) +
                         distance(ellipse_.link.rx, user) - ellipse_.d;
    return predicted_change(fading, std::max(xi_tx, 0.0),
                            std::max(xi_rx, 0.0));
}

double EllipticPmf::xi_min_at(int i, const Vec2& user) const {
    const double xi_tx = distance(ellipse_.link.tx, user) +
                         distance(vnodes_[i].vr, user) - ellipse_.d;
    const double xi_rx = distance(vnodes_[i].vt, user) +
                         distance(ellipse_.link.rx, user) - ellipse_.d;
    return std::max(std::min(xi_tx, xi_rx), 0.0);
}

void EllipticPmf::update(const Measurement& m, const FadingParams& fading,
                         const NoiseModel& noise) {
    const int n = size();
    std::vector<double> logw(n);
    double lmax = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
        const double f = predicted_change_at(i, m.user, fading);
        const double sigma = noise_sigma(noise, xi_min_at(i, m.user));
        const double r = (m.z_db - f) / sigma;
        const double lw = (weights_[i] > 0.0
                               ? std::log(weights_[i])
                               : -std::numeric_limits<double>::infinity()) -
                          0.5 * r * r - std::log(sigma);
        logw[i] = lw;
        lmax = std::max(lmax, lw);
    }
    if (!std::isfinite(lmax)) {
        throw NumericalUnderflow("all posterior weights vanished");
    }
    for (int i = 0; i < n; ++i) {
        weights_[i] = std::exp(logw[i] - lmax);
    }
    normalize(weights_);
}

MmseResult EllipticPmf::mmse() const {
    const int n = size();
    // Expected squared wrapped distance for every grid candidate in O(n)
    // via prefix sums over the doubled index range.
    std::vector<double> p0(2 * n + 1, 0.0), p1(2 * n + 1, 0.0),
        p2(2 * n + 1, 0.0);
    for (int u = 0; u < 2 * n; ++u) {
        const double w = weights_[u % n];
        const double du = static_cast<double>(u);
        p0[u + 1] = p0[u] + w;
        p1[u + 1] = p1[u] + w * du;
        p2[u + 1] = p2[u] + w * du * du;
    }
    const auto range = [&](const std::vector<double>& p, int lo, int hi) {
        return p[hi + 1] - p[lo];  // inclusive [lo, hi]
    };
    const int h = n / 2;
    double best_cost = std::numeric_limits<double>::infinity();
    int best_j = 0;
    for (int j = 0; j < n; ++j) {
        // Forward arc: offsets 0..h at distance m; backward: distance n - m.
        const double fj = static_cast<double>(j);
        double cost = range(p2, j, j + h) - 2.0 * fj * range(p1, j, j + h) +
                      fj * fj * range(p0, j, j + h);
        if (h + 1 <= n - 1) {
            const double c = fj + n;
            cost += c * c * range(p0, j + h + 1, j + n - 1) -
                    2.0 * c * range(p1, j + h + 1, j + n - 1) +
                    range(p2, j + h + 1, j + n - 1);
        }
        // The tie band absorbs prefix-sum rounding noise so exact ties
        // (e.g. a uniform posterior) resolve to the smallest arc.
        if (!std::isfinite(best_cost) ||
            cost < best_cost - 1e-9 * (1.0 + std::abs(best_cost))) {
            best_cost = cost;
            best_j = j;
        }
    }
    MmseResult result;
    result.s_hat = arcs_[best_j];
    const std::vector<int> modes = find_modes(weights_);
    if (modes.size() >= 2) {
        std::vector<double> masses = mode_masses(weights_, modes);
        std::sort(masses.rbegin(), masses.rend());
        if (masses[0] > 0.0 && masses[1] / masses[0] > 0.5) {
            result.multimodal = true;
        }
    }
    return result;
}

CalibrationResult run_calibration(const DelayEllipse& ellipse,
                                  const std::vector<Measurement>& measurements,
                                  const CalibrationConfig& config,
                                  std::optional<double> truth_arc,
                                  bool record_weights) {
    EllipticPmf pmf(ellipse, config.dx);
    CalibrationResult result{.estimates = {},
                             .gated = {},
                             .multimodal = {},
                             .errors = {},
                             .weight_history = {},
                             .final_state = pmf,
                             .low_information = false};
    int accepted = 0;
    for (const Measurement& m : measurements) {
        const bool accept = gate_measurement(ellipse, m, config.gate_distance);
        if (accept) {
            pmf.predict(config.eta);
            pmf.update(m, config.fading, config.noise);
            ++accepted;
        }
        const MmseResult est = pmf.mmse();
        result.estimates.push_back(est.s_hat);
        result.gated.push_back(!accept);
        result.multimodal.push_back(est.multimodal);
        if (truth_arc) {
            result.errors.push_back(
                elliptic_error(ellipse.circumference, est.s_hat, *truth_arc));
        }
        if (record_weights) {
            result.weight_history.push_back(pmf.weights());
        }
    }
    result.low_information = accepted == 0;
    result.final_state = std::move(pmf);
    return result;
}

}  // namespace ecal
