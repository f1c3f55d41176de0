#include "ellipse_calib/fading.hpp"

#include <algorithm>
#include <cmath>

namespace ecal {
namespace {

double model_sse(const std::vector<FadingSample>& samples, double phi,
                 double kappa) {
    double sse = 0.0;
    for (const FadingSample& s : samples) {
        const double f =
            phi * (std::exp(-s.xi_tx / kappa) + std::exp(-s.xi_rx / kappa));
        const double r = s.z_db - f;
        sse += r * r;
    }
    return sse;
}

double sample_std(const std::vector<double>& v) {
    const double n = static_cast<double>(v.size());
    double mean = 0.0;
    for (double x : v) {
        mean += x;
    }
    mean /= n;
    double acc = 0.0;
    for (double x : v) {
        acc += (x - mean) * (x - mean);
    }
    return std::sqrt(acc / (n - 1.0));
}

}  // namespace

NoiseModel NoiseModel::uniform(double sigma_db) {
    NoiseModel m;
    m.kind = NoiseKind::uniform;
    m.sigma_db = sigma_db;
    return m;
}

NoiseModel NoiseModel::location_dependent(double sigma1_db, double sigma2_db,
                                          double xi_th_m) {
    NoiseModel m;
    m.kind = NoiseKind::location_dependent;
    m.sigma1_db = sigma1_db;
    m.sigma2_db = sigma2_db;
    m.xi_th_m = xi_th_m;
    return m;
}

double predicted_change(const FadingParams& params, double xi_tx,
                        double xi_rx) {
    return params.phi_db * (std::exp(-xi_tx / params.kappa_m) +
                            std::exp(-xi_rx / params.kappa_m));
}

double fresnel_threshold(const FresnelConfig& cfg) {
    return cfg.zone_number * cfg.wavelength_m / 2.0;
}

double fresnel_max_radius(const FresnelConfig& cfg, double d) {
    return std::sqrt(cfg.zone_number * cfg.wavelength_m * d) / 2.0;
}

double noise_sigma(const NoiseModel& model, double xi_min) {
    if (model.kind == NoiseKind::uniform) {
        return model.sigma_db;
    }
    // Near side inclusive: xi_min <= xi_th selects the high-variance regime.
    return xi_min <= model.xi_th_m ? model.sigma2_db : model.sigma1_db;
}

FadingFit fit_fading_params(const std::vector<FadingSample>& samples) {
    if (samples.size() < 10) {
        throw InsufficientData("need at least 10 samples for fitting");
    }
    double zmin = samples[0].z_db;
    double zmax = samples[0].z_db;
    for (const FadingSample& s : samples) {
        zmin = std::min(zmin, s.z_db);
        zmax = std::max(zmax, s.z_db);
    }
    double phi0 = std::abs(zmin) >= std::abs(zmax) ? zmin : zmax;
    const double sse_zero = model_sse(samples, 0.0, 1.0);

    FadingFit fit;
    if (std::abs(phi0) < 1e-12) {
        // No sample carries signal; the decay rate cannot be recovered.
        fit.identifiable = false;
        fit.params.phi_db = phi0;
        fit.params.kappa_m = 1.0;
        fit.residual_sse = sse_zero;
        return fit;
    }

    // kappa0: median xi_min over samples with a substantial power change.
    std::vector<double> informative;
    for (const FadingSample& s : samples) {
        if (std::abs(s.z_db) > std::abs(phi0) / 2.0) {
            informative.push_back(std::min(s.xi_tx, s.xi_rx));
        }
    }
    double kappa0 = 0.1;
    if (!informative.empty()) {
        std::sort(informative.begin(), informative.end());
        kappa0 = std::max(informative[informative.size() / 2], 1e-6);
    }

    // Levenberg-Marquardt on (phi, log kappa).
    double phi = phi0;
    double lk = std::log(kappa0);
    double lambda = 1e-3;
    double sse = model_sse(samples, phi, std::exp(lk));
    for (int it = 0; it < 300; ++it) {
        const double kappa = std::exp(lk);
        double jtj00 = 0.0, jtj01 = 0.0, jtj11 = 0.0;
        double jtr0 = 0.0, jtr1 = 0.0;
        for (const FadingSample& s : samples) {
            const double e1 = std::exp(-s.xi_tx / kappa);
            const double e2 = std::exp(-s.xi_rx / kappa);
            const double r = s.z_db - phi * (e1 + e2);
            const double j0 = -(e1 + e2);
            const double j1 = -phi * (s.xi_tx * e1 + s.xi_rx * e2) / kappa;
            jtj00 += j0 * j0;
            jtj01 += j0 * j1;
            jtj11 += j1 * j1;
            jtr0 += j0 * r;
            jtr1 += j1 * r;
        }
        const double a00 = jtj00 * (1.0 + lambda);
        const double a11 = jtj11 * (1.0 + lambda);
        const double det = a00 * a11 - jtj01 * jtj01;
        if (std::abs(det) < 1e-300) {
            break;
        }
        const double dphi = -(a11 * jtr0 - jtj01 * jtr1) / det;
        const double dlk = -(a00 * jtr1 - jtj01 * jtr0) / det;
        const double new_phi = phi + dphi;
        const double new_lk = std::clamp(lk + dlk, -30.0, 30.0);
        const double new_sse = model_sse(samples, new_phi, std::exp(new_lk));
        if (new_sse < sse) {
            phi = new_phi;
            lk = new_lk;
            sse = new_sse;
            lambda = std::max(lambda * 0.3, 1e-12);
            if (std::abs(dphi) < 1e-12 * std::abs(phi) &&
                std::abs(dlk) < 1e-12) {
                break;
            }
        } else {
            lambda *= 10.0;
            if (lambda > 1e12) {
                break;
            }
        }
    }

    if (!(sse < sse_zero)) {
        throw FitDiverged("fit did not improve on the zero model");
    }
    fit.params.phi_db = phi;
    fit.params.kappa_m = std::exp(lk);
    fit.residual_sse = sse;
    return fit;
}

NoiseFit fit_noise_sigmas(
    const std::vector<std::pair<double, double>>& residuals, double xi_th) {
    std::vector<double> near;
    std::vector<double> far;
    for (const auto& [xi_min, r] : residuals) {
        if (xi_min <= xi_th) {
            near.push_back(r);
        } else {
            far.push_back(r);
        }
    }
    if (near.size() < 2 || far.size() < 2) {
        throw InsufficientData("both noise regimes need at least 2 samples");
    }
    NoiseFit fit;
    fit.sigma1_db = sample_std(far);
    fit.sigma2_db = sample_std(near);
    fit.degenerate = fit.sigma1_db == 0.0 && fit.sigma2_db == 0.0;
    return fit;
}

}  // namespace ecal
