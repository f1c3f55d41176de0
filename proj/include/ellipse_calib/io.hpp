#ifndef ELLIPSE_CALIB_IO_HPP
#define ELLIPSE_CALIB_IO_HPP

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ellipse_calib/scenario.hpp"
#include "ellipse_calib/signal_extract.hpp"

namespace ecal {

struct SchemaError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// All writes go through a temp file plus rename; partial output never
// appears under the final name.
void atomic_write_text(const std::string& path, const std::string& content);

std::string read_text(const std::string& path);

// Named fading/noise presets. phi magnitudes in the preset file are
// negated on load: measured power changes are attenuations.
FadingParams load_fading_preset(const std::string& presets_dir,
                                const std::string& name);
NoiseModel load_noise_preset(const std::string& presets_dir,
                             const std::string& name, NoiseKind kind);

Scenario load_scenario(const std::string& path,
                       const std::string& presets_dir = "presets");

// Measurement CSV, header: k,time_s,user_x_m,user_y_m,z_db
std::string measurements_to_csv(const std::vector<Measurement>& ms);
std::vector<Measurement> measurements_from_csv(const std::string& text);

// Ground-truth CSV, header: link,mpc,rp_arc_m,rp_x_m,rp_y_m
std::string ground_truth_to_csv(const GroundTruth& gt);
GroundTruth ground_truth_from_csv(const std::string& text);

// One row per filter step, columns are the grid weights.
std::string weights_to_csv(const std::vector<std::vector<double>>& history);

std::string measurement_file_name(int link, int mpc);

// CIR snapshot: header line "# sample_interval_s <dt>", then rows
// "<index> <real> <imag>".
std::string signal_to_text(const SampledSignal& y);
SampledSignal signal_from_text(const std::string& text);

struct MpcReport {
    int link = 0;
    int mpc = 0;
    double s_hat = 0.0;
    Vec2 rp_point;
    std::optional<double> final_error;
    std::vector<double> error_trace;
    bool multimodal = false;
    bool low_information = false;
};

struct Report {
    std::vector<MpcReport> mpcs;
    double duration_s = 0.0;
};

std::string report_to_json(const Report& report);
Report report_from_json(const std::string& text);

// Fading-fit sample CSV, header: xi_tx_m,xi_rx_m,z_db
std::vector<FadingSample> fading_samples_from_csv(const std::string& text);
std::string fading_samples_to_csv(const std::vector<FadingSample>& samples);

}  // namespace ecal

#endif
