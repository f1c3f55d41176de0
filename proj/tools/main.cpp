#include <algorithm>
#include <atomic>
#include <chrono>
#include <complex>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <exception>
#include <filesystem>
#include <iostream>
#include <map>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "ellipse_calib/io.hpp"
#include "ellipse_calib/scenario.hpp"
#include "ellipse_calib/signal_extract.hpp"

namespace fs = std::filesystem;
using namespace ecal;

namespace {

enum class LogLevel { debug = 0, info = 1, warn = 2, error = 3 };

LogLevel log_level() {
    static const LogLevel level = [] {
        const char* env = std::getenv("ELLIPSE_CALIB_LOG");
        const std::string v = env ? env : "warn";
        if (v == "debug") return LogLevel::debug;
        if (v == "info") return LogLevel::info;
        if (v == "error") return LogLevel::error;
        return LogLevel::warn;
    }();
    return level;
}

void logmsg(LogLevel level, const std::string& msg) {
    static const char* names[] = {"debug", "info", "warn", "error"};
    if (level >= log_level()) {
        std::cerr << "[" << names[static_cast<int>(level)] << "] " << msg
                  << "\n";
    }
}

// Runs tasks[0..n) on up to `jobs` threads; output slots are preallocated,
// so the result is independent of scheduling.
void run_parallel(std::size_t n, int jobs,
                  const std::function<void(std::size_t)>& task) {
    if (jobs <= 0) {
        jobs = static_cast<int>(std::thread::hardware_concurrency());
        if (jobs <= 0) {
            jobs = 1;
        }
    }
    const int workers =
        static_cast<int>(std::min<std::size_t>(n, static_cast<std::size_t>(jobs)));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) {
            task(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n) {
                    return;
                }
                try {
                    task(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) {
                        first_error = std::current_exception();
                    }
                    return;
                }
            }
        });
    }
    for (auto& t : pool) {
        t.join();
    }
    if (first_error) {
        std::rethrow_exception(first_error);
    }
}

// Re-resolves the scenario's noise section with a specific model kind,
// used by the --noise override.
NoiseModel noise_with_kind(const std::string& scenario_path,
                           const std::string& presets_dir,
                           const std::string& kind) {
    const nlohmann::json j =
        nlohmann::json::parse(read_text(scenario_path), nullptr, false);
    if (j.is_discarded() || !j.contains("noise")) {
        throw SchemaError(scenario_path + ": cannot re-read noise section");
    }
    const nlohmann::json& jn = j.at("noise");
    const NoiseKind nk = kind == "uniform" ? NoiseKind::uniform
                                           : NoiseKind::location_dependent;
    if (jn.contains("preset")) {
        return load_noise_preset(presets_dir, jn.at("preset"), nk);
    }
    if (nk == NoiseKind::uniform) {
        if (!jn.contains("sigma_db")) {
            throw SchemaError(scenario_path +
                              ": noise override 'uniform' needs sigma_db");
        }
        return NoiseModel::uniform(jn.at("sigma_db").get<double>());
    }
    if (!jn.contains("sigma1_db") || !jn.contains("sigma2_db") ||
        !jn.contains("xi_th_m")) {
        throw SchemaError(
            scenario_path +
            ": noise override 'split' needs sigma1_db, sigma2_db, xi_th_m");
    }
    return NoiseModel::location_dependent(jn.at("sigma1_db").get<double>(),
                                          jn.at("sigma2_db").get<double>(),
                                          jn.at("xi_th_m").get<double>());
}

struct SimulateArgs {
    std::string scenario;
    std::string out;
    std::string presets = "presets";
    std::uint64_t seed = 0;
    bool seed_set = false;
};

int cmd_simulate(const SimulateArgs& a) {
    Scenario sc = load_scenario(a.scenario, a.presets);
    if (a.seed_set) {
        sc.seed = a.seed;
    }
    const GroundTruth gt = derive_ground_truth(sc);
    const auto ms = synthesize_measurements(sc, gt);
    for (std::size_t i = 0; i < gt.rps.size(); ++i) {
        const std::string name =
            measurement_file_name(gt.rps[i].link_index, gt.rps[i].mpc_index);
        atomic_write_text((fs::path(a.out) / name).string(),
                          measurements_to_csv(ms[i]));
        logmsg(LogLevel::info, "wrote " + name + " (" +
                                   std::to_string(ms[i].size()) + " rows)");
    }
    atomic_write_text((fs::path(a.out) / "ground_truth.csv").string(),
                      ground_truth_to_csv(gt));
    logmsg(LogLevel::info,
           "simulated " + std::to_string(gt.rps.size()) + " MPC stream(s)");
    return 0;
}

struct CalibrateArgs {
    std::string scenario;
    std::string data;
    std::string out;
    std::string presets = "presets";
    std::string noise_kind;  // empty = use the scenario's model
    double dx = 0.05;
    double eta = 100.0;
    double gate = 0.0;
    int jobs = 0;
    bool write_weights = false;
    bool timing = false;
};

int cmd_calibrate(const CalibrateArgs& a) {
    const auto t0 = std::chrono::steady_clock::now();
    const Scenario sc = load_scenario(a.scenario, a.presets);
    CalibrationConfig cfg;
    cfg.fading = sc.fading;
    cfg.noise = a.noise_kind.empty()
                    ? sc.noise
                    : noise_with_kind(a.scenario, a.presets, a.noise_kind);
    cfg.dx = a.dx;
    cfg.eta = a.eta;
    cfg.gate_distance = a.gate;

    std::map<std::pair<int, int>, double> truth;
    const fs::path truth_path = fs::path(a.data) / "ground_truth.csv";
    if (fs::exists(truth_path)) {
        for (const MpcGroundTruth& rp :
             ground_truth_from_csv(read_text(truth_path.string())).rps) {
            truth[{rp.link_index, rp.mpc_index}] = rp.rp_arc;
        }
    }

    struct Task {
        int link;
        int mpc;
        DelayEllipse ellipse;
        std::string file;
        std::optional<double> truth_arc;
    };
    std::vector<Task> tasks;
    for (std::size_t li = 0; li < sc.links.size(); ++li) {
        for (std::size_t mi = 0; mi < sc.links[li].mpcs.size(); ++mi) {
            const std::string file =
                (fs::path(a.data) /
                 measurement_file_name(static_cast<int>(li),
                                       static_cast<int>(mi)))
                    .string();
            if (!fs::exists(file)) {
                throw SchemaError("missing measurement file " + file +
                                  " for the scenario's link/MPC layout");
            }
            std::optional<double> truth_arc;
            const auto it = truth.find({static_cast<int>(li),
                                        static_cast<int>(mi)});
            if (it != truth.end()) {
                truth_arc = it->second;
            }
            tasks.push_back({static_cast<int>(li), static_cast<int>(mi),
                             make_delay_ellipse(sc.links[li].link,
                                                sc.links[li].mpcs[mi]),
                             file, truth_arc});
        }
    }

    std::vector<MpcReport> reports(tasks.size());
    std::vector<std::string> weight_files(tasks.size());
    run_parallel(tasks.size(), a.jobs, [&](std::size_t i) {
        const Task& t = tasks[i];
        const std::vector<Measurement> ms =
            measurements_from_csv(read_text(t.file));
        const CalibrationResult res = run_calibration(
            t.ellipse, ms, cfg, t.truth_arc, a.write_weights);
        MpcReport r;
        r.link = t.link;
        r.mpc = t.mpc;
        r.s_hat = res.estimates.empty() ? res.final_state.mmse().s_hat
                                        : res.estimates.back();
        r.rp_point = arc_to_point(t.ellipse, r.s_hat);
        if (t.truth_arc) {
            r.final_error =
                elliptic_error(t.ellipse.circumference, r.s_hat, *t.truth_arc);
            r.error_trace = res.errors;
        }
        r.multimodal = !res.multimodal.empty() && res.multimodal.back();
        r.low_information = res.low_information;
        reports[i] = std::move(r);
        if (a.write_weights) {
            weight_files[i] = weights_to_csv(res.weight_history);
        }
    });

    Report report;
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        if (reports[i].low_information) {
            logmsg(LogLevel::warn,
                   "link " + std::to_string(reports[i].link) + " mpc " +
                       std::to_string(reports[i].mpc) +
                       ": no measurement survived gating (low information)");
        }
        report.mpcs.push_back(reports[i]);
        if (a.write_weights) {
            const std::string name =
                "link" + std::to_string(tasks[i].link) + "_mpc" +
                std::to_string(tasks[i].mpc) + "_weights.csv";
            atomic_write_text((fs::path(a.out) / name).string(),
                              weight_files[i]);
        }
    }
    const auto t1 = std::chrono::steady_clock::now();
    const double seconds =
        std::chrono::duration<double>(t1 - t0).count();
    // Timing stays out of the report by default so repeated runs are
    // byte-identical.
    report.duration_s = a.timing ? seconds : 0.0;
    logmsg(LogLevel::info,
           "calibrated " + std::to_string(tasks.size()) + " MPC(s) in " +
               std::to_string(seconds) + " s");
    atomic_write_text((fs::path(a.out) / "report.json").string(),
                      report_to_json(report));
    return 0;
}

struct EvalArgs {
    std::string report;
    std::string truth;
    std::string scenario;
    std::string presets = "presets";
    double bound = -1.0;
};

int cmd_eval(const EvalArgs& a) {
    const Scenario sc = load_scenario(a.scenario, a.presets);
    const Report report = report_from_json(read_text(a.report));
    std::map<std::pair<int, int>, double> truth;
    for (const MpcGroundTruth& rp :
         ground_truth_from_csv(read_text(a.truth)).rps) {
        truth[{rp.link_index, rp.mpc_index}] = rp.rp_arc;
    }
    double sum = 0.0;
    bool exceeded = false;
    std::cout << "link,mpc,error_m\n";
    for (const MpcReport& r : report.mpcs) {
        const auto it = truth.find({r.link, r.mpc});
        if (it == truth.end()) {
            throw SchemaError("ground truth has no entry for link " +
                              std::to_string(r.link) + " mpc " +
                              std::to_string(r.mpc));
        }
        if (r.link < 0 ||
            static_cast<std::size_t>(r.link) >= sc.links.size() ||
            r.mpc < 0 ||
            static_cast<std::size_t>(r.mpc) >=
                sc.links[r.link].mpcs.size()) {
            throw SchemaError("report entry does not match the scenario");
        }
        const DelayEllipse e = make_delay_ellipse(
            sc.links[r.link].link, sc.links[r.link].mpcs[r.mpc]);
        const double err =
            elliptic_error(e.circumference, r.s_hat, it->second);
        sum += err;
        if (a.bound >= 0.0 && err > a.bound) {
            exceeded = true;
        }
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%d,%d,%.6f\n", r.link, r.mpc, err);
        std::cout << buf;
    }
    if (report.mpcs.empty()) {
        throw SchemaError("report contains no MPC entries");
    }
    char buf[64];
    std::snprintf(buf, sizeof(buf), "mean,,%.6f\n",
                  sum / static_cast<double>(report.mpcs.size()));
    std::cout << buf;
    if (exceeded) {
        logmsg(LogLevel::error, "at least one error exceeds the bound");
        return 1;
    }
    return 0;
}

struct ExtractArgs {
    std::string pulse;
    std::string out;
    std::vector<std::string> cir;
    std::vector<std::string> idle;
    std::vector<double> delays;
};

int cmd_extract(const ExtractArgs& a) {
    const SampledSignal pulse = signal_from_text(read_text(a.pulse));
    if (a.idle.empty()) {
        throw EmptyIdleSet("no idle-period CIR files given");
    }
    std::vector<double> delays = a.delays;
    // Per-delay reference power from the idle snapshots.
    std::vector<double> gamma(delays.size());
    for (std::size_t j = 0; j < delays.size(); ++j) {
        std::vector<std::complex<double>> idle_amps;
        for (const std::string& file : a.idle) {
            const SampledSignal y = signal_from_text(read_text(file));
            const ExtractResult r = extract_sequentially(y, pulse, delays);
            idle_amps.push_back(std::conj(r.amplitudes[j]));
        }
        const ReferencePower ref = reference_power(idle_amps);
        if (ref.phase_unstable) {
            logmsg(LogLevel::warn,
                   "idle amplitudes for delay " + std::to_string(delays[j]) +
                       " s have unstable phase; reference may be biased");
        }
        gamma[j] = ref.gamma_db;
    }
    std::string csv = "file,tau_s,z_db\n";
    for (const std::string& file : a.cir) {
        const SampledSignal y = signal_from_text(read_text(file));
        const ExtractResult r = extract_sequentially(y, pulse, delays);
        if (r.overlap_warning) {
            logmsg(LogLevel::warn, file + ": delays overlap the pulse width");
        }
        for (std::size_t j = 0; j < delays.size(); ++j) {
            const PowerChange pc =
                power_change(std::conj(r.amplitudes[j]), gamma[j]);
            char buf[96];
            std::snprintf(buf, sizeof(buf), "%s,%.17g,%.17g\n", file.c_str(),
                          delays[j], pc.z_db);
            csv += buf;
        }
    }
    atomic_write_text(a.out, csv);
    return 0;
}

struct FitArgs {
    std::string data;
    std::string out;
    double xi_th = 0.0865;
};

int cmd_fit(const FitArgs& a) {
    const std::vector<FadingSample> samples =
        fading_samples_from_csv(read_text(a.data));
    const FadingFit fit = fit_fading_params(samples);
    if (!fit.identifiable) {
        logmsg(LogLevel::warn,
               "fading parameters are not identifiable from the data");
    }
    std::vector<std::pair<double, double>> residuals;
    for (const FadingSample& s : samples) {
        const double model =
            predicted_change(fit.params, s.xi_tx, s.xi_rx);
        residuals.push_back({std::min(s.xi_tx, s.xi_rx), s.z_db - model});
    }
    const NoiseFit noise = fit_noise_sigmas(residuals, a.xi_th);
    if (!noise.degenerate && !(noise.sigma1_db < noise.sigma2_db)) {
        logmsg(LogLevel::warn,
               "fitted far-regime sigma is not below the near-regime sigma");
    }
    nlohmann::json j;
    j["phi_db"] = fit.params.phi_db;
    j["kappa_m"] = fit.params.kappa_m;
    j["identifiable"] = fit.identifiable;
    j["residual_sse"] = fit.residual_sse;
    j["sigma1_db"] = noise.sigma1_db;
    j["sigma2_db"] = noise.sigma2_db;
    j["xi_th_m"] = a.xi_th;
    atomic_write_text(a.out, j.dump(2) + "\n");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Reflection-point calibration on delay ellipses"};
    app.require_subcommand(1);

    SimulateArgs sim;
    CLI::App* c_sim =
        app.add_subcommand("simulate", "Synthesize measurement datasets");
    c_sim->add_option("--scenario", sim.scenario, "Scenario JSON file")
        ->required();
    c_sim->add_option("--out", sim.out, "Output directory")->required();
    c_sim->add_option("--presets", sim.presets, "Preset directory");
    CLI::Option* seed_opt =
        c_sim->add_option("--seed", sim.seed, "Override the scenario seed");

    CalibrateArgs cal;
    CLI::App* c_cal =
        app.add_subcommand("calibrate", "Run the point-mass filter");
    c_cal->add_option("--scenario", cal.scenario, "Scenario JSON file")
        ->required();
    c_cal->add_option("--data", cal.data, "Measurement directory")->required();
    c_cal->add_option("--out", cal.out, "Output directory")->required();
    c_cal->add_option("--presets", cal.presets, "Preset directory");
    c_cal->add_option("--dx", cal.dx, "Grid spacing in meters");
    c_cal->add_option("--eta", cal.eta, "Transition concentration");
    c_cal->add_option("--gate", cal.gate, "Gating distance in meters");
    c_cal->add_option("--jobs", cal.jobs, "Concurrent MPC jobs (0 = auto)");
    c_cal->add_option("--noise", cal.noise_kind, "Noise model override")
        ->check(CLI::IsMember({"uniform", "split"}));
    c_cal->add_flag("--weights", cal.write_weights,
                    "Write per-step weight history CSVs");
    c_cal->add_flag("--timing", cal.timing,
                    "Record the wall-clock duration in the report");

    EvalArgs ev;
    CLI::App* c_ev = app.add_subcommand("eval", "Score a calibration report");
    c_ev->add_option("--report", ev.report, "Report JSON file")->required();
    c_ev->add_option("--truth", ev.truth, "Ground-truth CSV file")->required();
    c_ev->add_option("--scenario", ev.scenario, "Scenario JSON file")
        ->required();
    c_ev->add_option("--presets", ev.presets, "Preset directory");
    c_ev->add_option("--bound", ev.bound,
                     "Fail when any error exceeds this bound (m)");

    ExtractArgs ex;
    CLI::App* c_ex =
        app.add_subcommand("extract", "Power changes from CIR snapshots");
    c_ex->add_option("--pulse", ex.pulse, "Pulse shape file")->required();
    c_ex->add_option("--out", ex.out, "Output CSV file")->required();
    c_ex->add_option("--delays", ex.delays, "Mean delays in seconds")
        ->required();
    c_ex->add_option("--cir", ex.cir, "CIR snapshot files")->required();
    c_ex->add_option("--idle", ex.idle, "Idle-period CIR files");

    FitArgs fit;
    CLI::App* c_fit =
        app.add_subcommand("fit", "Fit fading and noise parameters");
    c_fit->add_option("--data", fit.data, "Fading-sample CSV file")
        ->required();
    c_fit->add_option("--out", fit.out, "Output JSON file")->required();
    c_fit->add_option("--xi-th", fit.xi_th,
                      "Noise-regime threshold in meters");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }
    sim.seed_set = seed_opt->count() > 0;

    try {
        if (c_sim->parsed()) {
            return cmd_simulate(sim);
        }
        if (c_cal->parsed()) {
            return cmd_calibrate(cal);
        }
        if (c_ev->parsed()) {
            return cmd_eval(ev);
        }
        if (c_ex->parsed()) {
            return cmd_extract(ex);
        }
        if (c_fit->parsed()) {
            return cmd_fit(fit);
        }
        return 2;
    } catch (const SchemaError& e) {
        logmsg(LogLevel::error, e.what());
        return 3;
    } catch (const ScenarioError& e) {
        logmsg(LogLevel::error, e.what());
        return 3;
    } catch (const SignalError& e) {
        logmsg(LogLevel::error, e.what());
        return 3;
    } catch (const InsufficientData& e) {
        logmsg(LogLevel::error, e.what());
        return 3;
    } catch (const std::exception& e) {
        // Geometry, inference, and fitting failures are numerical.
        logmsg(LogLevel::error, e.what());
        return 4;
    }
}
