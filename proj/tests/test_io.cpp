#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <string>
#include <unistd.h>

#include "ellipse_calib/io.hpp"

using namespace ecal;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("ecal_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter()++));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    static int& counter() {
        static int c = 0;
        return c;
    }
    std::string file(const std::string& name) const {
        return (path / name).string();
    }
};

void write_presets(const TempDir& dir) {
    atomic_write_text(dir.file("fading_presets.json"), R"({
      "setup1_pedestrian": {"phi_magnitude_db": 1.6255, "kappa_m": 0.0100,
                            "user_type": "pedestrian"},
      "setup1_bike": {"phi_magnitude_db": 3.2809, "kappa_m": 0.0193,
                      "user_type": "bike"}
    })");
    atomic_write_text(dir.file("noise_presets.json"), R"({
      "setup1": {"sigma_bar_db": 0.4659, "xi_th_m": 0.0865,
                 "sigma1_db": 0.2813, "sigma2_db": 0.7957}
    })");
}

std::string scenario_json() {
    return R"({
      "seed": 42,
      "links": [
        {"tx": [-3.0, 0.0], "rx": [3.0, 0.0],
         "mpcs": [{"path_length_m": 10.0}]}
      ],
      "surfaces": [{"p0": [-5.0, 4.0], "p1": [5.0, 4.0]}],
      "trajectory": {"waypoints": [[-2.0, 1.0], [2.0, 1.0]],
                     "speed_mps": 1.0, "update_time_s": 0.1},
      "fading": {"phi_db": -2.5, "kappa_m": 0.015},
      "noise": {"kind": "split", "sigma1_db": 0.5, "sigma2_db": 1.0,
                "xi_th_m": 0.0865},
      "scatter": {"inject": true, "distance_m": 0.3}
    })";
}

}  // namespace

TEST_CASE("atomic_write_text round trip, nested dirs, no temp residue") {
    TempDir dir;
    const std::string path = dir.file("a/b/c.txt");
    const std::string content = "line1\nline2\n\xC3\xA9\n";  // UTF-8 payload
    atomic_write_text(path, content);
    CHECK(read_text(path) == content);
    CHECK_FALSE(fs::exists(path + ".tmp"));
    // Overwrite replaces the content completely.
    atomic_write_text(path, "x");
    CHECK(read_text(path) == "x");
    CHECK_THROWS_AS(read_text(dir.file("missing.txt")), SchemaError);
}

TEST_CASE("fading presets load with negated magnitude") {
    TempDir dir;
    write_presets(dir);
    const FadingParams ped =
        load_fading_preset(dir.path.string(), "setup1_pedestrian");
    CHECK(ped.phi_db == doctest::Approx(-1.6255));
    CHECK(ped.kappa_m == doctest::Approx(0.0100));
    CHECK(ped.user_type == UserType::pedestrian);
    const FadingParams bike =
        load_fading_preset(dir.path.string(), "setup1_bike");
    CHECK(bike.phi_db == doctest::Approx(-3.2809));
    CHECK_THROWS_AS(load_fading_preset(dir.path.string(), "nope"),
                    SchemaError);
}

TEST_CASE("noise presets load both kinds") {
    TempDir dir;
    write_presets(dir);
    const NoiseModel u =
        load_noise_preset(dir.path.string(), "setup1", NoiseKind::uniform);
    CHECK(noise_sigma(u, 0.0) == doctest::Approx(0.4659));
    CHECK(noise_sigma(u, 5.0) == doctest::Approx(0.4659));
    const NoiseModel s = load_noise_preset(dir.path.string(), "setup1",
                                           NoiseKind::location_dependent);
    CHECK(noise_sigma(s, 0.05) == doctest::Approx(0.7957));
    CHECK(noise_sigma(s, 0.5) == doctest::Approx(0.2813));
}

TEST_CASE("load_scenario parses every section") {
    TempDir dir;
    atomic_write_text(dir.file("scenario.json"), scenario_json());
    const Scenario sc = load_scenario(dir.file("scenario.json"));
    CHECK(sc.seed == 42);
    REQUIRE(sc.links.size() == 1);
    CHECK(sc.links[0].link.tx.x == doctest::Approx(-3.0));
    REQUIRE(sc.links[0].mpcs.size() == 1);
    CHECK(sc.links[0].mpcs[0].path_length_m == doctest::Approx(10.0));
    REQUIRE(sc.surfaces.size() == 1);
    CHECK(sc.surfaces[0].p1.y == doctest::Approx(4.0));
    CHECK(sc.trajectory.waypoints.size() == 2);
    CHECK(sc.trajectory.update_time_s == doctest::Approx(0.1));
    CHECK(sc.fading.phi_db == doctest::Approx(-2.5));
    CHECK(noise_sigma(sc.noise, 0.01) == doctest::Approx(1.0));
    CHECK(noise_sigma(sc.noise, 1.0) == doctest::Approx(0.5));
    CHECK(sc.inject_scatter);
    CHECK(sc.scatter_distance == doctest::Approx(0.3));
}

TEST_CASE("load_scenario resolves presets and rejects bad input") {
    TempDir dir;
    write_presets(dir);
    atomic_write_text(dir.file("scenario.json"), R"({
      "links": [{"tx": [0,0], "rx": [4,0], "mpcs": [{"delay_ns": 20.0}]}],
      "trajectory": {"waypoints": [[0,0],[1,0]], "speed_mps": 1.0,
                     "update_time_s": 0.1},
      "fading": {"preset": "setup1_bike"},
      "noise": {"kind": "uniform", "preset": "setup1"}
    })");
    const Scenario sc =
        load_scenario(dir.file("scenario.json"), dir.path.string());
    CHECK(sc.fading.phi_db == doctest::Approx(-3.2809));
    CHECK(sc.links[0].mpcs[0].path_length_m ==
          doctest::Approx(20e-9 * 299792458.0));
    CHECK(noise_sigma(sc.noise, 1.0) == doctest::Approx(0.4659));

    atomic_write_text(dir.file("bad_kind.json"), R"({
      "links": [{"tx": [0,0], "rx": [4,0], "mpcs": [{"delay_ns": 20.0}]}],
      "trajectory": {"waypoints": [[0,0],[1,0]], "speed_mps": 1.0,
                     "update_time_s": 0.1},
      "fading": {"phi_db": -2.5, "kappa_m": 0.015},
      "noise": {"kind": "triangular", "sigma_db": 0.75}
    })");
    CHECK_THROWS_AS(load_scenario(dir.file("bad_kind.json")), SchemaError);
    atomic_write_text(dir.file("no_links.json"), R"({"links": []})");
    CHECK_THROWS_AS(load_scenario(dir.file("no_links.json")), SchemaError);
    atomic_write_text(dir.file("not_json.json"), "{ nope");
    CHECK_THROWS_AS(load_scenario(dir.file("not_json.json")), SchemaError);
}

TEST_CASE("measurement CSV round trip is byte identical") {
    std::vector<Measurement> ms;
    ms.push_back({0, 0.0, -2.5, {1.0 / 3.0, -0.1}});
    ms.push_back({1, 0.1, 1e-17, {100.5, 2e8}});
    ms.push_back({2, 0.2, -0.75, {0.0, -0.0}});
    const std::string csv = measurements_to_csv(ms);
    CHECK(csv.rfind("k,time_s,user_x_m,user_y_m,z_db\n", 0) == 0);
    const std::vector<Measurement> back = measurements_from_csv(csv);
    REQUIRE(back.size() == ms.size());
    for (std::size_t i = 0; i < ms.size(); ++i) {
        CHECK(back[i].k == ms[i].k);
        CHECK(back[i].time_s == ms[i].time_s);
        CHECK(back[i].user.x == ms[i].user.x);
        CHECK(back[i].user.y == ms[i].user.y);
        CHECK(back[i].z_db == ms[i].z_db);
    }
    CHECK(measurements_to_csv(back) == csv);
}

TEST_CASE("measurement CSV errors carry line numbers") {
    const std::string bad_header = "time_s,z_db\n0,1\n";
    CHECK_THROWS_WITH_AS(measurements_from_csv(bad_header),
                         doctest::Contains("line 1"), SchemaError);
    const std::string bad_field =
        "k,time_s,user_x_m,user_y_m,z_db\n"
        "0,0.0,1.0,2.0,-1.5\n"
        "1,0.1,oops,2.0,-1.5\n";
    CHECK_THROWS_WITH_AS(measurements_from_csv(bad_field),
                         doctest::Contains("line 3"), SchemaError);
    const std::string short_row =
        "k,time_s,user_x_m,user_y_m,z_db\n0,0.0,1.0\n";
    CHECK_THROWS_WITH_AS(measurements_from_csv(short_row),
                         doctest::Contains("line 2"), SchemaError);
}

TEST_CASE("ground truth CSV round trip") {
    GroundTruth gt;
    gt.rps.push_back({0, 0, 24.408225, {0.0, 4.0}});
    gt.rps.push_back({1, 2, 1.0 / 7.0, {-3.5, 2.25}});
    const std::string csv = ground_truth_to_csv(gt);
    const GroundTruth back = ground_truth_from_csv(csv);
    REQUIRE(back.rps.size() == 2);
    CHECK(back.rps[1].link_index == 1);
    CHECK(back.rps[1].mpc_index == 2);
    CHECK(back.rps[1].rp_arc == gt.rps[1].rp_arc);
    CHECK(ground_truth_to_csv(back) == csv);
}

TEST_CASE("signal text round trip and index checks") {
    SampledSignal y;
    y.sample_interval_s = 1e-9;
    y.samples = {{1.0, -2.0}, {1.0 / 3.0, 0.0}, {0.0, 5e-13}};
    const std::string text = signal_to_text(y);
    const SampledSignal back = signal_from_text(text);
    CHECK(back.sample_interval_s == y.sample_interval_s);
    REQUIRE(back.samples.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(back.samples[i] == y.samples[i]);
    }
    CHECK(signal_to_text(back) == text);
    CHECK_THROWS_WITH_AS(
        signal_from_text("# sample_interval_s 1e-9\n0 1 0\n2 1 0\n"),
        doctest::Contains("line 3"), SchemaError);
    CHECK_THROWS_AS(signal_from_text("bogus\n"), SchemaError);
}

TEST_CASE("report JSON round trip") {
    Report r;
    r.duration_s = 12.5;
    MpcReport a;
    a.link = 0;
    a.mpc = 1;
    a.s_hat = 24.4;
    a.rp_point = {0.0, 4.0};
    a.final_error = 0.05;
    a.error_trace = {1.2, 0.4, 0.05};
    a.multimodal = true;
    r.mpcs.push_back(a);
    MpcReport b;
    b.link = 1;
    b.mpc = 0;
    b.low_information = true;
    r.mpcs.push_back(b);
    const Report back = report_from_json(report_to_json(r));
    REQUIRE(back.mpcs.size() == 2);
    CHECK(back.duration_s == 12.5);
    CHECK(back.mpcs[0].s_hat == 24.4);
    REQUIRE(back.mpcs[0].final_error.has_value());
    CHECK(*back.mpcs[0].final_error == 0.05);
    CHECK(back.mpcs[0].error_trace.size() == 3);
    CHECK(back.mpcs[0].multimodal);
    CHECK_FALSE(back.mpcs[1].final_error.has_value());
    CHECK(back.mpcs[1].low_information);
    CHECK_THROWS_AS(report_from_json("not json"), SchemaError);
}

TEST_CASE("fading sample CSV round trip") {
    std::vector<FadingSample> samples = {{0.01, 0.02, -2.4},
                                         {1.0 / 3.0, 0.0, 0.0}};
    const std::string csv = fading_samples_to_csv(samples);
    CHECK(csv.rfind("xi_tx_m,xi_rx_m,z_db\n", 0) == 0);
    const auto back = fading_samples_from_csv(csv);
    REQUIRE(back.size() == 2);
    CHECK(back[1].xi_tx == samples[1].xi_tx);
    CHECK(fading_samples_to_csv(back) == csv);
    CHECK_THROWS_WITH_AS(fading_samples_from_csv("bad\n"),
                         doctest::Contains("line 1"), SchemaError);
}

TEST_CASE("measurement_file_name") {
    CHECK(measurement_file_name(0, 0) == "link0_mpc0.csv");
    CHECK(measurement_file_name(3, 12) == "link3_mpc12.csv");
}

TEST_CASE("weights_to_csv layout") {
    const std::string csv = weights_to_csv({{0.25, 0.75}, {0.5, 0.5}});
    CHECK(csv == "0.25,0.75\n0.5,0.5\n");
}
