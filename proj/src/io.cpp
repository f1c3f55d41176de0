#include "ellipse_calib/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace ecal {
namespace {

using nlohmann::json;

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

Vec2 parse_vec2(const json& j, const std::string& what) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() ||
        !j[1].is_number()) {
        throw SchemaError(what + ": expected [x, y]");
    }
    return {j[0].get<double>(), j[1].get<double>()};
}

json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw SchemaError("cannot open " + path);
    }
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw SchemaError(path + ": " + e.what());
    }
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, sep)) {
        out.push_back(field);
    }
    return out;
}

double parse_double(const std::string& s, int line_no) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) {
            throw std::invalid_argument(s);
        }
        return v;
    } catch (const std::exception&) {
        throw SchemaError("line " + std::to_string(line_no) +
                          ": bad numeric field '" + s + "'");
    }
}

}  // namespace

void atomic_write_text(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    if (target.has_parent_path()) {
        fs::create_directories(target.parent_path());
    }
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw std::runtime_error("cannot write " + tmp.string());
        }
        out << content;
    }
    fs::rename(tmp, target);
}

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw SchemaError("cannot open " + path);
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

FadingParams load_fading_preset(const std::string& presets_dir,
                                const std::string& name) {
    const json j = load_json_file(presets_dir + "/fading_presets.json");
    if (!j.contains(name)) {
        throw SchemaError("unknown fading preset '" + name + "'");
    }
    const json& p = j.at(name);
    FadingParams params;
    // Preset tables list phi as positive magnitudes; the model stores the
    // signed (attenuating) value.
    params.phi_db = -std::abs(p.at("phi_magnitude_db").get<double>());
    params.kappa_m = p.at("kappa_m").get<double>();
    const std::string ut = p.value("user_type", "custom");
    if (ut == "pedestrian") {
        params.user_type = UserType::pedestrian;
    } else if (ut == "bike") {
        params.user_type = UserType::bike;
    } else if (ut == "car") {
        params.user_type = UserType::car;
    }
    return params;
}

NoiseModel load_noise_preset(const std::string& presets_dir,
                             const std::string& name, NoiseKind kind) {
    const json j = load_json_file(presets_dir + "/noise_presets.json");
    if (!j.contains(name)) {
        throw SchemaError("unknown noise preset '" + name + "'");
    }
    const json& p = j.at(name);
    if (kind == NoiseKind::uniform) {
        return NoiseModel::uniform(p.at("sigma_bar_db").get<double>());
    }
    return NoiseModel::location_dependent(p.at("sigma1_db").get<double>(),
                                          p.at("sigma2_db").get<double>(),
                                          p.at("xi_th_m").get<double>());
}

Scenario load_scenario(const std::string& path,
                       const std::string& presets_dir) {
    const json j = load_json_file(path);
    Scenario sc;
    sc.seed = j.value("seed", 0ULL);
    if (!j.contains("links") || !j.at("links").is_array() ||
        j.at("links").empty()) {
        throw SchemaError(path + ": 'links' must be a nonempty array");
    }
    for (const json& jl : j.at("links")) {
        ScenarioLink sl;
        sl.link.tx = parse_vec2(jl.at("tx"), "link tx");
        sl.link.rx = parse_vec2(jl.at("rx"), "link rx");
        if (!jl.contains("mpcs") || jl.at("mpcs").empty()) {
            throw SchemaError(path + ": every link needs at least one mpc");
        }
        for (const json& jm : jl.at("mpcs")) {
            if (jm.contains("delay_ns")) {
                sl.mpcs.push_back(
                    Mpc::from_delay(jm.at("delay_ns").get<double>() * 1e-9));
            } else if (jm.contains("path_length_m")) {
                sl.mpcs.push_back(
                    Mpc::from_path_length(jm.at("path_length_m").get<double>()));
            } else {
                throw SchemaError(path +
                                  ": mpc needs delay_ns or path_length_m");
            }
        }
        sc.links.push_back(std::move(sl));
    }
    for (const json& js : j.value("surfaces", json::array())) {
        sc.surfaces.push_back({parse_vec2(js.at("p0"), "surface p0"),
                               parse_vec2(js.at("p1"), "surface p1")});
    }
    const json& jt = j.at("trajectory");
    for (const json& w : jt.at("waypoints")) {
        sc.trajectory.waypoints.push_back(parse_vec2(w, "waypoint"));
    }
    sc.trajectory.speed_mps = jt.at("speed_mps").get<double>();
    sc.trajectory.update_time_s = jt.at("update_time_s").get<double>();

    const json& jf = j.at("fading");
    if (jf.contains("preset")) {
        sc.fading = load_fading_preset(presets_dir, jf.at("preset"));
    } else {
        sc.fading.phi_db = jf.at("phi_db").get<double>();
        sc.fading.kappa_m = jf.at("kappa_m").get<double>();
    }
    if (!(sc.fading.kappa_m > 0.0)) {
        throw SchemaError(path + ": kappa_m must be positive");
    }

    const json& jn = j.at("noise");
    const std::string kind = jn.value("kind", "uniform");
    if (kind != "uniform" && kind != "split") {
        throw SchemaError(path + ": noise kind must be uniform or split");
    }
    const NoiseKind nk =
        kind == "uniform" ? NoiseKind::uniform : NoiseKind::location_dependent;
    if (jn.contains("preset")) {
        sc.noise = load_noise_preset(presets_dir, jn.at("preset"), nk);
    } else if (nk == NoiseKind::uniform) {
        sc.noise = NoiseModel::uniform(jn.at("sigma_db").get<double>());
    } else {
        sc.noise = NoiseModel::location_dependent(
            jn.at("sigma1_db").get<double>(), jn.at("sigma2_db").get<double>(),
            jn.at("xi_th_m").get<double>());
    }

    if (j.contains("scatter")) {
        sc.inject_scatter = j.at("scatter").value("inject", false);
        sc.scatter_distance = j.at("scatter").value("distance_m", 0.0);
    }
    return sc;
}

std::string measurements_to_csv(const std::vector<Measurement>& ms) {
    std::string out = "k,time_s,user_x_m,user_y_m,z_db\n";
    for (const Measurement& m : ms) {
        out += std::to_string(m.k) + "," + fmt_double(m.time_s) + "," +
               fmt_double(m.user.x) + "," + fmt_double(m.user.y) + "," +
               fmt_double(m.z_db) + "\n";
    }
    return out;
}

std::vector<Measurement> measurements_from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != "k,time_s,user_x_m,user_y_m,z_db") {
        throw SchemaError("line 1: bad measurement CSV header");
    }
    std::vector<Measurement> ms;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        const std::vector<std::string> f = split(line, ',');
        if (f.size() != 5) {
            throw SchemaError("line " + std::to_string(line_no) +
                              ": expected 5 fields");
        }
        Measurement m;
        m.k = static_cast<int>(parse_double(f[0], line_no));
        m.time_s = parse_double(f[1], line_no);
        m.user.x = parse_double(f[2], line_no);
        m.user.y = parse_double(f[3], line_no);
        m.z_db = parse_double(f[4], line_no);
        ms.push_back(m);
    }
    return ms;
}

std::string ground_truth_to_csv(const GroundTruth& gt) {
    std::string out = "link,mpc,rp_arc_m,rp_x_m,rp_y_m\n";
    for (const MpcGroundTruth& rp : gt.rps) {
        out += std::to_string(rp.link_index) + "," +
               std::to_string(rp.mpc_index) + "," + fmt_double(rp.rp_arc) +
               "," + fmt_double(rp.rp_point.x) + "," +
               fmt_double(rp.rp_point.y) + "\n";
    }
    return out;
}

GroundTruth ground_truth_from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != "link,mpc,rp_arc_m,rp_x_m,rp_y_m") {
        throw SchemaError("line 1: bad ground-truth CSV header");
    }
    GroundTruth gt;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        const std::vector<std::string> f = split(line, ',');
        if (f.size() != 5) {
            throw SchemaError("line " + std::to_string(line_no) +
                              ": expected 5 fields");
        }
        MpcGroundTruth rp;
        rp.link_index = static_cast<int>(parse_double(f[0], line_no));
        rp.mpc_index = static_cast<int>(parse_double(f[1], line_no));
        rp.rp_arc = parse_double(f[2], line_no);
        rp.rp_point.x = parse_double(f[3], line_no);
        rp.rp_point.y = parse_double(f[4], line_no);
        gt.rps.push_back(rp);
    }
    return gt;
}

std::string weights_to_csv(const std::vector<std::vector<double>>& history) {
    std::string out;
    for (const auto& row : history) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i > 0) {
                out += ",";
            }
            out += fmt_double(row[i]);
        }
        out += "\n";
    }
    return out;
}

std::string measurement_file_name(int link, int mpc) {
    return "link" + std::to_string(link) + "_mpc" + std::to_string(mpc) +
           ".csv";
}

std::string signal_to_text(const SampledSignal& y) {
    std::string out = "# sample_interval_s " + fmt_double(y.sample_interval_s) +
                      "\n";
    for (std::size_t i = 0; i < y.samples.size(); ++i) {
        out += std::to_string(i) + " " + fmt_double(y.samples[i].real()) + " " +
               fmt_double(y.samples[i].imag()) + "\n";
    }
    return out;
}

SampledSignal signal_from_text(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line.rfind("# sample_interval_s ", 0) != 0) {
        throw SchemaError("line 1: expected '# sample_interval_s <dt>' header");
    }
    SampledSignal y;
    y.sample_interval_s = parse_double(line.substr(20), 1);
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        std::istringstream ls(line);
        long idx = 0;
        double re = 0.0, im = 0.0;
        if (!(ls >> idx >> re >> im)) {
            throw SchemaError("line " + std::to_string(line_no) +
                              ": expected 'index real imag'");
        }
        if (idx != static_cast<long>(y.samples.size())) {
            throw SchemaError("line " + std::to_string(line_no) +
                              ": non-contiguous sample index");
        }
        y.samples.emplace_back(re, im);
    }
    return y;
}

std::string report_to_json(const Report& report) {
    json j;
    j["duration_s"] = report.duration_s;
    j["mpcs"] = json::array();
    for (const MpcReport& r : report.mpcs) {
        json jr;
        jr["link"] = r.link;
        jr["mpc"] = r.mpc;
        jr["s_hat_m"] = r.s_hat;
        jr["rp_x_m"] = r.rp_point.x;
        jr["rp_y_m"] = r.rp_point.y;
        if (r.final_error) {
            jr["final_error_m"] = *r.final_error;
        } else {
            jr["final_error_m"] = nullptr;
        }
        if (!r.error_trace.empty()) {
            jr["error_trace_m"] = r.error_trace;
        }
        jr["multimodal"] = r.multimodal;
        jr["low_information"] = r.low_information;
        j["mpcs"].push_back(jr);
    }
    return j.dump(2) + "\n";
}

Report report_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw SchemaError(std::string("report: ") + e.what());
    }
    Report report;
    report.duration_s = j.value("duration_s", 0.0);
    for (const json& jr : j.at("mpcs")) {
        MpcReport r;
        r.link = jr.at("link").get<int>();
        r.mpc = jr.at("mpc").get<int>();
        r.s_hat = jr.at("s_hat_m").get<double>();
        r.rp_point.x = jr.at("rp_x_m").get<double>();
        r.rp_point.y = jr.at("rp_y_m").get<double>();
        if (jr.contains("final_error_m") && !jr.at("final_error_m").is_null()) {
            r.final_error = jr.at("final_error_m").get<double>();
        }
        if (jr.contains("error_trace_m")) {
            r.error_trace = jr.at("error_trace_m").get<std::vector<double>>();
        }
        r.multimodal = jr.value("multimodal", false);
        r.low_information = jr.value("low_information", false);
        report.mpcs.push_back(std::move(r));
    }
    return report;
}

std::vector<FadingSample> fading_samples_from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != "xi_tx_m,xi_rx_m,z_db") {
        throw SchemaError("line 1: bad fading-sample CSV header");
    }
    std::vector<FadingSample> samples;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        const std::vector<std::string> f = split(line, ',');
        if (f.size() != 3) {
            throw SchemaError("line " + std::to_string(line_no) +
                              ": expected 3 fields");
        }
        samples.push_back({parse_double(f[0], line_no),
                           parse_double(f[1], line_no),
                           parse_double(f[2], line_no)});
    }
    return samples;
}

std::string fading_samples_to_csv(const std::vector<FadingSample>& samples) {
    std::string out = "xi_tx_m,xi_rx_m,z_db\n";
    for (const FadingSample& s : samples) {
        out += fmt_double(s.xi_tx) + "," + fmt_double(s.xi_rx) + "," +
               fmt_double(s.z_db) + "\n";
    }
    return out;
}

}  // namespace ecal
