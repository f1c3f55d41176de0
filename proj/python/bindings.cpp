#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "ellipse_calib/fading.hpp"
#include "ellipse_calib/geometry.hpp"
#include "ellipse_calib/inference.hpp"
#include "ellipse_calib/scenario.hpp"

namespace py = pybind11;
using namespace ecal;

PYBIND11_MODULE(_core, m) {
    m.doc() = "Reflection-point calibration on delay ellipses";

    py::register_exception<GeometryError>(m, "GeometryError");
    py::register_exception<FadingError>(m, "FadingError");
    py::register_exception<InferenceError>(m, "InferenceError");
    py::register_exception<ScenarioError>(m, "ScenarioError");

    py::class_<Vec2>(m, "Vec2")
        .def(py::init<>())
        .def(py::init<double, double>(), py::arg("x"), py::arg("y"))
        .def_readwrite("x", &Vec2::x)
        .def_readwrite("y", &Vec2::y)
        .def("__repr__", [](const Vec2& v) {
            return "Vec2(" + std::to_string(v.x) + ", " + std::to_string(v.y) +
                   ")";
        });

    py::class_<NetworkLink>(m, "NetworkLink")
        .def(py::init<>())
        .def(py::init([](const Vec2& tx, const Vec2& rx) {
                 return NetworkLink{tx, rx};
             }),
             py::arg("tx"), py::arg("rx"))
        .def_readwrite("tx", &NetworkLink::tx)
        .def_readwrite("rx", &NetworkLink::rx)
        .def("los_distance", &NetworkLink::los_distance);

    py::class_<Mpc>(m, "Mpc")
        .def_static("from_delay", &Mpc::from_delay, py::arg("delay_s"))
        .def_static("from_path_length", &Mpc::from_path_length,
                    py::arg("path_length_m"))
        .def_readonly("path_length_m", &Mpc::path_length_m);

    py::class_<DelayEllipse>(m, "DelayEllipse")
        .def_readonly("a", &DelayEllipse::a)
        .def_readonly("b", &DelayEllipse::b)
        .def_readonly("d", &DelayEllipse::d)
        .def_readonly("center", &DelayEllipse::center)
        .def_readonly("rotation_angle", &DelayEllipse::rotation_angle)
        .def_readonly("eccentricity", &DelayEllipse::eccentricity)
        .def_readonly("circumference", &DelayEllipse::circumference);

    py::class_<Surface>(m, "Surface")
        .def(py::init([](const Vec2& p0, const Vec2& p1) {
                 return Surface{p0, p1};
             }),
             py::arg("p0"), py::arg("p1"))
        .def_readwrite("p0", &Surface::p0)
        .def_readwrite("p1", &Surface::p1);

    py::class_<VirtualNodes>(m, "VirtualNodes")
        .def_readonly("vt", &VirtualNodes::vt)
        .def_readonly("vr", &VirtualNodes::vr);

    py::class_<ExcessPaths>(m, "ExcessPaths")
        .def_readonly("xi_tx", &ExcessPaths::xi_tx)
        .def_readonly("xi_rx", &ExcessPaths::xi_rx)
        .def_readonly("xi_min", &ExcessPaths::xi_min);

    m.def("make_delay_ellipse", &make_delay_ellipse, py::arg("link"),
          py::arg("mpc"));
    m.def("arc_length", &arc_length, py::arg("ellipse"), py::arg("theta"));
    m.def("inverse_arc_length", &inverse_arc_length, py::arg("ellipse"),
          py::arg("s"));
    m.def("arc_to_point", &arc_to_point, py::arg("ellipse"), py::arg("s"));
    m.def("point_to_arc", &point_to_arc, py::arg("ellipse"), py::arg("point"));
    m.def("distance_to_ellipse", &distance_to_ellipse, py::arg("ellipse"),
          py::arg("point"));
    m.def("virtual_nodes", &virtual_nodes, py::arg("ellipse"), py::arg("rp"));
    m.def("excess_paths", &excess_paths, py::arg("ellipse"), py::arg("rp"),
          py::arg("user"));
    m.def("find_reflection_points", &find_reflection_points,
          py::arg("ellipse"), py::arg("surfaces"));

    py::enum_<UserType>(m, "UserType")
        .value("pedestrian", UserType::pedestrian)
        .value("bike", UserType::bike)
        .value("car", UserType::car)
        .value("custom", UserType::custom);

    py::class_<FadingParams>(m, "FadingParams")
        .def(py::init([](double phi_db, double kappa_m, UserType user_type) {
                 return FadingParams{phi_db, kappa_m, user_type};
             }),
             py::arg("phi_db"), py::arg("kappa_m"),
             py::arg("user_type") = UserType::custom)
        .def_readwrite("phi_db", &FadingParams::phi_db)
        .def_readwrite("kappa_m", &FadingParams::kappa_m)
        .def_readwrite("user_type", &FadingParams::user_type);

    py::class_<NoiseModel>(m, "NoiseModel")
        .def_static("uniform", &NoiseModel::uniform, py::arg("sigma_db"))
        .def_static("location_dependent", &NoiseModel::location_dependent,
                    py::arg("sigma1_db"), py::arg("sigma2_db"),
                    py::arg("xi_th_m"));

    m.def("predicted_change", &predicted_change, py::arg("params"),
          py::arg("xi_tx"), py::arg("xi_rx"));
    m.def(
        "fresnel_threshold",
        [](double wavelength_m, int zone_number) {
            return fresnel_threshold({wavelength_m, zone_number});
        },
        py::arg("wavelength_m"), py::arg("zone_number") = 3);
    m.def("noise_sigma", &noise_sigma, py::arg("model"), py::arg("xi_min"));

    py::class_<Measurement>(m, "Measurement")
        .def(py::init([](int k, double time_s, double z_db, const Vec2& user) {
                 return Measurement{k, time_s, z_db, user};
             }),
             py::arg("k"), py::arg("time_s"), py::arg("z_db"), py::arg("user"))
        .def_readwrite("k", &Measurement::k)
        .def_readwrite("time_s", &Measurement::time_s)
        .def_readwrite("z_db", &Measurement::z_db)
        .def_readwrite("user", &Measurement::user);

    m.def("elliptic_error", &elliptic_error, py::arg("circumference"),
          py::arg("s_hat"), py::arg("s_true"));

    py::class_<MmseResult>(m, "MmseResult")
        .def_readonly("s_hat", &MmseResult::s_hat)
        .def_readonly("multimodal", &MmseResult::multimodal);

    py::class_<EllipticPmf>(m, "EllipticPmf")
        .def(py::init<const DelayEllipse&, double>(), py::arg("ellipse"),
             py::arg("dx"))
        .def("__len__", &EllipticPmf::size)
        .def("size", &EllipticPmf::size)
        .def("spacing", &EllipticPmf::spacing)
        .def("grid_arc", &EllipticPmf::grid_arc, py::arg("i"))
        .def("weights",
             [](const EllipticPmf& p) { return p.weights(); })
        .def("set_weights", &EllipticPmf::set_weights, py::arg("weights"))
        .def("predict", &EllipticPmf::predict, py::arg("eta"))
        .def("update", &EllipticPmf::update, py::arg("measurement"),
             py::arg("fading"), py::arg("noise"))
        .def("mmse", &EllipticPmf::mmse);

    py::class_<CalibrationConfig>(m, "CalibrationConfig")
        .def(py::init<>())
        .def_readwrite("fading", &CalibrationConfig::fading)
        .def_readwrite("noise", &CalibrationConfig::noise)
        .def_readwrite("dx", &CalibrationConfig::dx)
        .def_readwrite("eta", &CalibrationConfig::eta)
        .def_readwrite("gate_distance", &CalibrationConfig::gate_distance);

    py::class_<CalibrationResult>(m, "CalibrationResult")
        .def_readonly("estimates", &CalibrationResult::estimates)
        .def_readonly("gated", &CalibrationResult::gated)
        .def_readonly("multimodal", &CalibrationResult::multimodal)
        .def_readonly("errors", &CalibrationResult::errors)
        .def_readonly("low_information", &CalibrationResult::low_information);

    m.def("run_calibration", &run_calibration, py::arg("ellipse"),
          py::arg("measurements"), py::arg("config"),
          py::arg("truth_arc") = std::nullopt,
          py::arg("record_weights") = false);
}
