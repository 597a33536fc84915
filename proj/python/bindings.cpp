#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "hyb/center.hpp"
#include "hyb/cli.hpp"
#include "hyb/group.hpp"
#include "hyb/lattice.hpp"
#include "hyb/protocols.hpp"

namespace py = pybind11;

namespace {

// Keys mirror RunConfig::to_json; unknown keys are a usage error rather than silently ignored.
hyb::RunConfig config_from_json(const nlohmann::json& j) {
    hyb::RunConfig c;
    for (const auto& [key, v] : j.items()) {
        if (key == "subcommand") c.subcommand = v.get<std::string>();
        else if (key == "protocol") c.protocol = v.get<std::string>();
        else if (key == "n") c.n = v.get<int>();
        else if (key == "seed") c.seed = v.get<std::uint64_t>();
        else if (key == "exhaustive") c.exhaustive = v.get<bool>();
        else if (key == "forced") c.forced = v.get<std::string>();
        else if (key == "input") c.input = v.get<std::string>();
        else if (key == "variant") c.variant = v.get<std::string>();
        else if (key == "theta") c.theta = v.get<std::string>();
        else if (key == "coeffs") c.coeffs = v.get<std::string>();
        else if (key == "fixtures") c.fixtures = v.get<std::vector<std::string>>();
        else if (key == "fragments") c.fragments = v.get<std::vector<std::string>>();
        else if (key == "rows") c.rows = v.get<int>();
        else if (key == "cap_amplitudes") c.cap = v.get<std::uint64_t>();
        else if (key == "group") c.group = v.get<std::string>();
        else if (key == "probe") c.probe = v.get<std::string>();
        else if (key == "csv") c.csv = v.get<std::string>();
        else if (key == "fixture") c.fixture = v.get<std::string>();
        else if (key == "jobs") c.jobs = v.get<int>();
        else if (key == "dump_state") c.dump_state = v.get<std::string>();
        else throw hyb::UsageError("unknown config key '" + key + "'");
    }
    return c;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Native core of hybsurg";
    m.attr("__version__") = hyb::kToolVersion;
    m.attr("REPORT_SCHEMA_VERSION") = hyb::kReportSchemaVersion;

    py::register_exception<hyb::UsageError>(m, "UsageError", PyExc_ValueError);

    m.def("run_report", [](const std::string& config) {
        auto cfg = config_from_json(nlohmann::json::parse(config));
        nlohmann::json rep;
        {
            py::gil_scoped_release release;
            hyb::set_lattice_threads(cfg.jobs);
            rep = hyb::run_report(cfg);
        }
        return rep.dump();
    }, py::arg("config"), "Run one subcommand from a JSON config; returns the JSON report.");
    m.def("exit_code", [](const std::string& report) { return hyb::exit_code(nlohmann::json::parse(report)); },
          py::arg("report"));
    m.def("protocol_names", &hyb::protocol_names);
    m.def("default_fixture_dir", &hyb::default_fixture_dir);

    m.def("group_labels", [](const std::string& g) { return hyb::parse_group(g)->labels(); }, py::arg("group"));
    m.def("multiplication_table", [](const std::string& g) {
        auto G = hyb::parse_group(g);
        std::vector<std::vector<int>> t(G->order(), std::vector<int>(G->order()));
        for (int a = 0; a < G->order(); ++a)
            for (int b = 0; b < G->order(); ++b) t[a][b] = G->mul(a, b);
        return t;
    }, py::arg("group"));
    m.def("center", [](const std::string& g) { return hyb::center_to_json(*hyb::make_center(hyb::parse_group(g))).dump(); },
          py::arg("group"), "Anyon data of D(G) as a JSON string.");
    m.def("s_matrix", [](const std::string& g) { return hyb::s_matrix(hyb::parse_group(g)); }, py::arg("group"));
    m.def("clifford_level", [](const hyb::CMatrix& U, int max_level) { return hyb::clifford_level(U, max_level); },
          py::arg("unitary"), py::arg("max_level") = 8);
}
