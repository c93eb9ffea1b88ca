#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "gatekeeper/error.hpp"
#include "gatekeeper/flows.hpp"
#include "gatekeeper/harness.hpp"
#include "gatekeeper/protocol.hpp"

namespace py = pybind11;
using namespace gatekeeper;

namespace {

py::bytes as_py(const Bytes& b) { return py::bytes(reinterpret_cast<const char*>(b.data()), b.size()); }

Bytes as_bytes(const py::bytes& b) {
  const std::string s = b;
  return Bytes(s.begin(), s.end());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Access-control core: name matching, probe cipher, framing and scenario replay";

  static py::exception<Error> error(m, "GatekeeperError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::set_error(error, e.what());
    }
  });

  m.def("normalize_name", &normalize_name, py::arg("name"));
  m.def("similarity", [](const std::string& a, const std::string& b) { return similarity(a, b); }, py::arg("a"),
        py::arg("b"), "Integer 0..100 name similarity after normalization");
  m.def(
      "band",
      [](int score) { return std::string(to_string(band_for(score, TranscriptionConfig{}))); },
      py::arg("score"), "'notify', 'confirm' or 'retry' under the default thresholds");

  m.def(
      "xor",
      [](const py::bytes& data, const py::bytes& key) {
        return as_py(xor_transform(as_bytes(data), CipherKey(as_bytes(key))));
      },
      py::arg("data"), py::arg("key"));

  m.def(
      "decide_access",
      [](std::optional<std::string> employee_id, double similarity, double threshold) {
        RecognitionConfig config;
        config.accept_threshold = threshold;
        const Decision d = decide_access(MatchResult{std::move(employee_id), similarity}, config);
        return py::make_tuple(d.accepted, d.accepted ? py::cast(d.employee_id) : py::none());
      },
      py::arg("employee_id"), py::arg("similarity"), py::arg("threshold") = 90.0);

  m.def(
      "encode_frame",
      [](const std::string& message_json) {
        return as_py(protocol::encode_frame(protocol::message_from_json(nlohmann::json::parse(message_json))));
      },
      py::arg("message_json"), "Frame a message given as JSON text");
  m.def(
      "decode_frame",
      [](const py::bytes& data) {
        const Bytes bytes = as_bytes(data);
        const auto r = protocol::decode_frame(bytes);
        py::dict out;
        const char* status[] = {"message", "need_more", "invalid", "fatal"};
        out["status"] = status[static_cast<int>(r.status)];
        out["consumed"] = r.consumed;
        out["error"] = r.error;
        out["message"] = r.message ? py::cast(protocol::to_json(*r.message).dump()) : py::none();
        return out;
      },
      py::arg("data"));

  m.def(
      "timing_report",
      [](const std::vector<std::tuple<double, double, double>>& sessions) {
        std::vector<AccessSession> list;
        for (const auto& [capture, auth, pin] : sessions) {
          AccessSession s;
          s = record_phase(std::move(s), "Capture", static_cast<TimeMs>(capture));
          s = record_phase(std::move(s), "CloudAuth", static_cast<TimeMs>(auth));
          s = record_phase(std::move(s), "PinEntry", static_cast<TimeMs>(pin));
          list.push_back(std::move(s));
        }
        const TimingReport r = gatekeeper::timing_report(list);
        py::dict shares;
        for (const auto& p : r.phases) shares[py::str(std::string(to_string(p.phase)))] = p.share_pct;
        return py::make_tuple(r.total_mean_ms, shares);
      },
      py::arg("sessions"), "(capture_ms, auth_ms, pin_ms) per session -> (mean total, shares)");

  m.def("format_mean_tries", &harness::format_mean_tries, py::arg("total_tries"), py::arg("names"));

  m.def(
      "generate_scenario", [](std::uint64_t seed) { return harness::to_json(harness::generate_separation_scenario(seed)).dump(); },
      py::arg("seed") = 1, "The 400-trial separation scenario as JSON text");
  m.def(
      "run_scenario",
      [](const std::string& scenario_json, std::uint64_t seed) {
        const auto scenario = harness::parse_scenario(nlohmann::json::parse(scenario_json));
        harness::Report report;
        {
          py::gil_scoped_release release;
          report = harness::run_scenario(scenario, {seed});
        }
        return harness::render(report, "json");
      },
      py::arg("scenario_json"), py::arg("seed") = 1, "Replay over loopback and return the JSON report");
}
