// Command-line entry points for the three services and the replay harness.

#include <CLI11.hpp>
#include <atomic>
#include <csignal>
#include <fstream>
#include <iostream>
#include <thread>

#include "gatekeeper/controller_server.hpp"
#include "gatekeeper/error.hpp"
#include "gatekeeper/harness.hpp"
#include "gatekeeper/kiosk_gateway.hpp"
#include "gatekeeper/log.hpp"

using namespace gatekeeper;
using nlohmann::json;

namespace {

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop = true; }

void wait_for_signal() {
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
}

// An unset secret falls back to the environment, never to a default.
std::string key_hex_or_env(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("GATEKEEPER_KEY_HEX")) return env;
  throw Error(ErrorCode::kInvalidArgument, "a cipher key is required (--key-hex or GATEKEEPER_KEY_HEX)");
}

struct ControllerOptions {
  std::string bind = "127.0.0.1";
  int port = 7700;
  std::string directory;
  std::string face_script;
  std::string speech_script;
  std::string key_hex;
  double threshold = 90.0;
  std::string state_root;
  std::string template_root;
  std::string delivery_channel = "#deliveries";
  std::string config;
};

// Values from --config fill in whatever was not given on the command line.
void apply_config_file(ControllerOptions& o, CLI::App& cmd) {
  if (o.config.empty()) return;
  std::ifstream in(o.config);
  if (!in) throw Error(ErrorCode::kIo, "cannot open config " + o.config);
  const json c = json::parse(in);
  const auto take = [&](const char* flag, const char* key, auto& field) {
    if (cmd.count(flag) == 0 && c.contains(key)) field = c[key].get<std::decay_t<decltype(field)>>();
  };
  take("--bind", "bind", o.bind);
  take("--port", "port", o.port);
  take("--directory", "directory", o.directory);
  take("--face-script", "face_script", o.face_script);
  take("--speech-script", "speech_script", o.speech_script);
  take("--key-hex", "cipher_key_hex", o.key_hex);
  take("--threshold", "threshold", o.threshold);
  take("--state-root", "state_root", o.state_root);
  take("--template-root", "template_root", o.template_root);
  take("--delivery-channel", "delivery_channel", o.delivery_channel);
}

int run_controller(ControllerOptions o, CLI::App& cmd) {
  apply_config_file(o, cmd);
  if (o.directory.empty()) throw Error(ErrorCode::kInvalidArgument, "--directory is required");
  const Directory directory = load_directory_file(o.directory);
  const ScriptedFaceProvider face(o.face_script.empty() ? std::vector<FaceScriptEntry>{} : load_face_script(o.face_script));
  const ScriptedSpeechProvider speech(o.speech_script.empty() ? std::vector<SpeechScriptEntry>{}
                                                              : load_speech_script(o.speech_script));
  SteadyClock clock;
  SimulatedLock lock;
  NotifierRegistry registry;
  std::optional<TemplateStore> templates;
  if (!o.template_root.empty()) templates.emplace(directory, DirectoryConfig{}, o.template_root);

  FlowConfig config;
  config.recognition.accept_threshold = o.threshold;
  config.delivery_channel = o.delivery_channel;
  config.validate();
  std::optional<std::filesystem::path> state_root;
  if (!o.state_root.empty()) state_root = o.state_root;
  FlowDeps deps{directory, face, speech, registry, lock, clock, CipherKey::from_hex(key_hex_or_env(o.key_hex)),
                templates ? &*templates : nullptr, state_root, nullptr};
  AccessController flows(deps, config, std::random_device{}());

  ControllerServer server(flows, registry, ServerConfig{{o.bind, static_cast<std::uint16_t>(o.port)}, {}});
  server.start();
  std::cout << "controller listening on " << o.bind << ":" << server.port() << std::endl;
  wait_for_signal();
  server.stop();
  return 0;
}

struct DoorOptions {
  std::string controller_addr = "127.0.0.1:7700";
  int http_port = 8080;
  std::string http_host = "127.0.0.1";
  std::string camera_dir;
  std::string audio_dir;
  std::string key_hex;
  std::string ui_dir;
};

int run_doorunit(const DoorOptions& o) {
  door::FileBackedDevice camera = door::FileBackedDevice::from_directory(door::DeviceKind::kCamera, o.camera_dir);
  door::FileBackedDevice microphone =
      door::FileBackedDevice::from_directory(door::DeviceKind::kMicrophone, o.audio_dir);
  door::DoorUnit unit(camera, microphone, CipherKey::from_hex(key_hex_or_env(o.key_hex)));
  door::KioskGateway gateway(unit, {o.http_host, static_cast<std::uint16_t>(o.http_port), o.ui_dir});
  gateway.start();
  door::ControllerLink link(unit, {net::parse_endpoint(o.controller_addr), {}});
  link.start();
  std::cout << "kiosk on http://" << o.http_host << ":" << gateway.port() << "/" << std::endl;
  wait_for_signal();
  link.stop();
  gateway.stop();
  return 0;
}

int run_notifier(const std::string& controller_addr, const std::string& webhook_url) {
  std::unique_ptr<NotificationSink> sink;
  RecordingSink* recording = nullptr;
  if (webhook_url.empty()) {
    auto r = std::make_unique<RecordingSink>();
    recording = r.get();
    sink = std::move(r);
  } else {
    sink = std::make_unique<WebhookSink>(webhook_url);
  }
  NotifierBot bot(net::parse_endpoint(controller_addr), *sink);
  std::cout << "notifier connected to " << controller_addr << std::endl;
  wait_for_signal();
  bot.close();
  if (recording) recording->dump_jsonl(std::cout);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-node office access control: controller, door unit, notifier and replay harness"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Log at info level");

  ControllerOptions copt;
  auto* controller = app.add_subcommand("controller", "Indoor controller node");
  auto* controller_run = controller->add_subcommand("run", "Serve the door unit and the notifier");
  controller->require_subcommand(1);
  controller_run->add_option("--bind", copt.bind, "Bind address (IPv4)");
  controller_run->add_option("--port", copt.port, "TCP port")->check(CLI::Range(0, 65535));
  controller_run->add_option("--directory", copt.directory, "Employee directory (NDJSON)");
  controller_run->add_option("--face-script", copt.face_script, "Scripted face-search answers (JSON)");
  controller_run->add_option("--speech-script", copt.speech_script, "Scripted transcripts (JSON)");
  controller_run->add_option("--key-hex", copt.key_hex, "Shared probe cipher key, hex");
  controller_run->add_option("--threshold", copt.threshold, "Face accept threshold")->check(CLI::Range(0.0, 100.0));
  controller_run->add_option("--state-root", copt.state_root, "Directory for session summaries");
  controller_run->add_option("--template-root", copt.template_root, "Directory for stored face templates");
  controller_run->add_option("--delivery-channel", copt.delivery_channel, "Channel for delivery notices");
  controller_run->add_option("--config", copt.config, "JSON service config");

  DoorOptions dopt;
  auto* doorunit = app.add_subcommand("doorunit", "Outdoor door unit with the kiosk gateway");
  auto* doorunit_run = doorunit->add_subcommand("run", "Connect to the controller and serve the kiosk");
  doorunit->require_subcommand(1);
  doorunit_run->add_option("--controller-addr", dopt.controller_addr, "host:port of the controller");
  doorunit_run->add_option("--http-port", dopt.http_port, "Kiosk HTTP port")->check(CLI::Range(0, 65535));
  doorunit_run->add_option("--http-host", dopt.http_host, "Kiosk bind address");
  doorunit_run->add_option("--camera-dir", dopt.camera_dir, "Directory of images the camera replays");
  doorunit_run->add_option("--audio-dir", dopt.audio_dir, "Directory of recordings the microphone replays");
  doorunit_run->add_option("--key-hex", dopt.key_hex, "Shared probe cipher key, hex");
  doorunit_run->add_option("--ui-dir", dopt.ui_dir, "Static kiosk assets");

  std::string notifier_addr = "127.0.0.1:7700";
  std::string webhook_url;
  auto* notifier = app.add_subcommand("notifier", "Notification relay client");
  auto* notifier_run = notifier->add_subcommand("run", "Relay NOTIFY frames to a webhook or stdout");
  notifier->require_subcommand(1);
  notifier_run->add_option("--controller-addr", notifier_addr, "host:port of the controller");
  notifier_run->add_option("--webhook-url", webhook_url, "Incoming-webhook URL; without it notices are printed");

  std::string scenario_file;
  std::uint64_t seed = 1;
  std::string format = "text";
  auto* scenario = app.add_subcommand("scenario", "Offline replay harness");
  scenario->require_subcommand(1);
  auto* scenario_run = scenario->add_subcommand("run", "Replay a scenario file and print its report");
  scenario_run->add_option("file", scenario_file, "Scenario JSON")->required();
  scenario_run->add_option("--seed", seed, "Replay seed");
  scenario_run->add_option("--format", format, "Report format")->check(CLI::IsMember({"json", "text"}));
  auto* scenario_generate = scenario->add_subcommand("generate", "Write the 400-trial separation scenario");
  scenario_generate->add_option("--seed", seed, "Generator seed");

  std::string directory_file;
  auto* directory = app.add_subcommand("directory", "Employee directory tools");
  directory->require_subcommand(1);
  auto* directory_load = directory->add_subcommand("load", "Validate a directory file and list its records");
  directory_load->add_option("file", directory_file, "Directory NDJSON")->required();

  CLI11_PARSE(app, argc, argv);
  if (verbose) logger()->set_level(spdlog::level::info);

  try {
    if (*controller_run) return run_controller(copt, *controller_run);
    if (*doorunit_run) return run_doorunit(dopt);
    if (*notifier_run) return run_notifier(notifier_addr, webhook_url);
    if (*scenario_run) {
      const harness::Report report = harness::run_scenario(harness::load_scenario_file(scenario_file), {seed});
      std::cout << harness::render(report, format);
      return report.mismatches.empty() ? 0 : 1;
    }
    if (*scenario_generate) {
      std::cout << harness::to_json(harness::generate_separation_scenario(seed)).dump(2) << "\n";
      return 0;
    }
    if (*directory_load) {
      const Directory d = load_directory_file(directory_file);
      for (const auto& r : d) {
        std::cout << r.id << "\t" << r.full_name << "\t" << r.notify_handle << "\t" << r.template_ids.size()
                  << " templates\n";
      }
      std::cout << d.size() << " records\n";
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.code()) << "): " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
