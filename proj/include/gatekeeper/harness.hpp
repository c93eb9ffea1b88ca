#pragma once

#include <cstdint>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "gatekeeper/flows.hpp"

namespace gatekeeper::harness {

enum class TrialKind { kGenuine, kImpostor, kGuestNative, kGuestNonNative };
std::string_view to_string(TrialKind kind);

struct Utterance {
  std::string audio_tag;
  std::string transcript;
};

struct PhaseScript {
  TimeMs capture_ms = 0;
  TimeMs auth_ms = 0;
  TimeMs pin_ms = 0;
};

struct Trial {
  TrialKind kind = TrialKind::kGenuine;
  // face trials: what the scripted provider answers for this probe
  std::string probe_tag;
  std::optional<std::string> match_id;
  double similarity = 0.0;
  std::optional<PhaseScript> phases;
  // guest trials: the employee the guest asks for, and what they say
  std::string employee_id;
  std::vector<Utterance> utterances;

  // "unlocked" | "denied" for face trials, "notified" | "abandoned" for guests
  std::string expect;
  std::optional<int> expect_tries;
};

struct Scenario {
  double threshold = 90.0;
  std::string delivery_channel = "#deliveries";
  // NDJSON-equivalent employee documents ({id, firstName, lastName, notifyHandle}).
  nlohmann::json directory = nlohmann::json::array();
  std::vector<Trial> trials;
};

// Throws Error(kInvalidArgument) naming the offending trial index.
Scenario parse_scenario(const nlohmann::json& doc);
Scenario load_scenario_file(const std::filesystem::path& path);
nlohmann::json to_json(const Scenario& scenario);

// 200 genuine trials with similarity uniform in [94.25, 100] and 200
// impostor trials uniform in [0, 73.1] over a 40-person directory. The first
// trial of each kind sits exactly on its envelope edge.
Scenario generate_separation_scenario(std::uint64_t seed, int genuine = 200, int impostor = 200);

struct Histogram {
  double bin_width = 2.0;  // bins [0,2), [2,4), ... [98,100]
  std::vector<int> genuine;
  std::vector<int> impostor;
  bool operator==(const Histogram&) const = default;
};

struct Mismatch {
  int trial = 0;
  std::string expected;
  std::string actual;
  bool operator==(const Mismatch&) const = default;
};

struct NameTries {
  std::string employee_id;
  int tries = 0;
  bool notified = false;
  bool operator==(const NameTries&) const = default;
};

struct PhaseShare {
  std::string phase;
  double mean_ms = 0.0;
  double share_pct = 0.0;
  bool operator==(const PhaseShare&) const = default;
};

struct Report {
  double threshold = 90.0;
  int trials = 0;
  std::vector<std::string> outcomes;
  std::vector<Mismatch> mismatches;

  std::vector<double> genuine_scores;
  std::vector<double> impostor_scores;
  Histogram histogram;
  int false_accepts = 0;
  int false_rejects = 0;
  double far = 0.0;
  double frr = 0.0;

  int timed_sessions = 0;
  double total_mean_ms = 0.0;
  std::vector<PhaseShare> phases;

  std::vector<NameTries> names;
  int total_tries = 0;

  bool operator==(const Report&) const = default;
};

// Two decimals, truncated: 37/33 -> "1.12", 50/33 -> "1.51". "0.00" when
// there are no names.
std::string format_mean_tries(int total_tries, int names);

Histogram make_histogram(const std::vector<double>& genuine, const std::vector<double>& impostor);

struct RunOptions {
  std::uint64_t seed = 1;
  // Controller persistence; nothing is written when unset.
  std::optional<std::filesystem::path> state_root;
  std::optional<std::filesystem::path> template_root;
  int reply_timeout_ms = 5000;
};

// Replays every trial through a loopback controller, door-unit client and
// notifier bot. Deterministic for a given scenario and seed.
Report run_scenario(const Scenario& scenario, const RunOptions& options = {});

nlohmann::json to_json(const Report& report);
Report report_from_json(const nlohmann::json& doc);
// "json" or "text"; throws Error(kInvalidArgument) otherwise.
std::string render(const Report& report, std::string_view format);

}  // namespace gatekeeper::harness
