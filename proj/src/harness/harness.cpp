#include "gatekeeper/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "gatekeeper/controller_server.hpp"
#include "gatekeeper/error.hpp"
#include "gatekeeper/log.hpp"

namespace gatekeeper::harness {

using nlohmann::json;
using protocol::make_message;
using protocol::Message;
using protocol::MessageType;
using protocol::Role;

std::string_view to_string(TrialKind kind) {
  switch (kind) {
    case TrialKind::kGenuine: return "genuine";
    case TrialKind::kImpostor: return "impostor";
    case TrialKind::kGuestNative: return "guestNative";
    case TrialKind::kGuestNonNative: return "guestNonNative";
  }
  return "?";
}

namespace {

bool is_face(TrialKind k) { return k == TrialKind::kGenuine || k == TrialKind::kImpostor; }

TrialKind parse_kind(const std::string& s) {
  for (auto k : {TrialKind::kGenuine, TrialKind::kImpostor, TrialKind::kGuestNative, TrialKind::kGuestNonNative}) {
    if (s == to_string(k)) return k;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown trial kind '" + s + "'");
}

Trial parse_trial(const json& t) {
  if (!t.is_object()) throw Error(ErrorCode::kInvalidArgument, "trial must be an object");
  Trial trial;
  trial.kind = parse_kind(t.at("kind").get<std::string>());
  if (is_face(trial.kind)) {
    trial.probe_tag = t.at("probeTag").get<std::string>();
    if (trial.probe_tag.empty() || trial.probe_tag.size() > kTagLength) {
      throw Error(ErrorCode::kInvalidArgument, "probeTag must be 1 to 8 bytes");
    }
    if (auto m = t.find("employeeId"); m != t.end() && !m->is_null()) trial.match_id = m->get<std::string>();
    trial.similarity = t.at("similarity").get<double>();
    if (!(trial.similarity >= 0.0 && trial.similarity <= 100.0)) {
      throw Error(ErrorCode::kInvalidArgument, "similarity must be within [0, 100]");
    }
    if (auto p = t.find("phases"); p != t.end()) {
      PhaseScript ph{p->value("captureMs", TimeMs{0}), p->value("authMs", TimeMs{0}), p->value("pinMs", TimeMs{0})};
      if (ph.capture_ms < 0 || ph.auth_ms < 0 || ph.pin_ms < 0) {
        throw Error(ErrorCode::kInvalidArgument, "phase durations must be non-negative");
      }
      trial.phases = ph;
    }
    trial.expect = t.value("expect", trial.kind == TrialKind::kGenuine ? "unlocked" : "denied");
    if (trial.expect != "unlocked" && trial.expect != "denied") {
      throw Error(ErrorCode::kInvalidArgument, "face trials expect 'unlocked' or 'denied'");
    }
  } else {
    trial.employee_id = t.at("employeeId").get<std::string>();
    for (const auto& u : t.at("utterances")) {
      Utterance utt{u.at("audioTag").get<std::string>(), u.at("transcript").get<std::string>()};
      if (utt.audio_tag.empty() || utt.audio_tag.size() > kTagLength) {
        throw Error(ErrorCode::kInvalidArgument, "audioTag must be 1 to 8 bytes");
      }
      trial.utterances.push_back(std::move(utt));
    }
    if (trial.utterances.empty()) throw Error(ErrorCode::kInvalidArgument, "guest trial needs utterances");
    trial.expect = t.value("expect", "notified");
    if (trial.expect != "notified" && trial.expect != "abandoned") {
      throw Error(ErrorCode::kInvalidArgument, "guest trials expect 'notified' or 'abandoned'");
    }
    if (auto n = t.find("expectTries"); n != t.end()) trial.expect_tries = n->get<int>();
  }
  return trial;
}

Directory build_directory(const json& docs) {
  std::stringstream ndjson;
  for (const auto& d : docs) ndjson << d.dump() << '\n';
  return load_directory(ndjson);
}

}  // namespace

Scenario parse_scenario(const json& doc) {
  if (!doc.is_object()) throw Error(ErrorCode::kInvalidArgument, "scenario must be a JSON object");
  Scenario s;
  try {
    s.threshold = doc.value("threshold", 90.0);
    s.delivery_channel = doc.value("deliveryChannel", std::string("#deliveries"));
    if (auto d = doc.find("directory"); d != doc.end()) s.directory = *d;
    if (!s.directory.is_array()) throw Error(ErrorCode::kInvalidArgument, "'directory' must be an array");
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, std::string("scenario: ") + e.what());
  }
  const Directory directory = build_directory(s.directory);

  const json trials = doc.value("trials", json::array());
  std::set<std::string> probe_tags, audio_tags;
  for (std::size_t i = 0; i < trials.size(); ++i) {
    try {
      Trial t = parse_trial(trials[i]);
      if (t.match_id && !directory.find(*t.match_id)) {
        throw Error(ErrorCode::kInvalidArgument, "employeeId '" + *t.match_id + "' is not in the directory");
      }
      if (!is_face(t.kind) && !directory.find(t.employee_id)) {
        throw Error(ErrorCode::kInvalidArgument, "employeeId '" + t.employee_id + "' is not in the directory");
      }
      if (is_face(t.kind) && !probe_tags.insert(t.probe_tag).second) {
        throw Error(ErrorCode::kInvalidArgument, "duplicate probeTag '" + t.probe_tag + "'");
      }
      for (const auto& u : t.utterances) {
        if (!audio_tags.insert(u.audio_tag).second) {
          throw Error(ErrorCode::kInvalidArgument, "duplicate audioTag '" + u.audio_tag + "'");
        }
      }
      s.trials.push_back(std::move(t));
    } catch (const Error& e) {
      throw Error(ErrorCode::kInvalidArgument, "trial " + std::to_string(i) + ": " + e.what());
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kInvalidArgument, "trial " + std::to_string(i) + ": " + e.what());
    }
  }
  return s;
}

Scenario load_scenario_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open scenario " + path.string());
  const json doc = json::parse(in, nullptr, false);
  if (doc.is_discarded()) throw Error(ErrorCode::kInvalidArgument, path.string() + " is not valid JSON");
  return parse_scenario(doc);
}

json to_json(const Scenario& s) {
  json trials = json::array();
  for (const auto& t : s.trials) {
    json j{{"kind", to_string(t.kind)}, {"expect", t.expect}};
    if (is_face(t.kind)) {
      j["probeTag"] = t.probe_tag;
      j["employeeId"] = t.match_id ? json(*t.match_id) : json(nullptr);
      j["similarity"] = t.similarity;
      if (t.phases) {
        j["phases"] = {{"captureMs", t.phases->capture_ms}, {"authMs", t.phases->auth_ms}, {"pinMs", t.phases->pin_ms}};
      }
    } else {
      j["employeeId"] = t.employee_id;
      json utts = json::array();
      for (const auto& u : t.utterances) utts.push_back({{"audioTag", u.audio_tag}, {"transcript", u.transcript}});
      j["utterances"] = utts;
      if (t.expect_tries) j["expectTries"] = *t.expect_tries;
    }
    trials.push_back(std::move(j));
  }
  return {{"threshold", s.threshold},
          {"deliveryChannel", s.delivery_channel},
          {"directory", s.directory},
          {"trials", trials}};
}

// ---------------------------------------------------------------------------

namespace {

constexpr const char* kFirstNames[] = {"Anna", "Erik", "Maria", "Lars", "Karin", "Johan", "Sara", "Nils",
                                       "Elin", "Olof", "Ida",   "Per",  "Lena",  "Gustav"};
constexpr const char* kLastNames[] = {"Lindqvist", "Berg", "Holm", "Sandberg", "Nyström", "Ekman", "Falk"};

// Uniform on [lo, hi] with 2-decimal resolution, independent of the
// standard library's distribution implementation.
double draw(std::mt19937_64& rng, double lo, double hi) {
  const auto steps = static_cast<std::uint64_t>(std::llround((hi - lo) * 100.0));
  return std::round((lo + static_cast<double>(rng() % (steps + 1)) / 100.0) * 100.0) / 100.0;
}

}  // namespace

Scenario generate_separation_scenario(std::uint64_t seed, int genuine, int impostor) {
  std::mt19937_64 rng(seed);
  Scenario s;
  constexpr int kPeople = 40;
  for (int i = 0; i < kPeople; ++i) {
    char id[8];
    std::snprintf(id, sizeof id, "e%02d", i + 1);
    s.directory.push_back({{"id", id},
                           {"firstName", kFirstNames[i % std::size(kFirstNames)]},
                           {"lastName", kLastNames[(i / std::size(kFirstNames) + i) % std::size(kLastNames)]},
                           {"notifyHandle", std::string("@") + id}});
  }
  const auto person = [&] {
    char id[8];
    std::snprintf(id, sizeof id, "e%02d", static_cast<int>(rng() % kPeople) + 1);
    return std::string(id);
  };
  for (int i = 0; i < genuine; ++i) {
    Trial t;
    t.kind = TrialKind::kGenuine;
    char tag[16];
    std::snprintf(tag, sizeof tag, "G%07d", i);
    t.probe_tag = tag;
    t.match_id = person();
    t.similarity = i == 0 ? 94.25 : draw(rng, 94.25, 100.0);
    t.expect = "unlocked";
    s.trials.push_back(std::move(t));
  }
  for (int i = 0; i < impostor; ++i) {
    Trial t;
    t.kind = TrialKind::kImpostor;
    char tag[16];
    std::snprintf(tag, sizeof tag, "I%07d", i);
    t.probe_tag = tag;
    t.match_id = person();
    t.similarity = i == 0 ? 73.1 : draw(rng, 0.0, 73.1);
    t.expect = "denied";
    s.trials.push_back(std::move(t));
  }
  return s;
}

Histogram make_histogram(const std::vector<double>& genuine, const std::vector<double>& impostor) {
  Histogram h;
  const std::size_t bins = static_cast<std::size_t>(100.0 / h.bin_width);
  const auto fill = [&](const std::vector<double>& scores) {
    std::vector<int> counts(bins, 0);
    for (double v : scores) {
      const auto i = static_cast<std::size_t>(std::clamp(v, 0.0, 100.0) / h.bin_width);
      ++counts[std::min(i, bins - 1)];
    }
    return counts;
  };
  h.genuine = fill(genuine);
  h.impostor = fill(impostor);
  return h;
}

std::string format_mean_tries(int total_tries, int names) {
  if (names <= 0) return "0.00";
  const long long hundredths = 100LL * total_tries / names;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%lld.%02lld", hundredths / 100, hundredths % 100);
  return buf;
}

// ---------------------------------------------------------------------------

namespace {

// Scripted face search that also lets simulated time pass while the
// "cloud" is thinking.
class TimedFaceProvider final : public FaceProvider {
 public:
  TimedFaceProvider(const std::vector<FaceScriptEntry>& script, std::map<std::string, TimeMs> delays,
                    ManualClock& clock)
      : inner_(script), delays_(std::move(delays)), clock_(clock) {}

  MatchResult search(ByteView probe, const Directory& collection) const override {
    if (auto it = delays_.find(media_tag(probe)); it != delays_.end()) clock_.advance(it->second);
    return inner_.search(probe, collection);
  }

 private:
  ScriptedFaceProvider inner_;
  std::map<std::string, TimeMs> delays_;
  ManualClock& clock_;
};

Bytes media_with_tag(const std::string& tag, std::mt19937_64& rng) {
  Bytes out = to_bytes(tag);
  if (tag.size() == kTagLength) {
    // The provider only reads the tag; the rest stands in for pixels.
    const std::size_t padding = 64 + rng() % 192;
    for (std::size_t i = 0; i < padding; ++i) out.push_back(static_cast<std::uint8_t>(rng()));
  }
  return out;
}

class Replay {
 public:
  Replay(net::Client& door, ControllerServer& server, AccessController& flows, RecordingSink& sink,
         ManualClock& clock, const CipherKey& key, int timeout_ms)
      : door_(door), flows_(flows), sink_(sink), clock_(clock), key_(key), timeout_ms_(timeout_ms) {
    (void)server;
  }

  Message expect(std::initializer_list<MessageType> types) {
    for (;;) {
      auto m = door_.next(timeout_ms_);
      if (!m) throw Error(ErrorCode::kIo, "controller did not answer");
      if (m->type == MessageType::kError) {
        throw Error(ErrorCode::kProtocol, "controller error: " + m->payload.value("message", ""));
      }
      if (std::find(types.begin(), types.end(), m->type) != types.end()) return *m;
      throw Error(ErrorCode::kProtocol, std::string("unexpected ") + std::string(protocol::to_string(m->type)));
    }
  }

  std::string start(const std::string& kind) {
    door_.send(make_message(MessageType::kSessionStart, Role::kDoorUnit, std::nullopt, {{"kind", kind}}));
    return *expect({MessageType::kSessionStart}).session;
  }

  struct FaceResult {
    std::string outcome;
    bool accepted = false;
    std::string session;
  };

  FaceResult face(const Trial& t, const Bytes& probe, const Directory& directory) {
    FaceResult r;
    r.session = start("employee");
    const PhaseScript ph = t.phases.value_or(PhaseScript{});
    clock_.advance(ph.capture_ms);
    Bytes encrypted = xor_transform(probe, key_);
    door_.send(make_message(MessageType::kCaptureUpload, Role::kDoorUnit, r.session,
                            {{"image", base64_encode(encrypted)}}));
    const Message reply = expect({MessageType::kCodeChallenge, MessageType::kAuthResult});
    if (reply.type == MessageType::kAuthResult) {
      r.outcome = "denied";
      return r;
    }
    r.accepted = true;
    clock_.advance(ph.pin_ms);
    const auto record = flows_.session(r.session);
    const EmployeeRecord* employee = record && record->employee_id ? directory.find(*record->employee_id) : nullptr;
    std::string code = "0000";
    if (employee) {
      const auto receipts = sink_.receipts();
      for (auto it = receipts.rbegin(); it != receipts.rend(); ++it) {
        if (it->notification.target_kind == TargetKind::kDirect && it->notification.target == employee->notify_handle) {
          const std::string& text = it->notification.text;
          code = text.substr(text.size() - 4);
          break;
        }
      }
    }
    door_.send(make_message(MessageType::kCodeSubmit, Role::kDoorUnit, r.session, {{"code", code}}));
    const Message result = expect({MessageType::kCodeResult});
    if (result.payload["ok"].get<bool>()) {
      expect({MessageType::kUnlockEvent});
      r.outcome = "unlocked";
    } else {
      // a wrong code would need a retry; treat it as a failed trial
      expect({MessageType::kCodeChallenge});
      door_.send(make_message(MessageType::kError, Role::kDoorUnit, r.session, {{"message", "replay abandoned"}}));
      r.outcome = "codeRejected";
    }
    return r;
  }

  struct GuestResult {
    std::string outcome;
    int tries = 0;
  };

  GuestResult guest(const Trial& t, const Directory& directory, std::mt19937_64& rng) {
    GuestResult g;
    const std::string session = start("guest");
    const std::string wanted = directory.find(t.employee_id)->full_name;
    for (const auto& u : t.utterances) {
      ++g.tries;
      Bytes audio = media_with_tag(u.audio_tag, rng);
      door_.send(make_message(MessageType::kGuestAudio, Role::kDoorUnit, session, {{"audio", base64_encode(audio)}}));
      Message reply = expect({MessageType::kGuestResult, MessageType::kGuestMatch});
      if (reply.type == MessageType::kGuestMatch && reply.payload["band"] == "confirm") {
        const bool yes = reply.payload.value("candidateName", "") == wanted;
        door_.send(make_message(MessageType::kGuestConfirm, Role::kDoorUnit, session, {{"answer", yes ? "yes" : "no"}}));
        reply = expect({MessageType::kGuestResult});
      }
      if (reply.type == MessageType::kGuestResult && reply.payload["notified"].get<bool>()) {
        g.outcome = "notified";
        return g;
      }
    }
    door_.send(make_message(MessageType::kError, Role::kDoorUnit, session, {{"message", "guest gave up"}}));
    g.outcome = "abandoned";
    return g;
  }

 private:
  net::Client& door_;
  AccessController& flows_;
  RecordingSink& sink_;
  ManualClock& clock_;
  const CipherKey& key_;
  int timeout_ms_;
};

CipherKey replay_key(std::mt19937_64& rng) {
  Bytes key(32);
  for (auto& b : key) b = static_cast<std::uint8_t>(rng());
  key[0] |= 1;  // never all zero
  return CipherKey(std::move(key));
}

template <typename Pred>
void wait_until(Pred pred, int timeout_ms) {
  for (int waited = 0; !pred(); waited += 5) {
    if (waited >= timeout_ms) throw Error(ErrorCode::kIo, "loopback stack did not come up");
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
}

}  // namespace

Report run_scenario(const Scenario& scenario, const RunOptions& options) {
  std::mt19937_64 rng(options.seed);
  const Directory directory = build_directory(scenario.directory);

  std::vector<FaceScriptEntry> face_script;
  std::map<std::string, TimeMs> auth_delays;
  std::vector<SpeechScriptEntry> speech_script;
  for (const auto& t : scenario.trials) {
    if (is_face(t.kind)) {
      face_script.push_back({t.probe_tag, t.match_id, t.similarity});
      if (t.phases) auth_delays[t.probe_tag] = t.phases->auth_ms;
    }
    for (const auto& u : t.utterances) speech_script.push_back({u.audio_tag, u.transcript});
  }

  ManualClock clock(1'000'000);
  TimedFaceProvider face(face_script, auth_delays, clock);
  ScriptedSpeechProvider speech(speech_script);
  SimulatedLock lock;
  NotifierRegistry registry;
  std::optional<TemplateStore> templates;
  if (options.template_root) templates.emplace(directory, DirectoryConfig{}, options.template_root);
  const CipherKey key = replay_key(rng);

  FlowConfig config;
  config.recognition.accept_threshold = scenario.threshold;
  config.delivery_channel = scenario.delivery_channel;
  FlowDeps deps{directory, face, speech, registry, lock, clock, key, templates ? &*templates : nullptr,
                options.state_root, nullptr};
  AccessController flows(deps, config, rng());

  ControllerServer server(flows, registry, ServerConfig{});
  server.start();
  const net::Endpoint endpoint{"127.0.0.1", server.port()};
  RecordingSink sink;
  NotifierBot bot(endpoint, sink);
  wait_until([&] { return server.notifier_connected(); }, 5000);
  net::Client door(endpoint, Role::kDoorUnit);

  Replay replay(door, server, flows, sink, clock, key, options.reply_timeout_ms);
  Report report;
  report.threshold = scenario.threshold;
  report.trials = static_cast<int>(scenario.trials.size());
  std::set<std::string> timed;
  int genuine_total = 0;
  int impostor_total = 0;

  for (std::size_t i = 0; i < scenario.trials.size(); ++i) {
    const Trial& t = scenario.trials[i];
    std::string outcome;
    try {
      if (is_face(t.kind)) {
        const Bytes probe = media_with_tag(t.probe_tag, rng);
        const auto r = replay.face(t, probe, directory);
        outcome = r.outcome;
        const auto record = flows.session(r.session);
        const double score = record && record->similarity ? *record->similarity : 0.0;
        if (t.kind == TrialKind::kGenuine) {
          ++genuine_total;
          report.genuine_scores.push_back(score);
          if (!r.accepted) ++report.false_rejects;
        } else {
          ++impostor_total;
          report.impostor_scores.push_back(score);
          if (r.accepted) ++report.false_accepts;
        }
        if (t.phases) timed.insert(r.session);
      } else {
        const auto g = replay.guest(t, directory, rng);
        outcome = g.outcome;
        report.names.push_back({t.employee_id, g.tries, g.outcome == "notified"});
        report.total_tries += g.tries;
        if (t.expect_tries && *t.expect_tries != g.tries && outcome == t.expect) {
          report.mismatches.push_back({static_cast<int>(i), "tries=" + std::to_string(*t.expect_tries),
                                       "tries=" + std::to_string(g.tries)});
        }
      }
    } catch (const Error& e) {
      outcome = std::string("error: ") + e.what();
      logger()->warn("trial {}: {}", i, e.what());
    }
    report.outcomes.push_back(outcome);
    if (outcome != t.expect) report.mismatches.push_back({static_cast<int>(i), t.expect, outcome});
    // let any unlock window close before the next visitor
    clock.advance(config.unlock_window_ms + 1);
  }

  report.far = impostor_total ? static_cast<double>(report.false_accepts) / impostor_total : 0.0;
  report.frr = genuine_total ? static_cast<double>(report.false_rejects) / genuine_total : 0.0;
  report.histogram = make_histogram(report.genuine_scores, report.impostor_scores);

  std::vector<AccessSession> timed_sessions;
  for (const auto& s : flows.history()) {
    if (timed.count(s.session_id)) timed_sessions.push_back(s);
  }
  const TimingReport timing = timing_report(timed_sessions);
  report.timed_sessions = static_cast<int>(timing.session_count);
  report.total_mean_ms = timing.total_mean_ms;
  if (!timing.degenerate) {
    for (const auto& p : timing.phases) {
      report.phases.push_back({std::string(to_string(p.phase)), p.mean_ms, p.share_pct});
    }
  }

  door.close();
  bot.close();
  server.stop();
  return report;
}

// ---------------------------------------------------------------------------

json to_json(const Report& r) {
  json mismatches = json::array();
  for (const auto& m : r.mismatches) {
    mismatches.push_back({{"trial", m.trial}, {"expected", m.expected}, {"actual", m.actual}});
  }
  json phases = json::array();
  for (const auto& p : r.phases) {
    phases.push_back({{"phase", p.phase}, {"meanMs", p.mean_ms}, {"sharePct", p.share_pct}});
  }
  json names = json::array();
  for (const auto& n : r.names) {
    names.push_back({{"employeeId", n.employee_id}, {"tries", n.tries}, {"notified", n.notified}});
  }
  return {
      {"threshold", r.threshold},
      {"trials", r.trials},
      {"outcomes", r.outcomes},
      {"mismatches", mismatches},
      {"face",
       {{"genuineScores", r.genuine_scores},
        {"impostorScores", r.impostor_scores},
        {"histogram",
         {{"binWidth", r.histogram.bin_width}, {"genuine", r.histogram.genuine}, {"impostor", r.histogram.impostor}}},
        {"falseAccepts", r.false_accepts},
        {"falseRejects", r.false_rejects},
        {"far", r.far},
        {"frr", r.frr}}},
      {"timing", {{"sessions", r.timed_sessions}, {"totalMeanMs", r.total_mean_ms}, {"phases", phases}}},
      {"guests",
       {{"names", names},
        {"totalTries", r.total_tries},
        {"meanTries", format_mean_tries(r.total_tries, static_cast<int>(r.names.size()))}}},
  };
}

Report report_from_json(const json& doc) {
  try {
    Report r;
    r.threshold = doc.at("threshold").get<double>();
    r.trials = doc.at("trials").get<int>();
    r.outcomes = doc.at("outcomes").get<std::vector<std::string>>();
    for (const auto& m : doc.at("mismatches")) {
      r.mismatches.push_back({m.at("trial").get<int>(), m.at("expected").get<std::string>(),
                              m.at("actual").get<std::string>()});
    }
    const json& f = doc.at("face");
    r.genuine_scores = f.at("genuineScores").get<std::vector<double>>();
    r.impostor_scores = f.at("impostorScores").get<std::vector<double>>();
    const json& h = f.at("histogram");
    r.histogram.bin_width = h.at("binWidth").get<double>();
    r.histogram.genuine = h.at("genuine").get<std::vector<int>>();
    r.histogram.impostor = h.at("impostor").get<std::vector<int>>();
    r.false_accepts = f.at("falseAccepts").get<int>();
    r.false_rejects = f.at("falseRejects").get<int>();
    r.far = f.at("far").get<double>();
    r.frr = f.at("frr").get<double>();
    const json& t = doc.at("timing");
    r.timed_sessions = t.at("sessions").get<int>();
    r.total_mean_ms = t.at("totalMeanMs").get<double>();
    for (const auto& p : t.at("phases")) {
      r.phases.push_back({p.at("phase").get<std::string>(), p.at("meanMs").get<double>(),
                          p.at("sharePct").get<double>()});
    }
    const json& g = doc.at("guests");
    for (const auto& n : g.at("names")) {
      r.names.push_back({n.at("employeeId").get<std::string>(), n.at("tries").get<int>(), n.at("notified").get<bool>()});
    }
    r.total_tries = g.at("totalTries").get<int>();
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, std::string("malformed report: ") + e.what());
  }
}

namespace {

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

std::string score_range(const std::vector<double>& scores) {
  if (scores.empty()) return "none";
  const auto [lo, hi] = std::minmax_element(scores.begin(), scores.end());
  return "min " + fixed(*lo, 2) + "  max " + fixed(*hi, 2);
}

}  // namespace

std::string render(const Report& r, std::string_view format) {
  if (format == "json") return to_json(r).dump(2) + "\n";
  if (format != "text") throw Error(ErrorCode::kInvalidArgument, "unknown report format '" + std::string(format) + "'");

  std::ostringstream out;
  out << "trials: " << r.trials << "  threshold: " << fixed(r.threshold, 2) << "\n";
  out << "genuine: " << r.genuine_scores.size() << " scores, " << score_range(r.genuine_scores) << "\n";
  out << "impostor: " << r.impostor_scores.size() << " scores, " << score_range(r.impostor_scores) << "\n";
  out << "FAR: " << fixed(r.far, 4) << " (" << r.false_accepts << "/" << r.impostor_scores.size() << ")\n";
  out << "FRR: " << fixed(r.frr, 4) << " (" << r.false_rejects << "/" << r.genuine_scores.size() << ")\n";
  out << "timing: " << r.timed_sessions << " sessions, mean total " << fixed(r.total_mean_ms, 0) << " ms\n";
  for (const auto& p : r.phases) {
    out << "  " << p.phase << ": " << fixed(p.mean_ms, 0) << " ms, " << fixed(p.share_pct, 1) << "%\n";
  }
  out << "guest names: " << r.names.size() << ", total tries: " << r.total_tries << "\n";
  out << "mean tries: " << format_mean_tries(r.total_tries, static_cast<int>(r.names.size())) << "\n";
  out << "mismatches: " << r.mismatches.size() << "\n";
  for (const auto& m : r.mismatches) {
    out << "  trial " << m.trial << ": expected " << m.expected << ", got " << m.actual << "\n";
  }
  return out.str();
}

}  // namespace gatekeeper::harness
