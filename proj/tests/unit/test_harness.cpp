#include <gtest/gtest.h>

#include "gatekeeper/error.hpp"
#include "gatekeeper/harness.hpp"
#include "support.hpp"

using namespace gatekeeper;
using namespace gatekeeper::harness;
using nlohmann::json;

namespace {

const json kDirectory = json::parse(R"([
  {"id":"e1","firstName":"Anna","lastName":"Lindberg","notifyHandle":"@anna"},
  {"id":"e2","firstName":"Bo","lastName":"Ek","notifyHandle":"@bo"},
  {"id":"e3","firstName":"Carl","lastName":"Svensson","notifyHandle":"@carl"}
])");

json scenario_doc(json trials) { return {{"threshold", 90.0}, {"directory", kDirectory}, {"trials", trials}}; }

}  // namespace

TEST(Scenario, EmptyGivesEmptyReport) {
  const Report r = run_scenario(parse_scenario(scenario_doc(json::array())));
  EXPECT_EQ(r.trials, 0);
  EXPECT_TRUE(r.mismatches.empty());
  EXPECT_TRUE(r.genuine_scores.empty());
  EXPECT_EQ(r.far, 0.0);
  EXPECT_EQ(r.frr, 0.0);
  EXPECT_NE(render(r, "text").find("mean tries: 0.00"), std::string::npos);
}

TEST(Scenario, ErrorsNameTheTrial) {
  const auto error_of = [](const json& doc) {
    try {
      parse_scenario(doc);
    } catch (const Error& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  EXPECT_NE(error_of(scenario_doc(json::parse(R"([{"kind":"genuine","probeTag":"g1","employeeId":"e1","similarity":95},
                                                   {"kind":"genuine","probeTag":"g1","employeeId":"e1","similarity":96}])")))
                .find("trial 1"),
            std::string::npos);
  EXPECT_NE(error_of(scenario_doc(json::parse(R"([{"kind":"genuine","probeTag":"g1","employeeId":"e7","similarity":95}])")))
                .find("trial 0"),
            std::string::npos);
  EXPECT_NE(error_of(scenario_doc(json::parse(R"([{"kind":"juggler"}])"))).find("trial 0"), std::string::npos);
  EXPECT_NE(error_of(scenario_doc(json::parse(R"([{"kind":"guestNative","employeeId":"e1","utterances":[]}])")))
                .find("trial 0"),
            std::string::npos);
  EXPECT_THROW(parse_scenario(json::array()), Error);
}

TEST(Scenario, JsonRoundTrip) {
  const Scenario s = generate_separation_scenario(3, 5, 5);
  const json once = to_json(s);
  EXPECT_EQ(to_json(parse_scenario(once)), once);
}

TEST(Generator, EnvelopesAndEdges) {
  const Scenario s = generate_separation_scenario(11);
  ASSERT_EQ(s.trials.size(), 400u);
  int genuine = 0;
  double gmin = 100, imax = 0;
  for (const auto& t : s.trials) {
    if (t.kind == TrialKind::kGenuine) {
      ++genuine;
      ASSERT_GE(t.similarity, 94.25);
      ASSERT_LE(t.similarity, 100.0);
      gmin = std::min(gmin, t.similarity);
    } else {
      ASSERT_GE(t.similarity, 0.0);
      ASSERT_LE(t.similarity, 73.1);
      imax = std::max(imax, t.similarity);
    }
  }
  EXPECT_EQ(genuine, 200);
  EXPECT_DOUBLE_EQ(gmin, 94.25);
  EXPECT_DOUBLE_EQ(imax, 73.1);
  EXPECT_EQ(to_json(generate_separation_scenario(11)), to_json(s));
  EXPECT_NE(to_json(generate_separation_scenario(12)), to_json(s));
}

TEST(Replay, SmallSeparationWithRecountOracle) {
  const Scenario s = generate_separation_scenario(5, 20, 20);
  const Report r = run_scenario(s, {7});
  EXPECT_TRUE(r.mismatches.empty());
  ASSERT_EQ(r.genuine_scores.size(), 20u);
  ASSERT_EQ(r.impostor_scores.size(), 20u);
  // independent recount over the raw score lists
  int fa = 0, fr = 0;
  for (double x : r.impostor_scores) fa += x > s.threshold;
  for (double x : r.genuine_scores) fr += !(x > s.threshold);
  EXPECT_EQ(r.false_accepts, fa);
  EXPECT_EQ(r.false_rejects, fr);
  EXPECT_DOUBLE_EQ(r.far, fa / 20.0);
  EXPECT_DOUBLE_EQ(r.frr, fr / 20.0);
  EXPECT_EQ(r.far, 0.0);
  EXPECT_EQ(r.frr, 0.0);
  // scores came back through the stack unchanged
  std::vector<double> scripted;
  for (const auto& t : s.trials) {
    if (t.kind == TrialKind::kGenuine) scripted.push_back(t.similarity);
  }
  EXPECT_EQ(r.genuine_scores, scripted);
}

TEST(Replay, CountsMisclassifiedTrials) {
  const json doc = scenario_doc(json::parse(R"([
    {"kind":"genuine","probeTag":"g1","employeeId":"e1","similarity":85,"expect":"denied"},
    {"kind":"impostor","probeTag":"i1","employeeId":"e2","similarity":91,"expect":"unlocked"},
    {"kind":"impostor","probeTag":"i2","employeeId":null,"similarity":0}
  ])"));
  const Report r = run_scenario(parse_scenario(doc));
  EXPECT_TRUE(r.mismatches.empty());
  EXPECT_EQ(r.false_rejects, 1);
  EXPECT_EQ(r.false_accepts, 1);
  EXPECT_DOUBLE_EQ(r.far, 0.5);
  EXPECT_DOUBLE_EQ(r.frr, 1.0);
  // a wrong expectation becomes a mismatch
  json wrong = doc;
  wrong["trials"][0]["expect"] = "unlocked";
  const Report m = run_scenario(parse_scenario(wrong));
  ASSERT_EQ(m.mismatches.size(), 1u);
  EXPECT_EQ(m.mismatches[0].trial, 0);
  EXPECT_EQ(m.mismatches[0].actual, "denied");
}

TEST(Replay, GuestNeedingTwoTries) {
  const json doc = scenario_doc(json::parse(R"([
    {"kind":"guestNonNative","employeeId":"e1","expectTries":2,
     "utterances":[{"audioTag":"u1","transcript":"jon"},{"audioTag":"u2","transcript":"anna lindberg"}]},
    {"kind":"guestNative","employeeId":"e2","expectTries":1,"utterances":[{"audioTag":"u3","transcript":"bo ek"}]},
    {"kind":"guestNative","employeeId":"e3","expect":"abandoned","utterances":[{"audioTag":"u4","transcript":"xyz"}]}
  ])"));
  const Report r = run_scenario(parse_scenario(doc));
  EXPECT_TRUE(r.mismatches.empty()) << render(r, "text");
  ASSERT_EQ(r.names.size(), 3u);
  EXPECT_EQ(r.names[0], (NameTries{"e1", 2, true}));
  EXPECT_EQ(r.names[1], (NameTries{"e2", 1, true}));
  EXPECT_FALSE(r.names[2].notified);
  EXPECT_EQ(r.total_tries, 4);
}

TEST(Replay, TimingPhasesFromScript) {
  const json doc = scenario_doc(json::parse(R"([
    {"kind":"genuine","probeTag":"g1","employeeId":"e3","similarity":96,
     "phases":{"captureMs":4466,"authMs":10353,"pinMs":5481}}
  ])"));
  const Report r = run_scenario(parse_scenario(doc));
  EXPECT_TRUE(r.mismatches.empty());
  EXPECT_EQ(r.timed_sessions, 1);
  EXPECT_DOUBLE_EQ(r.total_mean_ms, 20300.0);
  ASSERT_EQ(r.phases.size(), 3u);
  EXPECT_NEAR(r.phases[0].share_pct, 22.0, 1.0);
  EXPECT_NEAR(r.phases[1].share_pct, 51.0, 1.0);
  EXPECT_NEAR(r.phases[2].share_pct, 27.0, 1.0);
}

TEST(Replay, DeterministicBytes) {
  const Scenario s = generate_separation_scenario(9, 15, 15);
  EXPECT_EQ(render(run_scenario(s, {4}), "json"), render(run_scenario(s, {4}), "json"));
}

TEST(Replay, PersistsNoMediaUnderStateRoot) {
  testing_support::TempDir state;
  const Scenario s = generate_separation_scenario(2, 10, 10);
  const Report r = run_scenario(s, {1, state.path()});
  EXPECT_TRUE(r.mismatches.empty());
  EXPECT_TRUE(std::filesystem::exists(state.path() / "sessions.jsonl"));
}

TEST(Report, JsonRoundTripAndText) {
  const Report r = run_scenario(generate_separation_scenario(1, 6, 6));
  EXPECT_EQ(report_from_json(json::parse(render(r, "json"))), r);
  const std::string text = render(r, "text");
  EXPECT_NE(text.find("FAR: "), std::string::npos);
  EXPECT_NE(text.find("FRR: "), std::string::npos);
  EXPECT_THROW(render(r, "yaml"), Error);
  EXPECT_THROW(report_from_json(json::object()), Error);
}

TEST(Report, MeanTries) {
  EXPECT_EQ(format_mean_tries(37, 33), "1.12");
  EXPECT_EQ(format_mean_tries(50, 33), "1.51");
  EXPECT_EQ(format_mean_tries(33, 33), "1.00");
  EXPECT_EQ(format_mean_tries(0, 0), "0.00");
  Report r;
  for (int i = 0; i < 33; ++i) r.names.push_back({"e" + std::to_string(i), i < 17 ? 2 : 1, true});
  r.total_tries = 50;
  EXPECT_NE(render(r, "text").find("mean tries: 1.51"), std::string::npos);
}

TEST(Report, HistogramBins) {
  const Histogram h = make_histogram({94.25, 100.0, 99.99}, {0.0, 73.1, 1.99});
  ASSERT_EQ(h.genuine.size(), 50u);
  EXPECT_EQ(h.genuine[47], 1);  // [94, 96)
  EXPECT_EQ(h.genuine[49], 2);  // [98, 100]
  EXPECT_EQ(h.impostor[0], 2);
  EXPECT_EQ(h.impostor[36], 1);  // [72, 74)
}
