#include "gatekeeper/recognition.hpp"

#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "gatekeeper/error.hpp"

namespace gatekeeper {

using nlohmann::json;

void MatchResult::validate() const {
  if (!(similarity >= 0.0 && similarity <= 100.0)) {
    throw Error(ErrorCode::kInvalidArgument, "similarity must lie in [0, 100]");
  }
  if (!employee_id && similarity != 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "a result without an employee must have similarity 0");
  }
}

void RecognitionConfig::validate() const {
  if (!(accept_threshold > 0.0 && accept_threshold < 100.0)) {
    throw Error(ErrorCode::kInvalidArgument, "accept_threshold must lie in (0, 100)");
  }
}

ScriptedFaceProvider::ScriptedFaceProvider(const std::vector<FaceScriptEntry>& script) {
  for (std::size_t i = 0; i < script.size(); ++i) {
    const auto& e = script[i];
    if (e.probe_tag.empty() || e.probe_tag.size() > kTagLength) {
      throw Error(ErrorCode::kInvalidArgument,
                  "script entry " + std::to_string(i) + ": probe tag must be 1-8 bytes");
    }
    MatchResult r{e.employee_id, e.similarity};
    r.validate();
    entries_.insert_or_assign(e.probe_tag, std::move(r));
  }
}

MatchResult ScriptedFaceProvider::search(ByteView probe, const Directory&) const {
  const std::string tag = media_tag(probe);
  auto it = entries_.find(tag);
  if (it == entries_.end()) throw Error(ErrorCode::kScriptedMiss, "no scripted answer for probe");
  return it->second;
}

ScriptedFaceProvider mock_provider_from_script(const std::vector<FaceScriptEntry>& script) {
  return ScriptedFaceProvider(script);
}

std::vector<FaceScriptEntry> parse_face_script(const std::string& json_text) {
  const json doc = json::parse(json_text, nullptr, false);
  if (!doc.is_array()) throw Error(ErrorCode::kInvalidArgument, "face script must be a JSON array");
  std::vector<FaceScriptEntry> out;
  for (const auto& item : doc) {
    FaceScriptEntry e;
    try {
      e.probe_tag = item.at("probeTag").get<std::string>();
      if (const auto& id = item.at("employeeId"); !id.is_null()) e.employee_id = id.get<std::string>();
      e.similarity = item.at("similarity").get<double>();
    } catch (const json::exception& ex) {
      throw Error(ErrorCode::kInvalidArgument,
                  "face script entry " + std::to_string(out.size()) + ": " + ex.what());
    }
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<FaceScriptEntry> load_face_script(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open face script " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_face_script(ss.str());
}

MatchResult compare_probe(const FaceProvider& provider, ByteView probe, const Directory& collection) {
  if (probe.empty()) throw Error(ErrorCode::kEmptyInput, "probe image is empty");
  if (collection.empty()) throw Error(ErrorCode::kEmptyCollection, "no employees are enrolled");
  MatchResult r = provider.search(probe, collection);
  r.validate();
  return r;
}

Decision decide_access(const MatchResult& result, const RecognitionConfig& config) {
  if (result.employee_id && result.similarity > config.accept_threshold) {
    return Decision{true, *result.employee_id};
  }
  return Decision{};
}

}  // namespace gatekeeper
