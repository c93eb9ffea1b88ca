#include "gatekeeper/transcription.hpp"

#include <algorithm>
#include <fstream>
#include <nlohmann/json.hpp>
#include <numeric>
#include <sstream>

#include "gatekeeper/error.hpp"
#include "utf8.hpp"

namespace gatekeeper {

using nlohmann::json;

std::string_view to_string(Band band) {
  switch (band) {
    case Band::kNotify: return "notify";
    case Band::kConfirm: return "confirm";
    case Band::kRetry: return "retry";
  }
  return "retry";
}

void TranscriptionConfig::validate() const {
  if (!(0 < retry_threshold && retry_threshold < notify_threshold && notify_threshold < 100)) {
    throw Error(ErrorCode::kInvalidArgument,
                "thresholds must satisfy 0 < retry_threshold < notify_threshold < 100");
  }
}

Band band_for(int score, const TranscriptionConfig& config) {
  if (score > config.notify_threshold) return Band::kNotify;
  if (score < config.retry_threshold) return Band::kRetry;
  return Band::kConfirm;
}

ScriptedSpeechProvider::ScriptedSpeechProvider(const std::vector<SpeechScriptEntry>& script) {
  for (std::size_t i = 0; i < script.size(); ++i) {
    const auto& e = script[i];
    if (e.audio_tag.empty() || e.audio_tag.size() > kTagLength) {
      throw Error(ErrorCode::kInvalidArgument,
                  "script entry " + std::to_string(i) + ": audio tag must be 1-8 bytes");
    }
    entries_.insert_or_assign(e.audio_tag, e.transcript);
  }
}

std::string ScriptedSpeechProvider::transcribe(ByteView audio) const {
  auto it = entries_.find(media_tag(audio));
  if (it == entries_.end()) throw Error(ErrorCode::kScriptedMiss, "no scripted transcript for audio");
  return it->second;
}

std::vector<SpeechScriptEntry> parse_speech_script(const std::string& json_text) {
  const json doc = json::parse(json_text, nullptr, false);
  if (!doc.is_array()) throw Error(ErrorCode::kInvalidArgument, "speech script must be a JSON array");
  std::vector<SpeechScriptEntry> out;
  for (const auto& item : doc) {
    try {
      out.push_back({item.at("audioTag").get<std::string>(), item.at("transcript").get<std::string>()});
    } catch (const json::exception& ex) {
      throw Error(ErrorCode::kInvalidArgument,
                  "speech script entry " + std::to_string(out.size()) + ": " + ex.what());
    }
  }
  return out;
}

std::vector<SpeechScriptEntry> load_speech_script(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open speech script " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_speech_script(ss.str());
}

std::string transcribe(const SpeechProvider& provider, ByteView audio) {
  if (audio.empty()) throw Error(ErrorCode::kEmptyInput, "audio buffer is empty");
  return provider.transcribe(audio);
}

std::size_t edit_distance(std::u32string_view a, std::u32string_view b) {
  if (a.size() < b.size()) std::swap(a, b);
  std::vector<std::size_t> row(b.size() + 1);
  std::iota(row.begin(), row.end(), std::size_t{0});
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diagonal = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t above = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diagonal + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diagonal = above;
    }
  }
  return row[b.size()];
}

namespace {

int ratio(const std::u32string& a, const std::u32string& b) {
  const std::size_t longest = std::max(a.size(), b.size());
  if (longest == 0) return 100;
  const std::size_t distance = edit_distance(a, b);
  const std::size_t kept = longest - distance;
  // round_half_up(100 * kept / longest) without floating point
  const int rounded = static_cast<int>((200 * kept + longest) / (2 * longest));
  // Strings of 200+ code points one edit apart would otherwise round up to a
  // perfect score.
  return distance > 0 ? std::min(rounded, 99) : rounded;
}

std::u32string sorted_tokens(const std::string& normalized) {
  std::vector<std::string> tokens;
  std::istringstream in(normalized);
  for (std::string t; in >> t;) tokens.push_back(t);
  std::sort(tokens.begin(), tokens.end());
  std::string joined;
  for (const auto& t : tokens) {
    if (!joined.empty()) joined.push_back(' ');
    joined += t;
  }
  return utf8::decode(joined);
}

}  // namespace

int LevenshteinRatio::score(std::string_view a, std::string_view b) const {
  return ratio(utf8::decode(normalize_name(a)), utf8::decode(normalize_name(b)));
}

int TokenSortRatio::score(std::string_view a, std::string_view b) const {
  return ratio(sorted_tokens(normalize_name(a)), sorted_tokens(normalize_name(b)));
}

int similarity(std::string_view a, std::string_view b) { return LevenshteinRatio{}.score(a, b); }

NameMatch match_name(std::string_view transcript, const Directory& directory,
                     const TranscriptionConfig& config, const NameSimilarity& metric) {
  NameMatch best;
  for (const auto& employee : directory) {
    const int s = metric.score(transcript, employee.full_name);
    if (!best.employee_id || s > best.score) {
      best.employee_id = employee.id;
      best.score = s;
    }
  }
  best.band = best.employee_id ? band_for(best.score, config) : Band::kRetry;
  return best;
}

NameMatch match_name(std::string_view transcript, const Directory& directory,
                     const TranscriptionConfig& config) {
  return match_name(transcript, directory, config, LevenshteinRatio{});
}

}  // namespace gatekeeper
