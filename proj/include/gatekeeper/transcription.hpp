#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gatekeeper/bytes.hpp"
#include "gatekeeper/directory.hpp"

namespace gatekeeper {

enum class Band { kNotify, kConfirm, kRetry };

std::string_view to_string(Band band);

struct TranscriptionConfig {
  int notify_threshold = 80;
  int retry_threshold = 30;
  std::string language_tag = "sv-SE";  // informational, for real adapters

  void validate() const;
};

struct NameMatch {
  std::optional<std::string> employee_id;
  int score = 0;  // [0, 100]
  Band band = Band::kRetry;

  bool operator==(const NameMatch&) const = default;
};

// Notify when score > notify_threshold, Retry when score < retry_threshold,
// Confirm otherwise (both bounds inclusive).
Band band_for(int score, const TranscriptionConfig& config);

class SpeechProvider {
 public:
  virtual ~SpeechProvider() = default;
  // Cloud adapters raise Error(kProviderUnavailable) on transport failure.
  virtual std::string transcribe(ByteView audio) const = 0;
};

struct SpeechScriptEntry {
  std::string audio_tag;
  std::string transcript;
};

// Maps an audio buffer's first eight bytes to a scripted transcript;
// unknown tags raise Error(kScriptedMiss).
class ScriptedSpeechProvider final : public SpeechProvider {
 public:
  explicit ScriptedSpeechProvider(const std::vector<SpeechScriptEntry>& script);
  std::string transcribe(ByteView audio) const override;

 private:
  std::map<std::string, std::string, std::less<>> entries_;
};

// JSON array of {audioTag, transcript}.
std::vector<SpeechScriptEntry> parse_speech_script(const std::string& json_text);
std::vector<SpeechScriptEntry> load_speech_script(const std::filesystem::path& path);

// Throws Error(kEmptyInput) on empty audio.
std::string transcribe(const SpeechProvider& provider, ByteView audio);

// Plain Levenshtein distance over Unicode code points.
std::size_t edit_distance(std::u32string_view a, std::u32string_view b);

// A 0-100 string similarity over normalized names.
class NameSimilarity {
 public:
  virtual ~NameSimilarity() = default;
  virtual int score(std::string_view a, std::string_view b) const = 0;
};

// round_half_up(100 * (1 - d / max(|a|, |b|))) on normalized strings, where d
// is the edit distance. Two empty strings score 100.
class LevenshteinRatio final : public NameSimilarity {
 public:
  int score(std::string_view a, std::string_view b) const override;
};

// Levenshtein ratio after sorting the whitespace-separated tokens, so
// "lindberg anna" matches "anna lindberg" fully.
class TokenSortRatio final : public NameSimilarity {
 public:
  int score(std::string_view a, std::string_view b) const override;
};

int similarity(std::string_view a, std::string_view b);

// Best-scoring employee; ties go to the lowest ingestion index. An empty
// directory yields {absent, 0, Retry}.
NameMatch match_name(std::string_view transcript, const Directory& directory,
                     const TranscriptionConfig& config, const NameSimilarity& metric);
NameMatch match_name(std::string_view transcript, const Directory& directory,
                     const TranscriptionConfig& config = {});

}  // namespace gatekeeper
