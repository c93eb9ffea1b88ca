#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gatekeeper/bytes.hpp"
#include "gatekeeper/directory.hpp"

namespace gatekeeper {

struct MatchResult {
  std::optional<std::string> employee_id;
  double similarity = 0.0;  // [0, 100]

  // Throws Error(kInvalidArgument) when the invariants do not hold.
  void validate() const;
  bool operator==(const MatchResult&) const = default;
};

struct RecognitionConfig {
  double accept_threshold = 90.0;

  void validate() const;
};

struct Decision {
  bool accepted = false;
  std::string employee_id;  // set iff accepted

  bool operator==(const Decision&) const = default;
};

// A face search service. A cloud adapter would implement search() as
// "index the probe against the employee collection and return the single
// best face match with its similarity"; transport failures and timeouts
// must surface as Error(kProviderUnavailable). Implementations must be
// callable from concurrent sessions and must not retain the probe bytes.
class FaceProvider {
 public:
  virtual ~FaceProvider() = default;
  virtual MatchResult search(ByteView probe, const Directory& collection) const = 0;
};

struct FaceScriptEntry {
  std::string probe_tag;
  std::optional<std::string> employee_id;
  double similarity = 0.0;
};

// Answers by the probe's media tag (its first eight bytes). Immutable after
// construction. Unknown tags raise Error(kScriptedMiss).
class ScriptedFaceProvider final : public FaceProvider {
 public:
  explicit ScriptedFaceProvider(const std::vector<FaceScriptEntry>& script);

  MatchResult search(ByteView probe, const Directory& collection) const override;

  std::size_t size() const { return entries_.size(); }

 private:
  std::map<std::string, MatchResult, std::less<>> entries_;
};

ScriptedFaceProvider mock_provider_from_script(const std::vector<FaceScriptEntry>& script);

// JSON array of {probeTag, employeeId|null, similarity}.
std::vector<FaceScriptEntry> parse_face_script(const std::string& json_text);
std::vector<FaceScriptEntry> load_face_script(const std::filesystem::path& path);

// Throws Error(kEmptyInput) for an empty probe and Error(kEmptyCollection)
// when nobody is enrolled; provider errors propagate.
MatchResult compare_probe(const FaceProvider& provider, ByteView probe, const Directory& collection);

// Accept iff an employee was matched and similarity is strictly above the
// threshold.
Decision decide_access(const MatchResult& result, const RecognitionConfig& config);

}  // namespace gatekeeper
