#pragma once

#include <filesystem>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "gatekeeper/flows.hpp"
#include "gatekeeper/protocol.hpp"

namespace testing_support {

using namespace gatekeeper;

// A fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

// Every file under `root` that contains one of the needles, as "file: needle#i".
std::vector<std::string> scan_tree(const std::filesystem::path& root, const std::vector<Bytes>& needles);

// The forms a media buffer could leak in: raw, base64, and (given a key)
// XOR-encrypted raw and base64. Only buffers of 12+ bytes are worth looking
// for; shorter ones collide with ordinary text.
std::vector<Bytes> leak_forms(const Bytes& media, const CipherKey* key);

CipherKey test_key();

// A schema-valid message of a random type and allowed sender, with random
// session ids, required fields and extra payload noise.
protocol::Message random_message(std::mt19937_64& rng);

// Three-person directory plus a pair of same-name employees.
std::vector<EmployeeRecord> sample_people();

// A controller wired to scripted providers, a recording sink, a simulated
// lock and a manual clock. Media handed out by probe()/audio() is remembered
// so the persistence root can be swept for it.
class Rig {
 public:
  struct Options {
    std::vector<EmployeeRecord> people = sample_people();
    std::vector<FaceScriptEntry> faces;
    std::vector<SpeechScriptEntry> speech;
    FlowConfig config;
    bool with_templates = false;
    std::uint64_t seed = 42;
  };

  explicit Rig(Options options);
  explicit Rig() : Rig(Options{}) {}
  ~Rig();

  // Plaintext media: the 8-byte tag, then pseudo-random filler.
  Bytes probe_plain(const std::string& tag);
  // What the door unit would upload: the probe encrypted with the rig key.
  Bytes probe(const std::string& tag);
  Bytes audio(const std::string& tag);

  // The code from the latest direct message sent to `handle`.
  std::string last_code(const std::string& handle) const;

  // Sweeps the persistence root and every session dump for any media handed
  // out so far. Empty when clean.
  std::vector<std::string> gdpr_violations() const;

  Directory directory;
  ScriptedFaceProvider face;
  ScriptedSpeechProvider speech;
  RecordingSink sink;
  SimulatedLock lock;
  ManualClock clock{0};
  CipherKey key;
  TempDir state;
  TempDir templates_root;
  std::unique_ptr<TemplateStore> templates;
  std::unique_ptr<AccessController> flows;

 private:
  std::vector<Bytes> media_;
  std::uint64_t filler_ = 0x9e3779b97f4a7c15ULL;
};

}  // namespace testing_support
