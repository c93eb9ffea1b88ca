#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "gatekeeper/bytes.hpp"

namespace gatekeeper {

struct TemplateRef {
  std::string template_id;
  std::int64_t stored_at = 0;
  double source_score = 0.0;

  bool operator==(const TemplateRef&) const = default;
};

struct EmployeeRecord {
  std::string id;
  std::string full_name;
  std::string notify_handle;
  std::vector<TemplateRef> template_ids;
};

struct DirectoryConfig {
  std::size_t retention_capacity = 10;
  double update_threshold = 99.5;

  // Throws Error(kInvalidArgument) when a field is out of range.
  void validate() const;
};

// Lowercase, trim, and collapse internal whitespace runs to a single space.
// Works on UTF-8; ASCII and Latin-1 letters (Å, Ä, Ö, ...) are case-folded.
std::string normalize_name(std::string_view name);

// Immutable, ordered set of employees. Ingestion order defines "first
// occurrence" for every name lookup and tie-break in the system.
class Directory {
 public:
  Directory() = default;
  // Throws Error(kConflict) on duplicate ids and Error(kIngestion) on an
  // empty full name.
  explicit Directory(std::vector<EmployeeRecord> records);

  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  const std::vector<EmployeeRecord>& records() const { return records_; }
  auto begin() const { return records_.begin(); }
  auto end() const { return records_.end(); }
  const EmployeeRecord& operator[](std::size_t i) const { return records_[i]; }

  const EmployeeRecord* find(std::string_view id) const;
  std::optional<std::size_t> index_of(std::string_view id) const;

 private:
  std::vector<EmployeeRecord> records_;
  std::map<std::string, std::size_t, std::less<>> by_id_;
};

// Reads newline-delimited JSON employee documents
// ({id, firstName, lastName, notifyHandle, imageRefs}). Blank lines are
// skipped; the record index in error messages counts documents from 0.
Directory load_directory(std::istream& in, const DirectoryConfig& config = {});
Directory load_directory_file(const std::filesystem::path& path,
                              const DirectoryConfig& config = {});

const EmployeeRecord* lookup_first_by_name(const Directory& directory, std::string_view name);

enum class StoreOutcome { kStored, kSkipped };

// Per-employee ring of the most recent high-confidence face templates.
//
// With a root directory, template bytes live as content-addressed blobs
// (<root>/blobs/<sha256>) and each employee has a JSON manifest
// (<root>/manifests/<hex(employee id)>.json) rewritten through a temp file
// and rename. Without a root the store is purely in memory.
//
// Readers may run concurrently with a writer.
class TemplateStore {
 public:
  TemplateStore(const Directory& directory, DirectoryConfig config,
                std::optional<std::filesystem::path> root = std::nullopt);

  // Stores `image` iff score is strictly above the update threshold,
  // evicting the oldest template once capacity is exceeded. Skipped images
  // are never copied. Throws Error(kNotFound) for an unknown employee.
  StoreOutcome maybe_store_template(std::string_view employee_id, ByteView image, double score,
                                    std::int64_t stored_at);

  // Newest first.
  std::vector<TemplateRef> list_templates(std::string_view employee_id) const;

  // Bytes of a retained template (empty if absent).
  Bytes read_template(std::string_view template_id) const;

  const DirectoryConfig& config() const { return config_; }

 private:
  void write_manifest(const std::string& employee_id, const std::vector<TemplateRef>& refs) const;
  void load_manifests();
  bool blob_referenced(const std::string& template_id) const;

  const Directory& directory_;
  DirectoryConfig config_;
  std::optional<std::filesystem::path> root_;
  mutable std::shared_mutex mutex_;
  // oldest first
  std::map<std::string, std::vector<TemplateRef>, std::less<>> templates_;
  std::map<std::string, Bytes, std::less<>> blobs_;
};

}  // namespace gatekeeper
