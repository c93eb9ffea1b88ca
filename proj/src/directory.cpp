#include "gatekeeper/directory.hpp"

#include <algorithm>
#include <fstream>
#include <mutex>
#include <nlohmann/json.hpp>
#include <sstream>

#include "gatekeeper/error.hpp"
#include "utf8.hpp"

namespace gatekeeper {

namespace fs = std::filesystem;
using nlohmann::json;

void DirectoryConfig::validate() const {
  if (retention_capacity < 1) {
    throw Error(ErrorCode::kInvalidArgument, "retention_capacity must be at least 1");
  }
  if (!(update_threshold > 0.0 && update_threshold < 100.0)) {
    throw Error(ErrorCode::kInvalidArgument, "update_threshold must lie in (0, 100)");
  }
}

namespace {

bool is_space(char32_t c) {
  return c == U' ' || c == U'\t' || c == U'\n' || c == U'\r' || c == U'\f' || c == U'\v' ||
         c == U' ';
}

char32_t fold_case(char32_t c) {
  if (c >= U'A' && c <= U'Z') return c + 32;
  // Latin-1 upper-case block, skipping the multiplication sign.
  if (c >= U'À' && c <= U'Þ' && c != U'×') return c + 32;
  return c;
}

}  // namespace

std::string normalize_name(std::string_view name) {
  const std::u32string decoded = utf8::decode(name);
  std::u32string out;
  out.reserve(decoded.size());
  bool pending_space = false;
  for (char32_t c : decoded) {
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(U' ');
    pending_space = false;
    out.push_back(fold_case(c));
  }
  return utf8::encode(out);
}

Directory::Directory(std::vector<EmployeeRecord> records) : records_(std::move(records)) {
  for (std::size_t i = 0; i < records_.size(); ++i) {
    const auto& r = records_[i];
    if (normalize_name(r.full_name).empty()) {
      throw Error(ErrorCode::kIngestion, "record " + std::to_string(i) + ": empty full name");
    }
    if (!by_id_.emplace(r.id, i).second) {
      throw Error(ErrorCode::kConflict,
                  "record " + std::to_string(i) + ": duplicate employee id '" + r.id + "'");
    }
  }
}

const EmployeeRecord* Directory::find(std::string_view id) const {
  auto it = by_id_.find(id);
  return it == by_id_.end() ? nullptr : &records_[it->second];
}

std::optional<std::size_t> Directory::index_of(std::string_view id) const {
  auto it = by_id_.find(id);
  if (it == by_id_.end()) return std::nullopt;
  return it->second;
}

namespace {

EmployeeRecord parse_record(const std::string& line, std::size_t index,
                            const DirectoryConfig& config) {
  const auto fail = [index](const std::string& why) {
    return Error(ErrorCode::kIngestion, "record " + std::to_string(index) + ": " + why);
  };
  json doc;
  try {
    doc = json::parse(line);
  } catch (const json::parse_error& e) {
    throw fail(std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw fail("document is not an object");
  const auto required_string = [&](const char* key) -> std::string {
    auto it = doc.find(key);
    if (it == doc.end() || !it->is_string()) throw fail(std::string("missing string field '") + key + "'");
    return it->get<std::string>();
  };

  EmployeeRecord r;
  r.id = required_string("id");
  if (r.id.empty()) throw fail("empty id");
  const std::string first = required_string("firstName");
  const std::string last = doc.contains("lastName") ? required_string("lastName") : std::string();
  r.full_name = last.empty() ? first : first + " " + last;
  if (auto it = doc.find("notifyHandle"); it != doc.end() && !it->is_null()) {
    if (!it->is_string()) throw fail("notifyHandle must be a string");
    r.notify_handle = it->get<std::string>();
  }
  if (auto it = doc.find("imageRefs"); it != doc.end() && !it->is_null()) {
    if (!it->is_array()) throw fail("imageRefs must be an array");
    for (const auto& ref : *it) {
      if (!ref.is_string()) throw fail("imageRefs entries must be strings");
      r.template_ids.push_back(TemplateRef{ref.get<std::string>(), 0, 100.0});
    }
    if (r.template_ids.size() > config.retention_capacity) {
      throw fail("more imageRefs than the retention capacity");
    }
  }
  return r;
}

}  // namespace

Directory load_directory(std::istream& in, const DirectoryConfig& config) {
  config.validate();
  std::vector<EmployeeRecord> records;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    records.push_back(parse_record(line, records.size(), config));
  }
  return Directory(std::move(records));
}

Directory load_directory_file(const fs::path& path, const DirectoryConfig& config) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open directory file " + path.string());
  return load_directory(in, config);
}

const EmployeeRecord* lookup_first_by_name(const Directory& directory, std::string_view name) {
  const std::string wanted = normalize_name(name);
  for (const auto& r : directory) {
    if (normalize_name(r.full_name) == wanted) return &r;
  }
  return nullptr;
}

// ---------------------------------------------------------------------------
// TemplateStore

namespace {

json manifest_json(const std::string& employee_id, const std::vector<TemplateRef>& refs) {
  json list = json::array();
  for (const auto& t : refs) {
    list.push_back({{"templateId", t.template_id},
                    {"storedAt", t.stored_at},
                    {"sourceScore", t.source_score}});
  }
  return {{"employeeId", employee_id}, {"templates", list}};
}

void write_atomically(const fs::path& target, const std::string& contents) {
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw Error(ErrorCode::kIo, "short write to " + tmp.string());
  }
  fs::rename(tmp, target);
}

}  // namespace

TemplateStore::TemplateStore(const Directory& directory, DirectoryConfig config,
                             std::optional<fs::path> root)
    : directory_(directory), config_(config), root_(std::move(root)) {
  config_.validate();
  if (root_) {
    fs::create_directories(*root_ / "blobs");
    fs::create_directories(*root_ / "manifests");
    load_manifests();
  }
}

void TemplateStore::load_manifests() {
  for (const auto& entry : fs::directory_iterator(*root_ / "manifests")) {
    if (entry.path().extension() != ".json") continue;
    std::ifstream in(entry.path());
    const json doc = json::parse(in, nullptr, /*allow_exceptions=*/false);
    if (!doc.is_object() || !doc.contains("employeeId")) continue;
    const auto id = doc["employeeId"].get<std::string>();
    if (!directory_.find(id)) continue;
    auto& refs = templates_[id];
    for (const auto& t : doc.value("templates", json::array())) {
      refs.push_back(TemplateRef{t.at("templateId").get<std::string>(),
                                 t.at("storedAt").get<std::int64_t>(),
                                 t.at("sourceScore").get<double>()});
    }
    std::sort(refs.begin(), refs.end(),
              [](const TemplateRef& a, const TemplateRef& b) { return a.stored_at < b.stored_at; });
  }
}

bool TemplateStore::blob_referenced(const std::string& template_id) const {
  for (const auto& [_, refs] : templates_) {
    for (const auto& r : refs) {
      if (r.template_id == template_id) return true;
    }
  }
  return false;
}

void TemplateStore::write_manifest(const std::string& employee_id,
                                   const std::vector<TemplateRef>& refs) const {
  const fs::path target = *root_ / "manifests" / (hex_encode(to_bytes(employee_id)) + ".json");
  write_atomically(target, manifest_json(employee_id, refs).dump(2));
}

StoreOutcome TemplateStore::maybe_store_template(std::string_view employee_id, ByteView image,
                                                 double score, std::int64_t stored_at) {
  if (!directory_.find(employee_id)) {
    throw Error(ErrorCode::kNotFound, "unknown employee '" + std::string(employee_id) + "'");
  }
  if (!(score > config_.update_threshold)) return StoreOutcome::kSkipped;

  const std::string template_id = sha256_hex(image);
  std::unique_lock lock(mutex_);
  auto& refs = templates_[std::string(employee_id)];
  refs.push_back(TemplateRef{template_id, stored_at, score});

  std::vector<std::string> evicted;
  while (refs.size() > config_.retention_capacity) {
    evicted.push_back(refs.front().template_id);
    refs.erase(refs.begin());
  }

  if (root_) {
    const fs::path blob = *root_ / "blobs" / template_id;
    if (!fs::exists(blob)) {
      write_atomically(blob, std::string(image.begin(), image.end()));
    }
    write_manifest(std::string(employee_id), refs);
    for (const auto& id : evicted) {
      if (!blob_referenced(id)) fs::remove(*root_ / "blobs" / id);
    }
  } else {
    blobs_.try_emplace(template_id, image.begin(), image.end());
    for (const auto& id : evicted) {
      if (!blob_referenced(id)) blobs_.erase(id);
    }
  }
  return StoreOutcome::kStored;
}

std::vector<TemplateRef> TemplateStore::list_templates(std::string_view employee_id) const {
  if (!directory_.find(employee_id)) {
    throw Error(ErrorCode::kNotFound, "unknown employee '" + std::string(employee_id) + "'");
  }
  std::shared_lock lock(mutex_);
  auto it = templates_.find(employee_id);
  if (it == templates_.end()) return {};
  return {it->second.rbegin(), it->second.rend()};
}

Bytes TemplateStore::read_template(std::string_view template_id) const {
  std::shared_lock lock(mutex_);
  if (!root_) {
    auto it = blobs_.find(template_id);
    return it == blobs_.end() ? Bytes{} : it->second;
  }
  const fs::path blob = *root_ / "blobs" / std::string(template_id);
  std::ifstream in(blob, std::ios::binary);
  if (!in) return {};
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace gatekeeper
