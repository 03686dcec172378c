#pragma once

// On-disk study store: one JSON document per session and per aggregate bundle.
//   <root>/sessions/<id>.json
//   <root>/aggregates/<id>.json

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fracsls/hil_bo.hpp"
#include "fracsls/io.hpp"

namespace fracsls {

class NotFound : public Error {
 public:
  using Error::Error;
};

/// Canonical session file text; `hil` and `serve` both write exactly this.
inline std::string session_document(const Session& s) { return s.to_json().dump(2) + "\n"; }

inline bool valid_store_id(const std::string& id) {
  if (id.empty() || id.size() > 128) return false;
  for (char c : id)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.')) return false;
  return id.front() != '.';
}

class StudyStore {
 public:
  explicit StudyStore(std::filesystem::path root) : root_(std::move(root)) {
    std::filesystem::create_directories(root_ / "sessions");
    std::filesystem::create_directories(root_ / "aggregates");
  }

  const std::filesystem::path& root() const { return root_; }

  std::filesystem::path session_path(const std::string& id) const { return root_ / "sessions" / (checked(id) + ".json"); }
  std::filesystem::path aggregate_path(const std::string& id) const {
    return root_ / "aggregates" / (checked(id) + ".json");
  }

  void save_session(const Session& s) const { write_file_atomic(session_path(s.id()), session_document(s)); }

  bool has_session(const std::string& id) const { return std::filesystem::exists(session_path(id)); }

  Session load_session(const std::string& id) const {
    const auto p = session_path(id);
    if (!std::filesystem::exists(p)) throw NotFound("no session '" + id + "'");
    return Session::from_json(json::parse(read_file(p)));
  }

  void save_aggregate(const std::string& id, const json& bundle) const {
    write_file_atomic(aggregate_path(id), bundle.dump(2) + "\n");
  }

  bool has_aggregate(const std::string& id) const { return std::filesystem::exists(aggregate_path(id)); }

  json load_aggregate(const std::string& id) const {
    const auto p = aggregate_path(id);
    if (!std::filesystem::exists(p)) throw NotFound("no aggregate '" + id + "'");
    return json::parse(read_file(p));
  }

  std::vector<std::string> aggregate_ids() const { return ids(root_ / "aggregates"); }
  std::vector<std::string> session_ids() const { return ids(root_ / "sessions"); }

 private:
  static std::string checked(const std::string& id) {
    if (!valid_store_id(id)) throw InvalidArgument("invalid id '" + id + "'");
    return id;
  }

  static std::vector<std::string> ids(const std::filesystem::path& dir) {
    std::vector<std::string> out;
    for (const auto& e : std::filesystem::directory_iterator(dir))
      if (e.path().extension() == ".json") out.push_back(e.path().stem().string());
    std::sort(out.begin(), out.end());
    return out;
  }

  std::filesystem::path root_;
};

}  // namespace fracsls
