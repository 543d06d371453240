#pragma once

#include <atomic>
#include <filesystem>
#include <mutex>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>

namespace xtc {

/// Content-addressed response store: `<root>/<first two hex chars>/<sha256>.json`.
/// Readers run concurrently; writes go through a temp file and a rename under a mutex.
class ContentCache {
 public:
  explicit ContentCache(std::filesystem::path root);

  /// sha256 of the compact dump of `request` (object keys sorted by nlohmann::json).
  static std::string key_for(const nlohmann::json& request);

  std::filesystem::path path_for(const std::string& key) const;
  std::optional<nlohmann::json> get(const std::string& key) const;
  void put(const std::string& key, const nlohmann::json& request, const nlohmann::json& response);

  std::size_t hits() const noexcept { return hits_; }
  std::size_t misses() const noexcept { return misses_; }
  const std::filesystem::path& root() const noexcept { return root_; }

 private:
  std::filesystem::path root_;
  std::mutex write_mu_;
  mutable std::atomic<std::size_t> hits_{0};
  mutable std::atomic<std::size_t> misses_{0};
};

/// Content-addressed image files: a reference is "<sha256>.<ext>".
class ImageStore {
 public:
  explicit ImageStore(std::filesystem::path dir);

  std::string put(const std::string& bytes, const std::string& extension);
  std::filesystem::path path_for(const std::string& ref) const;
  std::string read(const std::string& ref) const;
  bool contains(const std::string& ref) const;
  const std::filesystem::path& dir() const noexcept { return dir_; }

 private:
  std::filesystem::path dir_;
  std::mutex mu_;
};

/// Writes `data` to `path` through a sibling temp file and a rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& data);
std::string read_file(const std::filesystem::path& path);

}  // namespace xtc
