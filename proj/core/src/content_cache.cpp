#include "xtc/content_cache.hpp"

#include <ctime>
#include <fstream>
#include <sstream>
#include <thread>

#include "xtc/error.hpp"
#include "xtc/hash.hpp"

namespace fs = std::filesystem;

namespace xtc {

void write_file_atomic(const fs::path& path, const std::string& data) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ostringstream suffix;
  suffix << ".tmp." << std::hash<std::thread::id>{}(std::this_thread::get_id());
  const fs::path tmp = path.string() + suffix.str();
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write '" + tmp.string() + "'");
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!out) throw InputError("short write to '" + tmp.string() + "'");
  }
  fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ContentCache::ContentCache(fs::path root) : root_(std::move(root)) { fs::create_directories(root_); }

std::string ContentCache::key_for(const nlohmann::json& request) { return sha256_hex(request.dump()); }

fs::path ContentCache::path_for(const std::string& key) const {
  if (key.size() < 3) throw InputError("cache key too short: '" + key + "'");
  return root_ / key.substr(0, 2) / (key + ".json");
}

std::optional<nlohmann::json> ContentCache::get(const std::string& key) const {
  const auto p = path_for(key);
  std::ifstream in(p, std::ios::binary);
  if (!in) {
    ++misses_;
    return std::nullopt;
  }
  try {
    auto entry = nlohmann::json::parse(in);
    if (entry.value("hash", "") != key) throw ParseError("hash mismatch");
    ++hits_;
    return entry.at("response");
  } catch (const std::exception&) {
    // a corrupt entry is a miss and gets rewritten
    ++misses_;
    return std::nullopt;
  }
}

void ContentCache::put(const std::string& key, const nlohmann::json& request, const nlohmann::json& response) {
  nlohmann::ordered_json entry;
  entry["hash"] = key;
  entry["request"] = request;
  entry["response"] = response;
  entry["timestamp"] = static_cast<std::int64_t>(std::time(nullptr));
  std::lock_guard lock(write_mu_);
  write_file_atomic(path_for(key), entry.dump());
}

ImageStore::ImageStore(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

std::string ImageStore::put(const std::string& bytes, const std::string& extension) {
  const std::string ref = sha256_hex(bytes) + "." + extension;
  std::lock_guard lock(mu_);
  const auto p = dir_ / ref;
  if (!fs::exists(p)) write_file_atomic(p, bytes);
  return ref;
}

fs::path ImageStore::path_for(const std::string& ref) const {
  if (ref.empty() || ref.find('/') != std::string::npos || ref.find("..") != std::string::npos) {
    throw InputError("invalid image reference '" + ref + "'");
  }
  return dir_ / ref;
}

std::string ImageStore::read(const std::string& ref) const { return read_file(path_for(ref)); }

bool ImageStore::contains(const std::string& ref) const { return fs::exists(path_for(ref)); }

}  // namespace xtc
