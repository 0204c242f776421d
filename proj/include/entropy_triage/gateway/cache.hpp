#pragma once

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include <openssl/evp.h>

#include <nlohmann/json.hpp>

#include "entropy_triage/error.hpp"
#include "entropy_triage/gateway/backend.hpp"

namespace entropy_triage {

inline std::string sha256_hex(std::string_view data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("internal", "SHA-256 digest failed");
  }
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 0xF];
  }
  return out;
}

inline std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Content address of a request. Fields are length-prefixed so no two
/// distinct field tuples share an encoding.
inline std::string cache_key(const ChatRequest& r) {
  std::string enc;
  auto field = [&](std::string_view s) {
    enc += std::to_string(s.size());
    enc += ':';
    enc += s;
    enc += ';';
  };
  field(r.model_id);
  field(r.prompt);
  field(format_real(r.temperature));
  field(format_real(r.top_p));
  field(std::to_string(r.sample_index));
  field(to_string(r.purpose));
  return sha256_hex(enc);
}

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct CacheEntry {
  std::string key;
  std::string purpose;
  std::string model_id;
  nlohmann::json params;
  std::string payload;
  std::string created_at;
};

/// Append-only JSON-lines response cache. Reads take a shared lock; appends
/// are serialized. A corrupt line is skipped with a warning.
class Cache {
 public:
  /// In-memory cache with no backing file.
  Cache() = default;

  explicit Cache(std::filesystem::path file) : file_(std::move(file)) {
    if (file_->has_parent_path()) std::filesystem::create_directories(file_->parent_path());
    std::ifstream in(*file_);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      try {
        auto j = nlohmann::json::parse(line);
        CacheEntry e{j.at("key").get<std::string>(),   j.at("purpose").get<std::string>(),
                     j.at("model_id").get<std::string>(), j.at("params"),
                     j.at("payload").get<std::string>(), j.value("created_at", "")};
        entries_.emplace(e.key, std::move(e));
      } catch (const nlohmann::json::exception&) {
        warnings_.push_back(file_->string() + ":" + std::to_string(line_no) +
                            ": skipping corrupt cache line");
      }
    }
    out_.open(*file_, std::ios::app);
    if (!out_) throw ConfigError("cannot open cache file for append: " + file_->string());
  }

  std::optional<std::string> get(const std::string& key) const {
    std::shared_lock lock(mutex_);
    auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    return it->second.payload;
  }

  /// Records an entry unless the key is already present.
  void put(CacheEntry entry) {
    std::unique_lock lock(mutex_);
    if (entries_.contains(entry.key)) return;
    if (out_.is_open()) {
      nlohmann::json j = {{"key", entry.key},
                          {"purpose", entry.purpose},
                          {"model_id", entry.model_id},
                          {"params", entry.params},
                          {"payload", entry.payload},
                          {"created_at", entry.created_at}};
      out_ << j.dump() << '\n';
      out_.flush();
    }
    entries_.emplace(entry.key, std::move(entry));
  }

  void put(const ChatRequest& request, const std::string& payload) {
    put(CacheEntry{cache_key(request), to_string(request.purpose), request.model_id,
                   {{"temperature", request.temperature},
                    {"top_p", request.top_p},
                    {"sample_index", request.sample_index},
                    {"max_output_tokens", request.max_output_tokens}},
                   payload, utc_timestamp()});
  }

  std::size_t size() const {
    std::shared_lock lock(mutex_);
    return entries_.size();
  }

  /// Entry counts per purpose tag.
  std::unordered_map<std::string, std::size_t> counts_by_purpose() const {
    std::shared_lock lock(mutex_);
    std::unordered_map<std::string, std::size_t> out;
    for (const auto& [k, e] : entries_) ++out[e.purpose];
    return out;
  }

  const std::vector<std::string>& warnings() const { return warnings_; }

 private:
  std::optional<std::filesystem::path> file_;
  mutable std::shared_mutex mutex_;
  std::unordered_map<std::string, CacheEntry> entries_;
  std::ofstream out_;
  std::vector<std::string> warnings_;
};

}  // namespace entropy_triage
