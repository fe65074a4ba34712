#pragma once

// Write-once on-disk response cache.
//
// Layout: <root>/<service_id>/<source>-<target>/<sha256(text)>.txt with a
// sidecar <sha256(text)>.meta JSON holding a timestamp and the SHA-256 of the
// stored response. An entry whose checksum does not match is refetched.

#include <atomic>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>

#include <openssl/evp.h>

#include "biasrate/core.hpp"
#include "biasrate/services.hpp"

namespace biasrate {

inline std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &length, EVP_sha256(), nullptr) != 1)
    throw Error("SHA-256 computation failed");
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(length * 2);
  for (unsigned int i = 0; i < length; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 15];
  }
  return out;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

/// Writes via a temporary sibling and rename so readers never see a partial file.
inline void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  static std::atomic<unsigned> counter{0};
  auto tmp = path;
  std::ostringstream suffix;
  suffix << ".tmp." << std::this_thread::get_id() << "." << counter.fetch_add(1);
  tmp += suffix.str();
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + tmp.string() + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error("failed writing '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

/// Identifiers become path components; anything outside [A-Za-z0-9._-] is
/// replaced by '_'.
inline std::string path_component(std::string_view s) {
  std::string out;
  for (char c : s) {
    const bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '_' || c == '-';
    out += ok ? c : '_';
  }
  if (out.empty() || out == "." || out == "..") out = "_" + out;
  return out;
}

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

using WarningSink = std::function<void(const std::string&)>;

inline WarningSink stderr_warnings() {
  return [](const std::string& message) { std::cerr << "warning: " << message << '\n'; };
}

class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path root, WarningSink warn = stderr_warnings())
      : root_(std::move(root)), warn_(std::move(warn)) {
    std::error_code ec;
    std::filesystem::create_directories(root_, ec);
    if (ec || !std::filesystem::is_directory(root_))
      throw ConfigError("cache directory '" + root_.string() + "' is not writable");
  }

  const std::filesystem::path& root() const noexcept { return root_; }

  std::filesystem::path entry_path(std::string_view service_id, std::string_view lane,
                                   std::string_view text) const {
    return root_ / path_component(service_id) / path_component(lane) / (sha256_hex(text) + ".txt");
  }

  /// Stored response, or nullopt on a miss. Damaged entries are reported and
  /// treated as misses.
  std::optional<std::string> lookup(std::string_view service_id, std::string_view lane,
                                    std::string_view text) {
    std::lock_guard lock(mutex_);
    return lookup_locked(entry_path(service_id, lane, text));
  }

  /// Stores a response unless a valid entry already exists.
  void store(std::string_view service_id, std::string_view lane, std::string_view text,
             std::string_view response) {
    std::lock_guard lock(mutex_);
    auto path = entry_path(service_id, lane, text);
    if (valid_entry(path)) return;
    std::filesystem::create_directories(path.parent_path());
    json meta{{"timestamp", utc_timestamp()},
              {"checksum", sha256_hex(response)},
              {"request_sha256", sha256_hex(text)},
              {"service_id", std::string(service_id)},
              {"lane", std::string(lane)}};
    write_file_atomic(path, response);
    write_file_atomic(meta_path(path), meta.dump(2) + "\n");
  }

 private:
  static std::filesystem::path meta_path(std::filesystem::path entry) {
    return entry.replace_extension(".meta");
  }

  bool valid_entry(const std::filesystem::path& path) const {
    try {
      if (!std::filesystem::exists(path) || !std::filesystem::exists(meta_path(path))) return false;
      auto meta = json::parse(read_file(meta_path(path)));
      return meta.at("checksum").get<std::string>() == sha256_hex(read_file(path));
    } catch (const std::exception&) {
      return false;
    }
  }

  std::optional<std::string> lookup_locked(const std::filesystem::path& path) {
    const bool has_entry = std::filesystem::exists(path);
    const bool has_meta = std::filesystem::exists(meta_path(path));
    if (!has_entry && !has_meta) return std::nullopt;
    if (valid_entry(path)) return read_file(path);
    warn_("cache entry " + path.string() + " failed its checksum; refetching");
    std::error_code ec;
    std::filesystem::remove(path, ec);
    std::filesystem::remove(meta_path(path), ec);
    return std::nullopt;
  }

  std::filesystem::path root_;
  WarningSink warn_;
  std::mutex mutex_;
};

/// Serves translations from a ResponseCache, calling through on a miss.
class CachedTranslator final : public TranslationService {
 public:
  CachedTranslator(TranslatorPtr inner, std::shared_ptr<ResponseCache> cache)
      : inner_(std::move(inner)), cache_(std::move(cache)) {}

  const std::string& id() const override { return inner_->id(); }
  std::vector<std::string> supported_languages() const override {
    return inner_->supported_languages();
  }
  bool supports(const std::string& s, const std::string& t) const override {
    return inner_->supports(s, t);
  }

  std::string translate(const std::string& text, const std::string& source,
                        const std::string& target) override {
    const auto lane = source + "-" + target;
    if (auto hit = cache_->lookup(inner_->id(), lane, text)) {
      hits_.fetch_add(1);
      return *hit;
    }
    misses_.fetch_add(1);
    auto response = inner_->translate(text, source, target);
    cache_->store(inner_->id(), lane, text, response);
    return response;
  }

  void begin_block() override { inner_->begin_block(); }
  bool concurrent_safe() const override { return inner_->concurrent_safe(); }

  std::size_t hits() const noexcept { return hits_.load(); }
  std::size_t misses() const noexcept { return misses_.load(); }

 private:
  TranslatorPtr inner_;
  std::shared_ptr<ResponseCache> cache_;
  std::atomic<std::size_t> hits_{0};
  std::atomic<std::size_t> misses_{0};
};

/// Same as CachedTranslator for a text-to-text service; entries live under
/// the "transform" lane.
class CachedService final : public ServiceUnderTest {
 public:
  CachedService(ServicePtr inner, std::shared_ptr<ResponseCache> cache)
      : inner_(std::move(inner)), cache_(std::move(cache)) {}

  const std::string& id() const override { return inner_->id(); }

  std::string transform(const std::string& text) override {
    if (auto hit = cache_->lookup(inner_->id(), "transform", text)) return *hit;
    auto response = inner_->transform(text);
    cache_->store(inner_->id(), "transform", text, response);
    return response;
  }

  void begin_block() override { inner_->begin_block(); }
  bool concurrent_safe() const override { return inner_->concurrent_safe(); }

 private:
  ServicePtr inner_;
  std::shared_ptr<ResponseCache> cache_;
};

inline TranslatorPtr cached(TranslatorPtr translator, const std::filesystem::path& cache_dir,
                            WarningSink warn = stderr_warnings()) {
  return std::make_shared<CachedTranslator>(std::move(translator),
                                            std::make_shared<ResponseCache>(cache_dir, std::move(warn)));
}

inline ServicePtr cached(ServicePtr service, const std::filesystem::path& cache_dir,
                         WarningSink warn = stderr_warnings()) {
  return std::make_shared<CachedService>(std::move(service),
                                         std::make_shared<ResponseCache>(cache_dir, std::move(warn)));
}

}  // namespace biasrate
