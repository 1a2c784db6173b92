#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vafs/core.hpp"

namespace vafs {

enum class EncoderKind { kMockHash, kFixtureTable, kExternal };

/// Image/text embedding model. Public calls count every request and return unit vectors:
/// raw outputs are checked for dimension and finiteness and re-normalised on receipt.
class Encoder {
 public:
  virtual ~Encoder() = default;

  virtual EncoderKind kind() const = 0;
  virtual std::size_t dimension() const = 0;
  virtual std::size_t max_concurrent_requests() const { return 1; }

  FeatureVector embed_image(const Image& image);
  /// Issues up to max_concurrent_requests() requests at a time; results keep input order.
  std::vector<FeatureVector> embed_images(std::span<const Image> images);
  FeatureVector embed_text(std::string_view text);

  std::size_t image_calls() const { return image_calls_.load(); }
  std::size_t text_calls() const { return text_calls_.load(); }

 protected:
  virtual std::vector<double> encode_image(const Image& image) = 0;
  virtual std::vector<double> encode_text(std::string_view text) = 0;
  /// Default: a pool of max_concurrent_requests() threads calling encode_image.
  virtual std::vector<std::vector<double>> encode_image_batch(std::span<const Image> images);

 private:
  FeatureVector accept(std::vector<double> raw) const;

  std::atomic<std::size_t> image_calls_{0};
  std::atomic<std::size_t> text_calls_{0};
};

/// Hash of a kind tag and the payload bytes (FNV-1a 64). Images hash tag 'I', width and height as
/// little-endian uint32, then the pixel bytes; text hashes tag 'T' then the UTF-8 bytes.
std::uint64_t image_hash(const Image& image);
std::uint64_t text_hash(std::string_view text);
/// Component i = 2 * u(splitmix64(hash + (i+1) * 0x9E3779B97F4A7C15)) - 1, before normalisation.
std::vector<double> hash_vector(std::uint64_t hash, std::size_t dim);

/// Deterministic stand-in encoder with an optional fixed latency per request.
class MockEncoder final : public Encoder {
 public:
  explicit MockEncoder(std::size_t dim = 64, std::chrono::microseconds latency = {}, std::size_t max_concurrent = 1);

  EncoderKind kind() const override { return EncoderKind::kMockHash; }
  std::size_t dimension() const override { return dim_; }
  std::size_t max_concurrent_requests() const override { return max_concurrent_; }

 protected:
  std::vector<double> encode_image(const Image& image) override;
  std::vector<double> encode_text(std::string_view text) override;

 private:
  std::size_t dim_;
  std::chrono::microseconds latency_;
  std::size_t max_concurrent_;
};

struct FixtureEntry {
  std::string key;
  std::optional<Rgb8> color;
  std::vector<double> embedding;
};

/// Lookup-table encoder. Images map to the entry whose colour is nearest the dominant
/// non-background pixel colour; text maps to the entry with that exact key. Anything unmatched
/// falls back to the mock-hash vector.
///
/// File format: {"dim": N, "entries": [{"key": "banana", "color": [1, 1, 0], "embedding": [...]}]}
/// with colour channels in [0,1].
class FixtureEncoder final : public Encoder {
 public:
  FixtureEncoder(std::size_t dim, std::vector<FixtureEntry> entries);
  static std::unique_ptr<FixtureEncoder> load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  EncoderKind kind() const override { return EncoderKind::kFixtureTable; }
  std::size_t dimension() const override { return dim_; }
  std::size_t max_concurrent_requests() const override { return 4; }

  bool has_text_entry(std::string_view text) const;
  const std::vector<FixtureEntry>& entries() const { return entries_; }

  /// Most frequent non-background colour; ties go to the smallest packed RGB value.
  static std::optional<Rgb8> dominant_color(const Image& image);

 protected:
  std::vector<double> encode_image(const Image& image) override;
  std::vector<double> encode_text(std::string_view text) override;

 private:
  std::size_t dim_;
  std::vector<FixtureEntry> entries_;
};

/// Talks to an encoder subprocess over line-delimited JSON on its stdin/stdout.
///   handshake (server, first line): {"dim": N}
///   request:  {"id": int, "kind": "image"|"text", "dim": N, "payload": base64 PNG | UTF-8 string}
///   response: {"id": int, "embedding": [N reals]}  or  {"id": int, "error": "..."}
/// Responses may arrive out of order; ids are matched exactly once.
class ExternalEncoder final : public Encoder {
 public:
  /// Runs `command` through /bin/sh -c. Throws EncoderError when the process cannot start or the
  /// handshake does not arrive within the timeout.
  explicit ExternalEncoder(const std::string& command, std::size_t max_concurrent = 4,
                           std::chrono::milliseconds timeout = std::chrono::seconds(60));
  ~ExternalEncoder() override;
  ExternalEncoder(const ExternalEncoder&) = delete;
  ExternalEncoder& operator=(const ExternalEncoder&) = delete;

  EncoderKind kind() const override { return EncoderKind::kExternal; }
  std::size_t dimension() const override { return dim_; }
  std::size_t max_concurrent_requests() const override { return max_concurrent_; }

 protected:
  std::vector<double> encode_image(const Image& image) override;
  std::vector<double> encode_text(std::string_view text) override;
  std::vector<std::vector<double>> encode_image_batch(std::span<const Image> images) override;

 private:
  struct Request {
    std::string kind;
    std::string payload;
  };
  std::vector<std::vector<double>> round_trip(const std::vector<Request>& requests);
  void send_line(const std::string& line);
  void shutdown();
  std::string read_line();

  int pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string buffer_;
  std::size_t dim_ = 0;
  std::size_t max_concurrent_;
  std::chrono::milliseconds timeout_;
  std::int64_t next_id_ = 1;
  std::mutex mutex_;
};

/// "mock", "mock:DIM", "fixture:PATH" or "external:CMD".
std::unique_ptr<Encoder> make_encoder(std::string_view spec, std::chrono::microseconds mock_latency = {},
                                      std::size_t mock_concurrency = 1);

}  // namespace vafs
