#include "vafs/encoder.hpp"

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <exception>
#include <fstream>
#include <thread>
#include <unordered_map>

#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <json.hpp>

#include "vafs/image_io.hpp"
#include "vafs/rng.hpp"

namespace vafs {

using nlohmann::json;

// --- Encoder ----------------------------------------------------------------

FeatureVector Encoder::accept(std::vector<double> raw) const {
  if (raw.size() != dimension()) {
    throw EncoderError("encoder returned dimension " + std::to_string(raw.size()) + ", expected " +
                       std::to_string(dimension()));
  }
  FeatureVector v(std::move(raw));
  if (!v.finite()) throw EncoderError("encoder returned a non-finite embedding");
  if (!(v.norm() > 0.0)) throw EncoderError("encoder returned a zero embedding");
  return v.normalized();
}

FeatureVector Encoder::embed_image(const Image& image) {
  if (image.empty()) throw DataError("embed_image: empty image");
  ++image_calls_;
  return accept(encode_image(image));
}

std::vector<FeatureVector> Encoder::embed_images(std::span<const Image> images) {
  for (const auto& im : images) {
    if (im.empty()) throw DataError("embed_images: empty image");
  }
  image_calls_ += images.size();
  auto raw = encode_image_batch(images);
  std::vector<FeatureVector> out;
  out.reserve(raw.size());
  for (auto& r : raw) out.push_back(accept(std::move(r)));
  return out;
}

FeatureVector Encoder::embed_text(std::string_view text) {
  ++text_calls_;
  return accept(encode_text(text));
}

std::vector<std::vector<double>> Encoder::encode_image_batch(std::span<const Image> images) {
  std::vector<std::vector<double>> out(images.size());
  const std::size_t workers = std::min(std::max<std::size_t>(max_concurrent_requests(), 1), images.size());
  if (workers <= 1) {
    for (std::size_t i = 0; i < images.size(); ++i) out[i] = encode_image(images[i]);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < images.size(); i = next++) {
          try {
            out[i] = encode_image(images[i]);
          } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!error) error = std::current_exception();
          }
        }
      });
    }
  }
  if (error) std::rethrow_exception(error);
  return out;
}

// --- hashing ----------------------------------------------------------------

namespace {

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

std::uint64_t fnv1a(std::uint64_t h, const std::uint8_t* data, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    h ^= data[i];
    h *= kFnvPrime;
  }
  return h;
}

std::uint64_t fnv1a_u32(std::uint64_t h, std::uint32_t v) {
  const std::uint8_t b[4] = {static_cast<std::uint8_t>(v), static_cast<std::uint8_t>(v >> 8),
                             static_cast<std::uint8_t>(v >> 16), static_cast<std::uint8_t>(v >> 24)};
  return fnv1a(h, b, 4);
}

}  // namespace

std::uint64_t image_hash(const Image& image) {
  const std::uint8_t tag = 'I';
  std::uint64_t h = fnv1a(kFnvOffset, &tag, 1);
  h = fnv1a_u32(h, static_cast<std::uint32_t>(image.width));
  h = fnv1a_u32(h, static_cast<std::uint32_t>(image.height));
  return fnv1a(h, image.pixels.data(), image.pixels.size());
}

std::uint64_t text_hash(std::string_view text) {
  const std::uint8_t tag = 'T';
  const std::uint64_t h = fnv1a(kFnvOffset, &tag, 1);
  return fnv1a(h, reinterpret_cast<const std::uint8_t*>(text.data()), text.size());
}

std::vector<double> hash_vector(std::uint64_t hash, std::size_t dim) {
  std::vector<double> v(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    const std::uint64_t bits = mix64(hash + (i + 1) * 0x9E3779B97F4A7C15ULL);
    v[i] = 2.0 * (static_cast<double>(bits >> 11) * 0x1.0p-53) - 1.0;
  }
  return v;
}

// --- MockEncoder --------------------------------------------------------------

MockEncoder::MockEncoder(std::size_t dim, std::chrono::microseconds latency, std::size_t max_concurrent)
    : dim_(dim), latency_(latency), max_concurrent_(std::max<std::size_t>(max_concurrent, 1)) {
  if (dim_ < 2) throw DataError("encoder dimension must be >= 2");
}

std::vector<double> MockEncoder::encode_image(const Image& image) {
  if (latency_.count() > 0) std::this_thread::sleep_for(latency_);
  return hash_vector(image_hash(image), dim_);
}

std::vector<double> MockEncoder::encode_text(std::string_view text) {
  if (latency_.count() > 0) std::this_thread::sleep_for(latency_);
  return hash_vector(text_hash(text), dim_);
}

// --- FixtureEncoder -----------------------------------------------------------

FixtureEncoder::FixtureEncoder(std::size_t dim, std::vector<FixtureEntry> entries)
    : dim_(dim), entries_(std::move(entries)) {
  if (dim_ < 2) throw DataError("encoder dimension must be >= 2");
  for (const auto& e : entries_) {
    if (e.embedding.size() != dim_) throw DataError("fixture entry '" + e.key + "' has the wrong dimension");
  }
}

std::unique_ptr<FixtureEncoder> FixtureEncoder::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open fixture file " + path.string());
  try {
    const json doc = json::parse(in);
    const auto dim = doc.at("dim").get<std::size_t>();
    std::vector<FixtureEntry> entries;
    for (const auto& e : doc.at("entries")) {
      FixtureEntry fe;
      fe.key = e.at("key").get<std::string>();
      if (e.contains("color")) {
        const auto c = e.at("color").get<std::vector<double>>();
        if (c.size() != 3) throw DataError("fixture entry '" + fe.key + "': color must have 3 channels");
        fe.color = to_rgb8({c[0], c[1], c[2]});
      }
      fe.embedding = e.at("embedding").get<std::vector<double>>();
      entries.push_back(std::move(fe));
    }
    return std::make_unique<FixtureEncoder>(dim, std::move(entries));
  } catch (const json::exception& e) {
    throw DataError("fixture file " + path.string() + ": " + e.what());
  }
}

void FixtureEncoder::save(const std::filesystem::path& path) const {
  json doc;
  doc["dim"] = dim_;
  doc["entries"] = json::array();
  for (const auto& e : entries_) {
    json j = {{"key", e.key}, {"embedding", e.embedding}};
    if (e.color) j["color"] = {e.color->r / 255.0, e.color->g / 255.0, e.color->b / 255.0};
    doc["entries"].push_back(j);
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out << doc.dump(2) << '\n';
}

bool FixtureEncoder::has_text_entry(std::string_view text) const {
  return std::any_of(entries_.begin(), entries_.end(), [&](const FixtureEntry& e) { return e.key == text; });
}

std::optional<Rgb8> FixtureEncoder::dominant_color(const Image& image) {
  std::unordered_map<std::uint32_t, std::size_t> counts;
  for (std::size_t i = 0; i < image.pixels.size(); i += 3) {
    const Rgb8 c{image.pixels[i], image.pixels[i + 1], image.pixels[i + 2]};
    if (c == kBackground) continue;
    ++counts[(std::uint32_t{c.r} << 16) | (std::uint32_t{c.g} << 8) | c.b];
  }
  if (counts.empty()) return std::nullopt;
  std::uint32_t best = 0;
  std::size_t best_count = 0;
  for (const auto& [packed, n] : counts) {
    if (n > best_count || (n == best_count && packed < best)) {
      best = packed;
      best_count = n;
    }
  }
  return Rgb8{static_cast<std::uint8_t>(best >> 16), static_cast<std::uint8_t>(best >> 8), static_cast<std::uint8_t>(best)};
}

std::vector<double> FixtureEncoder::encode_image(const Image& image) {
  const auto dominant = dominant_color(image);
  const FixtureEntry* best = nullptr;
  int best_d = 0;
  if (dominant) {
    for (const auto& e : entries_) {
      if (!e.color) continue;
      const int dr = int{e.color->r} - dominant->r, dg = int{e.color->g} - dominant->g, db = int{e.color->b} - dominant->b;
      const int d = dr * dr + dg * dg + db * db;
      if (!best || d < best_d) {
        best = &e;
        best_d = d;
      }
    }
  }
  if (best) return best->embedding;
  return hash_vector(image_hash(image), dim_);
}

std::vector<double> FixtureEncoder::encode_text(std::string_view text) {
  for (const auto& e : entries_) {
    if (e.key == text) return e.embedding;
  }
  return hash_vector(text_hash(text), dim_);
}

// --- ExternalEncoder ----------------------------------------------------------

ExternalEncoder::ExternalEncoder(const std::string& command, std::size_t max_concurrent,
                                 std::chrono::milliseconds timeout)
    : max_concurrent_(std::max<std::size_t>(max_concurrent, 1)), timeout_(timeout) {
  int in_pair[2];
  int out_pair[2];
  if (::socketpair(AF_UNIX, SOCK_STREAM, 0, in_pair) != 0 || ::socketpair(AF_UNIX, SOCK_STREAM, 0, out_pair) != 0) {
    throw EncoderError(std::string("socketpair failed: ") + std::strerror(errno));
  }
  pid_ = ::fork();
  if (pid_ < 0) throw EncoderError(std::string("fork failed: ") + std::strerror(errno));
  if (pid_ == 0) {
    ::dup2(in_pair[1], STDIN_FILENO);
    ::dup2(out_pair[1], STDOUT_FILENO);
    ::close(in_pair[0]);
    ::close(in_pair[1]);
    ::close(out_pair[0]);
    ::close(out_pair[1]);
    ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::close(in_pair[1]);
  ::close(out_pair[1]);
  to_child_ = in_pair[0];
  from_child_ = out_pair[0];

  try {
    const json hello = json::parse(read_line());
    dim_ = hello.at("dim").get<std::size_t>();
    if (dim_ < 2) throw EncoderError("encoder handshake announced dimension < 2");
  } catch (const json::exception& e) {
    shutdown();
    throw EncoderError(std::string("malformed encoder handshake: ") + e.what());
  } catch (...) {
    shutdown();
    throw;
  }
}

ExternalEncoder::~ExternalEncoder() { shutdown(); }

void ExternalEncoder::shutdown() {
  if (to_child_ >= 0) ::close(to_child_);
  if (from_child_ >= 0) ::close(from_child_);
  to_child_ = from_child_ = -1;
  if (pid_ > 0) {
    const int pid = pid_;
    pid_ = -1;
    int status = 0;
    for (int i = 0; i < 200; ++i) {
      if (::waitpid(pid, &status, WNOHANG) != 0) return;
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    ::kill(pid, SIGTERM);
    ::waitpid(pid, &status, 0);
  }
}

void ExternalEncoder::send_line(const std::string& line) {
  std::string data = line + "\n";
  std::size_t off = 0;
  while (off < data.size()) {
    const auto n = ::send(to_child_, data.data() + off, data.size() - off, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw EncoderError(std::string("write to encoder failed: ") + std::strerror(errno));
    }
    off += static_cast<std::size_t>(n);
  }
}

std::string ExternalEncoder::read_line() {
  const auto deadline = std::chrono::steady_clock::now() + timeout_;
  while (true) {
    const auto nl = buffer_.find('\n');
    if (nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      return line;
    }
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) throw EncoderError("encoder response timed out");
    pollfd pfd{from_child_, POLLIN, 0};
    const int r = ::poll(&pfd, 1, static_cast<int>(left.count()));
    if (r < 0 && errno == EINTR) continue;
    if (r < 0) throw EncoderError(std::string("poll failed: ") + std::strerror(errno));
    if (r == 0) throw EncoderError("encoder response timed out");
    char chunk[65536];
    const auto n = ::read(from_child_, chunk, sizeof(chunk));
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) throw EncoderError("encoder process closed its output");
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

std::vector<std::vector<double>> ExternalEncoder::round_trip(const std::vector<Request>& requests) {
  std::lock_guard lock(mutex_);
  std::vector<std::vector<double>> out(requests.size());
  std::unordered_map<std::int64_t, std::size_t> pending;  // id -> slot
  std::optional<EncoderError> first_error;
  std::size_t sent = 0;

  auto send_next = [&] {
    const std::int64_t id = next_id_++;
    const json req = {{"id", id}, {"kind", requests[sent].kind}, {"dim", dim_}, {"payload", requests[sent].payload}};
    send_line(req.dump());
    pending.emplace(id, sent++);
  };

  // Transport and protocol failures leave the stream out of step, so the process is stopped and
  // the error is tagged with the oldest outstanding request.
  auto broken = [&](const std::string& what, std::optional<std::int64_t> id = std::nullopt) {
    if (!id && !pending.empty()) {
      id = std::min_element(pending.begin(), pending.end())->first;
    }
    shutdown();
    return EncoderError(what, id);
  };

  if (to_child_ < 0) throw EncoderError("encoder process is not running");
  try {
    while (sent < requests.size() && pending.size() < max_concurrent_) send_next();
  } catch (const EncoderError& e) {
    throw broken(e.what());
  }
  while (!pending.empty()) {
    json resp;
    try {
      resp = json::parse(read_line());
    } catch (const json::exception& e) {
      throw broken(std::string("malformed encoder response: ") + e.what());
    } catch (const EncoderError& e) {
      throw broken(e.what());
    }
    std::int64_t id = 0;
    try {
      id = resp.at("id").get<std::int64_t>();
    } catch (const json::exception&) {
      throw broken("encoder response without an id");
    }
    const auto it = pending.find(id);
    if (it == pending.end()) throw broken("encoder response for unknown or duplicate id", id);
    const std::size_t slot = it->second;
    pending.erase(it);
    if (resp.contains("error")) {
      if (!first_error) first_error.emplace("encoder error: " + resp.at("error").dump(), id);
    } else {
      try {
        out[slot] = resp.at("embedding").get<std::vector<double>>();
      } catch (const json::exception&) {
        if (!first_error) first_error.emplace("encoder response without an embedding", id);
      }
    }
    // after an error, drain what is outstanding but send nothing new
    if (!first_error && sent < requests.size()) {
      try {
        send_next();
      } catch (const EncoderError& e) {
        throw broken(e.what());
      }
    }
  }
  if (first_error) throw *first_error;
  return out;
}

std::vector<double> ExternalEncoder::encode_image(const Image& image) {
  const auto png = encode_png(image);
  return round_trip({{"image", base64_encode(png)}}).front();
}

std::vector<double> ExternalEncoder::encode_text(std::string_view text) {
  return round_trip({{"text", std::string(text)}}).front();
}

std::vector<std::vector<double>> ExternalEncoder::encode_image_batch(std::span<const Image> images) {
  std::vector<Request> reqs;
  reqs.reserve(images.size());
  for (const auto& im : images) reqs.push_back({"image", base64_encode(encode_png(im))});
  return round_trip(reqs);
}

// --- factory ----------------------------------------------------------------

std::unique_ptr<Encoder> make_encoder(std::string_view spec, std::chrono::microseconds mock_latency,
                                      std::size_t mock_concurrency) {
  auto rest = [&](std::string_view prefix) { return std::string(spec.substr(prefix.size())); };
  if (spec == "mock") return std::make_unique<MockEncoder>(64, mock_latency, mock_concurrency);
  if (spec.starts_with("mock:")) {
    std::size_t dim = 0;
    try {
      dim = std::stoul(rest("mock:"));
    } catch (const std::exception&) {
      throw DataError("bad mock encoder dimension in '" + std::string(spec) + "'");
    }
    return std::make_unique<MockEncoder>(dim, mock_latency, mock_concurrency);
  }
  if (spec.starts_with("fixture:")) return FixtureEncoder::load(rest("fixture:"));
  if (spec.starts_with("external:")) return std::make_unique<ExternalEncoder>(rest("external:"));
  throw DataError("unknown encoder '" + std::string(spec) + "' (expected mock, fixture:PATH or external:CMD)");
}

}  // namespace vafs
