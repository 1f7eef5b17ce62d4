#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "maxsim/error.hpp"

namespace maxsim {

// ---------------------------------------------------------------------------
// Requests and replies

/// One encoded image handed to a chat endpoint, ordered by timestamp.
struct EncodedFrame {
  double timestamp_s = 0;
  std::string mime = "image/jpeg";
  std::string data;  // raw bytes; transports base64-encode as needed
};

struct ChatRequest {
  std::optional<std::string> system;
  std::string instruction;
  std::vector<EncodedFrame> frames;
  int max_output_tokens = 512;
  // Decoding is always greedy (temperature 0); there is no knob on purpose.
};

struct ChatReply {
  std::string text;
  /// The endpoint declined to describe the content; `text` is empty and the
  /// sample is recorded as refused rather than failing the run.
  bool refused = false;
};

// ---------------------------------------------------------------------------
// Endpoint interfaces

class ChatEndpoint {
 public:
  virtual ~ChatEndpoint() = default;
  virtual const std::string& model_id() const = 0;
  /// Throws kEndpointUnavailable on transport failure (retryable) and
  /// kParseError on a malformed response body.
  virtual ChatReply complete(const ChatRequest& request) = 0;
};

class EmbedEndpoint {
 public:
  virtual ~EmbedEndpoint() = default;
  virtual const std::string& model_id() const = 0;
  /// One raw (not necessarily normalized) vector per input, in input order.
  virtual std::vector<std::vector<float>> embed(
      const std::vector<std::string>& inputs) = 0;
};

// ---------------------------------------------------------------------------
// Retry policy

/// Bounded exponential backoff around transient endpoint failures:
/// 5 attempts spaced 1-2-4-8-16 s by default, each delay jittered upward by
/// as much as a quarter. Only kEndpointUnavailable is considered transient.
struct RetryPolicy {
  int attempts = 5;
  int base_delay_ms = 1000;
  double jitter = 0.25;
  std::uint64_t jitter_seed = 0x9e3779b97f4a7c15ull;
  /// Injection point so tests run without wall-clock delays.
  std::function<void(int)> sleep_ms;
};

namespace detail {
void default_sleep_ms(int ms);
}

template <typename F>
auto retry_with_backoff(const RetryPolicy& policy, F&& fn) -> decltype(fn()) {
  std::mt19937_64 rng(policy.jitter_seed);
  int delay = policy.base_delay_ms;
  for (int attempt = 1;; ++attempt) {
    try {
      return fn();
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kEndpointUnavailable ||
          attempt >= policy.attempts) {
        throw;
      }
      double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
      int pause = delay + static_cast<int>(u * policy.jitter * delay);
      if (pause > 0) {
        (policy.sleep_ms ? policy.sleep_ms : detail::default_sleep_ms)(pause);
      }
      delay *= 2;
    }
  }
}

// ---------------------------------------------------------------------------
// Deterministic in-process endpoints (base URLs with the mock:// scheme)

/// Chat endpoint whose reply is a pure function of (model_id, system,
/// instruction, frame bytes): a short paragraph of well-formed sentences
/// derived from a digest of the request. Thread-safe; counts calls.
class MockChatEndpoint : public ChatEndpoint {
 public:
  explicit MockChatEndpoint(std::string model_id);
  const std::string& model_id() const override { return model_id_; }
  ChatReply complete(const ChatRequest& request) override;
  std::uint64_t calls() const;

 private:
  std::string model_id_;
  std::atomic_uint64_t calls_{0};
};

/// Embedding endpoint whose raw vector is a pure function of
/// (model_id, dim, text). Vectors are deliberately unnormalized so the
/// caller's normalization is exercised. Thread-safe; counts calls.
class MockEmbedEndpoint : public EmbedEndpoint {
 public:
  MockEmbedEndpoint(std::string model_id, int dim);
  const std::string& model_id() const override { return model_id_; }
  int dim() const { return dim_; }
  std::vector<std::vector<float>> embed(
      const std::vector<std::string>& inputs) override;
  std::uint64_t calls() const;
  std::uint64_t embedded_inputs() const;

 private:
  std::string model_id_;
  int dim_;
  std::atomic_uint64_t calls_{0};
  std::atomic_uint64_t inputs_{0};
};

// ---------------------------------------------------------------------------
// HTTP endpoints (chat-completions / embeddings wire format)

class HttpChatEndpoint : public ChatEndpoint {
 public:
  HttpChatEndpoint(std::string base_url, std::string api_key,
                   std::string model_id);
  ~HttpChatEndpoint() override;
  const std::string& model_id() const override { return model_id_; }
  ChatReply complete(const ChatRequest& request) override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::string model_id_;
};

class HttpEmbedEndpoint : public EmbedEndpoint {
 public:
  HttpEmbedEndpoint(std::string base_url, std::string api_key,
                    std::string model_id);
  ~HttpEmbedEndpoint() override;
  const std::string& model_id() const override { return model_id_; }
  std::vector<std::vector<float>> embed(
      const std::vector<std::string>& inputs) override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::string model_id_;
};

// ---------------------------------------------------------------------------
// Factories

/// mock://chat           -> MockChatEndpoint
/// http(s)://host[/path] -> HttpChatEndpoint
std::unique_ptr<ChatEndpoint> make_chat_endpoint(const std::string& base_url,
                                                 const std::string& api_key,
                                                 const std::string& model_id);

/// mock://embed/<dim>    -> MockEmbedEndpoint (default dim 64)
/// http(s)://host[/path] -> HttpEmbedEndpoint
std::unique_ptr<EmbedEndpoint> make_embed_endpoint(const std::string& base_url,
                                                   const std::string& api_key,
                                                   const std::string& model_id);

/// Base64 of arbitrary bytes (data-URL building block for image parts).
std::string base64_encode(std::string_view bytes);

}  // namespace maxsim
