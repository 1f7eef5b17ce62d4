#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "maxsim/endpoints.hpp"

#include <chrono>
#include <cstdio>
#include <iterator>
#include <thread>

#include "httplib.h"
#include "maxsim/digest.hpp"
#include "maxsim/jsonl.hpp"

namespace maxsim {

namespace detail {
void default_sleep_ms(int ms) {
  std::this_thread::sleep_for(std::chrono::milliseconds(ms));
}
}  // namespace detail

std::string base64_encode(std::string_view bytes) {
  static constexpr char kAlphabet[] =
      "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  size_t i = 0;
  for (; i + 3 <= bytes.size(); i += 3) {
    std::uint32_t v = (static_cast<unsigned char>(bytes[i]) << 16) |
                      (static_cast<unsigned char>(bytes[i + 1]) << 8) |
                      static_cast<unsigned char>(bytes[i + 2]);
    out.push_back(kAlphabet[(v >> 18) & 63]);
    out.push_back(kAlphabet[(v >> 12) & 63]);
    out.push_back(kAlphabet[(v >> 6) & 63]);
    out.push_back(kAlphabet[v & 63]);
  }
  if (i + 1 == bytes.size()) {
    std::uint32_t v = static_cast<unsigned char>(bytes[i]) << 16;
    out.push_back(kAlphabet[(v >> 18) & 63]);
    out.push_back(kAlphabet[(v >> 12) & 63]);
    out += "==";
  } else if (i + 2 == bytes.size()) {
    std::uint32_t v = (static_cast<unsigned char>(bytes[i]) << 16) |
                      (static_cast<unsigned char>(bytes[i + 1]) << 8);
    out.push_back(kAlphabet[(v >> 18) & 63]);
    out.push_back(kAlphabet[(v >> 12) & 63]);
    out.push_back(kAlphabet[(v >> 6) & 63]);
    out.push_back('=');
  }
  return out;
}

// ---------------------------------------------------------------------------
// Mock endpoints

namespace {

// First 8 bytes of the hex digest as a deterministic 64-bit seed.
std::uint64_t seed_from_hex(const std::string& hex) {
  std::uint64_t seed = 0;
  for (int i = 0; i < 16 && i < static_cast<int>(hex.size()); ++i) {
    char c = hex[i];
    int nibble = c <= '9' ? c - '0' : c - 'a' + 10;
    seed = (seed << 4) | static_cast<std::uint64_t>(nibble);
  }
  return seed;
}

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace

MockChatEndpoint::MockChatEndpoint(std::string model_id)
    : model_id_(std::move(model_id)) {}

std::uint64_t MockChatEndpoint::calls() const { return calls_.load(); }

ChatReply MockChatEndpoint::complete(const ChatRequest& request) {
  calls_.fetch_add(1);
  Sha256 digest;
  digest.field(model_id_);
  digest.field(request.system.value_or(""));
  digest.field(request.instruction);
  digest.field_u64(request.frames.size());
  for (const auto& frame : request.frames) {
    char stamp[32];
    std::snprintf(stamp, sizeof(stamp), "%.6f", frame.timestamp_s);
    digest.field(stamp);
    digest.field(frame.mime);
    digest.field(frame.data);
  }
  std::mt19937_64 rng(seed_from_hex(digest.hex()));

  // Sentence fragments chosen to be splitter-neutral: plain words, one
  // terminal period per sentence, no digits or abbreviations.
  static const char* kSubjects[] = {"A worker", "The driver", "A pedestrian",
                                    "The subject", "A passenger",
                                    "The figure"};
  static const char* kMotions[] = {
      "approaches the parked vehicle",  "moves along the painted lane",
      "shifts toward the loading area", "crosses the open lot",
      "lingers beside the barrier",     "circles the light pole",
      "pauses near the ramp",           "walks past the gate"};
  static const char* kDetails[] = {
      "carrying a small bundle", "under an overcast sky",
      "while glancing around",   "at a steady pace",
      "near the camera mast",    "beside a concrete wall",
      "holding the railing",     "without stopping"};

  int sentences = 2 + static_cast<int>(rng() % 3);
  std::string text;
  for (int s = 0; s < sentences; ++s) {
    if (s > 0) text += ' ';
    text += kSubjects[rng() % std::size(kSubjects)];
    text += ' ';
    text += kMotions[rng() % std::size(kMotions)];
    text += ' ';
    text += kDetails[rng() % std::size(kDetails)];
    text += '.';
  }
  return {text, false};
}

MockEmbedEndpoint::MockEmbedEndpoint(std::string model_id, int dim)
    : model_id_(std::move(model_id)), dim_(dim) {
  if (dim < 1) {
    throw Error(ErrorCode::kConfigError,
                "mock embedder dim must be positive, got " +
                    std::to_string(dim));
  }
}

std::uint64_t MockEmbedEndpoint::calls() const { return calls_.load(); }
std::uint64_t MockEmbedEndpoint::embedded_inputs() const {
  return inputs_.load();
}

std::vector<std::vector<float>> MockEmbedEndpoint::embed(
    const std::vector<std::string>& inputs) {
  calls_.fetch_add(1);
  inputs_.fetch_add(inputs.size());
  std::vector<std::vector<float>> out;
  out.reserve(inputs.size());
  for (const auto& text : inputs) {
    Sha256 digest;
    digest.field(model_id_);
    digest.field_u64(static_cast<std::uint64_t>(dim_));
    digest.field(text);
    std::mt19937_64 rng(seed_from_hex(digest.hex()));
    std::vector<float> v(static_cast<size_t>(dim_));
    for (auto& x : v) {
      x = static_cast<float>(uniform01(rng) * 2.0 - 1.0);
    }
    out.push_back(std::move(v));
  }
  return out;
}

// ---------------------------------------------------------------------------
// HTTP endpoints

namespace {

struct ParsedBase {
  std::string origin;  // scheme://host[:port] for the client
  std::string prefix;  // path prefix, "" or "/v1" style
};

ParsedBase parse_base_url(const std::string& base_url) {
  auto scheme_end = base_url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorCode::kConfigError,
                "endpoint base URL lacks a scheme: " + base_url);
  }
  auto path_start = base_url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {base_url, ""};
  std::string prefix = base_url.substr(path_start);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  return {base_url.substr(0, path_start), prefix};
}

class HttpJsonClient {
 public:
  HttpJsonClient(const std::string& base_url, std::string api_key)
      : base_(parse_base_url(base_url)),
        client_(base_.origin),
        api_key_(std::move(api_key)) {
    client_.set_connection_timeout(30);
    client_.set_read_timeout(300);
    client_.set_write_timeout(300);
  }

  Json post(const std::string& route, const Json& body) {
    httplib::Headers headers;
    if (!api_key_.empty()) {
      headers.emplace("Authorization", "Bearer " + api_key_);
    }
    auto res = client_.Post(base_.prefix + route, headers, body.dump(),
                            "application/json");
    if (!res) {
      throw Error(ErrorCode::kEndpointUnavailable,
                  "no response from " + base_.origin + base_.prefix + route +
                      " (" + httplib::to_string(res.error()) + ")");
    }
    if (res->status != 200) {
      throw Error(ErrorCode::kEndpointUnavailable,
                  "status " + std::to_string(res->status) + " from " + route +
                      ": " + res->body.substr(0, 200));
    }
    Json parsed = Json::parse(res->body, nullptr, false);
    if (parsed.is_discarded()) {
      throw Error(ErrorCode::kParseError,
                  "non-JSON body from " + route + ": " +
                      res->body.substr(0, 200));
    }
    return parsed;
  }

 private:
  ParsedBase base_;
  httplib::Client client_;
  std::string api_key_;
};

}  // namespace

struct HttpChatEndpoint::Impl {
  HttpJsonClient client;
  Impl(const std::string& base_url, std::string api_key)
      : client(base_url, std::move(api_key)) {}
};

HttpChatEndpoint::HttpChatEndpoint(std::string base_url, std::string api_key,
                                   std::string model_id)
    : impl_(std::make_unique<Impl>(base_url, std::move(api_key))),
      model_id_(std::move(model_id)) {}

HttpChatEndpoint::~HttpChatEndpoint() = default;

ChatReply HttpChatEndpoint::complete(const ChatRequest& request) {
  Json messages = Json::array();
  if (request.system && !request.system->empty()) {
    messages.push_back({{"role", "system"}, {"content", *request.system}});
  }
  Json parts = Json::array();
  parts.push_back({{"type", "text"}, {"text", request.instruction}});
  for (const auto& frame : request.frames) {
    std::string url =
        "data:" + frame.mime + ";base64," + base64_encode(frame.data);
    parts.push_back(
        {{"type", "image_url"}, {"image_url", {{"url", std::move(url)}}}});
  }
  messages.push_back({{"role", "user"}, {"content", std::move(parts)}});

  Json body = {{"model", model_id_},
               {"messages", std::move(messages)},
               {"temperature", 0.0},
               {"max_tokens", request.max_output_tokens}};
  Json reply = impl_->client.post("/chat/completions", body);

  if (!reply.contains("choices") || !reply["choices"].is_array() ||
      reply["choices"].empty()) {
    throw Error(ErrorCode::kParseError,
                "chat response has no choices: " + reply.dump().substr(0, 200));
  }
  const Json& choice = reply["choices"][0];
  const Json& message = choice.value("message", Json::object());
  if (message.contains("refusal") && message["refusal"].is_string() &&
      !message["refusal"].get<std::string>().empty()) {
    return {"", true};
  }
  if (choice.value("finish_reason", "") == "content_filter") {
    return {"", true};
  }
  if (!message.contains("content") || !message["content"].is_string()) {
    throw Error(ErrorCode::kParseError, "chat response message has no text");
  }
  return {message["content"].get<std::string>(), false};
}

struct HttpEmbedEndpoint::Impl {
  HttpJsonClient client;
  Impl(const std::string& base_url, std::string api_key)
      : client(base_url, std::move(api_key)) {}
};

HttpEmbedEndpoint::HttpEmbedEndpoint(std::string base_url, std::string api_key,
                                     std::string model_id)
    : impl_(std::make_unique<Impl>(base_url, std::move(api_key))),
      model_id_(std::move(model_id)) {}

HttpEmbedEndpoint::~HttpEmbedEndpoint() = default;

std::vector<std::vector<float>> HttpEmbedEndpoint::embed(
    const std::vector<std::string>& inputs) {
  Json body = {{"model", model_id_}, {"input", inputs}};
  Json reply = impl_->client.post("/embeddings", body);
  if (!reply.contains("data") || !reply["data"].is_array() ||
      reply["data"].size() != inputs.size()) {
    throw Error(ErrorCode::kParseError,
                "embedding response data size mismatch for " +
                    std::to_string(inputs.size()) + " inputs");
  }
  std::vector<std::vector<float>> out(inputs.size());
  for (const Json& item : reply["data"]) {
    if (!item.contains("embedding") || !item["embedding"].is_array()) {
      throw Error(ErrorCode::kParseError, "embedding item without vector");
    }
    size_t index = item.value("index", out.size());
    if (index >= out.size()) {
      throw Error(ErrorCode::kParseError, "embedding index out of range");
    }
    out[index] = item["embedding"].get<std::vector<float>>();
  }
  for (size_t i = 0; i < out.size(); ++i) {
    if (out[i].empty()) {
      throw Error(ErrorCode::kParseError,
                  "embedding response missing input " + std::to_string(i));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Factories

namespace {

bool has_prefix(const std::string& s, std::string_view prefix) {
  return s.size() >= prefix.size() &&
         std::string_view(s).substr(0, prefix.size()) == prefix;
}

}  // namespace

std::unique_ptr<ChatEndpoint> make_chat_endpoint(const std::string& base_url,
                                                 const std::string& api_key,
                                                 const std::string& model_id) {
  if (has_prefix(base_url, "mock://")) {
    return std::make_unique<MockChatEndpoint>(model_id);
  }
  if (has_prefix(base_url, "http://") || has_prefix(base_url, "https://")) {
    return std::make_unique<HttpChatEndpoint>(base_url, api_key, model_id);
  }
  throw Error(ErrorCode::kConfigError,
              "unsupported chat endpoint URL: " + base_url);
}

std::unique_ptr<EmbedEndpoint> make_embed_endpoint(const std::string& base_url,
                                                   const std::string& api_key,
                                                   const std::string& model_id) {
  if (has_prefix(base_url, "mock://")) {
    // mock://embed/<dim>; the dimension segment is optional.
    int dim = 64;
    auto last = base_url.rfind('/');
    if (last != std::string::npos && last + 1 < base_url.size()) {
      const std::string tail = base_url.substr(last + 1);
      if (!tail.empty() &&
          tail.find_first_not_of("0123456789") == std::string::npos) {
        dim = std::stoi(tail);
      }
    }
    return std::make_unique<MockEmbedEndpoint>(model_id, dim);
  }
  if (has_prefix(base_url, "http://") || has_prefix(base_url, "https://")) {
    return std::make_unique<HttpEmbedEndpoint>(base_url, api_key, model_id);
  }
  throw Error(ErrorCode::kConfigError,
              "unsupported embedding endpoint URL: " + base_url);
}

}  // namespace maxsim
