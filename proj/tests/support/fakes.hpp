#pragma once

// Scripted endpoint doubles: they replay preset responses, record every
// request they see, and can fail on demand, so tests can assert call
// counts, batch shapes, and retry behavior exactly.

#include <deque>
#include <string>
#include <vector>

#include "maxsim/endpoints.hpp"

namespace fakes {

class ScriptedEmbedEndpoint : public maxsim::EmbedEndpoint {
 public:
  explicit ScriptedEmbedEndpoint(std::string model_id = "scripted-encoder")
      : model_id_(std::move(model_id)) {}

  const std::string& model_id() const override { return model_id_; }

  ScriptedEmbedEndpoint& enqueue(std::vector<std::vector<float>> response) {
    responses_.push_back(std::move(response));
    return *this;
  }

  std::vector<std::vector<float>> embed(
      const std::vector<std::string>& inputs) override {
    requests.push_back(inputs);
    if (responses_.empty()) {
      throw maxsim::Error(maxsim::ErrorCode::kInconsistentInputs,
                          "scripted endpoint ran out of responses");
    }
    auto response = std::move(responses_.front());
    responses_.pop_front();
    return response;
  }

  std::vector<std::vector<std::string>> requests;

 private:
  std::string model_id_;
  std::deque<std::vector<std::vector<float>>> responses_;
};

/// Delegates to an inner endpoint after throwing kEndpointUnavailable for
/// the first `failures` calls.
class FlakyEmbedEndpoint : public maxsim::EmbedEndpoint {
 public:
  FlakyEmbedEndpoint(maxsim::EmbedEndpoint& inner, int failures)
      : inner_(inner), failures_left_(failures) {}

  const std::string& model_id() const override { return inner_.model_id(); }

  std::vector<std::vector<float>> embed(
      const std::vector<std::string>& inputs) override {
    ++attempts;
    if (failures_left_ > 0) {
      --failures_left_;
      throw maxsim::Error(maxsim::ErrorCode::kEndpointUnavailable,
                          "scripted transient failure");
    }
    return inner_.embed(inputs);
  }

  int attempts = 0;

 private:
  maxsim::EmbedEndpoint& inner_;
  int failures_left_;
};

class ScriptedChatEndpoint : public maxsim::ChatEndpoint {
 public:
  explicit ScriptedChatEndpoint(std::string model_id = "scripted-chat")
      : model_id_(std::move(model_id)) {}

  const std::string& model_id() const override { return model_id_; }

  ScriptedChatEndpoint& enqueue(maxsim::ChatReply reply) {
    replies_.push_back(std::move(reply));
    return *this;
  }
  ScriptedChatEndpoint& enqueue_failure() {
    replies_.push_back({std::string("\x01transient"), false});
    return *this;
  }

  maxsim::ChatReply complete(const maxsim::ChatRequest& request) override {
    requests.push_back(request);
    if (replies_.empty()) {
      throw maxsim::Error(maxsim::ErrorCode::kInconsistentInputs,
                          "scripted endpoint ran out of replies");
    }
    auto reply = std::move(replies_.front());
    replies_.pop_front();
    if (!reply.text.empty() && reply.text[0] == '\x01') {
      throw maxsim::Error(maxsim::ErrorCode::kEndpointUnavailable,
                          "scripted transient failure");
    }
    return reply;
  }

  std::vector<maxsim::ChatRequest> requests;

 private:
  std::string model_id_;
  std::deque<maxsim::ChatReply> replies_;
};

/// Retry policy that never sleeps, for tests.
inline maxsim::RetryPolicy instant_retries(int attempts = 5) {
  maxsim::RetryPolicy policy;
  policy.attempts = attempts;
  policy.base_delay_ms = 0;
  policy.sleep_ms = [](int) {};
  return policy;
}

}  // namespace fakes
