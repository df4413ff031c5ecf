#pragma once

// Sampling client for any OpenAI-compatible chat-completions endpoint.
// Requests per-token log-probabilities and returns fully populated
// Decisions. Transient failures (429, 5xx, transport) retry with
// exponential backoff and jitter; authentication failures never retry;
// responses without logprobs raise a capability error naming the endpoint.

#include <string>
#include <vector>

#include "uprop/model.hpp"

namespace uprop::client {

struct ClientConfig {
  std::string base_url;                       // e.g. "http://127.0.0.1:8080"
  std::string api_key_env = "UPROP_API_KEY";  // env var holding the bearer token
  std::string model_ref;
  double request_timeout = 120.0;  // seconds
  int max_retries = 5;
  double backoff_base = 1.0;  // seconds; grows exponentially with jitter
  int max_inflight = 8;
  bool batch_samples = false;  // true: one n-parameterized request
};

struct ChatMessage {
  std::string role;  // system | user | assistant
  std::string content;
};

struct SampleOutcome {
  std::vector<Decision> decisions;  // exactly n, ordered by request slot
  int total_retries = 0;
};

class LlmClient {
public:
  explicit LlmClient(ClientConfig cfg);

  // Draws n samples at gen.temperature. Never returns a partial list.
  SampleOutcome sample_n(const std::vector<ChatMessage>& messages, int n,
                         const GenConfig& gen) const;

  // Single completion at temperature 0.
  Decision greedy(const std::vector<ChatMessage>& messages,
                  const GenConfig& gen) const;

  const ClientConfig& config() const { return cfg_; }

private:
  struct RequestResult {
    std::vector<Decision> decisions;
    int retries = 0;
  };
  RequestResult complete(const std::vector<ChatMessage>& messages,
                         double temperature, int max_tokens, int n) const;

  ClientConfig cfg_;
};

}  // namespace uprop::client
