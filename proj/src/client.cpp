#include "uprop/client.hpp"

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <mutex>
#include <random>
#include <thread>

#include "httplib.h"
#include "json.hpp"

namespace uprop::client {

using nlohmann::json;

namespace {

constexpr const char* kCompletionsPath = "/v1/chat/completions";

std::string resolve_api_key(const std::string& env_name) {
  const char* value = std::getenv(env_name.c_str());
  if (!value || *value == '\0') {
    throw CredentialError("environment variable " + env_name +
                          " is not set; cannot authenticate");
  }
  return value;
}

void backoff_sleep(double base_seconds, int attempt) {
  // Exponential backoff with multiplicative jitter in [0.5, 1.5).
  static thread_local std::mt19937_64 jitter_rng(
      std::random_device{}() ^
      std::hash<std::thread::id>{}(std::this_thread::get_id()));
  std::uniform_real_distribution<double> jitter(0.5, 1.5);
  double seconds = base_seconds * std::pow(2.0, attempt) * jitter(jitter_rng);
  std::this_thread::sleep_for(std::chrono::duration<double>(seconds));
}

Decision decision_from_choice(const json& choice, const std::string& endpoint) {
  Decision d;
  if (choice.contains("message") && choice["message"].contains("content") &&
      choice["message"]["content"].is_string()) {
    d.full_text = choice["message"]["content"].get<std::string>();
  }
  d.action_text = d.full_text;  // orchestrator re-parses per sample
  if (!choice.contains("logprobs") || choice["logprobs"].is_null() ||
      !choice["logprobs"].contains("content") ||
      !choice["logprobs"]["content"].is_array() ||
      choice["logprobs"]["content"].empty()) {
    throw CapabilityError("endpoint " + endpoint +
                          " did not return token log-probabilities");
  }
  for (const auto& tok : choice["logprobs"]["content"]) {
    if (!tok.contains("logprob") || !tok["logprob"].is_number()) {
      throw CapabilityError("endpoint " + endpoint +
                            " returned a token without a logprob field");
    }
    double lp = tok["logprob"].get<double>();
    d.token_logprobs.push_back(std::min(lp, 0.0));
  }
  d.token_count = static_cast<int>(d.token_logprobs.size());
  d.seq_logprob = 0.0;
  for (double lp : d.token_logprobs) d.seq_logprob += lp;
  return d;
}

}  // namespace

LlmClient::LlmClient(ClientConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.max_retries < 0) {
    throw InputError("client: max_retries must be >= 0");
  }
  if (cfg_.max_inflight < 1) {
    throw InputError("client: max_inflight must be >= 1");
  }
}

LlmClient::RequestResult LlmClient::complete(
    const std::vector<ChatMessage>& messages, double temperature,
    int max_tokens, int n) const {
  const std::string endpoint = cfg_.base_url + kCompletionsPath;
  const std::string api_key = resolve_api_key(cfg_.api_key_env);

  json body;
  body["model"] = cfg_.model_ref;
  body["temperature"] = temperature;
  body["max_tokens"] = max_tokens;
  body["logprobs"] = true;
  body["n"] = n;
  json msgs = json::array();
  for (const auto& m : messages) {
    msgs.push_back({{"role", m.role}, {"content", m.content}});
  }
  body["messages"] = std::move(msgs);
  const std::string payload = body.dump();

  int retries = 0;
  std::string last_failure = "no attempt made";
  for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
    if (attempt > 0) {
      ++retries;
      backoff_sleep(cfg_.backoff_base, attempt - 1);
    }
    httplib::Client http(cfg_.base_url);
    http.set_read_timeout(std::chrono::duration<double>(cfg_.request_timeout));
    http.set_connection_timeout(
        std::chrono::duration<double>(cfg_.request_timeout));
    httplib::Headers headers{{"Authorization", "Bearer " + api_key}};
    auto res = http.Post(kCompletionsPath, headers, payload,
                         "application/json");
    if (!res) {
      last_failure = "transport failure: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status == 401 || res->status == 403) {
      throw CredentialError("endpoint " + endpoint +
                            " rejected the credentials (HTTP " +
                            std::to_string(res->status) + ")");
    }
    if (res->status == 429 || res->status >= 500) {
      last_failure = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200) {
      throw TransportError("endpoint " + endpoint + " returned HTTP " +
                           std::to_string(res->status) + ": " + res->body);
    }
    json response;
    try {
      response = json::parse(res->body);
    } catch (const json::parse_error& e) {
      throw TransportError("endpoint " + endpoint +
                           " returned unparseable JSON: " + e.what());
    }
    if (!response.contains("choices") || !response["choices"].is_array() ||
        response["choices"].size() < static_cast<std::size_t>(n)) {
      throw TransportError("endpoint " + endpoint + " returned " +
                           std::to_string(response.value("choices",
                                                         json::array())
                                              .size()) +
                           " choices, expected " + std::to_string(n));
    }
    RequestResult result;
    result.retries = retries;
    for (int i = 0; i < n; ++i) {
      result.decisions.push_back(
          decision_from_choice(response["choices"][i], endpoint));
    }
    return result;
  }
  throw TransportError("endpoint " + endpoint + " failed after " +
                       std::to_string(cfg_.max_retries) +
                       " retries; last error: " + last_failure);
}

SampleOutcome LlmClient::sample_n(const std::vector<ChatMessage>& messages,
                                  int n, const GenConfig& gen) const {
  if (n < 1) throw InputError("sample_n: n must be >= 1");

  SampleOutcome out;
  if (cfg_.batch_samples) {
    RequestResult r =
        complete(messages, gen.temperature, gen.max_new_tokens, n);
    out.decisions = std::move(r.decisions);
    out.total_retries = r.retries;
    return out;
  }

  // n independent single-sample requests, at most max_inflight at a time.
  // Results land by slot index so ordering never depends on arrival.
  out.decisions.resize(n);
  std::atomic<int> next_slot{0};
  std::atomic<int> retry_total{0};
  std::atomic<bool> failed{false};
  std::mutex error_mutex;
  std::exception_ptr first_error;

  auto worker = [&]() {
    while (!failed.load(std::memory_order_relaxed)) {
      int slot = next_slot.fetch_add(1);
      if (slot >= n) return;
      try {
        RequestResult r =
            complete(messages, gen.temperature, gen.max_new_tokens, 1);
        out.decisions[slot] = std::move(r.decisions.front());
        retry_total.fetch_add(r.retries);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        failed.store(true, std::memory_order_relaxed);
        return;
      }
    }
  };

  int threads = std::min(n, cfg_.max_inflight);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);
  out.total_retries = retry_total.load();
  return out;
}

Decision LlmClient::greedy(const std::vector<ChatMessage>& messages,
                           const GenConfig& gen) const {
  RequestResult r = complete(messages, 0.0, gen.max_new_tokens, 1);
  return std::move(r.decisions.front());
}

}  // namespace uprop::client
