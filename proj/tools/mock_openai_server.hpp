#pragma once

// Scripted OpenAI-compatible chat-completions server. Serves canned texts
// with canned token logprobs, can inject 429/5xx failures or withhold
// logprobs, and records every request body for assertions.

#include <atomic>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "httplib.h"
#include "json.hpp"

namespace uprop::mock {

struct MockScript {
  // Completion texts served round-robin (one per generated choice).
  std::vector<std::string> texts = {"Act: answer(42)"};
  // Token logprobs per text (parallel array; reused round-robin too).
  std::vector<std::vector<double>> logprobs = {{-0.25, -0.5}};
  bool omit_logprobs = false;
  int fail_429 = 0;     // respond 429 to this many requests first
  int fail_500 = 0;     // then 500 to this many
  bool reject_auth = false;
};

class MockOpenAiServer {
public:
  explicit MockOpenAiServer(MockScript script = {}) : script_(script) {
    fail_429_left_ = script_.fail_429;
    fail_500_left_ = script_.fail_500;
    server_.Post("/v1/chat/completions",
                 [this](const httplib::Request& req, httplib::Response& res) {
                   handle(req, res);
                 });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~MockOpenAiServer() {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }

  int port() const { return port_; }
  std::string base_url() const {
    return "http://127.0.0.1:" + std::to_string(port_);
  }

  std::vector<nlohmann::json> requests() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return requests_;
  }

  int request_count() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return static_cast<int>(requests_.size());
  }

private:
  void handle(const httplib::Request& req, httplib::Response& res) {
    {
      std::lock_guard<std::mutex> lock(mutex_);
      requests_.push_back(nlohmann::json::parse(req.body, nullptr, false));
    }
    auto auth = req.get_header_value("Authorization");
    if (script_.reject_auth || auth.rfind("Bearer ", 0) != 0) {
      res.status = 401;
      res.set_content(R"({"error":{"message":"bad credentials"}})",
                      "application/json");
      return;
    }
    if (fail_429_left_ > 0) {
      --fail_429_left_;
      res.status = 429;
      res.set_content(R"({"error":{"message":"rate limited"}})",
                      "application/json");
      return;
    }
    if (fail_500_left_ > 0) {
      --fail_500_left_;
      res.status = 500;
      res.set_content(R"({"error":{"message":"server error"}})",
                      "application/json");
      return;
    }

    nlohmann::json body = nlohmann::json::parse(req.body, nullptr, false);
    int n = body.is_object() ? body.value("n", 1) : 1;
    nlohmann::json choices = nlohmann::json::array();
    for (int i = 0; i < n; ++i) {
      int slot = serial_.fetch_add(1);
      const std::string& text = script_.texts[slot % script_.texts.size()];
      const std::vector<double>& lps =
          script_.logprobs[slot % script_.logprobs.size()];
      nlohmann::json choice{
          {"index", i},
          {"message", {{"role", "assistant"}, {"content", text}}},
          {"finish_reason", "stop"}};
      if (!script_.omit_logprobs) {
        nlohmann::json content = nlohmann::json::array();
        for (std::size_t t = 0; t < lps.size(); ++t) {
          content.push_back(
              {{"token", "t" + std::to_string(t)}, {"logprob", lps[t]}});
        }
        choice["logprobs"] = {{"content", std::move(content)}};
      }
      choices.push_back(std::move(choice));
    }
    nlohmann::json response{{"id", "mock-completion"},
                            {"object", "chat.completion"},
                            {"model", body.is_object()
                                          ? body.value("model", "mock")
                                          : "mock"},
                            {"choices", std::move(choices)}};
    res.set_content(response.dump(), "application/json");
  }

  MockScript script_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<int> serial_{0};
  std::atomic<int> fail_429_left_{0};
  std::atomic<int> fail_500_left_{0};
  mutable std::mutex mutex_;
  std::vector<nlohmann::json> requests_;
};

}  // namespace uprop::mock
