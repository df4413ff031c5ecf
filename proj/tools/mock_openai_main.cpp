// Standalone scripted chat-completions endpoint for manual runs against the
// llm-client backend. Tests embed the same server in-process.

#include <csignal>
#include <iostream>

#include "CLI11.hpp"
#include "mock_openai_server.hpp"

int main(int argc, char** argv) {
  CLI::App app{"scripted OpenAI-compatible mock endpoint"};
  std::string text = "Think: done.\n\nAct: answer(42)";
  std::string logprobs = "-0.25,-0.5";
  app.add_option("--text", text, "completion text to serve");
  app.add_option("--logprobs", logprobs, "comma-separated token logprobs");

  CLI11_PARSE(app, argc, argv);

  uprop::mock::MockScript script;
  script.texts = {text};
  script.logprobs = {{}};
  std::stringstream ss(logprobs);
  std::string item;
  while (std::getline(ss, item, ',')) {
    script.logprobs[0].push_back(std::stod(item));
  }

  uprop::mock::MockOpenAiServer server(script);
  std::cout << "listening on " << server.base_url() << std::endl;
  std::cout << "POST /v1/chat/completions (Ctrl-C to stop)" << std::endl;
  ::pause();
  return 0;
}
