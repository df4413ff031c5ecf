#include "uprop/env.hpp"

#include <cerrno>
#include <csignal>
#include <fcntl.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cctype>
#include <cstring>

#include "json.hpp"
#include "uprop/io_util.hpp"
#include "uprop/oracle.hpp"
#include "uprop/textdist.hpp"

namespace uprop::env {

using nlohmann::json;

namespace {

std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

std::string trim_copy(std::string_view s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return std::string();
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

bool word_boundary_before(std::string_view s, std::size_t pos) {
  if (pos == 0) return true;
  unsigned char prev = static_cast<unsigned char>(s[pos - 1]);
  return !std::isalnum(prev);
}

// First keyword occurrence at a word boundary, npos if absent.
std::size_t find_keyword(const std::string& lower, const char* keyword,
                         std::size_t from = 0) {
  std::size_t pos = from;
  while ((pos = lower.find(keyword, pos)) != std::string::npos) {
    if (word_boundary_before(lower, pos)) return pos;
    ++pos;
  }
  return std::string::npos;
}

ParsedAction malformed(const std::string& raw) {
  return ParsedAction{ActionKind::kMalformed, raw};
}

// Extracts the body of the first fenced code block at or after `from`.
std::optional<std::string> fenced_block(const std::string& text,
                                        std::size_t from) {
  std::size_t open = text.find("```", from);
  if (open == std::string::npos) return std::nullopt;
  std::size_t body_start = text.find('\n', open + 3);
  if (body_start == std::string::npos) return std::nullopt;
  ++body_start;
  std::size_t close = text.find("```", body_start);
  if (close == std::string::npos) return std::nullopt;
  return trim_copy(text.substr(body_start, close - body_start));
}

}  // namespace

std::string ParsedAction::canonical() const {
  switch (kind) {
    case ActionKind::kSearch:
      return "Search[" + payload + "]";
    case ActionKind::kLookup:
      return "Lookup[" + payload + "]";
    case ActionKind::kFinish:
      return payload.empty() ? "finish" : "Finish[" + payload + "]";
    case ActionKind::kAnswer:
      return "answer(" + payload + ")";
    case ActionKind::kBash:
      return "bash:" + payload;
    case ActionKind::kMalformed:
      return payload;
  }
  return payload;
}

const char* action_kind_name(ActionKind kind) {
  switch (kind) {
    case ActionKind::kSearch: return "search";
    case ActionKind::kLookup: return "lookup";
    case ActionKind::kFinish: return "finish";
    case ActionKind::kBash: return "bash";
    case ActionKind::kAnswer: return "answer";
    case ActionKind::kMalformed: return "malformed";
  }
  return "malformed";
}

ParsedAction parse_action(const std::string& full_text) {
  const std::string lower = to_lower(full_text);

  // OS-style "Act: <verb>" turns.
  std::size_t act = find_keyword(lower, "act:");
  if (act != std::string::npos) {
    std::size_t p = act + 4;
    while (p < lower.size() && (lower[p] == ' ' || lower[p] == '\t')) ++p;
    std::size_t verb_end = p;
    while (verb_end < lower.size() &&
           std::isalpha(static_cast<unsigned char>(lower[verb_end]))) {
      ++verb_end;
    }
    std::string verb = lower.substr(p, verb_end - p);
    if (verb == "bash") {
      auto body = fenced_block(full_text, verb_end);
      if (!body) return malformed(full_text);
      return ParsedAction{ActionKind::kBash, *body};
    }
    if (verb == "answer") {
      std::size_t open = full_text.find('(', verb_end);
      if (open == std::string::npos) return malformed(full_text);
      std::size_t close = full_text.rfind(')');
      if (close == std::string::npos || close < open) {
        return malformed(full_text);
      }
      return ParsedAction{ActionKind::kAnswer,
                          trim_copy(full_text.substr(open + 1,
                                                     close - open - 1))};
    }
    if (verb == "finish") {
      return ParsedAction{ActionKind::kFinish, std::string()};
    }
    // Unknown verb after "Act:": fall through to the bracketed forms.
  }

  // ReAct-style bracketed forms; earliest keyword wins.
  struct Candidate {
    const char* keyword;
    ActionKind kind;
  };
  constexpr Candidate kCandidates[] = {
      {"search[", ActionKind::kSearch},
      {"lookup[", ActionKind::kLookup},
      {"finish[", ActionKind::kFinish},
  };
  std::size_t best_pos = std::string::npos;
  ActionKind best_kind = ActionKind::kMalformed;
  std::size_t best_len = 0;
  for (const auto& c : kCandidates) {
    std::size_t pos = find_keyword(lower, c.keyword);
    if (pos != std::string::npos && pos < best_pos) {
      best_pos = pos;
      best_kind = c.kind;
      best_len = std::strlen(c.keyword);
    }
  }
  if (best_pos != std::string::npos) {
    std::size_t open = best_pos + best_len;
    std::size_t close = full_text.find(']', open);
    if (close == std::string::npos) return malformed(full_text);
    return ParsedAction{best_kind,
                        trim_copy(full_text.substr(open, close - open))};
  }
  return malformed(full_text);
}

std::string truncate_observation(const std::string& obs, std::size_t budget) {
  if (obs.size() <= budget) return obs;
  // Do not split a UTF-8 sequence.
  std::size_t cut = budget;
  while (cut > 0 &&
         (static_cast<unsigned char>(obs[cut]) & 0xC0) == 0x80) {
    --cut;
  }
  return obs.substr(0, cut) + "[truncated]";
}

// --- OracleEnv -------------------------------------------------------------

OracleEnv::OracleEnv(int horizon) : horizon_(horizon) {
  if (horizon < 1) throw InputError("OracleEnv: horizon must be >= 1");
}

EnvResponse OracleEnv::reset(const std::string&) {
  history_.clear();
  return EnvResponse{"step=1", false, std::nullopt};
}

EnvResponse OracleEnv::step(const ParsedAction& action) {
  if (action.kind == ActionKind::kAnswer ||
      action.kind == ActionKind::kFinish) {
    return EnvResponse{"", true, action.payload};
  }
  history_.push_back(action.payload);
  std::string obs = oracle::history_observation(
      static_cast<int>(history_.size()) + 1, history_);
  if (static_cast<int>(history_.size()) >= horizon_) {
    return EnvResponse{obs, true, history_.back()};
  }
  return EnvResponse{obs, false, std::nullopt};
}

// --- WikiCorpusEnv ----------------------------------------------------------

WikiCorpusEnv::WikiCorpusEnv(Corpus corpus) : corpus_(std::move(corpus)) {}

WikiCorpusEnv WikiCorpusEnv::from_file(const std::string& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw ParseError("malformed corpus JSON: " + std::string(e.what()),
                     static_cast<long long>(e.byte));
  }
  Corpus corpus;
  try {
    corpus = j.get<Corpus>();
  } catch (const json::exception&) {
    throw ValidationError("corpus",
                          "expected {title: [paragraph, ...], ...}");
  }
  return WikiCorpusEnv(std::move(corpus));
}

EnvResponse WikiCorpusEnv::reset(const std::string&) {
  sentences_.clear();
  lookup_keyword_.clear();
  lookup_cursor_ = 0;
  return EnvResponse{"", false, std::nullopt};
}

EnvResponse WikiCorpusEnv::do_search(const std::string& entity) {
  auto it = corpus_.find(entity);
  if (it == corpus_.end()) {
    // Case-insensitive fallback before reporting similar titles.
    std::string wanted = to_lower(entity);
    for (auto c = corpus_.begin(); c != corpus_.end(); ++c) {
      if (to_lower(c->first) == wanted) {
        it = c;
        break;
      }
    }
  }
  if (it == corpus_.end()) {
    std::vector<std::pair<double, std::string>> ranked;
    for (const auto& [title, _] : corpus_) {
      ranked.emplace_back(textdist::decision_distance(entity, title), title);
    }
    std::sort(ranked.begin(), ranked.end());
    std::string obs = "Could not find " + entity + ". Similar:";
    std::size_t limit = std::min<std::size_t>(5, ranked.size());
    for (std::size_t i = 0; i < limit; ++i) {
      obs += (i == 0 ? " " : ", ") + ranked[i].second;
    }
    return EnvResponse{obs, false, std::nullopt};
  }

  // Re-split the page into sentences for Lookup.
  sentences_.clear();
  lookup_keyword_.clear();
  lookup_cursor_ = 0;
  for (const std::string& para : it->second) {
    std::string current;
    for (char c : para) {
      current += c;
      if (c == '.' || c == '!' || c == '?') {
        std::string s = trim_copy(current);
        if (!s.empty()) sentences_.push_back(s);
        current.clear();
      }
    }
    std::string rest = trim_copy(current);
    if (!rest.empty()) sentences_.push_back(rest);
  }
  return EnvResponse{it->second.empty() ? std::string() : it->second.front(),
                     false, std::nullopt};
}

EnvResponse WikiCorpusEnv::do_lookup(const std::string& keyword) {
  if (keyword != lookup_keyword_) {
    lookup_keyword_ = keyword;
    lookup_cursor_ = 0;
  }
  std::string needle = to_lower(keyword);
  std::size_t total = 0;
  for (const auto& s : sentences_) {
    if (to_lower(s).find(needle) != std::string::npos) ++total;
  }
  std::size_t seen = 0;
  for (std::size_t i = 0; i < sentences_.size(); ++i) {
    if (to_lower(sentences_[i]).find(needle) == std::string::npos) continue;
    ++seen;
    if (i >= lookup_cursor_) {
      lookup_cursor_ = i + 1;
      return EnvResponse{"(Result " + std::to_string(seen) + " / " +
                             std::to_string(total) + ") " + sentences_[i],
                         false, std::nullopt};
    }
  }
  return EnvResponse{"No more results.", false, std::nullopt};
}

EnvResponse WikiCorpusEnv::step(const ParsedAction& action) {
  switch (action.kind) {
    case ActionKind::kSearch:
      return do_search(action.payload);
    case ActionKind::kLookup:
      return do_lookup(action.payload);
    case ActionKind::kFinish:
    case ActionKind::kAnswer:
      return EnvResponse{"", true, action.payload};
    case ActionKind::kBash:
      return EnvResponse{"Unsupported action for this environment.", false,
                         std::nullopt};
    case ActionKind::kMalformed:
      return EnvResponse{"Invalid action format.", false, std::nullopt};
  }
  return EnvResponse{"Invalid action format.", false, std::nullopt};
}

// --- StdioAdapterEnv --------------------------------------------------------

StdioAdapterEnv::StdioAdapterEnv(std::vector<std::string> argv)
    : argv_(std::move(argv)) {
  if (argv_.empty()) throw InputError("StdioAdapterEnv: empty command");
  spawn();
}

StdioAdapterEnv::~StdioAdapterEnv() { shutdown(); }

void StdioAdapterEnv::spawn() {
  // A dead child must surface as AdapterError from write(), not SIGPIPE.
  static const bool sigpipe_ignored = [] {
    signal(SIGPIPE, SIG_IGN);
    return true;
  }();
  (void)sigpipe_ignored;

  int to_child[2];
  int from_child[2];
  if (pipe(to_child) != 0 || pipe(from_child) != 0) {
    throw AdapterError("failed to create pipes for adapter process");
  }
  pid_t pid = fork();
  if (pid < 0) {
    throw AdapterError("failed to fork adapter process");
  }
  if (pid == 0) {
    dup2(to_child[0], STDIN_FILENO);
    dup2(from_child[1], STDOUT_FILENO);
    close(to_child[0]);
    close(to_child[1]);
    close(from_child[0]);
    close(from_child[1]);
    std::vector<char*> args;
    for (auto& a : argv_) args.push_back(a.data());
    args.push_back(nullptr);
    execvp(args[0], args.data());
    _exit(127);
  }
  close(to_child[0]);
  close(from_child[1]);
  child_pid_ = pid;
  to_child_ = to_child[1];
  from_child_ = fdopen(from_child[0], "r");
  if (!from_child_) {
    shutdown();
    throw AdapterError("failed to open adapter output stream");
  }
}

void StdioAdapterEnv::shutdown() {
  if (to_child_ >= 0) {
    close(to_child_);
    to_child_ = -1;
  }
  if (from_child_) {
    fclose(from_child_);
    from_child_ = nullptr;
  }
  if (child_pid_ > 0) {
    int status = 0;
    waitpid(child_pid_, &status, 0);
    child_pid_ = -1;
  }
}

EnvResponse StdioAdapterEnv::roundtrip(const std::string& request_line) {
  std::string line = request_line + "\n";
  std::size_t sent = 0;
  while (sent < line.size()) {
    ssize_t written = write(to_child_, line.data() + sent, line.size() - sent);
    if (written < 0 && errno == EINTR) continue;
    if (written <= 0) {
      throw AdapterError("adapter process is not accepting input");
    }
    sent += static_cast<std::size_t>(written);
  }
  char* buf = nullptr;
  size_t cap = 0;
  ssize_t len = getline(&buf, &cap, from_child_);
  if (len < 0) {
    free(buf);
    throw AdapterError("adapter process closed its output");
  }
  std::string response(buf, static_cast<std::size_t>(len));
  free(buf);
  json j;
  try {
    j = json::parse(response);
  } catch (const json::parse_error&) {
    throw AdapterError("adapter emitted a malformed line: " +
                       trim_copy(response));
  }
  EnvResponse r;
  try {
    r.observation = j.value("observation", std::string());
    r.terminated = j.value("terminated", false);
    if (j.contains("final_answer") && !j["final_answer"].is_null()) {
      r.final_answer = j["final_answer"].get<std::string>();
    }
  } catch (const json::exception&) {
    throw AdapterError("adapter response has wrong field types");
  }
  return r;
}

EnvResponse StdioAdapterEnv::reset(const std::string& task_id) {
  return roundtrip(json{{"reset", task_id}}.dump());
}

EnvResponse StdioAdapterEnv::step(const ParsedAction& action) {
  return roundtrip(json{{"action", action_kind_name(action.kind)},
                        {"payload", action.payload}}
                       .dump());
}

// --- ReplayEnv --------------------------------------------------------------

ReplayEnv::ReplayEnv(TdpRecord recording) : recording_(std::move(recording)) {}

EnvResponse ReplayEnv::reset(const std::string&) {
  cursor_ = 0;
  return EnvResponse{"", false, std::nullopt};
}

EnvResponse ReplayEnv::step(const ParsedAction& action) {
  if (cursor_ >= recording_.steps.size()) {
    throw ReplayError("replay exhausted after step " +
                      std::to_string(recording_.steps.size()));
  }
  const StepRecord& rec = recording_.steps[cursor_];
  std::string got = action.canonical();
  if (got != rec.chosen().action_text) {
    throw ReplayError("replay divergence at step " +
                      std::to_string(cursor_ + 1) + ": expected \"" +
                      rec.chosen().action_text + "\", got \"" + got + "\"");
  }
  ++cursor_;
  EnvResponse r;
  r.observation = rec.observation;
  if (cursor_ == recording_.steps.size() && recording_.terminated) {
    r.terminated = true;
    r.final_answer = recording_.final_answer;
  }
  return r;
}

// --- factory ----------------------------------------------------------------

std::unique_ptr<Environment> make_environment(const std::string& params_json) {
  json j;
  try {
    j = json::parse(params_json);
  } catch (const json::parse_error& e) {
    throw ParseError("malformed env params: " + std::string(e.what()),
                     static_cast<long long>(e.byte));
  }
  std::string kind = j.value("kind", std::string());
  if (kind == "oracle") {
    if (j.contains("table")) {
      oracle::ProcessTable table =
          oracle::load_table(j["table"].get<std::string>());
      return std::make_unique<OracleEnv>(table.horizon);
    }
    return std::make_unique<OracleEnv>(j.value("horizon", 1));
  }
  if (kind == "wiki") {
    return std::make_unique<WikiCorpusEnv>(
        WikiCorpusEnv::from_file(j.at("corpus").get<std::string>()));
  }
  if (kind == "stdio") {
    return std::make_unique<StdioAdapterEnv>(
        j.at("command").get<std::vector<std::string>>());
  }
  throw InputError("unknown environment kind: \"" + kind + "\"");
}

}  // namespace uprop::env
