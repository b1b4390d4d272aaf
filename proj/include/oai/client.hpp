#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <set>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <json.hpp>

#include "oai/csv.hpp"
#include "oai/ensemble.hpp"
#include "oai/taxonomy.hpp"

namespace oai {

// System message sent with every scoring request. The response contract
// (strict JSON, integer scales) is enforced by parse_response below.
inline constexpr std::string_view kSystemPrompt = R"__oai__(You are a top-tier assessment expert at the intersection of labor economics and 
artificial intelligence. Your task is to evaluate the given [Detailed Work Activity 
(DWA)] and score it across two dimensions: Technical Implementation Path (tech_level) 
and Failure Risk Penalty (risk_score).

[Dimension 1: Technical Implementation Path (tech_level)]
Level 3: Native LLM Replacement. Pure text/data processing; current LLMs can 
complete it without external tools.
Level 2: Agent/MCP Integration. The model requires specific plugins (e.g., web search, 
file reading) to complete it fully automatically.
Level 1: System Integration. Technically feasible, but requires IT departments to 
develop APIs to connect legacy systems or hardware.
Level 0: Human-in-the-loop Required. Involves complex physical world interaction, 
highly nuanced emotional support, or critical moral/legal final decisions. Current AI 
cannot close the loop independently.

[Dimension 2: Failure Risk Penalty (risk_score)]
1: No risk (e.g., drafting a document with typos, easily fixable).
2: Minor business impact (e.g., sending an incorrect internal email).
3: Moderate loss (e.g., losing a single client or causing minor financial loss).
4: Severe loss (e.g., facing legal action, severe reputation crisis, or major 
safety incident).
5: Fatal impact (e.g., endangering human life, license revocation, or company 
bankruptcy).

[Output Requirements]
You MUST ONLY return a valid JSON object. Do not output any Markdown formatting 
(like ```json), and do not include any conversational filler.
The format must be exactly as follows:
{"tech_level": 2, "risk_score": 3, "reasoning": "A brief explanation of why."})__oai__";

struct EndpointConfig {
  std::string base_url;     // e.g. http://localhost:8080
  std::string model_id;
  double timeout_s = 30.0;
  int max_retries = 2;      // retries after the first attempt
  double temperature = 0.0; // deterministic by default
  int backoff_ms = 500;     // base delay, doubled per retry
};

inline std::vector<EndpointConfig> load_endpoints(const std::filesystem::path& path) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path.string() + ": malformed JSON: " + e.what());
  }
  if (!doc.is_array() || doc.empty())
    throw ValidationError(path.string() + ": expected a non-empty array of endpoint objects");
  std::vector<EndpointConfig> endpoints;
  for (const auto& item : doc) {
    EndpointConfig cfg;
    if (!item.contains("base_url") || !item.contains("model_id"))
      throw ValidationError(path.string() + ": endpoint needs base_url and model_id");
    cfg.base_url = item["base_url"].get<std::string>();
    cfg.model_id = item["model_id"].get<std::string>();
    cfg.timeout_s = item.value("timeout", 30.0);
    cfg.max_retries = item.value("max_retries", 2);
    cfg.temperature = item.value("temperature", 0.0);
    cfg.backoff_ms = item.value("backoff_ms", 500);
    if (cfg.timeout_s <= 0) throw ValidationError(path.string() + ": timeout must be positive");
    if (cfg.max_retries < 0) throw ValidationError(path.string() + ": max_retries must be >= 0");
    endpoints.push_back(std::move(cfg));
  }
  return endpoints;
}

// Chat-completions request payload for one DWA. Deterministic: same DWA,
// same payload.
inline nlohmann::json build_prompt(const Dwa& dwa, const EndpointConfig& cfg) {
  return nlohmann::json{
      {"model", cfg.model_id},
      {"messages",
       {{{"role", "system"}, {"content", std::string(kSystemPrompt)}},
        {{"role", "user"}, {"content", dwa.title}}}},
      {"temperature", cfg.temperature},
  };
}

struct ParsedScore {
  int tech_level = 0;
  int risk_score = 1;
  std::string reasoning;
  std::vector<std::string> warnings;
};

inline std::string serialize_score(const ParsedScore& score) {
  return nlohmann::json{{"tech_level", score.tech_level},
                        {"risk_score", score.risk_score},
                        {"reasoning", score.reasoning}}
      .dump();
}

namespace detail {

inline std::string_view trim_view(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\n' || s.front() == '\r'))
    s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\n' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

}  // namespace detail

// Strict validation of a model response body: a JSON object with exactly the
// keys tech_level, risk_score, reasoning and in-range integer scores. The
// prompt forbids code fences, but small models emit them anyway, so a single
// surrounding fence is unwrapped and reported as a warning. Extra keys warn,
// everything else in the error table throws.
inline ParsedScore parse_response(std::string_view body) {
  ParsedScore score;
  std::string_view text = detail::trim_view(body);
  if (text.substr(0, 3) == "```") {
    auto first_nl = text.find('\n');
    auto last_fence = text.rfind("```");
    if (first_nl == std::string_view::npos || last_fence == 0)
      throw ValidationError("response is a malformed code fence");
    text = detail::trim_view(text.substr(first_nl + 1, last_fence - first_nl - 1));
    score.warnings.push_back("stripped surrounding code fence");
  }
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("response is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ValidationError("response is not a JSON object");
  for (const char* key : {"tech_level", "risk_score", "reasoning"})
    if (!doc.contains(key)) throw ValidationError(std::string("response missing key \"") + key + "\"");
  for (auto it = doc.begin(); it != doc.end(); ++it)
    if (it.key() != "tech_level" && it.key() != "risk_score" && it.key() != "reasoning")
      score.warnings.push_back("unexpected key \"" + it.key() + "\" ignored");
  if (!doc["tech_level"].is_number_integer()) throw ValidationError("tech_level is not an integer");
  if (!doc["risk_score"].is_number_integer()) throw ValidationError("risk_score is not an integer");
  if (!doc["reasoning"].is_string()) throw ValidationError("reasoning is not a string");
  score.tech_level = doc["tech_level"].get<int>();
  score.risk_score = doc["risk_score"].get<int>();
  score.reasoning = doc["reasoning"].get<std::string>();
  if (score.tech_level < 0 || score.tech_level > 3)
    throw ValidationError("tech_level " + std::to_string(score.tech_level) + " outside 0..3");
  if (score.risk_score < 1 || score.risk_score > 5)
    throw ValidationError("risk_score " + std::to_string(score.risk_score) + " outside 1..5");
  return score;
}

struct ScoreRunResult {
  std::size_t succeeded = 0;
  std::size_t failed = 0;
  std::size_t skipped = 0;  // (dwa, model) pairs already present from a prior run
};

namespace detail {

struct ScoreWriter {
  std::mutex mu;
  std::ofstream scores;
  std::ofstream failures;
  std::ofstream attempts;
  std::vector<ScoreRecord> all_rows;

  void append_success(const ScoreRecord& rec) {
    std::lock_guard<std::mutex> lock(mu);
    scores << csv_row({rec.dwa_id, rec.model_id, std::to_string(rec.tech_level),
                       std::to_string(rec.risk_score), rec.reasoning});
    scores.flush();  // partial progress must survive an interrupted run
    all_rows.push_back(rec);
  }

  void append_failure(const std::string& dwa_id, const std::string& model_id, int attempts_made,
                      const std::string& last_error) {
    std::lock_guard<std::mutex> lock(mu);
    failures << csv_row({dwa_id, model_id, std::to_string(attempts_made), last_error});
    failures.flush();
  }

  void log_attempt(const std::string& dwa_id, const std::string& model_id, int attempt, bool ok,
                   double latency_s, const std::string& error, const std::string& body) {
    std::lock_guard<std::mutex> lock(mu);
    attempts << nlohmann::json{{"dwa_id", dwa_id}, {"model_id", model_id}, {"attempt", attempt},
                               {"ok", ok},         {"latency_s", latency_s}, {"error", error},
                               {"body", body}}
                    .dump()
             << "\n";
    attempts.flush();
  }
};

// POST one scoring request; returns the assistant text or throws.
// Implemented over cpp-httplib; the wire shape is the de-facto
// chat-completions JSON (model, messages array, temperature).
std::string post_chat_completion(const EndpointConfig& cfg, const nlohmann::json& payload);

}  // namespace detail

// Scores every (dwa, endpoint) pair not already present in out_dir/scores.csv.
// At most `concurrency` requests are in flight per endpoint; each item retries
// with exponential backoff up to max_retries. Progress is appended row by row
// (resumable), every attempt is logged exactly once to attempts.log, and
// exhausted items land in failures.csv without stopping the run. On success
// scores.csv is rewritten sorted by (dwa_id, model_id) so uninterrupted and
// resumed runs produce identical bytes. Throws only if every item failed.
inline ScoreRunResult score_corpus(const std::vector<Dwa>& dwas,
                                   const std::vector<EndpointConfig>& endpoints,
                                   int concurrency,
                                   const std::filesystem::path& out_dir) {
  namespace fs = std::filesystem;
  if (dwas.empty()) throw ValidationError("score_corpus: no DWAs to score");
  if (endpoints.empty()) throw ValidationError("score_corpus: no endpoints configured");
  if (concurrency < 1) concurrency = 1;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  const fs::path scores_path = out_dir / "scores.csv";

  detail::ScoreWriter writer;
  std::set<std::pair<std::string, std::string>> done;
  const bool resuming = fs::exists(scores_path);
  if (resuming) {
    writer.all_rows = read_scores_csv(scores_path);
    for (const auto& rec : writer.all_rows) done.insert({rec.dwa_id, rec.model_id});
  }
  writer.scores.open(scores_path, resuming ? std::ios::app | std::ios::binary : std::ios::binary);
  if (!writer.scores) throw IoError("cannot write " + scores_path.string());
  if (!resuming) writer.scores << "dwa_id,model_id,tech_level,risk_score,reasoning\n";
  writer.failures.open(out_dir / "failures.csv", std::ios::binary);
  writer.failures << "dwa_id,model_id,attempts,last_error\n";
  writer.attempts.open(out_dir / "attempts.log", std::ios::app | std::ios::binary);
  if (!writer.failures || !writer.attempts) throw IoError("cannot write logs under " + out_dir.string());

  std::atomic<std::size_t> succeeded{0}, failed{0}, skipped{0};

  auto score_one = [&](const EndpointConfig& cfg, const Dwa& dwa) {
    const nlohmann::json payload = build_prompt(dwa, cfg);
    std::string last_error;
    for (int attempt = 1; attempt <= cfg.max_retries + 1; ++attempt) {
      if (attempt > 1)
        std::this_thread::sleep_for(std::chrono::milliseconds(
            static_cast<long long>(cfg.backoff_ms) << (attempt - 2)));
      const auto start = std::chrono::steady_clock::now();
      std::string body;
      try {
        body = detail::post_chat_completion(cfg, payload);
        const double latency = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        ParsedScore parsed = parse_response(body);
        writer.log_attempt(dwa.dwa_id, cfg.model_id, attempt, true, latency, "", body);
        writer.append_success({dwa.dwa_id, cfg.model_id, parsed.tech_level, parsed.risk_score, parsed.reasoning});
        succeeded++;
        return;
      } catch (const std::exception& e) {
        const double latency = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        last_error = e.what();
        writer.log_attempt(dwa.dwa_id, cfg.model_id, attempt, false, latency, last_error, body);
      }
    }
    writer.append_failure(dwa.dwa_id, cfg.model_id, cfg.max_retries + 1, last_error);
    failed++;
  };

  std::vector<std::thread> pools;
  for (const auto& cfg : endpoints) {
    // One work queue per endpoint, drained by `concurrency` workers.
    auto cursor = std::make_shared<std::atomic<std::size_t>>(0);
    const int workers = std::min<int>(concurrency, static_cast<int>(dwas.size()));
    for (int w = 0; w < workers; ++w) {
      pools.emplace_back([&, cursor, cfg]() {
        for (;;) {
          const std::size_t i = cursor->fetch_add(1);
          if (i >= dwas.size()) return;
          if (done.count({dwas[i].dwa_id, cfg.model_id})) {
            skipped++;
            continue;
          }
          score_one(cfg, dwas[i]);
        }
      });
    }
  }
  for (auto& t : pools) t.join();

  writer.scores.close();
  std::sort(writer.all_rows.begin(), writer.all_rows.end(), [](const ScoreRecord& a, const ScoreRecord& b) {
    return std::tie(a.dwa_id, a.model_id) < std::tie(b.dwa_id, b.model_id);
  });
  {
    const fs::path tmp = out_dir / "scores.csv.tmp";
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << "dwa_id,model_id,tech_level,risk_score,reasoning\n";
    for (const auto& rec : writer.all_rows)
      out << csv_row({rec.dwa_id, rec.model_id, std::to_string(rec.tech_level),
                      std::to_string(rec.risk_score), rec.reasoning});
    out.close();
    fs::rename(tmp, scores_path);
  }

  ScoreRunResult result{succeeded.load(), failed.load(), skipped.load()};
  if (result.succeeded == 0 && result.skipped == 0 && result.failed > 0)
    throw IoError("scoring run failed for every item; last failures recorded in failures.csv");
  return result;
}

}  // namespace oai

// Transport is kept out of line so translation units that only need the
// protocol logic (build/parse) do not pull in the HTTP stack.
#if !defined(OAI_NO_HTTP_TRANSPORT)
#include <httplib.h>

namespace oai::detail {

inline std::string post_chat_completion(const EndpointConfig& cfg, const nlohmann::json& payload) {
  httplib::Client client(cfg.base_url);
  const auto sec = static_cast<time_t>(cfg.timeout_s);
  const auto usec = static_cast<time_t>((cfg.timeout_s - static_cast<double>(sec)) * 1e6);
  client.set_connection_timeout(sec, usec);
  client.set_read_timeout(sec, usec);
  client.set_write_timeout(sec, usec);
  auto res = client.Post("/chat/completions", payload.dump(), "application/json");
  if (!res) throw IoError("endpoint unreachable: " + cfg.base_url + " (" + httplib::to_string(res.error()) + ")");
  if (res->status != 200)
    throw IoError("endpoint " + cfg.base_url + " returned HTTP " + std::to_string(res->status));
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(res->body);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("completion envelope is not JSON: ") + e.what());
  }
  if (!doc.contains("choices") || !doc["choices"].is_array() || doc["choices"].empty())
    throw ValidationError("completion envelope has no choices");
  const auto& msg = doc["choices"][0];
  if (!msg.contains("message") || !msg["message"].contains("content") || !msg["message"]["content"].is_string())
    throw ValidationError("completion choice has no message content");
  return msg["message"]["content"].get<std::string>();
}

}  // namespace oai::detail
#endif  // OAI_NO_HTTP_TRANSPORT
