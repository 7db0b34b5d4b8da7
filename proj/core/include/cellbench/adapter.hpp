#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "cellbench/dataset.hpp"
#include "cellbench/http.hpp"
#include "cellbench/task.hpp"

namespace cellbench {

struct ChatMessage {
  std::string role;  // "system" or "user"
  std::string content;
  friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

inline constexpr int kDefaultMaxTokens = 1024;

struct ChatRequest {
  std::string model;
  std::vector<ChatMessage> messages;
  double temperature = 0.0;
  std::int64_t seed = 0;
  int max_tokens = kDefaultMaxTokens;

  /// Throws Domain when there is no user message, temperature < 0 or max_tokens < 1.
  void validate() const;
  nlohmann::json to_json() const;
  /// SHA-256 of the serialized request.
  std::string hash() const;
};

struct EndpointSpec {
  std::string url;  // full URL of the chat completions route
  std::string model;
  std::string api_key_env;  // name of the environment variable holding the key; empty for none
  std::chrono::milliseconds timeout{std::chrono::seconds(120)};
  RetryPolicy retry{};
};

/// Append-only JSON Lines journal; writes are serialized and flushed per record.
class RunLog {
 public:
  explicit RunLog(const std::filesystem::path& path);
  void record(const nlohmann::json& entry);

 private:
  std::mutex mutex_;
  std::ofstream out_;
};

std::string utc_timestamp();

/// OpenAI-compatible chat endpoint.
class ChatClient {
 public:
  explicit ChatClient(EndpointSpec spec, RunLog* log = nullptr);

  /// Returns choices[0].message.content. Throws Credential (missing key, 401/403),
  /// Transport (retries exhausted, malformed reply) or EmptyReply.
  std::string complete(const ChatRequest& request, std::string_view instance_id = {});

  const EndpointSpec& spec() const noexcept { return spec_; }

 private:
  EndpointSpec spec_;
  RunLog* log_;
};

// Standardized response payloads.
struct CellTypePrediction {
  std::string label;
  friend bool operator==(const CellTypePrediction&, const CellTypePrediction&) = default;
};

struct CaptionPrediction {
  std::string caption;
  friend bool operator==(const CaptionPrediction&, const CaptionPrediction&) = default;
};

struct GeneratedCellPrediction {
  std::vector<std::string> genes;
  friend bool operator==(const GeneratedCellPrediction&, const GeneratedCellPrediction&) = default;
};

struct PerturbationPrediction {
  std::vector<std::string> up;
  std::vector<std::string> down;
  std::vector<std::string> perturbed_sentence;
  friend bool operator==(const PerturbationPrediction&, const PerturbationPrediction&) = default;
};

struct AnswerPrediction {
  std::string answer;
  friend bool operator==(const AnswerPrediction&, const AnswerPrediction&) = default;
};

using ResponsePayload = std::variant<CellTypePrediction, CaptionPrediction, GeneratedCellPrediction,
                                     PerturbationPrediction, AnswerPrediction>;

struct ModelResponse {
  Task task = Task::CTA;
  ResponsePayload payload;
  std::string raw;
  std::vector<std::string> conflicts;  // PP genes dropped for appearing in both lists
};

/// Deterministic answer-generation prompt. Throws Template when the payload does not fit.
std::string render_answer_prompt(const TaskInstance& instance, std::size_t cg_length = kDefaultSentenceLength);

/// Parses a raw reply into the task schema. Bracketed fields win; otherwise heuristics.
/// Throws Standardization when nothing usable can be extracted.
ModelResponse standardize_response(Task task, std::string_view raw, std::size_t cg_max_genes = kDefaultSentenceLength);

/// The bracketed schema form of a payload, e.g. "[Up: VIM, HSPA5]\n[Down: MKI67]".
std::string to_schema_text(const ModelResponse& response);

nlohmann::json to_json(const ModelResponse& response);
ModelResponse response_from_json(const nlohmann::json& j);

/// Wraps a bespoke inference program: invoked as `<command> <instances.jsonl> <replies.jsonl>`,
/// it must write one {"id", "reply"} object per line.
class ExternalAdapter {
 public:
  explicit ExternalAdapter(std::string command) : command_(std::move(command)) {}

  /// Throws Io when the program fails or omits an instance.
  std::map<std::string, std::string> run(std::span<const TaskInstance> instances,
                                         const std::filesystem::path& work_dir) const;

 private:
  std::string command_;
};

}  // namespace cellbench
