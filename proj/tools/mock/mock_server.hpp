#pragma once

#include <atomic>
#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "cellbench/dataset.hpp"
#include "cellbench/ontology.hpp"

namespace cellbench::mock {

struct ChatReply {
  int status = 200;
  std::string content;
};

using ChatHandler = std::function<ChatReply(const nlohmann::json& request)>;

/// Local OpenAI-style chat completions endpoint on 127.0.0.1 with an ephemeral port.
class ChatServer {
 public:
  /// When `required_key` is set, requests without "Authorization: Bearer <key>" get 401.
  explicit ChatServer(ChatHandler handler, std::string required_key = {}, int port = 0);
  ~ChatServer();
  ChatServer(const ChatServer&) = delete;
  ChatServer& operator=(const ChatServer&) = delete;

  std::string url() const;
  int port() const noexcept { return port_; }
  std::size_t requests() const noexcept { return requests_.load(); }
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<std::size_t> requests_{0};
};

/// Stable 64-bit value derived from SHA-256, for deterministic choices.
std::uint64_t stable_hash(std::string_view text);

/// Last user message of a chat request.
std::string prompt_of(const nlohmann::json& request);

struct ModelBehaviour {
  /// Share of instances (exact count, chosen by hash) answered with unparsable text.
  double garbage_fraction = 0.0;
  /// Degrade answers by a per-instance level 0..5 (0 = exact). CTA climbs that many
  /// is_a steps from the gold term.
  bool drift = false;
  std::size_t cg_length = 100;
};

/// Model double: recognizes the answer prompt of a known instance and replies with
/// its ground truth, optionally degraded.
class OracleModel {
 public:
  OracleModel(std::vector<TaskInstance> instances, const OntologyGraph* graph, ModelBehaviour behaviour = {});

  ChatReply operator()(const nlohmann::json& request) const;
  std::string reply_for(const TaskInstance& instance) const;
  /// Degradation level used for an instance (0 when drift is off).
  int level(const std::string& instance_id) const;
  bool is_garbage(const std::string& instance_id) const { return garbage_.contains(instance_id); }

 private:
  std::vector<TaskInstance> instances_;
  std::map<std::string, std::size_t> by_prompt_;
  std::set<std::string> garbage_;
  const OntologyGraph* graph_;
  ModelBehaviour behaviour_;
};

/// Rating per the CTA rubric: 0 -> 5, 1 -> 4, 2 -> 3, 3 -> 2, 4-5 -> 1, else 0.
int rating_for_distance(std::optional<int> distance);

/// Judge double that applies the rubric mechanically: ontology distance for CTA, overlap
/// measures for the other tasks. `noise` adds a deterministic jitter in [-noise, noise]
/// keyed by prompt and seed.
class RubricJudge {
 public:
  explicit RubricJudge(const OntologyGraph* graph, int noise = 0) : graph_(graph), noise_(noise) {}
  ChatReply operator()(const nlohmann::json& request) const;
  int rate(const std::string& prompt) const;

 private:
  const OntologyGraph* graph_;
  int noise_;
};

ChatHandler fixed_judge(int rating);

}  // namespace cellbench::mock
