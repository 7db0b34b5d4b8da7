#include "mock_server.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <regex>

#include <httplib.h>

#include "cellbench/adapter.hpp"
#include "cellbench/cache.hpp"
#include "cellbench/error.hpp"
#include "cellbench/metrics.hpp"
#include "cellbench/text.hpp"

namespace cellbench::mock {

using nlohmann::json;

struct ChatServer::Impl {
  httplib::Server server;
};

ChatServer::ChatServer(ChatHandler handler, std::string required_key, int port) : impl_(std::make_unique<Impl>()) {
  impl_->server.Post(".*", [this, handler = std::move(handler), key = std::move(required_key)](
                               const httplib::Request& req, httplib::Response& res) {
    ++requests_;
    if (!key.empty() && req.get_header_value("Authorization") != "Bearer " + key) {
      res.status = 401;
      res.set_content(R"({"error":{"message":"invalid api key"}})", "application/json");
      return;
    }
    json request;
    try {
      request = json::parse(req.body);
    } catch (const json::exception&) {
      res.status = 400;
      res.set_content(R"({"error":{"message":"bad json"}})", "application/json");
      return;
    }
    ChatReply reply;
    try {
      reply = handler(request);
    } catch (const std::exception& e) {
      res.status = 500;
      res.set_content(json{{"error", {{"message", e.what()}}}}.dump(), "application/json");
      return;
    }
    res.status = reply.status;
    if (reply.status >= 200 && reply.status < 300) {
      json body = {{"id", "mock-" + sha256_hex(req.body).substr(0, 12)},
                   {"object", "chat.completion"},
                   {"model", request.value("model", "")},
                   {"choices", json::array({{{"index", 0},
                                             {"message", {{"role", "assistant"}, {"content", reply.content}}},
                                             {"finish_reason", "stop"}}})}};
      res.set_content(body.dump(), "application/json");
    } else {
      res.set_content(json{{"error", {{"message", reply.content}}}}.dump(), "application/json");
    }
  });
  if (port == 0) {
    port_ = impl_->server.bind_to_any_port("127.0.0.1");
  } else {
    if (!impl_->server.bind_to_port("127.0.0.1", port)) throw Error(ErrorKind::Io, "cannot bind port " + std::to_string(port));
    port_ = port;
  }
  if (port_ <= 0) throw Error(ErrorKind::Io, "cannot bind a local port");
  thread_ = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
}

ChatServer::~ChatServer() { stop(); }

std::string ChatServer::url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat/completions"; }

void ChatServer::stop() {
  impl_->server.stop();
  if (thread_.joinable()) thread_.join();
}

std::uint64_t stable_hash(std::string_view text) { return std::stoull(sha256_hex(text).substr(0, 15), nullptr, 16); }

std::string prompt_of(const json& request) {
  const auto& messages = request.at("messages");
  for (auto it = messages.rbegin(); it != messages.rend(); ++it) {
    if (it->value("role", "") == "user") return it->at("content").get<std::string>();
  }
  throw Error(ErrorKind::Schema, "no user message");
}

// Model --------------------------------------------------------------------------------------

namespace {

constexpr std::string_view kGarbage = "%%% ### ... 0000 ??? ---";

template <typename T>
std::vector<T> keep_fraction(const std::vector<T>& items, int level) {
  if (level == 0 || items.empty()) return items;
  const auto keep = static_cast<std::size_t>(std::ceil(static_cast<double>(items.size()) * (6 - level) / 6.0));
  return {items.begin(), items.begin() + static_cast<std::ptrdiff_t>(std::max<std::size_t>(keep, 1))};
}

std::vector<std::string> decoys(std::size_t n, std::string_view salt) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back("ZNF" + std::to_string(100 + (stable_hash(std::string(salt) + std::to_string(i)) % 800)));
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::string truncate_words(const std::string& s, int level) {
  return text::join(keep_fraction(text::split_whitespace(s), level), " ");
}

}  // namespace

OracleModel::OracleModel(std::vector<TaskInstance> instances, const OntologyGraph* graph, ModelBehaviour behaviour)
    : instances_(std::move(instances)), graph_(graph), behaviour_(behaviour) {
  for (std::size_t i = 0; i < instances_.size(); ++i)
    by_prompt_[sha256_hex(render_answer_prompt(instances_[i], behaviour_.cg_length))] = i;
  std::vector<std::pair<std::uint64_t, std::string>> order;
  for (const auto& inst : instances_) order.emplace_back(stable_hash("garbage:" + inst.id), inst.id);
  std::sort(order.begin(), order.end());
  const auto count = static_cast<std::size_t>(std::llround(behaviour_.garbage_fraction * static_cast<double>(order.size())));
  for (std::size_t i = 0; i < count && i < order.size(); ++i) garbage_.insert(order[i].second);
}

int OracleModel::level(const std::string& instance_id) const {
  return behaviour_.drift ? static_cast<int>(stable_hash("level:" + instance_id) % 6) : 0;
}

std::string OracleModel::reply_for(const TaskInstance& inst) const {
  if (garbage_.contains(inst.id)) return std::string(kGarbage);
  const int lv = level(inst.id);
  struct Visitor {
    const OracleModel& self;
    int lv;
    const std::string& id;
    std::string operator()(const OntologyLabel& t) const {
      std::string label = t.label;
      if (self.graph_ != nullptr) {
        const auto curie = !t.curie.empty() && self.graph_->contains(t.curie) ? std::optional(t.curie)
                                                                              : resolve_term(*self.graph_, t.label);
        if (curie) {
          const auto path = self.graph_->path_to_root(*curie);
          label = self.graph_->term(path[std::min<std::size_t>(static_cast<std::size_t>(lv), path.size() - 1)]).name;
        }
      }
      return "[Predicted_Cell_Type: " + label + "]";
    }
    std::string operator()(const CaptionTruth& t) const { return "[Caption: " + truncate_words(t.caption, lv) + "]"; }
    std::string operator()(const GeneratedCellTruth& t) const {
      auto genes = keep_fraction(t.reference.genes, lv);
      if (lv > 0) {
        for (auto& g : decoys(t.reference.genes.size() - genes.size(), id)) genes.push_back(g);
      }
      return "[Cell_Sentence: " + text::join(genes, ", ") + "]";
    }
    std::string operator()(const PerturbationCase& t) const {
      auto up = keep_fraction(t.up_genes, lv);
      const auto down = keep_fraction(t.down_genes, lv);
      if (lv > 0) {
        for (auto& g : decoys(static_cast<std::size_t>(lv), id)) {
          if (std::find(down.begin(), down.end(), g) == down.end()) up.push_back(g);
        }
      }
      return "[Up: " + text::join(up, ", ") + "]\n[Down: " + text::join(down, ", ") + "]\n[Perturbed_Cell_Sentence: " +
             text::join(t.perturbed_sentence.genes, ", ") + "]";
    }
    std::string operator()(const QaTruth& t) const { return "[Answer: " + truncate_words(t.answer, lv) + "]"; }
  };
  return std::visit(Visitor{*this, lv, inst.id}, inst.ground_truth);
}

ChatReply OracleModel::operator()(const json& request) const {
  const auto it = by_prompt_.find(sha256_hex(prompt_of(request)));
  if (it == by_prompt_.end()) return {200, "I do not recognise this question."};
  return {200, reply_for(instances_[it->second])};
}

// Judge --------------------------------------------------------------------------------------

int rating_for_distance(std::optional<int> distance) {
  if (!distance) return 0;
  switch (*distance) {
    case 0: return 5;
    case 1: return 4;
    case 2: return 3;
    case 3: return 2;
    case 4:
    case 5: return 1;
    default: return 0;
  }
}

namespace {

std::string section(const std::string& prompt, std::string_view header) {
  const std::string marker = "## " + std::string(header) + "\n";
  const auto start = prompt.find(marker);
  if (start == std::string::npos) return {};
  const auto body = start + marker.size();
  const auto end = prompt.find("\n## ", body);
  return std::string(text::trim(prompt.substr(body, end == std::string::npos ? std::string::npos : end - body)));
}

std::string line_value(const std::string& block, std::string_view label) {
  for (const auto& line : text::split(block, '\n')) {
    if (line.rfind(label, 0) == 0) return std::string(text::trim(std::string_view(line).substr(label.size())));
  }
  return {};
}

std::string bracket_value(const std::string& block, std::string_view name) {
  const std::string open = "[" + std::string(name) + ":";
  const auto start = block.find(open);
  if (start == std::string::npos) return {};
  const auto end = block.find(']', start);
  return std::string(text::trim(block.substr(start + open.size(), end - start - open.size())));
}

std::vector<std::string> gene_list(const std::string& s) {
  std::vector<std::string> out;
  for (auto& part : text::split_whitespace(std::regex_replace(s, std::regex(","), " "))) out.push_back(text::to_upper(part));
  return out;
}

int scaled(double fraction) { return static_cast<int>(std::lround(5.0 * std::clamp(fraction, 0.0, 1.0))); }

}  // namespace

int RubricJudge::rate(const std::string& prompt) const {
  const auto response = section(prompt, "Model response");
  const auto reference = section(prompt, "Reference answer");
  if (response.rfind("Predicted cell type:", 0) == 0) {
    const auto predicted = line_value(response, "Predicted cell type:");
    const auto gold = line_value(reference, "Reference cell type:");
    if (graph_ == nullptr) return text::to_lower(predicted) == text::to_lower(gold) ? 5 : 0;
    std::smatch m;
    std::optional<std::string> gold_id;
    if (std::regex_search(gold, m, std::regex(R"(\(([A-Za-z]+:[0-9]+)\)$)"))) gold_id = m[1].str();
    if (!gold_id || !graph_->contains(*gold_id)) gold_id = resolve_term(*graph_, gold);
    const auto predicted_id = resolve_term(*graph_, predicted);
    if (!gold_id || !predicted_id) return 0;
    return rating_for_distance(graph_->distance(*predicted_id, *gold_id));
  }
  if (response.find("[Up:") != std::string::npos) {
    auto predicted = gene_list(bracket_value(response, "Up"));
    for (auto& g : gene_list(bracket_value(response, "Down"))) predicted.push_back(g);
    auto truth = gene_list(line_value(reference, "Reference up-regulated genes:"));
    for (auto& g : gene_list(line_value(reference, "Reference down-regulated genes:"))) truth.push_back(g);
    return scaled(set_cosine(predicted, truth));
  }
  if (response.find("[Cell_Sentence:") != std::string::npos) {
    const auto generated = gene_list(bracket_value(response, "Cell_Sentence"));
    const auto truth = gene_list(line_value(reference, "Reference cell sentence:"));
    if (generated.empty()) return 0;
    return scaled(marker_overlap_pct(generated, truth) / 100.0);
  }
  if (response.find("[Caption:") != std::string::npos)
    return scaled(rouge(bracket_value(response, "Caption"), line_value(reference, "Reference caption:"), RougeMode::R1));
  if (response.find("[Answer:") != std::string::npos)
    return scaled(rouge(bracket_value(response, "Answer"), line_value(reference, "Reference answer:"), RougeMode::R1));
  return 0;
}

ChatReply RubricJudge::operator()(const json& request) const {
  const auto prompt = prompt_of(request);
  int rating = rate(prompt);
  if (noise_ > 0) {
    const auto h = stable_hash(prompt + "#" + std::to_string(request.value("seed", 0LL)));
    rating = std::clamp(rating + static_cast<int>(h % static_cast<std::uint64_t>(2 * noise_ + 1)) - noise_, 0, 5);
  }
  return {200, "Rating: " + std::to_string(rating) + "\nRationale: Scored against the reference using the retrieved evidence."};
}

ChatHandler fixed_judge(int rating) {
  return [rating](const json&) {
    return ChatReply{200, "Rating: " + std::to_string(rating) + "\nRationale: Fixed rating from the test judge."};
  };
}

}  // namespace cellbench::mock
