#include "cellbench/adapter.hpp"

#include <algorithm>
#include <cstdlib>
#include <ctime>
#include <iomanip>
#include <sstream>

#include <spdlog/spdlog.h>

#include "cellbench/cache.hpp"
#include "cellbench/error.hpp"
#include "cellbench/templates.hpp"
#include "cellbench/text.hpp"

namespace cellbench {

using nlohmann::json;

void ChatRequest::validate() const {
  const bool has_user =
      std::any_of(messages.begin(), messages.end(), [](const ChatMessage& m) { return m.role == "user"; });
  if (!has_user) throw Error(ErrorKind::Domain, "chat request needs a user message");
  for (const auto& m : messages) {
    if (m.role != "user" && m.role != "system") throw Error(ErrorKind::Domain, "unsupported role '" + m.role + "'");
  }
  if (temperature < 0.0) throw Error(ErrorKind::Domain, "temperature must be >= 0");
  if (max_tokens < 1) throw Error(ErrorKind::Domain, "max_tokens must be positive");
}

json ChatRequest::to_json() const {
  auto msgs = json::array();
  for (const auto& m : messages) msgs.push_back({{"role", m.role}, {"content", m.content}});
  return {{"model", model}, {"messages", std::move(msgs)}, {"temperature", temperature},
          {"seed", seed}, {"max_tokens", max_tokens}};
}

std::string ChatRequest::hash() const { return sha256_hex(to_json().dump()); }

RunLog::RunLog(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  out_.open(path, std::ios::app);
  if (!out_) throw Error(ErrorKind::Io, "cannot open run log " + path.string());
}

void RunLog::record(const json& entry) {
  const auto line = entry.dump();
  std::lock_guard lock(mutex_);
  out_ << line << '\n';
  out_.flush();
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const auto secs = std::chrono::system_clock::to_time_t(now);
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&secs, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%S") << '.' << std::setw(3) << std::setfill('0') << ms << 'Z';
  return os.str();
}

ChatClient::ChatClient(EndpointSpec spec, RunLog* log) : spec_(std::move(spec)), log_(log) {
  if (spec_.url.empty()) throw Error(ErrorKind::Config, "chat endpoint URL is empty");
}

std::string ChatClient::complete(const ChatRequest& request, std::string_view instance_id) {
  request.validate();
  std::map<std::string, std::string> headers;
  if (!spec_.api_key_env.empty()) {
    const char* key = std::getenv(spec_.api_key_env.c_str());
    if (key == nullptr || *key == '\0')
      throw Error(ErrorKind::Credential, "environment variable " + spec_.api_key_env + " is not set");
    headers["Authorization"] = std::string("Bearer ") + key;
  }

  const auto body = request.to_json().dump();
  const auto url = parse_url(spec_.url);
  const auto started = utc_timestamp();
  const auto response = with_retries(spec_.retry, [&] {
    HttpClient client(url.origin, spec_.timeout);
    auto r = client.post_json(url.path, body, headers);
    if (r.status == 401 || r.status == 403)
      throw Error(ErrorKind::Credential, "endpoint rejected credentials (HTTP " + std::to_string(r.status) + ")");
    return r;
  });
  if (response.status < 200 || response.status >= 300)
    throw Error(ErrorKind::Transport, "endpoint answered HTTP " + std::to_string(response.status) + ": " +
                                          response.body.substr(0, 200));

  const auto reply = json::parse(response.body, nullptr, false);
  if (reply.is_discarded()) throw Error(ErrorKind::Transport, "endpoint reply is not JSON");
  std::string content;
  try {
    const auto& message = reply.at("choices").at(0).at("message");
    if (message.contains("content") && message["content"].is_string()) content = message["content"].get<std::string>();
  } catch (const json::exception&) {
    throw Error(ErrorKind::Transport, "endpoint reply has no choices[0].message");
  }

  if (log_ != nullptr) {
    log_->record({{"instance_id", instance_id},
                  {"model", request.model},
                  {"request_hash", request.hash()},
                  {"raw_reply", content},
                  {"requested_at", started},
                  {"received_at", utc_timestamp()}});
  }
  if (text::trim(content).empty()) throw Error(ErrorKind::EmptyReply, "endpoint returned empty content");
  return content;
}

namespace {

std::map<std::string, std::string> sentence_vars(const CellSentence& s, const std::string& prefix) {
  if (s.genes.empty()) throw Error(ErrorKind::Template, "cell sentence is empty");
  return {{prefix, text::join(s.genes, " ")}, {"gene_count", std::to_string(s.genes.size())}};
}

}  // namespace

std::string render_answer_prompt(const TaskInstance& instance, std::size_t cg_length) {
  std::map<std::string, std::string> vars;
  const auto wrong = [&]() {
    return Error(ErrorKind::Template, "instance " + instance.id + " has no " + std::string(to_string(instance.task)) +
                                          " input payload");
  };
  switch (instance.task) {
    case Task::CTA:
    case Task::CC: {
      const auto* s = std::get_if<CellSentence>(&instance.input);
      if (s == nullptr) throw wrong();
      vars = sentence_vars(*s, "cell_sentence");
      break;
    }
    case Task::CG: {
      const auto* q = std::get_if<CellTypeQuery>(&instance.input);
      if (q == nullptr || text::trim(q->cell_type).empty()) throw wrong();
      vars = {{"cell_type", q->cell_type}, {"k", std::to_string(cg_length)}};
      break;
    }
    case Task::PP: {
      const auto* p = std::get_if<PerturbationInput>(&instance.input);
      if (p == nullptr || p->targets.empty()) throw wrong();
      vars = sentence_vars(p->control_sentence, "control_sentence");
      vars["perturbation"] = p->perturbation_id;
      vars["targets"] = text::join(p->targets, ", ");
      break;
    }
    case Task::SQA: {
      const auto* q = std::get_if<QuestionInput>(&instance.input);
      if (q == nullptr || text::trim(q->question).empty()) throw wrong();
      vars = {{"question", q->question}};
      break;
    }
  }
  return fill_template(get_template(text::to_lower(to_string(instance.task)) + "_answer"), vars);
}

namespace {

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out.push_back(c);
    }
  }
  return out + "'";
}

}  // namespace

std::map<std::string, std::string> ExternalAdapter::run(std::span<const TaskInstance> instances,
                                                        const std::filesystem::path& work_dir) const {
  std::filesystem::create_directories(work_dir);
  const auto in_path = work_dir / "adapter_instances.jsonl";
  const auto out_path = work_dir / "adapter_replies.jsonl";
  save_dataset(in_path, instances);
  std::filesystem::remove(out_path);

  const auto command = command_ + " " + shell_quote(in_path.string()) + " " + shell_quote(out_path.string());
  const int status = std::system(command.c_str());
  if (status != 0) throw Error(ErrorKind::Io, "adapter command failed with status " + std::to_string(status));

  std::ifstream in(out_path);
  if (!in) throw Error(ErrorKind::Io, "adapter wrote no replies to " + out_path.string());
  std::map<std::string, std::string> replies;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    const auto j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.contains("id") || !j.contains("reply"))
      throw Error(ErrorKind::Io, "adapter reply line " + std::to_string(line_no) + " is malformed");
    replies[j["id"].get<std::string>()] = j["reply"].get<std::string>();
  }
  for (const auto& instance : instances) {
    if (!replies.contains(instance.id)) throw Error(ErrorKind::Io, "adapter gave no reply for " + instance.id);
  }
  return replies;
}

}  // namespace cellbench
