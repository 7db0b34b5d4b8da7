#include "cellbench/report.hpp"

#include <cstdio>
#include <sstream>

#include "cellbench/error.hpp"
#include "cellbench/journal.hpp"
#include "cellbench/text.hpp"

namespace cellbench {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::string_view kMissingCell = "—";

std::string flag_category(const std::string& reason) {
  const auto colon = reason.find(':');
  return colon == std::string::npos ? reason : reason.substr(0, colon);
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  return out + "\"";
}

std::string statistic_text(const PairedAnalysis& a) {
  if (!a.spearman) return "skipped (" + a.skipped + ")";
  return "rho=" + fixed(a.spearman->rho, 4) + " p=" + fixed(a.spearman->p, 6) +
         " tau=" + (a.kendall ? fixed(*a.kendall, 4) : std::string(kMissingCell)) + " n=" + std::to_string(a.n());
}

}  // namespace

TaskSummary summarize_task(Task task, std::span<const JudgeVerdict> verdicts) {
  TaskSummary s;
  s.task = task;
  s.instances = verdicts.size();
  for (const auto& v : verdicts) {
    if (v.flagged) {
      ++s.flagged;
      ++s.flag_reasons[flag_category(v.flag_reason)];
    } else {
      ++s.scored;
    }
  }
  try {
    s.mean = aggregate_task(verdicts);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::Aggregation) throw;
    s.note = "no valid verdicts";
  }
  return s;
}

void compute_total(BenchmarkReport& report) {
  std::map<Task, double> means;
  for (const auto& [task, summary] : report.tasks) {
    if (summary.mean) means[task] = *summary.mean;
  }
  try {
    report.total = total_score(means);
    report.total_note.clear();
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::PartialTotal) throw;
    report.total.reset();
    report.total_note = e.what();
  }
}

json to_json(const BenchmarkReport& r) {
  json tasks = json::object();
  for (const auto& [task, s] : r.tasks) {
    tasks[std::string(to_string(task))] = {{"mean", s.mean ? json(*s.mean) : json(nullptr)},
                                           {"instances", s.instances},
                                           {"scored", s.scored},
                                           {"flagged", s.flagged},
                                           {"flag_reasons", s.flag_reasons},
                                           {"note", s.note}};
  }
  auto analyses = json::array();
  for (const auto& a : r.analyses) analyses.push_back(to_json(a));
  auto robustness = json::array();
  for (const auto& c : r.robustness) robustness.push_back(to_json(c));
  const auto& p = r.provenance;
  const double ratio = p.cache_lookups == 0 ? 0.0 : static_cast<double>(p.cache_hits) / p.cache_lookups;
  return {{"model", r.model},
          {"tasks", std::move(tasks)},
          {"total", r.total ? json(*r.total) : json(nullptr)},
          {"total_note", r.total_note},
          {"analyses", std::move(analyses)},
          {"robustness", std::move(robustness)},
          {"depth_histogram", r.depth_histogram ? to_json(*r.depth_histogram) : json(nullptr)},
          {"provenance",
           {{"config_hash", p.config_hash},
            {"template_version", p.template_version},
            {"model", p.model},
            {"judge_model", p.judge_model},
            {"seed", p.seed},
            {"cache", {{"hits", p.cache_hits}, {"lookups", p.cache_lookups}, {"hit_ratio", ratio}}},
            {"journals", p.journal_sha256}}}};
}

std::string render_score_table(std::span<const BenchmarkReport> reports) {
  std::ostringstream os;
  os << "| Model |";
  for (auto task : kReportTaskOrder) os << ' ' << to_string(task) << " |";
  os << " Total |\n|---|";
  for (std::size_t i = 0; i < kReportTaskOrder.size(); ++i) os << "---:|";
  os << "---:|\n";
  for (const auto& r : reports) {
    os << "| " << r.model << " |";
    for (auto task : kReportTaskOrder) {
      const auto it = r.tasks.find(task);
      os << ' ' << (it != r.tasks.end() && it->second.mean ? format_score(*it->second.mean) : std::string(kMissingCell))
         << " |";
    }
    os << ' ' << (r.total ? format_score(*r.total) : std::string(kMissingCell)) << " |\n";
  }
  return os.str();
}

std::string render_markdown(const BenchmarkReport& r) {
  std::ostringstream os;
  os << "# Benchmark report: " << r.model << "\n\n";
  os << render_score_table(std::span<const BenchmarkReport>(&r, 1)) << '\n';
  if (!r.total_note.empty()) os << "Total omitted: " << r.total_note << "\n\n";

  os << "## Instances\n\n| Task | Instances | Scored | Flagged | Reasons |\n|---|---:|---:|---:|---|\n";
  for (auto task : kReportTaskOrder) {
    const auto it = r.tasks.find(task);
    if (it == r.tasks.end()) continue;
    const auto& s = it->second;
    std::vector<std::string> reasons;
    for (const auto& [reason, count] : s.flag_reasons) reasons.push_back(reason + " x" + std::to_string(count));
    os << "| " << to_string(task) << " | " << s.instances << " | " << s.scored << " | " << s.flagged << " | "
       << (reasons.empty() ? std::string(kMissingCell) : text::join(reasons, "; ")) << " |\n";
  }

  if (!r.analyses.empty() || !r.robustness.empty()) {
    os << "\n## Validation\n\n| Analysis | Result | Excluded |\n|---|---|---:|\n";
    for (const auto& a : r.analyses) os << "| " << a.name << " | " << statistic_text(a) << " | " << a.excluded << " |\n";
    for (const auto& c : r.robustness) {
      os << "| " << c.name << " | rho=" << (c.rho ? fixed(*c.rho, 4) : std::string(kMissingCell))
         << " tau=" << (c.tau ? fixed(*c.tau, 4) : std::string(kMissingCell)) << " cosine=" << fixed(c.cosine, 4)
         << " n=" << c.n << (c.note.empty() ? "" : " (" + c.note + ")") << " | " << c.excluded << " |\n";
    }
  }

  if (r.depth_histogram) {
    const auto& h = *r.depth_histogram;
    os << "\n## Depth to root of predictions\n\n| Depth | Count |\n|---|---:|\n";
    for (const auto& b : h.bins) os << "| [" << b.lo << "," << b.hi << ") | " << b.count << " |\n";
    os << "| unresolved | " << h.misses << " |\n";
  }

  const auto& p = r.provenance;
  os << "\n## Provenance\n\n";
  os << "- config: " << p.config_hash << '\n';
  os << "- templates: " << p.template_version << '\n';
  os << "- judge: " << p.judge_model << ", seed " << p.seed << '\n';
  os << "- knowledge cache: " << p.cache_hits << '/' << p.cache_lookups << " hits\n";
  for (const auto& [name, digest] : p.journal_sha256) os << "- " << name << ": " << digest << '\n';
  return os.str();
}

std::set<ReportFormat> parse_formats(std::string_view list) {
  std::set<ReportFormat> formats;
  for (const auto& part : text::split(list, ',')) {
    const auto name = text::to_lower(text::trim(part));
    if (name.empty()) continue;
    if (name == "json") {
      formats.insert(ReportFormat::Json);
    } else if (name == "markdown" || name == "md") {
      formats.insert(ReportFormat::Markdown);
    } else if (name == "csv") {
      formats.insert(ReportFormat::Csv);
    } else {
      throw Error(ErrorKind::Config, "unknown report format '" + name + "'");
    }
  }
  if (formats.empty()) throw Error(ErrorKind::Config, "no report format selected");
  return formats;
}

void emit_report(const BenchmarkReport& r, const fs::path& dir, const std::set<ReportFormat>& formats) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw Error(ErrorKind::Io, "cannot create report directory " + dir.string());

  if (formats.contains(ReportFormat::Json)) write_text_atomic(dir / "report.json", to_json(r).dump(2) + '\n');
  if (formats.contains(ReportFormat::Markdown)) write_text_atomic(dir / "report.md", render_markdown(r));
  if (!formats.contains(ReportFormat::Csv)) return;

  std::string scores = "task,mean,instances,scored,flagged\n";
  for (auto task : kReportTaskOrder) {
    const auto it = r.tasks.find(task);
    if (it == r.tasks.end()) continue;
    const auto& s = it->second;
    scores += std::string(to_string(task)) + "," + (s.mean ? format_score(*s.mean) : "") + "," +
              std::to_string(s.instances) + "," + std::to_string(s.scored) + "," + std::to_string(s.flagged) + "\n";
  }
  scores += "Total," + (r.total ? format_score(*r.total) : "") + ",,,\n";
  write_text_atomic(dir / "task_scores.csv", scores);

  for (const auto& a : r.analyses) {
    std::string csv = "instance_id,score," + a.value_label + "\n";
    for (std::size_t i = 0; i < a.n(); ++i) {
      csv += csv_field(a.ids[i]) + "," + fixed(a.scores[i], 0) + "," + fixed(a.values[i], 6) + "\n";
    }
    write_text_atomic(dir / (a.name + ".csv"), csv);
  }
  if (r.depth_histogram) {
    std::string csv = "bin_lo,bin_hi,count\n";
    for (const auto& b : r.depth_histogram->bins) {
      csv += std::to_string(b.lo) + "," + std::to_string(b.hi) + "," + std::to_string(b.count) + "\n";
    }
    csv += "unresolved,," + std::to_string(r.depth_histogram->misses) + "\n";
    write_text_atomic(dir / "depth_histogram.csv", csv);
  }
}

}  // namespace cellbench
