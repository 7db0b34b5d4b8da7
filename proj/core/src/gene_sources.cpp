#include <algorithm>
#include <set>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "cellbench/error.hpp"
#include "cellbench/knowledge.hpp"
#include "cellbench/text.hpp"

namespace cellbench {

using nlohmann::json;

namespace {

std::optional<json> parse_body(const std::optional<std::string>& body, std::string_view what) {
  if (!body) return std::nullopt;
  auto parsed = json::parse(*body, nullptr, false);
  if (parsed.is_discarded()) {
    spdlog::warn("{}: response is not JSON", what);
    return std::nullopt;
  }
  return parsed;
}

}  // namespace

CachedFetcher::CachedFetcher(std::string source_name, FetcherOptions options, ResponseCache* cache,
                             std::shared_ptr<RateLimiter> limiter)
    : source_name_(std::move(source_name)),
      options_(std::move(options)),
      cache_(cache),
      limiter_(limiter ? std::move(limiter) : std::make_shared<RateLimiter>(3.0)) {}

std::optional<std::string> CachedFetcher::get(const std::string& path_and_query, FetchStats& stats) {
  std::string key;
  if (cache_ != nullptr) {
    key = ResponseCache::make_key(source_name_, path_and_query);
    ++stats.lookups;
    try {
      if (auto hit = cache_->get(key)) {
        ++stats.hits;
        return hit;
      }
    } catch (const Error& e) {
      spdlog::warn("{} cache read failed, fetching live: {}", source_name_, e.what());
    }
  }
  if (options_.offline) return std::nullopt;
  if (options_.base_url.empty()) throw Error(ErrorKind::Config, source_name_ + " has no base URL");

  const auto response = with_retries(options_.retry, [&] {
    limiter_->acquire();
    HttpClient client(options_.base_url, options_.timeout);
    return client.get(path_and_query);
  });
  if (response.status >= 400) {
    spdlog::warn("{} answered {} for {}", source_name_, response.status, path_and_query);
    return std::nullopt;
  }
  if (cache_ != nullptr) {
    try {
      cache_->put(key, response.body);
    } catch (const Error& e) {
      spdlog::warn("{} cache write failed: {}", source_name_, e.what());
    }
  }
  return response.body;
}

std::vector<EvidenceItem> NcbiGeneClient::describe(const std::string& gene, FetchStats& stats) {
  const auto symbol = canonical_gene(gene);
  const auto search = parse_body(
      fetcher_.get("/esearch.fcgi?db=gene&retmode=json&term=" + url_encode(symbol + "[sym] AND human[orgn]"), stats),
      "NCBI esearch");
  if (!search) return {};
  const auto ids = search->value("/esearchresult/idlist"_json_pointer, json::array());
  if (!ids.is_array() || ids.empty()) return {};
  const auto id = ids[0].get<std::string>();

  const auto summary =
      parse_body(fetcher_.get("/esummary.fcgi?db=gene&retmode=json&id=" + url_encode(id), stats), "NCBI esummary");
  if (!summary) return {};
  const auto doc = summary->value("/result"_json_pointer, json::object()).value(id, json::object());
  const auto description = doc.value("description", std::string());
  const auto text = doc.value("summary", std::string());
  if (text.empty() && description.empty()) return {};
  std::string line = symbol;
  if (!description.empty()) line += " (" + description + ")";
  if (!text.empty()) line += ": " + text;
  return {{Source::NCBI, "ncbi:" + symbol, line}};
}

std::optional<json> UniProtClient::search(const std::string& gene, FetchStats& stats) {
  const auto symbol = canonical_gene(gene);
  const auto query = "gene_exact:" + symbol + " AND organism_id:9606 AND reviewed:true";
  return parse_body(
      fetcher_.get("/uniprotkb/search?query=" + url_encode(query) + "&fields=accession,cc_function&format=json&size=1",
                   stats),
      "UniProt search");
}

std::optional<std::string> UniProtClient::accession(const std::string& gene, FetchStats& stats) {
  const auto body = search(gene, stats);
  if (!body) return std::nullopt;
  const auto results = body->value("results", json::array());
  if (results.empty()) return std::nullopt;
  auto acc = results[0].value("primaryAccession", std::string());
  if (acc.empty()) return std::nullopt;
  return acc;
}

std::vector<EvidenceItem> UniProtClient::describe(const std::string& gene, FetchStats& stats) {
  const auto symbol = canonical_gene(gene);
  const auto body = search(symbol, stats);
  if (!body) return {};
  const auto results = body->value("results", json::array());
  if (results.empty()) return {};
  std::vector<std::string> texts;
  for (const auto& comment : results[0].value("comments", json::array())) {
    if (comment.value("commentType", std::string()) != "FUNCTION") continue;
    for (const auto& t : comment.value("texts", json::array())) {
      auto value = t.value("value", std::string());
      if (!value.empty()) texts.push_back(std::move(value));
    }
  }
  if (texts.empty()) return {};
  return {{Source::UniProt, "uniprot:" + symbol, symbol + " function: " + text::join(texts, " ")}};
}

std::vector<EvidenceItem> GoClient::describe(const std::string& gene, FetchStats& stats) {
  const auto symbol = canonical_gene(gene);
  const auto acc = uniprot_.accession(symbol, stats);
  if (!acc) return {};
  const auto annotations = parse_body(
      quickgo_.get("/QuickGO/services/annotation/search?geneProductId=" + url_encode(*acc) + "&taxonId=9606&limit=100",
                   stats),
      "QuickGO annotations");
  if (!annotations) return {};
  std::set<std::string> go_ids;
  for (const auto& a : annotations->value("results", json::array())) {
    auto id = a.value("goId", std::string());
    if (!id.empty()) go_ids.insert(std::move(id));
  }
  if (go_ids.empty()) return {};

  const auto terms = parse_body(
      quickgo_.get("/QuickGO/services/ontology/go/terms/" +
                       url_encode(text::join(std::vector<std::string>(go_ids.begin(), go_ids.end()), ",")),
                   stats),
      "QuickGO terms");
  if (!terms) return {};
  std::set<std::string> names;
  for (const auto& t : terms->value("results", json::array())) {
    auto name = t.value("name", std::string());
    if (!name.empty()) names.insert(std::move(name));
  }
  if (names.empty()) return {};
  return {{Source::GO, "go:" + symbol,
           symbol + " GO terms: " + text::join(std::vector<std::string>(names.begin(), names.end()), "; ")}};
}

std::optional<std::string> PubMedClient::abstract(const std::string& pmid, FetchStats& stats) {
  auto body = fetcher_.get("/efetch.fcgi?db=pubmed&rettype=abstract&retmode=text&id=" + url_encode(pmid), stats);
  if (!body || text::trim(*body).empty()) return std::nullopt;
  return std::string(text::trim(*body));
}

std::vector<std::string> OlsSearch::search(std::string_view label) {
  FetchStats stats;
  const auto body = parse_body(
      fetcher_.get("/api/search?ontology=cl&exact=false&rows=10&q=" + url_encode(text::trim(label)), stats),
      "OLS search");
  if (!body) return {};
  std::vector<std::string> ids;
  for (const auto& doc : body->value("/response/docs"_json_pointer, json::array())) {
    auto id = doc.value("obo_id", std::string());
    if (!id.empty()) ids.push_back(std::move(id));
  }
  return ids;
}

}  // namespace cellbench
