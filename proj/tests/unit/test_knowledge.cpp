#include <algorithm>
#include <atomic>
#include <chrono>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "cellbench/cache.hpp"
#include "cellbench/error.hpp"
#include "cellbench/http.hpp"
#include "cellbench/knowledge.hpp"
#include "support/fixtures.hpp"
#include "support/http_stub.hpp"

using namespace cellbench;

namespace {

const OntologyGraph& graph() { return fixtures::bundled_graph(); }

TaskInstance cta(const std::string& label, const std::string& curie = {}) {
  TaskInstance inst;
  inst.task = Task::CTA;
  inst.id = "cta-1";
  inst.input = CellSentence{"c", {"NKG7"}, {}};
  inst.ground_truth = OntologyLabel{label, curie};
  return inst;
}

TaskInstance cg(const std::string& type) {
  TaskInstance inst;
  inst.task = Task::CG;
  inst.id = "cg-1";
  inst.input = CellTypeQuery{type};
  inst.ground_truth = GeneratedCellTruth{CellSentence{"ref", {"NKG7", "GNLY"}, {}}, ""};
  return inst;
}

TaskInstance pp(std::vector<std::string> up, std::vector<std::string> down) {
  PerturbationCase pc{"XBP1+ctrl", {"XBP1"}, CellSentence{"ctrl", {"ACTB"}, {}}, CellSentence{"p", {"ACTB"}, {}},
                      std::move(up), std::move(down)};
  TaskInstance inst;
  inst.task = Task::PP;
  inst.id = "pp-1";
  inst.input = PerturbationInput{pc.control_sentence, pc.perturbation_id, pc.targets};
  inst.ground_truth = pc;
  return inst;
}

CellMarkerTable nk_table() {
  std::istringstream in("species\tcell_name\tcellontology_id\tmarker_genes\nHuman\tNK\tCL_0000623\tNKG7, GNLY, KLRD1\n");
  return CellMarkerTable::parse_tsv(in);
}

GeneAnnotationTable annotations() {
  std::ostringstream tsv;
  tsv << "gene\tsource\ttext\n";
  for (int i = 0; i < 40; ++i) tsv << "G" << i << "\tNCBI\tG" << i << " does things.\n";
  tsv << "XBP1\tNCBI\tX-box binding protein 1.\nXBP1\tGO\tXBP1 GO terms: unfolded protein response\n";
  std::istringstream in(tsv.str());
  return GeneAnnotationTable::parse_tsv(in);
}


}  // namespace

TEST(Bundle, CtaCarriesRootToTermPath) {
  const auto bundle = retrieve_knowledge(cta("natural killer cell", "CL:0000623"), graph(), {});
  // NK sits eight is_a steps below the root: summary line plus nine terms.
  ASSERT_EQ(bundle.items.size(), 10u);
  EXPECT_EQ(bundle.items[0].key, "path:CL:0000623");
  EXPECT_EQ(bundle.items[0].text.rfind("is_a path from root: cell > native cell", 0), 0u);
  EXPECT_EQ(bundle.items[1].key, "CL:0000000");
  EXPECT_EQ(bundle.items.back().key, "CL:0000623");
  EXPECT_EQ(bundle.items.back().text.rfind("natural killer cell (CL:0000623): A lymphocyte", 0), 0u);
  for (std::size_t i = 2; i < bundle.items.size(); ++i) {
    const auto& parents = graph().term(bundle.items[i].key).parents;
    EXPECT_NE(std::find(parents.begin(), parents.end(), bundle.items[i - 1].key), parents.end()) << i;
  }
}

TEST(Bundle, CtaResolvesLabelWhenNoCurie) {
  const auto bundle = retrieve_knowledge(cta("Natural Killer (NK) Cell"), graph(), {});
  EXPECT_EQ(bundle.items.back().key, "CL:0000623");
}

TEST(Bundle, UnresolvableTruthIsBundleError) {
  try {
    retrieve_knowledge(cta("flux capacitor cell"), graph(), {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Bundle);
  }
}

TEST(Bundle, CaptionTermPlusAncestorsToDepthThree) {
  TaskInstance inst;
  inst.task = Task::CC;
  inst.id = "cc-1";
  inst.input = CellSentence{"c", {"NKG7"}, {}};
  inst.ground_truth = CaptionTruth{"An NK cell.", "natural killer cell", ""};
  const auto bundle = retrieve_knowledge(inst, graph(), {});
  ASSERT_EQ(bundle.items.size(), 4u);
  EXPECT_EQ(bundle.items[0].key, "CL:0000623");
  EXPECT_EQ(bundle.items[1].key, "CL:0001065");
  EXPECT_NE(bundle.items[3].text.find("ancestor at distance 3"), std::string::npos);
}

TEST(Bundle, CellGenerationListsCuratedMarkers) {
  const auto table = nk_table();
  KnowledgeSources sources;
  sources.markers = &table;
  const auto bundle = retrieve_knowledge(cg("natural killer cell"), graph(), sources);
  ASSERT_EQ(bundle.items.size(), 3u);
  for (const auto& item : bundle.items) EXPECT_EQ(item.source, Source::CellMarker);
  EXPECT_EQ(bundle.items[0].key, "NKG7");
  EXPECT_EQ(bundle.items[2].key, "KLRD1");
}

TEST(Bundle, NoMarkersDegradesToDefinition) {
  const auto table = nk_table();
  KnowledgeSources sources;
  sources.markers = &table;
  const auto bundle = retrieve_knowledge(cg("T cell"), graph(), sources);
  ASSERT_EQ(bundle.items.size(), 1u);
  EXPECT_EQ(bundle.items[0].source, Source::CL);
}

TEST(Bundle, PerturbationEvidenceCappedAndTargetFirst) {
  auto table = annotations();
  KnowledgeSources sources;
  sources.gene_sources = {&table};
  std::vector<std::string> up, down;
  for (int i = 0; i < 40; i += 2) up.push_back("G" + std::to_string(i));
  for (int i = 1; i < 40; i += 2) down.push_back("G" + std::to_string(i));
  const auto bundle = retrieve_knowledge(pp(up, down), graph(), sources);
  EXPECT_EQ(bundle.items[0].key, "ncbi:XBP1");
  EXPECT_EQ(bundle.items[1].key, "go:XBP1");
  // Target plus 24 DEGs, interleaved across directions.
  EXPECT_EQ(bundle.items.size(), 2u + 24u);
  EXPECT_EQ(bundle.items[2].key, "ncbi:G0");
  EXPECT_EQ(bundle.items[3].key, "ncbi:G1");
}

TEST(Bundle, PerturbationWithoutAnyEvidenceIsBundleError) {
  EXPECT_THROW(retrieve_knowledge(pp({"A"}, {}), graph(), {}), Error);
}

TEST(Bundle, QuestionAnsweringPassesStoredEvidence) {
  TaskInstance inst;
  inst.task = Task::SQA;
  inst.id = "sqa-1";
  inst.input = QuestionInput{"Q?"};
  inst.ground_truth = QaTruth{"A.", "The excerpt.", "The abstract.", ""};
  const auto bundle = retrieve_knowledge(inst, graph(), {});
  ASSERT_EQ(bundle.items.size(), 2u);
  EXPECT_EQ(bundle.items[0].text, "The abstract.");
  EXPECT_EQ(bundle.items[0].key, "abstract:sqa-1");
  EXPECT_EQ(bundle.items[1].text, "The excerpt.");
}

TEST(Bundle, QuestionWithoutExcerptIsBundleError) {
  TaskInstance inst;
  inst.task = Task::SQA;
  inst.id = "sqa-1";
  inst.input = QuestionInput{"Q?"};
  inst.ground_truth = QaTruth{"A.", " ", "", ""};
  EXPECT_THROW(retrieve_knowledge(inst, graph(), {}), Error);
}

TEST(Bundle, PureFunctionOfInstance) {
  const auto a = to_json(retrieve_knowledge(cta("natural killer cell"), graph(), {}));
  const auto b = to_json(retrieve_knowledge(cta("natural killer cell"), graph(), {}));
  EXPECT_EQ(a.dump(), b.dump());
}

TEST(Bundle, BundledMarkerTableCoversNk) {
  const auto table = CellMarkerTable::load(fixtures::data_dir() / "markers" / "cellmarker_subset.tsv");
  EXPECT_EQ(table.markers_for_term(graph(), "CL:0000623"), (std::vector<std::string>{"NKG7", "GNLY", "KLRD1"}));
  EXPECT_EQ(table.markers_for_name("NK"), (std::vector<std::string>{"NKG7", "GNLY", "KLRD1"}));
}

TEST(MarkerTable, HeaderWithoutGenesIsParseError) {
  std::istringstream in("cell_name\tspecies\nNK\tHuman\n");
  EXPECT_THROW(CellMarkerTable::parse_tsv(in), Error);
}

TEST(Cache, PutThenGetAndMiss) {
  fixtures::TempDir dir;
  ResponseCache cache(dir.path());
  const auto key = ResponseCache::make_key("ncbi", "q=XBP1");
  EXPECT_EQ(cache.get(key), std::nullopt);
  EXPECT_TRUE(cache.put(key, "abc"));
  EXPECT_EQ(cache.get(key), "abc");
  EXPECT_EQ(cache.get(ResponseCache::make_key("ncbi", "q=ATF4")), std::nullopt);
}

TEST(Cache, IdenticalPutsStoreOneEntry) {
  fixtures::TempDir dir;
  ResponseCache cache(dir.path());
  const auto key = ResponseCache::make_key("ols", "natural killer");
  EXPECT_TRUE(cache.put(key, "x"));
  EXPECT_FALSE(cache.put(key, "x"));
  EXPECT_FALSE(cache.put(key, "changed"));
  EXPECT_EQ(cache.entry_count(), 1u);
  EXPECT_EQ(cache.get(key), "x");
}

TEST(Cache, KeyNormalizesWhitespaceAndSeparatesSources) {
  EXPECT_EQ(ResponseCache::make_key("a", "x  y"), ResponseCache::make_key("a", " x y "));
  EXPECT_NE(ResponseCache::make_key("a", "x"), ResponseCache::make_key("b", "x"));
  EXPECT_EQ(ResponseCache::make_key("a", "x").size(), 64u);
}

TEST(Cache, CorruptEntryIsCacheError) {
  fixtures::TempDir dir;
  ResponseCache cache(dir.path());
  const auto key = ResponseCache::make_key("s", "q");
  cache.put(key, "ok");
  fixtures::write_file(dir.path() / key.substr(0, 2) / (key + ".json"), "{broken");
  try {
    cache.get(key);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Cache);
  }
}

TEST(Fetcher, LiveThenCached) {
  fixtures::GetStub stub;
  stub.route("/thing", {200, R"({"v":1})"});
  fixtures::TempDir dir;
  ResponseCache cache(dir.path());
  CachedFetcher fetcher("stub", {stub.base_url(), false, {}, std::chrono::seconds(5)}, &cache,
                        std::make_shared<RateLimiter>(1000.0));
  FetchStats stats;
  EXPECT_EQ(fetcher.get("/thing?a=1", stats), R"({"v":1})");
  EXPECT_EQ(fetcher.get("/thing?a=1", stats), R"({"v":1})");
  EXPECT_EQ(stub.hits(), 1);
  EXPECT_EQ(stats.lookups, 2u);
  EXPECT_EQ(stats.hits, 1u);
}

TEST(Fetcher, OfflineUncachedIsMissAndNeverTouchesNetwork) {
  fixtures::GetStub stub;
  fixtures::TempDir dir;
  ResponseCache cache(dir.path());
  CachedFetcher fetcher("stub", {stub.base_url(), true, {}, std::chrono::seconds(5)}, &cache, nullptr);
  FetchStats stats;
  EXPECT_EQ(fetcher.get("/thing", stats), std::nullopt);
  EXPECT_EQ(stub.hits(), 0);
}

TEST(Fetcher, NotFoundIsMiss) {
  fixtures::GetStub stub;
  CachedFetcher fetcher("stub", {stub.base_url(), false, {}, std::chrono::seconds(5)}, nullptr,
                        std::make_shared<RateLimiter>(1000.0));
  FetchStats stats;
  EXPECT_EQ(fetcher.get("/missing", stats), std::nullopt);
}

TEST(Fetcher, ServerErrorsRetriedThenTransport) {
  fixtures::GetStub stub;
  stub.route("/flaky", {503, "busy"});
  RetryPolicy retry{3, std::chrono::milliseconds(1), 2.0};
  CachedFetcher fetcher("stub", {stub.base_url(), false, retry, std::chrono::seconds(5)}, nullptr,
                        std::make_shared<RateLimiter>(1000.0));
  FetchStats stats;
  try {
    fetcher.get("/flaky", stats);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Transport);
  }
  EXPECT_EQ(stub.hits(), 3);
}

TEST(Fetcher, TooManyRequestsRecovers) {
  fixtures::GetStub stub;
  std::atomic<int> calls{0};
  stub.respond_with([&](const std::string&) {
    return ++calls < 3 ? fixtures::GetStub::Route{429, ""} : fixtures::GetStub::Route{200, "fine"};
  });
  RetryPolicy retry{3, std::chrono::milliseconds(1), 2.0};
  CachedFetcher fetcher("stub", {stub.base_url(), false, retry, std::chrono::seconds(5)}, nullptr,
                        std::make_shared<RateLimiter>(1000.0));
  FetchStats stats;
  EXPECT_EQ(fetcher.get("/x", stats), "fine");
}

TEST(RemoteClients, NcbiSummary) {
  fixtures::GetStub stub;
  stub.route("/esearch.fcgi", {200, R"({"esearchresult":{"idlist":["7494"]}})"});
  stub.route("/esummary.fcgi", {200, R"({"result":{"7494":{"description":"X-box binding protein 1","summary":"Regulates UPR genes."}}})"});
  CachedFetcher fetcher("ncbi", {stub.base_url(), false, {}, std::chrono::seconds(5)}, nullptr,
                        std::make_shared<RateLimiter>(1000.0));
  NcbiGeneClient client(fetcher);
  FetchStats stats;
  const auto items = client.describe("xbp1", stats);
  ASSERT_EQ(items.size(), 1u);
  EXPECT_EQ(items[0].key, "ncbi:XBP1");
  EXPECT_EQ(items[0].text, "XBP1 (X-box binding protein 1): Regulates UPR genes.");
  EXPECT_NE(stub.seen()[0].find("XBP1[sym] AND human[orgn]"), std::string::npos);
}

TEST(RemoteClients, UniProtAndGo) {
  fixtures::GetStub uniprot, quickgo;
  uniprot.route("/uniprotkb/search", {200, R"({"results":[{"primaryAccession":"P17861","comments":[{"commentType":"FUNCTION","texts":[{"value":"Functions in the UPR."}]}]}]})"});
  quickgo.route("/QuickGO/services/annotation/search", {200, R"({"results":[{"goId":"GO:0030968"},{"goId":"GO:0006986"}]})"});
  quickgo.route("/QuickGO/services/ontology/go/terms/", {200, R"({"results":[{"name":"endoplasmic reticulum unfolded protein response"},{"name":"response to unfolded protein"}]})"});
  const auto limiter = std::make_shared<RateLimiter>(1000.0);
  CachedFetcher uf("uniprot", {uniprot.base_url(), false, {}, std::chrono::seconds(5)}, nullptr, limiter);
  CachedFetcher qf("quickgo", {quickgo.base_url(), false, {}, std::chrono::seconds(5)}, nullptr, limiter);
  UniProtClient up(uf);
  GoClient go(qf, up);
  FetchStats stats;
  const auto u = up.describe("XBP1", stats);
  ASSERT_EQ(u.size(), 1u);
  EXPECT_EQ(u[0].text, "XBP1 function: Functions in the UPR.");
  const auto g = go.describe("XBP1", stats);
  ASSERT_EQ(g.size(), 1u);
  EXPECT_EQ(g[0].source, Source::GO);
  EXPECT_EQ(g[0].text, "XBP1 GO terms: endoplasmic reticulum unfolded protein response; response to unfolded protein");
}

TEST(RemoteClients, PubMedFillsMissingAbstract) {
  fixtures::GetStub stub;
  stub.route("/efetch.fcgi", {200, "  Abstract body.  \n"});
  CachedFetcher fetcher("pubmed", {stub.base_url(), false, {}, std::chrono::seconds(5)}, nullptr,
                        std::make_shared<RateLimiter>(1000.0));
  PubMedClient pubmed(fetcher);
  KnowledgeSources sources;
  sources.pubmed = &pubmed;
  TaskInstance inst;
  inst.task = Task::SQA;
  inst.id = "sqa-2";
  inst.input = QuestionInput{"Q?"};
  inst.ground_truth = QaTruth{"A.", "Excerpt.", "", "31234567"};
  const auto bundle = retrieve_knowledge(inst, graph(), sources);
  ASSERT_EQ(bundle.items.size(), 2u);
  EXPECT_EQ(bundle.items[0].key, "abstract:31234567");
  EXPECT_EQ(bundle.items[0].text, "Abstract body.");
}

TEST(RemoteClients, OlsSearchFeedsResolution) {
  fixtures::GetStub stub;
  stub.route("/api/search", {200, R"({"response":{"docs":[{"obo_id":"UBERON:0002106"},{"obo_id":"CL:0000236"}]}})"});
  CachedFetcher fetcher("ols", {stub.base_url(), false, {}, std::chrono::seconds(5)}, nullptr,
                        std::make_shared<RateLimiter>(1000.0));
  OlsSearch ols(fetcher);
  EXPECT_EQ(resolve_term(graph(), "B-lymphocyte of the spleen", &ols), "CL:0000236");
  EXPECT_NE(stub.seen()[0].find("ontology=cl"), std::string::npos);
}

TEST(RemoteClients, OlsUnreachableDegradesToMiss) {
  CachedFetcher fetcher("ols", {"http://127.0.0.1:1", false, {1, std::chrono::milliseconds(1), 1.0}, std::chrono::milliseconds(200)},
                        nullptr, std::make_shared<RateLimiter>(1000.0));
  OlsSearch ols(fetcher);
  EXPECT_EQ(resolve_term(graph(), "B-lymphocyte of the spleen", &ols), std::nullopt);
}

TEST(RateLimit, EnforcesSpacing) {
  RateLimiter limiter(20.0);
  const auto start = std::chrono::steady_clock::now();
  for (int i = 0; i < 4; ++i) limiter.acquire();
  EXPECT_GE(std::chrono::steady_clock::now() - start, std::chrono::milliseconds(140));
}

TEST(Url, ParseAndEncode) {
  const auto u = parse_url("https://eutils.ncbi.nlm.nih.gov/entrez/eutils");
  EXPECT_EQ(u.origin, "https://eutils.ncbi.nlm.nih.gov");
  EXPECT_EQ(u.path, "/entrez/eutils");
  EXPECT_EQ(parse_url("http://h:8080").path, "/");
  EXPECT_EQ(url_encode("a b[c]"), "a%20b%5Bc%5D");
  EXPECT_TRUE(is_retryable_status(429));
  EXPECT_TRUE(is_retryable_status(502));
  EXPECT_FALSE(is_retryable_status(404));
}
