#include <doctest.h>

#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "raganything/engine.hpp"
#include "raganything/errors.hpp"

using namespace raganything;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) {
    path = fs::temp_directory_path() / name;
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

std::string doc_json(const std::string& source_id) {
  nlohmann::json j;
  j["source_id"] = source_id;
  j["title"] = "Doc " + source_id;
  j["units"] = nlohmann::json::array();
  j["units"].push_back(
      {{"index", 0},
       {"modality", "text"},
       {"payload", {{"body", "Tesla announced the Roadster. Tesla builds cars."}}}});
  j["units"].push_back(
      {{"index", 1},
       {"modality", "image"},
       {"payload",
        {{"image_ref", "fig.png"}, {"caption", "Revenue Chart"}, {"footnotes", nlohmann::json::array()}}}});
  return j.dump(2);
}

EngineConfig stub_config() {
  EngineConfig c;  // all backends default to stub
  return c;
}

}  // namespace

TEST_CASE("config serializes and parses losslessly") {
  EngineConfig c = stub_config();
  c.corpus_root = "/data/corpus";
  c.index_path = "/data/index.bin";
  c.delta = 2;
  c.workers = 4;
  c.chunking.max_chunk_tokens = 512;
  c.chunking.overlap_tokens = 32;
  c.retrieval.top_k_semantic = 7;
  c.retrieval.hop_limit = 2;
  c.retrieval.use_reranker = false;
  c.retrieval.chunk_only_mode = true;
  c.chat.backend = Backend::http;
  c.chat.endpoint_url = "http://localhost:9999/v1";
  c.chat.model_name = "demo-chat";
  c.chat.api_key_env = "DEMO_API_KEY";
  c.chat.timeout_s = 12.5;
  c.chat.max_retries = 3;

  std::string text = serialize_config(c);
  EngineConfig parsed = parse_config(text);
  CHECK(serialize_config(parsed) == text);
  CHECK(parsed.corpus_root == "/data/corpus");
  CHECK(parsed.delta == 2);
  CHECK(parsed.workers == 4);
  CHECK(parsed.retrieval.top_k_semantic == 7);
  CHECK(parsed.retrieval.chunk_only_mode);
  CHECK_FALSE(parsed.retrieval.use_reranker);
  CHECK(parsed.chat.backend == Backend::http);
  CHECK(parsed.chat.endpoint_url == "http://localhost:9999/v1");
  CHECK(parsed.chat.api_key_env == "DEMO_API_KEY");
  CHECK(parsed.chat.timeout_s == doctest::Approx(12.5));
}

TEST_CASE("config parser ignores comments and blank lines") {
  EngineConfig c = parse_config(
      "# leading comment\n"
      "\n"
      "[build]\n"
      "; another comment\n"
      "delta = 3\n");
  CHECK(c.delta == 3);
}

TEST_CASE("config parser rejects malformed input") {
  CHECK_THROWS_AS(parse_config("[build]\nturbo = on\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[warp]\nspeed = 9\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[build]\ndelta = fast\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[build]\nno equals sign\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[retrieval]\nuse_reranker = maybe\n"),
                  ConfigError);
  CHECK_THROWS_AS(parse_config("[model.chat]\nbackend = quantum\n"),
                  ConfigError);
  // http backend without an endpoint is unusable.
  CHECK_THROWS_AS(parse_config("[model.chat]\nbackend = http\n"), ConfigError);
  // weights must renormalize to 1.
  CHECK_THROWS_AS(parse_config("[retrieval]\nw_sem = 0.9\n"), ConfigError);
}

TEST_CASE("load_config_file reads a file and reports missing ones") {
  TempDir dir("rag_engine_cfg");
  write_file(dir.path / "engine.cfg", "[build]\nworkers = 2\n");
  EngineConfig c = load_config_file((dir.path / "engine.cfg").string());
  CHECK(c.workers == 2);
  CHECK_THROWS_AS(load_config_file((dir.path / "absent.cfg").string()),
                  IoError);
}

TEST_CASE("validate_corpus reports per-file results in sorted order") {
  TempDir dir("rag_engine_validate");
  write_file(dir.path / "b.json", doc_json("docB"));
  write_file(dir.path / "a.json", doc_json("docA"));
  write_file(dir.path / "c.json", "{ broken");
  write_file(dir.path / "d.json", doc_json("docA"));  // duplicate id
  write_file(dir.path / "notes.txt", "ignored, not json");

  auto report = validate_corpus(dir.path.string());
  REQUIRE(report.size() == 4);
  CHECK(fs::path(report[0].file).filename() == "a.json");
  CHECK(fs::path(report[1].file).filename() == "b.json");
  CHECK(report[0].ok);
  CHECK(report[1].ok);
  CHECK_FALSE(report[2].ok);
  CHECK(report[2].error.find("E_SCHEMA") != std::string::npos);
  CHECK_FALSE(report[3].ok);
  CHECK(report[3].error.find("duplicate source_id") != std::string::npos);

  CHECK_THROWS_AS(validate_corpus((dir.path / "nope").string()), IoError);
}

TEST_CASE("load_corpus loads documents sorted by file name") {
  TempDir dir("rag_engine_load");
  write_file(dir.path / "b.json", doc_json("docB"));
  write_file(dir.path / "a.json", doc_json("docA"));
  auto corpus = load_corpus(dir.path.string());
  REQUIRE(corpus.size() == 2);
  CHECK(corpus[0].source_id == "docA");
  CHECK(corpus[1].source_id == "docB");

  write_file(dir.path / "c.json", doc_json("docA"));
  CHECK_THROWS_AS(load_corpus(dir.path.string()), SchemaError);
}

TEST_CASE("build_index produces a validated, fully covered index") {
  std::vector<KnowledgeSource> corpus = {load_source(doc_json("d1")),
                                         load_source(doc_json("d2"))};
  EngineConfig config = stub_config();
  ModelGateway gw;
  RetrievalIndex index = build_index(corpus, config, gw);
  index.validate();

  CHECK_FALSE(index.graph.entities.empty());
  CHECK_FALSE(index.chunks.empty());
  // One image chunk and at least one text chunk per document.
  CHECK(index.chunks.count("d1#1") == 1);
  CHECK(index.chunks.count("d2#1") == 1);
  CHECK(index.chunks.at("d1#1").image_ref == "fig.png");
  // Table covers entities, relations and chunks exactly.
  CHECK(index.table.entries.size() == index.graph.entities.size() +
                                          index.graph.relations.size() +
                                          index.chunks.size());
  CHECK(index.manifest.chunk_only == false);
  CHECK(index.manifest.delta == config.delta);
  CHECK(index.manifest.built_at == "deterministic");
  // Every unit outcome for this stub corpus succeeded.
  for (const auto& o : index.manifest.unit_outcomes) CHECK(o.ok);
}

TEST_CASE("build_index is deterministic across runs and worker counts") {
  std::vector<KnowledgeSource> corpus = {load_source(doc_json("d1")),
                                         load_source(doc_json("d2"))};
  EngineConfig config = stub_config();
  ModelGateway gw;
  RetrievalIndex a = build_index(corpus, config, gw);
  RetrievalIndex b = build_index(corpus, config, gw);
  CHECK(a == b);
  config.workers = 4;
  RetrievalIndex c = build_index(corpus, config, gw);
  CHECK(a == c);
}

TEST_CASE("build_index order of sources does not matter") {
  std::vector<KnowledgeSource> fwd = {load_source(doc_json("d1")),
                                      load_source(doc_json("d2"))};
  std::vector<KnowledgeSource> rev = {fwd[1], fwd[0]};
  EngineConfig config = stub_config();
  ModelGateway gw;
  CHECK(build_index(fwd, config, gw) == build_index(rev, config, gw));
}

TEST_CASE("chunk-only mode skips the graph but keeps every chunk") {
  std::vector<KnowledgeSource> corpus = {load_source(doc_json("d1"))};
  EngineConfig config = stub_config();
  config.retrieval.chunk_only_mode = true;
  ModelGateway gw;
  RetrievalIndex index = build_index(corpus, config, gw);
  CHECK(index.graph.entities.empty());
  CHECK(index.graph.relations.empty());
  CHECK(index.chunks.count("d1#1") == 1);
  CHECK(index.manifest.chunk_only);
  CHECK(index.table.entries.size() == index.chunks.size());
}

TEST_CASE("run_query answers end to end with the stub backends") {
  std::vector<KnowledgeSource> corpus = {load_source(doc_json("d1"))};
  EngineConfig config = stub_config();
  ModelGateway gw;
  RetrievalIndex index = build_index(corpus, config, gw);

  QueryResult r = run_query(index, "what did Tesla announce", config, gw);
  CHECK_FALSE(r.bundle.ranked.empty());
  CHECK_FALSE(r.bundle.chunk_keys.empty());
  CHECK_FALSE(r.context.rendered.empty());
  CHECK(r.answer.rfind("stub-reply:", 0) == 0);

  SynthesisOptions dry;
  dry.dry_run = true;
  QueryResult d = run_query(index, "what did Tesla announce", config, gw, dry);
  CHECK(d.answer == d.context.rendered);

  CHECK_THROWS_AS(run_query(index, "   ", config, gw), EmptyQueryError);
}

TEST_CASE("candidates_to_json is valid JSON with all sub-scores") {
  std::vector<KnowledgeSource> corpus = {load_source(doc_json("d1"))};
  EngineConfig config = stub_config();
  ModelGateway gw;
  RetrievalIndex index = build_index(corpus, config, gw);
  QueryResult r = run_query(index, "tesla revenue chart", config, gw);

  auto j = nlohmann::json::parse(candidates_to_json(r.bundle));
  REQUIRE(j.contains("candidates"));
  REQUIRE(j["candidates"].is_array());
  CHECK(j["candidates"].size() == r.bundle.ranked.size());
  for (const auto& c : j["candidates"]) {
    CHECK(c.contains("chunk_key"));
    CHECK(c.contains("origin"));
    CHECK(c.contains("s_sem"));
    CHECK(c.contains("s_str"));
    CHECK(c.contains("s_mod"));
    CHECK(c.contains("fused"));
  }
  CHECK(j["admitted_chunks"].size() == r.bundle.chunk_keys.size());
  CHECK(j.contains("admitted_entities"));
  CHECK(j.contains("admitted_relations"));
}
