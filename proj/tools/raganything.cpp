#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "raganything/engine.hpp"
#include "raganything/errors.hpp"

namespace rag = raganything;
using nlohmann::json;

namespace {

rag::EngineConfig make_config(const std::string& config_path) {
  if (config_path.empty()) return rag::EngineConfig{};  // all-stub defaults
  return rag::load_config_file(config_path);
}

int cmd_ingest(const std::string& corpus_dir) {
  auto report = rag::validate_corpus(corpus_dir);
  if (report.empty()) {
    std::cerr << "E_EMPTY_CORPUS: no documents in '" << corpus_dir << "'\n";
    return 1;
  }
  int failures = 0;
  for (const auto& v : report) {
    if (v.ok) {
      std::cout << "PASS " << v.file << "\n";
    } else {
      std::cout << "FAIL " << v.file << " " << v.error << "\n";
      ++failures;
    }
  }
  std::cout << report.size() - failures << "/" << report.size()
            << " documents valid\n";
  return failures == 0 ? 0 : 1;
}

int cmd_index(const std::string& corpus_dir, const std::string& out_path,
              rag::EngineConfig config) {
  auto corpus = rag::load_corpus(corpus_dir);
  if (corpus.empty()) {
    std::cerr << "E_EMPTY_CORPUS: no documents in '" << corpus_dir << "'\n";
    return 1;
  }
  rag::ModelGateway gateway;
  rag::RetrievalIndex index = rag::build_index(corpus, config, gateway);
  rag::persist_index(index, out_path);

  std::size_t skipped = 0;
  for (const auto& o : index.manifest.unit_outcomes)
    if (!o.ok) ++skipped;
  std::cout << "indexed " << corpus.size() << " documents: "
            << index.graph.entities.size() << " entities, "
            << index.graph.relations.size() << " relations, "
            << index.chunks.size() << " chunks";
  if (skipped > 0) std::cout << ", " << skipped << " units skipped";
  std::cout << "\n";
  for (const auto& o : index.manifest.unit_outcomes)
    if (!o.ok) std::cout << "skipped " << o.unit_or_chunk_id << ": " << o.error
                         << "\n";
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

int cmd_query(const std::string& index_path, const std::string& q,
              bool dry_run, bool as_json, bool no_reranker,
              rag::EngineConfig config, const std::string& out_path) {
  rag::RetrievalIndex index = rag::load_index(index_path);
  if (no_reranker) config.retrieval.use_reranker = false;
  config.retrieval.chunk_only_mode = index.manifest.chunk_only;

  rag::ModelGateway gateway;
  rag::SynthesisOptions options;
  options.dry_run = dry_run;
  rag::QueryResult result = rag::run_query(index, q, config, gateway, options);

  std::string output =
      as_json ? rag::candidates_to_json(result.bundle) : result.answer;
  if (out_path.empty()) {
    std::cout << output;
    if (!output.empty() && output.back() != '\n') std::cout << "\n";
  } else {
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw rag::IoError("cannot open '" + out_path + "'");
    out << output;
  }
  for (const auto& w : result.visuals.warnings)
    std::cerr << "warning: " << w << "\n";
  return 0;
}

int cmd_eval(const std::string& index_path, const std::string& qa_path,
             bool strict, rag::EngineConfig config,
             const std::string& records_path) {
  rag::RetrievalIndex index = rag::load_index(index_path);
  config.retrieval.chunk_only_mode = index.manifest.chunk_only;

  std::ifstream in(qa_path);
  if (!in) throw rag::IoError("cannot open '" + qa_path + "'");
  std::vector<std::pair<std::string, std::string>> items;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    items.emplace_back(j.at("question").get<std::string>(),
                       j.at("reference").get<std::string>());
  }
  if (items.empty()) {
    std::cerr << "E_EMPTY_CORPUS: no questions in '" << qa_path << "'\n";
    return 1;
  }

  rag::ModelGateway gateway;
  std::size_t correct = 0, judged = 0, errored = 0;
  json records = json::array();
  for (const auto& [question, reference] : items) {
    std::string answer;
    bool verdict = false;
    std::string reason;
    bool ok = true;
    try {
      answer = rag::run_query(index, question, config, gateway).answer;
      std::string prompt = rag::render_prompt(
          rag::PromptKind::judge,
          {{"query", question}, {"reference", reference}, {"answer", answer}});
      std::string reply = gateway.generate({{"user", prompt, {}}}, config.chat);
      auto b = reply.find('{');
      auto e = reply.rfind('}');
      if (b == std::string::npos || e == std::string::npos)
        throw rag::MalformedReplyError("judge reply has no JSON");
      json jr = json::parse(reply.substr(b, e - b + 1));
      if (!jr.contains("correct") || !jr["correct"].is_boolean())
        throw rag::MalformedReplyError("judge reply missing boolean 'correct'");
      verdict = jr["correct"].get<bool>();
      reason = jr.value("reason", "");
    } catch (const rag::EngineError& err) {
      ok = false;
      reason = err.what();
    }

    if (ok) {
      ++judged;
      if (verdict) ++correct;
    } else {
      ++errored;
    }
    records.push_back({{"question", question},
                       {"reference", reference},
                       {"answer", answer},
                       {"verdict", ok && verdict},
                       {"errored", !ok},
                       {"reason", reason}});
  }

  const std::size_t denominator = strict ? judged + errored : judged;
  const double accuracy =
      denominator == 0 ? 0.0 : static_cast<double>(correct) / denominator;
  std::cout << "accuracy " << correct << "/" << denominator << " = "
            << accuracy << " (" << errored << " errored)\n";
  if (!records_path.empty()) {
    std::ofstream out(records_path);
    if (!out) throw rag::IoError("cannot open '" + records_path + "'");
    for (const auto& r : records) out << r.dump() << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multimodal graph-RAG engine"};
  app.require_subcommand(1);

  std::string config_path;
  app.add_option("--config", config_path, "Engine config file");

  std::string corpus_dir, out_path, index_path, query_text, qa_path,
      records_path, corpus_root;
  bool chunk_only = false, dry_run = false, as_json = false,
       no_reranker = false, strict = false;
  std::size_t workers = 0;

  auto* ingest = app.add_subcommand("ingest", "Validate a corpus directory");
  ingest->add_option("dir", corpus_dir, "Corpus directory")->required();

  auto* index_cmd = app.add_subcommand("index", "Build a retrieval index");
  index_cmd->add_option("dir", corpus_dir, "Corpus directory")->required();
  index_cmd->add_option("--out", out_path, "Index archive path")->required();
  index_cmd->add_flag("--chunk-only", chunk_only,
                      "Skip graph construction (chunk-based retrieval only)");
  index_cmd->add_option("--workers", workers, "Worker threads for model calls");

  auto* query_cmd = app.add_subcommand("query", "Query an index");
  query_cmd->add_option("index", index_path, "Index archive")->required();
  query_cmd->add_option("q", query_text, "Query text")->required();
  query_cmd->add_flag("--dry-run", dry_run, "Print the assembled context");
  query_cmd->add_flag("--json", as_json, "Print ranked candidates as JSON");
  query_cmd->add_flag("--no-reranker", no_reranker, "Disable reranking");
  query_cmd->add_option("--out", records_path, "Write output to file");
  query_cmd->add_option("--corpus-root", corpus_root,
                        "Root for resolving image references");

  auto* eval_cmd = app.add_subcommand("eval", "Judge answers over a QA file");
  eval_cmd->add_option("index", index_path, "Index archive")->required();
  eval_cmd->add_option("qa", qa_path, "JSONL of {question, reference}")
      ->required();
  eval_cmd->add_flag("--strict", strict,
                     "Count judge failures in the denominator");
  eval_cmd->add_option("--records", records_path, "Write per-item records");

  CLI11_PARSE(app, argc, argv);

  try {
    rag::EngineConfig config = make_config(config_path);
    if (chunk_only) config.retrieval.chunk_only_mode = true;
    if (workers > 0) config.workers = workers;
    if (!corpus_root.empty()) config.corpus_root = corpus_root;

    if (ingest->parsed()) return cmd_ingest(corpus_dir);
    if (index_cmd->parsed()) return cmd_index(corpus_dir, out_path, config);
    if (query_cmd->parsed())
      return cmd_query(index_path, query_text, dry_run, as_json, no_reranker,
                       config, records_path);
    if (eval_cmd->parsed())
      return cmd_eval(index_path, qa_path, strict, config, records_path);
  } catch (const rag::EngineError& e) {
    std::cerr << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "E_INTERNAL: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
