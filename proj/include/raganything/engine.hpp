#pragma once

#include <string>
#include <vector>

#include "raganything/fusion.hpp"
#include "raganything/index_io.hpp"
#include "raganything/kg_builder.hpp"
#include "raganything/retrieval.hpp"
#include "raganything/synthesis.hpp"

namespace raganything {

struct EngineConfig {
  ModelProfile chat;
  ModelProfile vision;
  ModelProfile embed;
  ModelProfile rerank_model;
  RetrievalConfig retrieval;
  std::uint32_t delta = 1;
  TextChunkingPolicy chunking;
  std::string corpus_root;
  std::string index_path;
  std::size_t workers = 1;
};

// Sectioned key/value config file; serialize/parse round-trip losslessly.
EngineConfig parse_config(const std::string& text);
std::string serialize_config(const EngineConfig& config);
EngineConfig load_config_file(const std::string& path);

struct FileValidation {
  std::string file;
  bool ok = true;
  std::string error;
};

// Validates every *.json document in a corpus directory, sorted by name.
std::vector<FileValidation> validate_corpus(const std::string& corpus_dir);

// Loads all valid documents; throws on the first invalid one.
std::vector<KnowledgeSource> load_corpus(const std::string& corpus_dir);

// Full indexing pipeline: dual-graph build per source, corpus-wide
// entity alignment, embedding table, manifest. chunk_only_mode skips
// graph construction entirely but keeps all chunks.
RetrievalIndex build_index(const std::vector<KnowledgeSource>& corpus,
                           const EngineConfig& config, ModelGateway& gateway);

struct QueryResult {
  QueryAnalysis analysis;
  SelectionBundle bundle;
  SynthesisContext context;
  VisualPayload visuals;
  std::string answer;
};

QueryResult run_query(const RetrievalIndex& index, const std::string& q,
                      const EngineConfig& config, ModelGateway& gateway,
                      const SynthesisOptions& options = {});

// Machine-readable ranked candidates with all sub-scores.
std::string candidates_to_json(const SelectionBundle& bundle);

}  // namespace raganything
