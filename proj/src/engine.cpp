#include "raganything/engine.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "raganything/errors.hpp"
#include "raganything/text_utils.hpp"

namespace raganything {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string backend_name(Backend b) {
  return b == Backend::http ? "http" : "stub";
}

Backend backend_from_name(const std::string& s) {
  if (s == "http") return Backend::http;
  if (s == "stub") return Backend::stub;
  throw ConfigError("unknown backend '" + s + "'");
}

void emit_profile(std::ostream& out, const std::string& section,
                  const ModelProfile& p) {
  out << "[" << section << "]\n";
  out << "backend = " << backend_name(p.backend) << "\n";
  out << "endpoint_url = " << p.endpoint_url << "\n";
  out << "model_name = " << p.model_name << "\n";
  out << "api_key_env = " << p.api_key_env << "\n";
  out << "timeout_s = " << p.timeout_s << "\n";
  out << "max_retries = " << p.max_retries << "\n";
  out << "embedding_dim = " << p.embedding_dim << "\n";
}

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("'" + key + "' must be true or false, got '" + v + "'");
}

}  // namespace

std::string serialize_config(const EngineConfig& c) {
  std::ostringstream out;
  out << "[paths]\n";
  out << "corpus_root = " << c.corpus_root << "\n";
  out << "index_path = " << c.index_path << "\n";
  out << "[build]\n";
  out << "delta = " << c.delta << "\n";
  out << "max_chunk_tokens = " << c.chunking.max_chunk_tokens << "\n";
  out << "overlap_tokens = " << c.chunking.overlap_tokens << "\n";
  out << "workers = " << c.workers << "\n";
  out << "[retrieval]\n";
  out << "top_k_semantic = " << c.retrieval.top_k_semantic << "\n";
  out << "hop_limit = " << c.retrieval.hop_limit << "\n";
  out << "w_sem = " << c.retrieval.w_sem << "\n";
  out << "w_str = " << c.retrieval.w_str << "\n";
  out << "w_mod = " << c.retrieval.w_mod << "\n";
  out << "entity_relation_token_budget = "
      << c.retrieval.entity_relation_token_budget << "\n";
  out << "chunk_token_budget = " << c.retrieval.chunk_token_budget << "\n";
  out << "use_reranker = " << (c.retrieval.use_reranker ? "true" : "false")
      << "\n";
  out << "chunk_only = " << (c.retrieval.chunk_only_mode ? "true" : "false")
      << "\n";
  emit_profile(out, "model.chat", c.chat);
  emit_profile(out, "model.vision", c.vision);
  emit_profile(out, "model.embed", c.embed);
  emit_profile(out, "model.rerank", c.rerank_model);
  return out.str();
}

EngineConfig parse_config(const std::string& text) {
  EngineConfig c;
  std::string section;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[' && t.back() == ']') {
      section = t.substr(1, t.size() - 2);
      continue;
    }
    auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) +
                        ": expected 'key = value'");
    std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));

    auto profile_for = [&]() -> ModelProfile* {
      if (section == "model.chat") return &c.chat;
      if (section == "model.vision") return &c.vision;
      if (section == "model.embed") return &c.embed;
      if (section == "model.rerank") return &c.rerank_model;
      return nullptr;
    };

    try {
      if (section == "paths") {
        if (key == "corpus_root") c.corpus_root = value;
        else if (key == "index_path") c.index_path = value;
        else throw ConfigError("unknown key '" + key + "' in [paths]");
      } else if (section == "build") {
        if (key == "delta") c.delta = static_cast<std::uint32_t>(std::stoul(value));
        else if (key == "max_chunk_tokens") c.chunking.max_chunk_tokens = std::stoul(value);
        else if (key == "overlap_tokens") c.chunking.overlap_tokens = std::stoul(value);
        else if (key == "workers") c.workers = std::stoul(value);
        else throw ConfigError("unknown key '" + key + "' in [build]");
      } else if (section == "retrieval") {
        if (key == "top_k_semantic") c.retrieval.top_k_semantic = std::stoi(value);
        else if (key == "hop_limit") c.retrieval.hop_limit = std::stoi(value);
        else if (key == "w_sem") c.retrieval.w_sem = std::stod(value);
        else if (key == "w_str") c.retrieval.w_str = std::stod(value);
        else if (key == "w_mod") c.retrieval.w_mod = std::stod(value);
        else if (key == "entity_relation_token_budget")
          c.retrieval.entity_relation_token_budget = std::stoul(value);
        else if (key == "chunk_token_budget")
          c.retrieval.chunk_token_budget = std::stoul(value);
        else if (key == "use_reranker")
          c.retrieval.use_reranker = parse_bool(value, key);
        else if (key == "chunk_only")
          c.retrieval.chunk_only_mode = parse_bool(value, key);
        else throw ConfigError("unknown key '" + key + "' in [retrieval]");
      } else if (ModelProfile* p = profile_for()) {
        if (key == "backend") p->backend = backend_from_name(value);
        else if (key == "endpoint_url") p->endpoint_url = value;
        else if (key == "model_name") p->model_name = value;
        else if (key == "api_key_env") p->api_key_env = value;
        else if (key == "timeout_s") p->timeout_s = std::stod(value);
        else if (key == "max_retries") p->max_retries = std::stoi(value);
        else if (key == "embedding_dim") p->embedding_dim = std::stoi(value);
        else throw ConfigError("unknown key '" + key + "' in [" + section + "]");
      } else {
        throw ConfigError("unknown section [" + section + "]");
      }
    } catch (const std::invalid_argument&) {
      throw ConfigError("line " + std::to_string(lineno) + ": bad value for '" +
                        key + "'");
    }
  }
  for (const ModelProfile* p : {&c.chat, &c.vision, &c.embed, &c.rerank_model})
    if (p->backend == Backend::http && p->endpoint_url.empty())
      throw ConfigError("http backend requires endpoint_url");
  c.retrieval.validate();
  return c;
}

EngineConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::vector<FileValidation> validate_corpus(const std::string& corpus_dir) {
  if (!fs::is_directory(corpus_dir))
    throw IoError("'" + corpus_dir + "' is not a directory");
  std::vector<std::string> files;
  for (const auto& entry : fs::directory_iterator(corpus_dir))
    if (entry.is_regular_file() && entry.path().extension() == ".json")
      files.push_back(entry.path().string());
  std::sort(files.begin(), files.end());

  std::vector<FileValidation> report;
  std::set<std::string> seen_ids;
  for (const auto& file : files) {
    FileValidation v;
    v.file = file;
    try {
      std::ifstream in(file);
      std::stringstream buf;
      buf << in.rdbuf();
      KnowledgeSource src = load_source(buf.str());
      if (!seen_ids.insert(src.source_id).second)
        throw SchemaError("duplicate source_id '" + src.source_id + "'");
    } catch (const EngineError& e) {
      v.ok = false;
      v.error = e.what();
    }
    report.push_back(std::move(v));
  }
  return report;
}

std::vector<KnowledgeSource> load_corpus(const std::string& corpus_dir) {
  if (!fs::is_directory(corpus_dir))
    throw IoError("'" + corpus_dir + "' is not a directory");
  std::vector<std::string> files;
  for (const auto& entry : fs::directory_iterator(corpus_dir))
    if (entry.is_regular_file() && entry.path().extension() == ".json")
      files.push_back(entry.path().string());
  std::sort(files.begin(), files.end());

  std::vector<KnowledgeSource> corpus;
  std::set<std::string> seen_ids;
  for (const auto& file : files) {
    std::ifstream in(file);
    std::stringstream buf;
    buf << in.rdbuf();
    KnowledgeSource src = load_source(buf.str());
    if (!seen_ids.insert(src.source_id).second)
      throw SchemaError(file + ": duplicate source_id '" + src.source_id + "'");
    corpus.push_back(std::move(src));
  }
  return corpus;
}

RetrievalIndex build_index(const std::vector<KnowledgeSource>& corpus,
                           const EngineConfig& config, ModelGateway& gateway) {
  config.retrieval.validate();
  std::vector<const KnowledgeSource*> ordered;
  for (const auto& s : corpus) ordered.push_back(&s);
  std::sort(ordered.begin(), ordered.end(), [](const auto* a, const auto* b) {
    return a->source_id < b->source_id;
  });

  RetrievalIndex index;
  KnowledgeGraph cross_all, text_all;
  std::vector<ChunkRecord> all_chunks;
  std::vector<UnitOutcome> outcomes;

  const bool chunk_only = config.retrieval.chunk_only_mode;
  for (const auto* src : ordered) {
    if (chunk_only) {
      // No graph construction: per-unit descriptions become chunks
      // directly, text units still go through the chunking policy.
      {
        for (const auto& unit : src->units) {
          if (unit.modality == ModalityType::text) continue;
          try {
            ContextWindow window = neighborhood(*src, unit.index, config.delta);
            auto [description, summary] =
                gateway.describe_multimodal(unit, window, config.vision);
            ChunkRecord chunk;
            chunk.chunk_key = unit.unit_id;
            chunk.covered_unit_ids = {unit.unit_id};
            chunk.modality = unit.modality;
            chunk.retrieval_text = description;
            chunk.entity_summary = summary;
            chunk.token_count = text::count_tokens(description);
            if (const auto* img = std::get_if<ImagePayload>(&unit.content))
              chunk.image_ref = img->image_ref;
            all_chunks.push_back(std::move(chunk));
            outcomes.push_back({unit.unit_id, true, ""});
          } catch (const EngineError& e) {
            outcomes.push_back({unit.unit_id, false, e.what()});
          }
        }
      }
      for (auto& c : pack_text_chunks(*src, config.chunking)) {
        outcomes.push_back({c.chunk_key, true, ""});
        all_chunks.push_back(std::move(c));
      }
      continue;
    }

    GraphBuildResult cross = build_cross_modal_graph(
        *src, config.delta, gateway, config.vision, config.chat,
        config.workers);
    GraphBuildResult textual = build_text_graph(
        *src, gateway, config.chat, config.chunking, config.workers);

    for (auto& [id, e] : cross.graph.entities) cross_all.add_entity(e);
    for (auto& [id, r] : cross.graph.relations) cross_all.add_relation(r);
    for (auto& [id, e] : textual.graph.entities) text_all.add_entity(e);
    for (auto& [id, r] : textual.graph.relations) text_all.add_relation(r);
    for (auto& c : cross.chunks) all_chunks.push_back(std::move(c));
    for (auto& c : textual.chunks) all_chunks.push_back(std::move(c));
    for (auto& o : cross.manifest) outcomes.push_back(std::move(o));
    for (auto& o : textual.manifest) outcomes.push_back(std::move(o));
  }

  if (!chunk_only) index.graph = align_and_merge(cross_all, text_all);
  for (auto& c : all_chunks) {
    std::string key = c.chunk_key;
    if (index.chunks.count(key))
      throw SchemaError("duplicate chunk key '" + key + "'");
    index.chunks.emplace(std::move(key), std::move(c));
  }
  index.table =
      build_embedding_table(index.graph, index.chunks, gateway, config.embed);

  index.manifest.delta = config.delta;
  index.manifest.embed_model = config.embed.model_name;
  index.manifest.max_chunk_tokens = config.chunking.max_chunk_tokens;
  index.manifest.overlap_tokens = config.chunking.overlap_tokens;
  index.manifest.chunk_only = chunk_only;
  index.manifest.unit_outcomes = std::move(outcomes);
  if (ModelGateway::effective_backend(config.embed) == Backend::stub) {
    index.manifest.built_at = "deterministic";
  } else {
    auto now = std::chrono::system_clock::now();
    auto t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    index.manifest.built_at = buf;
  }

  index.rebuild_unit_map();
  index.validate();
  return index;
}

QueryResult run_query(const RetrievalIndex& index, const std::string& q,
                      const EngineConfig& config, ModelGateway& gateway,
                      const SynthesisOptions& options) {
  QueryResult result;
  result.analysis = analyze_query(q, gateway, config.embed);

  auto stru = structural_candidates(result.analysis, index, config.retrieval);
  auto seman = semantic_candidates(result.analysis, index, config.retrieval);
  auto ranked = unify_and_score(stru, seman, result.analysis, index,
                                config.retrieval, gateway, config.rerank_model);
  result.bundle = apply_budgets(ranked, index, config.retrieval);
  result.context = build_context(result.bundle, index);
  result.visuals = dereference_visuals(result.bundle, index,
                                       config.corpus_root, options.max_images);
  result.answer = generate_response(q, result.context, result.visuals, gateway,
                                    config.chat, options);
  return result;
}

std::string candidates_to_json(const SelectionBundle& bundle) {
  json j;
  j["candidates"] = json::array();
  for (const auto& c : bundle.ranked) {
    json jc;
    jc["chunk_key"] = c.chunk_key;
    json origin = json::array();
    if (c.from_structural) origin.push_back("structural");
    if (c.from_semantic) origin.push_back("semantic");
    jc["origin"] = origin;
    jc["s_sem"] = c.s_sem;
    jc["s_str"] = c.s_str;
    jc["s_mod"] = c.s_mod;
    jc["fused"] = c.fused;
    if (c.hop_distance) jc["hop_distance"] = *c.hop_distance;
    jc["matched_entities"] = c.matched_entities;
    j["candidates"].push_back(std::move(jc));
  }
  j["admitted_chunks"] = bundle.chunk_keys;
  j["admitted_entities"] = bundle.entity_ids;
  j["admitted_relations"] = bundle.relation_ids;
  return j.dump(2);
}

}  // namespace raganything
