#include "raganything/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "raganything/errors.hpp"
#include "raganything/similarity.hpp"
#include "raganything/text_utils.hpp"

namespace raganything {

namespace {

const std::set<std::string>& query_stop_words() {
  static const std::set<std::string> kStop = {
      "a",     "an",    "the",   "is",    "are",   "was",  "were", "be",
      "been",  "being", "am",    "do",    "does",  "did",  "what", "which",
      "who",   "whom",  "this",  "that",  "these", "those", "in",  "on",
      "at",    "by",    "for",   "with",  "about", "of",   "to",   "from",
      "and",   "or",    "but",   "not",   "no",    "how",  "when", "where",
      "why",   "all",   "any",   "both",  "each",  "some", "such", "can",
      "could", "will",  "would", "shall", "should", "it",  "its",  "as",
      "if",    "then",  "than",  "so",    "too",   "very", "s",    "t"};
  return kStop;
}

double fused_score(const RetrievalConfig& c, double s_sem, double s_str,
                   int s_mod) {
  return c.w_sem * s_sem + c.w_str * s_str + c.w_mod * s_mod;
}

double semantic_component(double cosine_score) {
  return std::clamp((cosine_score + 1.0) / 2.0, 0.0, 1.0);
}

}  // namespace

bool is_query_stop_word(const std::string& token) {
  return query_stop_words().count(token) > 0;
}

std::optional<ModalityType> modality_cue(const std::string& token) {
  static const std::map<std::string, ModalityType> kLexicon = {
      {"figure", ModalityType::image},    {"chart", ModalityType::image},
      {"plot", ModalityType::image},      {"image", ModalityType::image},
      {"picture", ModalityType::image},   {"diagram", ModalityType::image},
      {"table", ModalityType::table},     {"row", ModalityType::table},
      {"column", ModalityType::table},    {"cell", ModalityType::table},
      {"equation", ModalityType::equation},
      {"formula", ModalityType::equation},
      {"expression", ModalityType::equation}};
  auto it = kLexicon.find(token);
  if (it == kLexicon.end()) return std::nullopt;
  return it->second;
}

void RetrievalConfig::validate() const {
  if (chunk_token_budget == 0 || entity_relation_token_budget == 0)
    throw ConfigError("token budgets must be positive");
  if (top_k_semantic <= 0) throw ConfigError("top_k_semantic must be positive");
  if (hop_limit < 0) throw ConfigError("hop_limit must be non-negative");
  if (w_sem < 0 || w_str < 0 || w_mod < 0)
    throw ConfigError("fusion weights must be non-negative");
  if (std::abs(w_sem + w_str + w_mod - 1.0) > 1e-9)
    throw ConfigError("fusion weights must sum to 1");
}

QueryAnalysis analyze_query(const std::string& q, ModelGateway& gateway,
                            const ModelProfile& embed_profile) {
  if (text::is_blank(q)) throw EmptyQueryError("query is empty");

  QueryAnalysis analysis;
  analysis.raw = q;
  for (const auto& tok : text::tokenize(q)) {
    if (auto cue = modality_cue(tok)) analysis.modality_cues.insert(*cue);
    if (is_query_stop_word(tok)) continue;
    if (std::find(analysis.keywords.begin(), analysis.keywords.end(), tok) ==
        analysis.keywords.end())
      analysis.keywords.push_back(tok);
  }
  analysis.embedding = gateway.embed_batch({q}, embed_profile).front();
  return analysis;
}

std::map<std::string, StructuralHit> structural_candidates(
    const QueryAnalysis& analysis, const RetrievalIndex& index,
    const RetrievalConfig& config) {
  config.validate();
  std::map<std::string, StructuralHit> hits;
  if (config.chunk_only_mode || index.graph.entities.empty()) return hits;

  const std::string norm_query = text::normalize_name(analysis.raw);
  const std::string padded_query = " " + norm_query + " ";
  std::set<std::string> keyword_norms;
  for (const auto& kw : analysis.keywords)
    keyword_norms.insert(text::normalize_name(kw));

  // Seeds: exact keyword match on normalized name, or whole-word
  // substring of the normalized query.
  std::map<std::string, int> hop;  // entity_id -> bfs distance
  std::deque<std::string> frontier;
  for (const auto& [name, ids] : index.graph.name_index) {
    if (name.empty()) continue;
    bool match = keyword_norms.count(name) > 0 ||
                 padded_query.find(" " + name + " ") != std::string::npos;
    if (!match) continue;
    for (const auto& id : ids) {
      hop.emplace(id, 0);
      frontier.push_back(id);
    }
  }

  // Adjacency over all relations, both directions (belongs_to included).
  std::map<std::string, std::vector<std::string>> adjacent;
  for (const auto& [rid, r] : index.graph.relations) {
    adjacent[r.subject_id].push_back(r.object_id);
    adjacent[r.object_id].push_back(r.subject_id);
  }

  while (!frontier.empty()) {
    std::string cur = frontier.front();
    frontier.pop_front();
    int d = hop[cur];
    if (d >= config.hop_limit) continue;
    auto it = adjacent.find(cur);
    if (it == adjacent.end()) continue;
    for (const auto& next : it->second) {
      if (hop.count(next)) continue;
      hop[next] = d + 1;
      frontier.push_back(next);
    }
  }

  auto contribute = [&](const std::set<std::string>& unit_ids, int d,
                        const std::set<std::string>& entity_ids) {
    for (const auto& uid : unit_ids) {
      auto it = index.unit_to_chunks.find(uid);
      if (it == index.unit_to_chunks.end()) continue;
      for (const auto& chunk_key : it->second) {
        auto [hit, inserted] = hits.emplace(chunk_key, StructuralHit{d, {}});
        if (!inserted) hit->second.hop_distance = std::min(hit->second.hop_distance, d);
        hit->second.entities.insert(entity_ids.begin(), entity_ids.end());
      }
    }
  };

  for (const auto& [eid, d] : hop)
    contribute(index.graph.entities.at(eid).source_unit_ids, d, {eid});
  for (const auto& [rid, r] : index.graph.relations) {
    auto s = hop.find(r.subject_id);
    auto o = hop.find(r.object_id);
    if (s == hop.end() || o == hop.end()) continue;
    contribute(r.source_unit_ids, std::min(s->second, o->second),
               {r.subject_id, r.object_id});
  }
  return hits;
}

std::vector<std::pair<std::string, double>> semantic_candidates(
    const QueryAnalysis& analysis, const RetrievalIndex& index,
    const RetrievalConfig& config) {
  config.validate();
  auto matrix = sim::ChunkMatrix::from_index(index);
  auto scores = sim::score_chunks(analysis.embedding, matrix,
                                  config.parallel_scan);

  std::vector<std::pair<std::string, double>> ranked;
  ranked.reserve(matrix.keys.size());
  for (std::size_t i = 0; i < matrix.keys.size(); ++i)
    ranked.emplace_back(matrix.keys[i], scores[i]);
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (ranked.size() > static_cast<std::size_t>(config.top_k_semantic))
    ranked.resize(static_cast<std::size_t>(config.top_k_semantic));
  return ranked;
}

std::vector<RankedCandidate> unify_and_score(
    const std::map<std::string, StructuralHit>& stru,
    const std::vector<std::pair<std::string, double>>& seman,
    const QueryAnalysis& analysis, const RetrievalIndex& index,
    const RetrievalConfig& config, ModelGateway& gateway,
    const ModelProfile& rerank_profile) {
  config.validate();

  std::map<std::string, RankedCandidate> pool;
  for (const auto& [key, cos] : seman) {
    RankedCandidate& c = pool[key];
    c.chunk_key = key;
    c.from_semantic = true;
    c.s_sem = semantic_component(cos);
  }
  for (const auto& [key, hit] : stru) {
    RankedCandidate& c = pool[key];
    c.chunk_key = key;
    c.from_structural = true;
    c.hop_distance = hit.hop_distance;
    c.s_str = 1.0 / (1.0 + hit.hop_distance);
    c.matched_entities.assign(hit.entities.begin(), hit.entities.end());
  }

  std::vector<RankedCandidate> ranked;
  ranked.reserve(pool.size());
  for (auto& [key, c] : pool) {
    if (!c.from_semantic) {
      // Structural-only candidate: semantic score computed on demand.
      auto it = index.table.entries.find("chunk:" + key);
      if (it == index.table.entries.end())
        throw DanglingKeyError("no embedding for chunk '" + key + "'");
      c.s_sem = semantic_component(cosine(analysis.embedding, it->second));
    }
    const auto& chunk = index.chunks.at(key);
    c.s_mod = analysis.modality_cues.count(chunk.modality) ? 1 : 0;
    c.fused = fused_score(config, c.s_sem, c.s_str, c.s_mod);
    ranked.push_back(std::move(c));
  }
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.fused != b.fused) return a.fused > b.fused;
    return a.chunk_key < b.chunk_key;
  });

  if (config.use_reranker && !ranked.empty()) {
    const std::size_t window = std::min(
        ranked.size(), static_cast<std::size_t>(2) * config.top_k_semantic);
    std::vector<std::string> passages;
    passages.reserve(window);
    for (std::size_t i = 0; i < window; ++i)
      passages.push_back(index.chunks.at(ranked[i].chunk_key).retrieval_text);
    auto order = gateway.rerank(analysis.raw, passages, rerank_profile);
    std::vector<RankedCandidate> reordered;
    reordered.reserve(ranked.size());
    for (const auto& [idx, score] : order) reordered.push_back(ranked[idx]);
    for (std::size_t i = window; i < ranked.size(); ++i)
      reordered.push_back(ranked[i]);
    ranked = std::move(reordered);
  }
  return ranked;
}

SelectionBundle apply_budgets(const std::vector<RankedCandidate>& ranked,
                              const RetrievalIndex& index,
                              const RetrievalConfig& config) {
  config.validate();
  SelectionBundle bundle;
  bundle.ranked = ranked;

  // Chunks: strict prefix, stop at the first overflow.
  std::size_t chunk_tokens = 0;
  for (const auto& c : ranked) {
    const auto& chunk = index.chunks.at(c.chunk_key);
    if (chunk_tokens + chunk.token_count > config.chunk_token_budget) break;
    chunk_tokens += chunk.token_count;
    bundle.chunk_keys.push_back(c.chunk_key);
  }

  if (config.chunk_only_mode) return bundle;

  // Entities and relations in rank-of-first-mention order, one combined
  // token stream under the entity/relation budget.
  std::set<std::string> seen_entities;
  std::set<std::string> seen_relations;
  std::size_t er_tokens = 0;
  bool overflow = false;

  std::map<std::string, std::vector<std::string>> incident;
  for (const auto& [rid, r] : index.graph.relations) {
    incident[r.subject_id].push_back(rid);
    incident[r.object_id].push_back(rid);
  }

  for (const auto& c : ranked) {
    if (overflow) break;
    for (const auto& eid : c.matched_entities) {
      if (overflow) break;
      if (!seen_entities.insert(eid).second) continue;
      auto it = index.graph.entities.find(eid);
      if (it == index.graph.entities.end())
        throw DanglingKeyError("candidate references unknown entity '" + eid +
                               "'");
      std::size_t tk = text::count_tokens(entity_embed_text(it->second));
      if (er_tokens + tk > config.entity_relation_token_budget) {
        overflow = true;
        break;
      }
      er_tokens += tk;
      bundle.entity_ids.push_back(eid);

      auto inc = incident.find(eid);
      if (inc == incident.end()) continue;
      for (const auto& rid : inc->second) {
        if (!seen_relations.insert(rid).second) continue;
        const auto& rel = index.graph.relations.at(rid);
        std::size_t rtk = text::count_tokens(relation_embed_text(index.graph, rel));
        if (er_tokens + rtk > config.entity_relation_token_budget) {
          overflow = true;
          break;
        }
        er_tokens += rtk;
        bundle.relation_ids.push_back(rid);
      }
    }
  }
  return bundle;
}

}  // namespace raganything
