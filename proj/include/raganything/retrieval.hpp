#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "raganything/fusion.hpp"
#include "raganything/model_gateway.hpp"

namespace raganything {

struct RetrievalConfig {
  int top_k_semantic = 20;
  int hop_limit = 1;
  double w_sem = 0.5;
  double w_str = 0.3;
  double w_mod = 0.2;
  std::size_t entity_relation_token_budget = 20000;
  std::size_t chunk_token_budget = 12000;
  bool use_reranker = true;
  bool chunk_only_mode = false;
  bool parallel_scan = true;

  // Budgets must be positive; weights non-negative and summing to 1
  // within 1e-9.
  void validate() const;
};

struct QueryAnalysis {
  std::string raw;
  std::vector<std::string> keywords;
  std::set<ModalityType> modality_cues;
  Embedding embedding;
};

struct RankedCandidate {
  std::string chunk_key;
  bool from_structural = false;
  bool from_semantic = false;
  double s_sem = 0.0;
  double s_str = 0.0;
  int s_mod = 0;
  double fused = 0.0;
  std::optional<int> hop_distance;
  std::vector<std::string> matched_entities;  // sorted entity ids
};

// Per-chunk structural hit produced by graph navigation.
struct StructuralHit {
  int hop_distance = 0;  // min hops over contributing entities
  std::set<std::string> entities;
};

struct SelectionBundle {
  std::vector<std::string> chunk_keys;    // admitted, rank order
  std::vector<std::string> entity_ids;    // admitted, first-mention order
  std::vector<std::string> relation_ids;  // admitted, first-mention order
  std::vector<RankedCandidate> ranked;    // full fused ranking, for reporting
};

QueryAnalysis analyze_query(const std::string& q, ModelGateway& gateway,
                            const ModelProfile& embed_profile);

// Seed entities match a query keyword exactly by normalized name or
// appear as a whole-word substring of the normalized query; expansion
// walks relations in both directions up to hop_limit. Chunks are
// collected through the source units of reached entities and of
// relations whose endpoints are both reached.
std::map<std::string, StructuralHit> structural_candidates(
    const QueryAnalysis& analysis, const RetrievalIndex& index,
    const RetrievalConfig& config);

// Exact cosine scan over every chunk embedding; top_k results ordered by
// score descending, ties by lexicographically smaller chunk key. Returns
// (chunk_key, raw cosine).
std::vector<std::pair<std::string, double>> semantic_candidates(
    const QueryAnalysis& analysis, const RetrievalIndex& index,
    const RetrievalConfig& config);

std::vector<RankedCandidate> unify_and_score(
    const std::map<std::string, StructuralHit>& stru,
    const std::vector<std::pair<std::string, double>>& seman,
    const QueryAnalysis& analysis, const RetrievalIndex& index,
    const RetrievalConfig& config, ModelGateway& gateway,
    const ModelProfile& rerank_profile);

SelectionBundle apply_budgets(const std::vector<RankedCandidate>& ranked,
                              const RetrievalIndex& index,
                              const RetrievalConfig& config);

// The documented query stop list and modality-cue lexicon.
bool is_query_stop_word(const std::string& token);
std::optional<ModalityType> modality_cue(const std::string& token);

}  // namespace raganything
