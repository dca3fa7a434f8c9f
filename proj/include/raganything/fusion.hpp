#pragma once

#include <map>
#include <string>
#include <vector>

#include "raganything/graph.hpp"
#include "raganything/kg_builder.hpp"
#include "raganything/model_gateway.hpp"

namespace raganything {

// component_key -> vector; keys are "entity:<id>", "relation:<id>" and
// "chunk:<key>". One entry per index component.
struct EmbeddingTable {
  std::map<std::string, Embedding> entries;
  int dim = 0;

  bool operator==(const EmbeddingTable&) const = default;
};

struct IndexManifest {
  std::string format_version = "ragidx/1";
  std::uint32_t delta = 1;
  std::string embed_model;
  std::size_t max_chunk_tokens = 1024;
  std::size_t overlap_tokens = 64;
  bool chunk_only = false;
  std::string built_at;  // ISO timestamp, or "deterministic" under stub
  std::vector<UnitOutcome> unit_outcomes;

  bool operator==(const IndexManifest&) const = default;
};

struct RetrievalIndex {
  KnowledgeGraph graph;
  EmbeddingTable table;
  std::map<std::string, ChunkRecord> chunks;
  IndexManifest manifest;
  // Derived: unit_id -> chunk keys containing that unit.
  std::map<std::string, std::vector<std::string>> unit_to_chunks;

  void rebuild_unit_map();
  void validate() const;

  bool operator==(const RetrievalIndex& o) const {
    return graph == o.graph && table == o.table && chunks == o.chunks &&
           manifest == o.manifest;
  }
};

// Merges two graphs by normalized-name entity alignment. Descriptions
// concatenate cross-modal first with " | "; source unit sets union;
// multimodal_anchor wins on kind conflict; relations are re-pointed to
// the merged ids ("ent:<normalized name>") and exact duplicates
// (endpoints + predicate + kind) deduplicate. belongs_to edges that
// collapse into self-loops after merging are dropped.
KnowledgeGraph align_and_merge(const KnowledgeGraph& cross_modal,
                               const KnowledgeGraph& textual);

// Embeds every entity, relation and chunk. Entity text is
// "name: description"; relation text "subject predicate object:
// description"; chunk text is the retrieval text.
EmbeddingTable build_embedding_table(
    const KnowledgeGraph& graph,
    const std::map<std::string, ChunkRecord>& chunks, ModelGateway& gateway,
    const ModelProfile& embed_profile);

std::string entity_embed_text(const Entity& e);
std::string relation_embed_text(const KnowledgeGraph& g, const Relation& r);

}  // namespace raganything
