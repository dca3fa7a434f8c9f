#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "raganything/content_model.hpp"
#include "raganything/graph.hpp"
#include "raganything/model_gateway.hpp"

namespace raganything {

struct ExtractedEntity {
  std::string name;
  std::string type;
  std::string description;
};

struct ExtractedRelation {
  std::string subject;  // entity name
  std::string predicate;
  std::string object;  // entity name
  std::string description;
};

struct ExtractionResult {
  std::vector<ExtractedEntity> entities;
  std::vector<ExtractedRelation> relations;
};

struct TextChunkingPolicy {
  std::size_t max_chunk_tokens = 1024;
  std::size_t overlap_tokens = 64;
};

// Per-unit build outcome, persisted in the KG manifest.
struct UnitOutcome {
  std::string unit_or_chunk_id;
  bool ok = true;
  std::string error;
  bool operator==(const UnitOutcome&) const = default;
};

struct GraphBuildResult {
  KnowledgeGraph graph;
  std::vector<ChunkRecord> chunks;
  std::vector<UnitOutcome> manifest;
};

// Entity/relation extraction over one description. Stub backends apply a
// deterministic lexical rule: entities are maximal capitalized token runs
// (stop words trimmed from the edges) plus double-quoted spans; relations
// are sentence-level co-occurrence with predicate "related_to", no
// self-loops. HTTP backends go through the entity_extraction prompt;
// relations naming undeclared entities are dropped.
ExtractionResult extract_graph(const std::string& description,
                               ModelGateway& gateway,
                               const ModelProfile& profile);

// Cross-modal graph: every non-text unit becomes a multimodal anchor with
// its intra-description entities attached via belongs_to edges. Per-unit
// gateway failures skip the unit and are recorded in the manifest.
GraphBuildResult build_cross_modal_graph(const KnowledgeSource& source,
                                         std::uint32_t delta,
                                         ModelGateway& gateway,
                                         const ModelProfile& vision_profile,
                                         const ModelProfile& chat_profile,
                                         std::size_t workers = 1);

// Greedy token-packing of text units into chunks: whole units pack up to
// max_chunk_tokens; oversized units split into overlapping token windows.
// Chunk keys are "<source_id>#txt<n>".
std::vector<ChunkRecord> pack_text_chunks(const KnowledgeSource& source,
                                          const TextChunkingPolicy& policy);

// Text graph: text units packed into chunks per policy, extraction run on
// raw chunk text without a context window.
GraphBuildResult build_text_graph(const KnowledgeSource& source,
                                  ModelGateway& gateway,
                                  const ModelProfile& chat_profile,
                                  const TextChunkingPolicy& policy,
                                  std::size_t workers = 1);

}  // namespace raganything
