#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "raganything/content_model.hpp"
#include "raganything/model_gateway.hpp"

namespace raganything {

enum class EntityKind { multimodal_anchor, extracted };
enum class RelationKind { extracted, belongs_to };

std::string to_string(EntityKind k);
std::string to_string(RelationKind k);
EntityKind entity_kind_from_string(const std::string& s);
RelationKind relation_kind_from_string(const std::string& s);

struct Entity {
  std::string entity_id;
  std::string name;
  std::string entity_type;
  std::string description;
  std::set<std::string> source_unit_ids;
  EntityKind kind = EntityKind::extracted;

  bool operator==(const Entity&) const = default;
};

struct Relation {
  std::string relation_id;
  std::string subject_id;
  std::string object_id;
  std::string predicate;
  std::string description;
  RelationKind kind = RelationKind::extracted;
  std::set<std::string> source_unit_ids;

  bool operator==(const Relation&) const = default;
};

// One retrievable chunk. For non-text units the key is the unit_id and
// retrieval_text is the generated description; text chunks get keys
// "<source_id>#txt<n>" and carry the packed unit text.
struct ChunkRecord {
  std::string chunk_key;
  std::vector<std::string> covered_unit_ids;
  ModalityType modality = ModalityType::text;
  std::string retrieval_text;
  std::optional<EntitySummary> entity_summary;
  std::size_t token_count = 0;
  // Image chunks keep the original reference so synthesis can recover
  // the visual bytes ("base64:..." or a path under the corpus root).
  std::string image_ref;

  bool operator==(const ChunkRecord&) const = default;
};

// Ordered maps keep every walk over the graph deterministic.
struct KnowledgeGraph {
  std::map<std::string, Entity> entities;
  std::map<std::string, Relation> relations;
  std::map<std::string, std::set<std::string>> name_index;

  void add_entity(Entity e);
  void add_relation(Relation r);
  void rebuild_name_index();

  bool empty() const { return entities.empty() && relations.empty(); }

  // Checks referential integrity and name_index consistency; throws
  // EngineError on violation.
  void validate() const;

  bool operator==(const KnowledgeGraph&) const = default;
};

}  // namespace raganything
