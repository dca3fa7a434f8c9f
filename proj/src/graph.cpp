#include "raganything/graph.hpp"

#include "raganything/errors.hpp"
#include "raganything/text_utils.hpp"

namespace raganything {

std::string to_string(EntityKind k) {
  return k == EntityKind::multimodal_anchor ? "multimodal_anchor" : "extracted";
}

std::string to_string(RelationKind k) {
  return k == RelationKind::belongs_to ? "belongs_to" : "extracted";
}

EntityKind entity_kind_from_string(const std::string& s) {
  if (s == "multimodal_anchor") return EntityKind::multimodal_anchor;
  if (s == "extracted") return EntityKind::extracted;
  throw SchemaError("unknown entity kind '" + s + "'");
}

RelationKind relation_kind_from_string(const std::string& s) {
  if (s == "belongs_to") return RelationKind::belongs_to;
  if (s == "extracted") return RelationKind::extracted;
  throw SchemaError("unknown relation kind '" + s + "'");
}

void KnowledgeGraph::add_entity(Entity e) {
  if (e.name.empty())
    throw SchemaError("entity '" + e.entity_id + "' has empty name");
  if (entities.count(e.entity_id))
    throw SchemaError("duplicate entity_id '" + e.entity_id + "'");
  name_index[text::normalize_name(e.name)].insert(e.entity_id);
  std::string id = e.entity_id;
  entities.emplace(std::move(id), std::move(e));
}

void KnowledgeGraph::add_relation(Relation r) {
  if (!entities.count(r.subject_id) || !entities.count(r.object_id))
    throw SchemaError("relation '" + r.relation_id +
                      "' references unknown entity");
  if (relations.count(r.relation_id))
    throw SchemaError("duplicate relation_id '" + r.relation_id + "'");
  std::string id = r.relation_id;
  relations.emplace(std::move(id), std::move(r));
}

void KnowledgeGraph::rebuild_name_index() {
  name_index.clear();
  for (const auto& [id, e] : entities)
    name_index[text::normalize_name(e.name)].insert(id);
}

void KnowledgeGraph::validate() const {
  for (const auto& [id, r] : relations) {
    auto subj = entities.find(r.subject_id);
    auto obj = entities.find(r.object_id);
    if (subj == entities.end() || obj == entities.end())
      throw SchemaError("relation '" + id + "' has dangling endpoint");
    if (r.kind == RelationKind::belongs_to) {
      // The subject starts out as an extracted entity, but alignment may
      // later merge it with another unit's anchor, so only the object
      // kind and the no-self-loop rule hold globally.
      if (obj->second.kind != EntityKind::multimodal_anchor)
        throw SchemaError("belongs_to '" + id + "' object is not an anchor");
      if (r.subject_id == r.object_id)
        throw SchemaError("belongs_to '" + id + "' is a self-loop");
    }
  }
  std::size_t indexed = 0;
  for (const auto& [name, ids] : name_index) {
    for (const auto& id : ids) {
      auto it = entities.find(id);
      if (it == entities.end() ||
          text::normalize_name(it->second.name) != name)
        throw SchemaError("name_index inconsistent at '" + name + "'");
      ++indexed;
    }
  }
  if (indexed != entities.size())
    throw SchemaError("name_index does not cover all entities");
}

}  // namespace raganything
