#include "raganything/fusion.hpp"

#include <algorithm>

#include "raganything/errors.hpp"
#include "raganything/text_utils.hpp"

namespace raganything {

namespace {

std::string merged_relation_id(const Relation& r) {
  return "rel:" + r.subject_id + "|" + r.predicate + "|" + r.object_id + "|" +
         to_string(r.kind);
}

}  // namespace

KnowledgeGraph align_and_merge(const KnowledgeGraph& cross_modal,
                               const KnowledgeGraph& textual) {
  KnowledgeGraph merged;

  // Group every entity from both graphs under its normalized name,
  // cross-modal entities first within each group.
  struct Group {
    std::vector<const Entity*> cross;
    std::vector<const Entity*> text;
  };
  std::map<std::string, Group> groups;
  for (const auto& [id, e] : cross_modal.entities)
    groups[text::normalize_name(e.name)].cross.push_back(&e);
  for (const auto& [id, e] : textual.entities)
    groups[text::normalize_name(e.name)].text.push_back(&e);

  std::map<std::string, std::string> old_to_merged;
  for (const auto& [norm, group] : groups) {
    Entity out;
    out.entity_id = "ent:" + norm;
    out.kind = EntityKind::extracted;
    std::vector<std::string> descriptions;
    auto absorb = [&](const Entity& e) {
      if (out.name.empty()) out.name = e.name;
      if (e.kind == EntityKind::multimodal_anchor)
        out.kind = EntityKind::multimodal_anchor;
      // Cross-modal entities are absorbed first, so first-wins realizes
      // "cross-modal type if present, else textual".
      if (out.entity_type.empty() && !e.entity_type.empty())
        out.entity_type = e.entity_type;
      if (!e.description.empty() &&
          std::find(descriptions.begin(), descriptions.end(), e.description) ==
              descriptions.end())
        descriptions.push_back(e.description);
      out.source_unit_ids.insert(e.source_unit_ids.begin(),
                                 e.source_unit_ids.end());
      old_to_merged[e.entity_id] = out.entity_id;
    };
    for (const Entity* e : group.cross) absorb(*e);
    for (const Entity* e : group.text) absorb(*e);
    out.description = text::join(descriptions, " | ");
    merged.add_entity(std::move(out));
  }

  auto fold_relations = [&](const KnowledgeGraph& g) {
    for (const auto& [id, r] : g.relations) {
      Relation out = r;
      out.subject_id = old_to_merged.at(r.subject_id);
      out.object_id = old_to_merged.at(r.object_id);
      if (out.kind == RelationKind::belongs_to &&
          out.subject_id == out.object_id)
        continue;  // entity merged into its own anchor
      out.relation_id = merged_relation_id(out);
      auto it = merged.relations.find(out.relation_id);
      if (it != merged.relations.end()) {
        it->second.source_unit_ids.insert(out.source_unit_ids.begin(),
                                          out.source_unit_ids.end());
        continue;
      }
      merged.add_relation(std::move(out));
    }
  };
  fold_relations(cross_modal);
  fold_relations(textual);
  return merged;
}

std::string entity_embed_text(const Entity& e) {
  return e.name + ": " + e.description;
}

std::string relation_embed_text(const KnowledgeGraph& g, const Relation& r) {
  const auto& subj = g.entities.at(r.subject_id);
  const auto& obj = g.entities.at(r.object_id);
  return subj.name + " " + r.predicate + " " + obj.name + ": " + r.description;
}

EmbeddingTable build_embedding_table(
    const KnowledgeGraph& graph,
    const std::map<std::string, ChunkRecord>& chunks, ModelGateway& gateway,
    const ModelProfile& embed_profile) {
  std::vector<std::string> keys;
  std::vector<std::string> texts;
  auto push = [&](std::string key, std::string txt) {
    if (text::is_blank(txt)) txt = key;  // never embed a blank string
    keys.push_back(std::move(key));
    texts.push_back(std::move(txt));
  };
  for (const auto& [id, e] : graph.entities)
    push("entity:" + id, entity_embed_text(e));
  for (const auto& [id, r] : graph.relations)
    push("relation:" + id, relation_embed_text(graph, r));
  for (const auto& [key, c] : chunks) push("chunk:" + key, c.retrieval_text);

  EmbeddingTable table;
  if (keys.empty()) {
    table.dim =
        ModelGateway::effective_backend(embed_profile) == Backend::stub
            ? kStubEmbeddingDim
            : embed_profile.embedding_dim;
    return table;
  }
  auto vectors = gateway.embed_batch(texts, embed_profile);
  table.dim = vectors.front().dim;
  for (std::size_t i = 0; i < keys.size(); ++i) {
    if (vectors[i].dim != table.dim)
      throw DimMismatchError("embedding dim drift within one table");
    table.entries.emplace(keys[i], std::move(vectors[i]));
  }
  return table;
}

void RetrievalIndex::rebuild_unit_map() {
  unit_to_chunks.clear();
  for (const auto& [key, c] : chunks)
    for (const auto& uid : c.covered_unit_ids)
      unit_to_chunks[uid].push_back(key);
}

void RetrievalIndex::validate() const {
  graph.validate();
  std::size_t expected =
      graph.entities.size() + graph.relations.size() + chunks.size();
  if (table.entries.size() != expected)
    throw SchemaError("embedding table covers " +
                      std::to_string(table.entries.size()) +
                      " components, expected " + std::to_string(expected));
  for (const auto& [id, e] : graph.entities)
    if (!table.entries.count("entity:" + id))
      throw SchemaError("table missing entity:" + id);
  for (const auto& [id, r] : graph.relations)
    if (!table.entries.count("relation:" + id))
      throw SchemaError("table missing relation:" + id);
  for (const auto& [key, c] : chunks)
    if (!table.entries.count("chunk:" + key))
      throw SchemaError("table missing chunk:" + key);
}

}  // namespace raganything
