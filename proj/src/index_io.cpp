#include "raganything/index_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "raganything/errors.hpp"
#include "raganything/text_utils.hpp"

namespace raganything {

using nlohmann::json;

static_assert(std::endian::native == std::endian::little,
              "archive vector block assumes a little-endian host");

namespace {

json entity_to_json(const Entity& e) {
  return json{{"id", e.entity_id},
              {"name", e.name},
              {"type", e.entity_type},
              {"description", e.description},
              {"sources", e.source_unit_ids},
              {"kind", to_string(e.kind)}};
}

Entity entity_from_json(const json& j) {
  Entity e;
  e.entity_id = j.at("id").get<std::string>();
  e.name = j.at("name").get<std::string>();
  e.entity_type = j.at("type").get<std::string>();
  e.description = j.at("description").get<std::string>();
  for (const auto& s : j.at("sources")) e.source_unit_ids.insert(s.get<std::string>());
  e.kind = entity_kind_from_string(j.at("kind").get<std::string>());
  return e;
}

json relation_to_json(const Relation& r) {
  return json{{"id", r.relation_id},
              {"subject", r.subject_id},
              {"object", r.object_id},
              {"predicate", r.predicate},
              {"description", r.description},
              {"kind", to_string(r.kind)},
              {"sources", r.source_unit_ids}};
}

Relation relation_from_json(const json& j) {
  Relation r;
  r.relation_id = j.at("id").get<std::string>();
  r.subject_id = j.at("subject").get<std::string>();
  r.object_id = j.at("object").get<std::string>();
  r.predicate = j.at("predicate").get<std::string>();
  r.description = j.at("description").get<std::string>();
  r.kind = relation_kind_from_string(j.at("kind").get<std::string>());
  for (const auto& s : j.at("sources")) r.source_unit_ids.insert(s.get<std::string>());
  return r;
}

json chunk_to_json(const ChunkRecord& c) {
  json j{{"key", c.chunk_key},
         {"covered", c.covered_unit_ids},
         {"modality", to_string(c.modality)},
         {"text", c.retrieval_text},
         {"tokens", c.token_count}};
  if (!c.image_ref.empty()) j["image_ref"] = c.image_ref;
  if (c.entity_summary) {
    j["entity"] = {{"name", c.entity_summary->entity_name},
                   {"type", c.entity_summary->entity_type},
                   {"summary", c.entity_summary->summary}};
  }
  return j;
}

ChunkRecord chunk_from_json(const json& j) {
  ChunkRecord c;
  c.chunk_key = j.at("key").get<std::string>();
  for (const auto& u : j.at("covered")) c.covered_unit_ids.push_back(u.get<std::string>());
  c.modality = modality_from_string(j.at("modality").get<std::string>());
  c.retrieval_text = j.at("text").get<std::string>();
  c.token_count = j.at("tokens").get<std::size_t>();
  c.image_ref = j.value("image_ref", "");
  if (j.contains("entity")) {
    EntitySummary s;
    s.entity_name = j["entity"].at("name").get<std::string>();
    s.entity_type = j["entity"].at("type").get<std::string>();
    s.summary = j["entity"].at("summary").get<std::string>();
    c.entity_summary = s;
  }
  return c;
}

json manifest_to_json(const IndexManifest& m) {
  json outcomes = json::array();
  for (const auto& o : m.unit_outcomes)
    outcomes.push_back({{"id", o.unit_or_chunk_id}, {"ok", o.ok}, {"error", o.error}});
  return json{{"format_version", m.format_version},
              {"delta", m.delta},
              {"embed_model", m.embed_model},
              {"max_chunk_tokens", m.max_chunk_tokens},
              {"overlap_tokens", m.overlap_tokens},
              {"chunk_only", m.chunk_only},
              {"built_at", m.built_at},
              {"unit_outcomes", outcomes}};
}

IndexManifest manifest_from_json(const json& j) {
  IndexManifest m;
  m.format_version = j.at("format_version").get<std::string>();
  m.delta = j.at("delta").get<std::uint32_t>();
  m.embed_model = j.at("embed_model").get<std::string>();
  m.max_chunk_tokens = j.at("max_chunk_tokens").get<std::size_t>();
  m.overlap_tokens = j.at("overlap_tokens").get<std::size_t>();
  m.chunk_only = j.at("chunk_only").get<bool>();
  m.built_at = j.at("built_at").get<std::string>();
  for (const auto& o : j.at("unit_outcomes"))
    m.unit_outcomes.push_back({o.at("id").get<std::string>(),
                               o.at("ok").get<bool>(),
                               o.at("error").get<std::string>()});
  return m;
}

void append_u64(std::string& out, std::uint64_t v) {
  char buf[8];
  std::memcpy(buf, &v, 8);
  out.append(buf, 8);
}

std::uint64_t read_u64(const std::string& data, std::size_t off) {
  std::uint64_t v;
  std::memcpy(&v, data.data() + off, 8);
  return v;
}

}  // namespace

void persist_index(const RetrievalIndex& index, const std::string& path) {
  index.validate();

  json meta;
  meta["entities"] = json::array();
  for (const auto& [id, e] : index.graph.entities)
    meta["entities"].push_back(entity_to_json(e));
  meta["relations"] = json::array();
  for (const auto& [id, r] : index.graph.relations)
    meta["relations"].push_back(relation_to_json(r));
  meta["chunks"] = json::array();
  for (const auto& [key, c] : index.chunks)
    meta["chunks"].push_back(chunk_to_json(c));
  meta["manifest"] = manifest_to_json(index.manifest);
  meta["table_dim"] = index.table.dim;
  meta["table_keys"] = json::array();
  for (const auto& [key, e] : index.table.entries)
    meta["table_keys"].push_back(key);

  std::string payload = std::string(kIndexFormatVersion) + "\n";
  const std::string meta_text = meta.dump();
  append_u64(payload, meta_text.size());
  payload += meta_text;
  for (const auto& [key, e] : index.table.entries) {
    const char* raw = reinterpret_cast<const char*>(e.vector.data());
    payload.append(raw, e.vector.size() * sizeof(double));
  }
  append_u64(payload, text::fnv1a(payload));

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  if (!out) throw IoError("short write to '" + path + "'");
}

RetrievalIndex load_index(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::string data((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());

  const std::string version_line = std::string(kIndexFormatVersion) + "\n";
  if (data.size() < version_line.size() + 16)
    throw ChecksumError("archive truncated: " + std::to_string(data.size()) +
                        " bytes");
  auto nl = data.find('\n');
  std::string version = data.substr(0, nl);
  if (version != kIndexFormatVersion)
    throw VersionError("archive version '" + version + "', this build reads '" +
                       std::string(kIndexFormatVersion) + "'");

  const std::uint64_t stored_sum = read_u64(data, data.size() - 8);
  const std::uint64_t actual_sum =
      text::fnv1a(std::string_view(data).substr(0, data.size() - 8));
  if (stored_sum != actual_sum) throw ChecksumError("archive checksum mismatch");

  std::size_t off = version_line.size();
  const std::uint64_t meta_len = read_u64(data, off);
  off += 8;
  if (off + meta_len + 8 > data.size())
    throw ChecksumError("metadata section overruns archive");
  json meta;
  try {
    meta = json::parse(data.substr(off, meta_len));
  } catch (const json::parse_error& e) {
    throw ChecksumError(std::string("metadata parse: ") + e.what());
  }
  off += meta_len;

  RetrievalIndex index;
  for (const auto& je : meta.at("entities"))
    index.graph.add_entity(entity_from_json(je));
  for (const auto& jr : meta.at("relations"))
    index.graph.add_relation(relation_from_json(jr));
  for (const auto& jc : meta.at("chunks")) {
    ChunkRecord c = chunk_from_json(jc);
    auto key = c.chunk_key;
    index.chunks.emplace(std::move(key), std::move(c));
  }
  index.manifest = manifest_from_json(meta.at("manifest"));

  index.table.dim = meta.at("table_dim").get<int>();
  const std::size_t dim = static_cast<std::size_t>(index.table.dim);
  for (const auto& jk : meta.at("table_keys")) {
    if (off + dim * sizeof(double) > data.size() - 8)
      throw ChecksumError("vector block overruns archive");
    Embedding e;
    e.dim = index.table.dim;
    e.vector.resize(dim);
    std::memcpy(e.vector.data(), data.data() + off, dim * sizeof(double));
    off += dim * sizeof(double);
    index.table.entries.emplace(jk.get<std::string>(), std::move(e));
  }
  if (off != data.size() - 8)
    throw ChecksumError("trailing bytes after vector block");

  index.rebuild_unit_map();
  index.validate();
  return index;
}

}  // namespace raganything
