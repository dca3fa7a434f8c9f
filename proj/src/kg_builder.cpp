#include "raganything/kg_builder.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <functional>
#include <set>
#include <thread>

#include <nlohmann/json.hpp>

#include "raganything/errors.hpp"
#include "raganything/text_utils.hpp"

namespace raganything {

using nlohmann::json;

namespace {

const std::set<std::string>& stub_stop_words() {
  static const std::set<std::string> kStop = {
      "the",  "a",    "an",   "in",   "on",    "at",   "of",    "for",
      "to",   "and",  "or",   "but",  "is",    "are",  "was",   "were",
      "this", "that", "these", "those", "it",  "its",  "we",    "our",
      "as",   "by",   "with", "from", "context"};
  return kStop;
}

struct Occurrence {
  std::size_t pos;
  std::string name;
};

std::string strip_edge_punct(const std::string& tok) {
  std::size_t b = 0, e = tok.size();
  while (b < e && std::ispunct(static_cast<unsigned char>(tok[b]))) ++b;
  while (e > b && std::ispunct(static_cast<unsigned char>(tok[e - 1]))) --e;
  return tok.substr(b, e - b);
}

// Entity spans within one sentence: double-quoted spans plus maximal
// runs of capitalized tokens with stop words trimmed from the run edges.
std::vector<Occurrence> stub_spans(const std::string& sentence) {
  std::vector<Occurrence> spans;
  std::vector<std::pair<std::size_t, std::size_t>> quoted;

  std::size_t qs = sentence.find('"');
  while (qs != std::string::npos) {
    std::size_t qe = sentence.find('"', qs + 1);
    if (qe == std::string::npos) break;
    if (qe > qs + 1) {
      spans.push_back({qs, sentence.substr(qs + 1, qe - qs - 1)});
      quoted.emplace_back(qs, qe);
    }
    qs = sentence.find('"', qe + 1);
  }
  auto in_quotes = [&](std::size_t pos) {
    for (auto [b, e] : quoted)
      if (pos >= b && pos <= e) return true;
    return false;
  };

  struct Tok {
    std::size_t pos;
    std::string core;
    bool capitalized;
    bool stop;
  };
  std::vector<Tok> toks;
  std::size_t i = 0;
  while (i < sentence.size()) {
    while (i < sentence.size() &&
           std::isspace(static_cast<unsigned char>(sentence[i])))
      ++i;
    std::size_t b = i;
    while (i < sentence.size() &&
           !std::isspace(static_cast<unsigned char>(sentence[i])))
      ++i;
    if (i == b) break;
    std::string core = strip_edge_punct(sentence.substr(b, i - b));
    if (core.empty() || in_quotes(b)) continue;
    bool cap = std::isupper(static_cast<unsigned char>(core[0])) != 0;
    std::string lower = core;
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    toks.push_back({b, core, cap, stub_stop_words().count(lower) > 0});
  }

  for (std::size_t t = 0; t < toks.size();) {
    if (!toks[t].capitalized) {
      ++t;
      continue;
    }
    std::size_t end = t;
    while (end + 1 < toks.size() && toks[end + 1].capitalized) ++end;
    std::size_t lo = t, hi = end;
    while (lo <= hi && toks[lo].stop) ++lo;
    while (hi > lo && toks[hi].stop) --hi;
    if (lo <= hi && !(lo == hi && toks[lo].stop)) {
      std::string name;
      for (std::size_t k = lo; k <= hi; ++k) {
        if (k > lo) name += ' ';
        name += toks[k].core;
      }
      spans.push_back({toks[lo].pos, name});
    }
    t = end + 1;
  }
  std::sort(spans.begin(), spans.end(),
            [](const auto& a, const auto& b) { return a.pos < b.pos; });
  return spans;
}

std::vector<std::string> split_sentences(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (c == '.' || c == '!' || c == '?' || c == '\n') {
      if (!text::is_blank(cur)) out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!text::is_blank(cur)) out.push_back(cur);
  return out;
}

ExtractionResult stub_extract(const std::string& description) {
  ExtractionResult result;
  std::map<std::string, std::size_t> seen;  // normalized name -> entity idx
  std::set<std::pair<std::string, std::string>> seen_pairs;

  for (const auto& sentence : split_sentences(description)) {
    auto spans = stub_spans(sentence);
    std::vector<std::string> sentence_names;  // normalized, in order, unique
    for (const auto& span : spans) {
      std::string norm = text::normalize_name(span.name);
      if (norm.empty()) continue;
      if (!seen.count(norm)) {
        seen[norm] = result.entities.size();
        result.entities.push_back({span.name, "concept", span.name});
      }
      if (std::find(sentence_names.begin(), sentence_names.end(), norm) ==
          sentence_names.end())
        sentence_names.push_back(norm);
    }
    for (std::size_t a = 0; a < sentence_names.size(); ++a) {
      for (std::size_t b = a + 1; b < sentence_names.size(); ++b) {
        auto key = std::minmax(sentence_names[a], sentence_names[b]);
        if (!seen_pairs.insert(key).second) continue;
        result.relations.push_back(
            {result.entities[seen[sentence_names[a]]].name, "related_to",
             result.entities[seen[sentence_names[b]]].name,
             "co-occur in one sentence"});
      }
    }
  }
  return result;
}

ExtractionResult parse_extraction_reply(const std::string& reply) {
  auto b = reply.find('{');
  auto e = reply.rfind('}');
  if (b == std::string::npos || e == std::string::npos || e < b)
    throw MalformedReplyError("extraction reply has no JSON object");
  json j;
  try {
    j = json::parse(reply.substr(b, e - b + 1));
  } catch (const json::parse_error& err) {
    throw MalformedReplyError(std::string("extraction JSON: ") + err.what());
  }
  ExtractionResult result;
  std::set<std::string> names;
  for (const auto& je : j.value("entities", json::array())) {
    ExtractedEntity ent;
    ent.name = je.value("name", "");
    if (ent.name.empty()) continue;
    ent.type = je.value("type", "concept");
    ent.description = je.value("description", "");
    names.insert(text::normalize_name(ent.name));
    result.entities.push_back(std::move(ent));
  }
  for (const auto& jr : j.value("relations", json::array())) {
    ExtractedRelation rel;
    rel.subject = jr.value("subject", "");
    rel.object = jr.value("object", "");
    // Relations naming undeclared entities are dropped.
    if (!names.count(text::normalize_name(rel.subject)) ||
        !names.count(text::normalize_name(rel.object)))
      continue;
    rel.predicate = jr.value("predicate", "related_to");
    rel.description = jr.value("description", "");
    result.relations.push_back(std::move(rel));
  }
  return result;
}

// Runs `task(i)` for i in [0, n) on up to `workers` threads. Exceptions
// propagate after all workers join; results land by index so assembly
// order never depends on scheduling.
void parallel_for(std::size_t n, std::size_t workers,
                  const std::function<void(std::size_t)>& task) {
  workers = std::max<std::size_t>(1, std::min(workers, n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> threads;
  std::vector<std::exception_ptr> errors(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&, w] {
      try {
        for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1))
          task(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace

ExtractionResult extract_graph(const std::string& description,
                               ModelGateway& gateway,
                               const ModelProfile& profile) {
  if (description.empty())
    throw EmptyInputError("extract_graph: empty description");

  if (ModelGateway::effective_backend(profile) == Backend::stub)
    return stub_extract(description);

  std::string prompt =
      render_prompt(PromptKind::entity_extraction, {{"content", description}});
  std::vector<ChatMessage> messages{{"user", prompt, {}}};
  std::string reply = gateway.generate(messages, profile);
  try {
    return parse_extraction_reply(reply);
  } catch (const MalformedReplyError&) {
    messages.push_back({"assistant", reply, {}});
    messages.push_back({"user", "Return only valid JSON.", {}});
    return parse_extraction_reply(gateway.generate(messages, profile));
  }
}

GraphBuildResult build_cross_modal_graph(const KnowledgeSource& source,
                                         std::uint32_t delta,
                                         ModelGateway& gateway,
                                         const ModelProfile& vision_profile,
                                         const ModelProfile& chat_profile,
                                         std::size_t workers) {
  std::vector<std::uint32_t> targets;
  for (const auto& u : source.units)
    if (u.modality != ModalityType::text) targets.push_back(u.index);

  struct UnitWork {
    bool ok = false;
    std::string error;
    std::string description;
    EntitySummary summary;
    ExtractionResult extraction;
    std::size_t token_count = 0;
  };
  std::vector<UnitWork> work(targets.size());

  parallel_for(targets.size(), workers, [&](std::size_t i) {
    const ContentUnit& unit = source.units[targets[i]];
    UnitWork& w = work[i];
    try {
      ContextWindow window = neighborhood(source, unit.index, delta);
      auto [description, summary] =
          gateway.describe_multimodal(unit, window, vision_profile);
      w.description = description;
      w.summary = summary;
      w.extraction = extract_graph(description, gateway, chat_profile);
      w.token_count = text::count_tokens(description);
      w.ok = true;
    } catch (const EngineError& e) {
      w.error = e.what();
    }
  });

  GraphBuildResult result;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const ContentUnit& unit = source.units[targets[i]];
    const UnitWork& w = work[i];
    result.manifest.push_back({unit.unit_id, w.ok, w.error});
    if (!w.ok) continue;

    ChunkRecord chunk;
    chunk.chunk_key = unit.unit_id;
    chunk.covered_unit_ids = {unit.unit_id};
    chunk.modality = unit.modality;
    chunk.retrieval_text = w.description;
    chunk.entity_summary = w.summary;
    chunk.token_count = w.token_count;
    if (const auto* img = std::get_if<ImagePayload>(&unit.content))
      chunk.image_ref = img->image_ref;
    result.chunks.push_back(std::move(chunk));

    Entity anchor;
    anchor.entity_id = "anchor:" + unit.unit_id;
    anchor.name = w.summary.entity_name;
    anchor.entity_type = w.summary.entity_type;
    anchor.description = w.summary.summary;
    anchor.source_unit_ids = {unit.unit_id};
    anchor.kind = EntityKind::multimodal_anchor;
    result.graph.add_entity(anchor);

    // Intra-description entities, one instance per unit; deduped by
    // normalized name within the unit.
    std::map<std::string, std::string> name_to_id;
    for (const auto& ee : w.extraction.entities) {
      std::string norm = text::normalize_name(ee.name);
      if (norm.empty() || name_to_id.count(norm)) continue;
      Entity ent;
      ent.entity_id = "x:" + unit.unit_id + ":" + norm;
      ent.name = ee.name;
      ent.entity_type = ee.type;
      ent.description = ee.description;
      ent.source_unit_ids = {unit.unit_id};
      ent.kind = EntityKind::extracted;
      name_to_id[norm] = ent.entity_id;
      result.graph.add_entity(std::move(ent));

      Relation owns;
      owns.relation_id = "b:" + unit.unit_id + ":" + norm;
      owns.subject_id = name_to_id[norm];
      owns.object_id = anchor.entity_id;
      owns.predicate = "belongs_to";
      owns.kind = RelationKind::belongs_to;
      owns.source_unit_ids = {unit.unit_id};
      result.graph.add_relation(std::move(owns));
    }

    std::size_t rel_seq = 0;
    for (const auto& er : w.extraction.relations) {
      auto s = name_to_id.find(text::normalize_name(er.subject));
      auto o = name_to_id.find(text::normalize_name(er.object));
      if (s == name_to_id.end() || o == name_to_id.end() ||
          s->second == o->second)
        continue;
      Relation rel;
      rel.relation_id =
          "r:" + unit.unit_id + ":" + std::to_string(rel_seq++);
      rel.subject_id = s->second;
      rel.object_id = o->second;
      rel.predicate = er.predicate;
      rel.description = er.description;
      rel.kind = RelationKind::extracted;
      rel.source_unit_ids = {unit.unit_id};
      result.graph.add_relation(std::move(rel));
    }
  }
  return result;
}

std::vector<ChunkRecord> pack_text_chunks(const KnowledgeSource& source,
                                          const TextChunkingPolicy& policy) {
  const std::size_t max_tokens = std::max<std::size_t>(1, policy.max_chunk_tokens);
  const std::size_t overlap =
      policy.overlap_tokens >= max_tokens ? 0 : policy.overlap_tokens;

  struct PendingChunk {
    std::string body;
    std::vector<std::string> covered;
    std::size_t tokens = 0;
  };
  std::vector<PendingChunk> pending;
  PendingChunk cur;
  auto flush = [&] {
    if (cur.tokens > 0) pending.push_back(std::move(cur));
    cur = PendingChunk{};
  };

  for (const auto& unit : source.units) {
    if (unit.modality != ModalityType::text) continue;
    const std::string body = payload_text(unit);
    const std::size_t tk = text::count_tokens(body);
    if (tk == 0) continue;

    if (tk > max_tokens) {
      // Oversized unit: flush, then slide a token window over it.
      flush();
      std::vector<std::string> toks;
      {
        std::string t;
        for (char c : body) {
          if (std::isspace(static_cast<unsigned char>(c))) {
            if (!t.empty()) toks.push_back(std::move(t)), t.clear();
          } else {
            t.push_back(c);
          }
        }
        if (!t.empty()) toks.push_back(std::move(t));
      }
      std::size_t start = 0;
      while (start < toks.size()) {
        std::size_t end = std::min(toks.size(), start + max_tokens);
        PendingChunk piece;
        for (std::size_t k = start; k < end; ++k) {
          if (k > start) piece.body += ' ';
          piece.body += toks[k];
        }
        piece.covered = {unit.unit_id};
        piece.tokens = end - start;
        pending.push_back(std::move(piece));
        if (end == toks.size()) break;
        start += max_tokens - overlap;
      }
      continue;
    }

    if (cur.tokens + tk > max_tokens) flush();
    if (!cur.body.empty()) cur.body += "\n";
    cur.body += body;
    cur.covered.push_back(unit.unit_id);
    cur.tokens += tk;
  }
  flush();

  std::vector<ChunkRecord> chunks;
  for (std::size_t i = 0; i < pending.size(); ++i) {
    ChunkRecord chunk;
    chunk.chunk_key = source.source_id + "#txt" + std::to_string(i);
    chunk.covered_unit_ids = pending[i].covered;
    chunk.modality = ModalityType::text;
    chunk.retrieval_text = pending[i].body;
    chunk.token_count = pending[i].tokens;
    chunks.push_back(std::move(chunk));
  }
  return chunks;
}

GraphBuildResult build_text_graph(const KnowledgeSource& source,
                                  ModelGateway& gateway,
                                  const ModelProfile& chat_profile,
                                  const TextChunkingPolicy& policy,
                                  std::size_t workers) {
  std::vector<ChunkRecord> pending = pack_text_chunks(source, policy);

  GraphBuildResult result;
  std::vector<ExtractionResult> extractions(pending.size());
  std::vector<std::string> errors(pending.size());
  parallel_for(pending.size(), workers, [&](std::size_t i) {
    try {
      extractions[i] =
          extract_graph(pending[i].retrieval_text, gateway, chat_profile);
    } catch (const EngineError& e) {
      errors[i] = e.what();
    }
  });

  for (std::size_t i = 0; i < pending.size(); ++i) {
    const std::string chunk_key = pending[i].chunk_key;
    result.manifest.push_back({chunk_key, errors[i].empty(), errors[i]});
    if (!errors[i].empty()) continue;

    std::set<std::string> covered(pending[i].covered_unit_ids.begin(),
                                  pending[i].covered_unit_ids.end());
    result.chunks.push_back(pending[i]);
    std::map<std::string, std::string> name_to_id;
    for (const auto& ee : extractions[i].entities) {
      std::string norm = text::normalize_name(ee.name);
      if (norm.empty() || name_to_id.count(norm)) continue;
      Entity ent;
      ent.entity_id = "t:" + chunk_key + ":" + norm;
      ent.name = ee.name;
      ent.entity_type = ee.type;
      ent.description = ee.description;
      ent.source_unit_ids = covered;
      ent.kind = EntityKind::extracted;
      name_to_id[norm] = ent.entity_id;
      result.graph.add_entity(std::move(ent));
    }
    std::size_t rel_seq = 0;
    for (const auto& er : extractions[i].relations) {
      auto s = name_to_id.find(text::normalize_name(er.subject));
      auto o = name_to_id.find(text::normalize_name(er.object));
      if (s == name_to_id.end() || o == name_to_id.end() ||
          s->second == o->second)
        continue;
      Relation rel;
      rel.relation_id = "r:" + chunk_key + ":" + std::to_string(rel_seq++);
      rel.subject_id = s->second;
      rel.object_id = o->second;
      rel.predicate = er.predicate;
      rel.description = er.description;
      rel.kind = RelationKind::extracted;
      rel.source_unit_ids = covered;
      result.graph.add_relation(std::move(rel));
    }
  }
  return result;
}

}  // namespace raganything
