#include "raganything/synthesis.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>

#include "raganything/errors.hpp"
#include "raganything/text_utils.hpp"

namespace raganything {

namespace {

SectionKind chunk_section_kind(ModalityType m) {
  switch (m) {
    case ModalityType::image: return SectionKind::chunk_image;
    case ModalityType::table: return SectionKind::chunk_table;
    case ModalityType::equation: return SectionKind::chunk_equation;
    default: return SectionKind::chunk_text;
  }
}

std::string render_sections(const std::vector<ContextSection>& sections) {
  std::string out;
  for (const auto& s : sections) {
    out += "[BEGIN " + to_string(s.kind) + " " + s.heading + "]\n";
    out += s.body;
    out += "\n[END " + to_string(s.kind) + "]\n";
  }
  return out;
}

const char kBase64Chars[] =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

std::string base64_decode(const std::string& input) {
  int lookup[256];
  std::fill(std::begin(lookup), std::end(lookup), -1);
  for (int i = 0; i < 64; ++i)
    lookup[static_cast<unsigned char>(kBase64Chars[i])] = i;

  std::string out;
  int buffer = 0, bits = 0;
  for (unsigned char c : input) {
    if (c == '=' || std::isspace(c)) continue;
    int v = lookup[c];
    if (v < 0) throw SchemaError("invalid base64 character");
    buffer = (buffer << 6) | v;
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      out.push_back(static_cast<char>((buffer >> bits) & 0xFF));
    }
  }
  return out;
}

std::string base64_encode(const std::string& input) {
  std::string out;
  int buffer = 0, bits = 0;
  for (unsigned char c : input) {
    buffer = (buffer << 8) | c;
    bits += 8;
    while (bits >= 6) {
      bits -= 6;
      out.push_back(kBase64Chars[(buffer >> bits) & 0x3F]);
    }
  }
  if (bits > 0) out.push_back(kBase64Chars[(buffer << (6 - bits)) & 0x3F]);
  while (out.size() % 4) out.push_back('=');
  return out;
}

// Drops trailing chunk sections until their combined token count fits in
// 80% of the original total. Used on provider payload rejection.
SynthesisContext shrink_context(const SynthesisContext& context) {
  std::size_t total = 0;
  for (const auto& s : context.sections)
    if (s.kind != SectionKind::entity && s.kind != SectionKind::relation)
      total += text::count_tokens(s.body);
  const std::size_t target = (total * 8) / 10;

  SynthesisContext smaller;
  std::size_t kept = 0;
  std::size_t chunk_sections = 0, kept_chunks = 0;
  for (const auto& s : context.sections)
    if (s.kind != SectionKind::entity && s.kind != SectionKind::relation)
      ++chunk_sections;
  for (const auto& s : context.sections) {
    if (s.kind == SectionKind::entity || s.kind == SectionKind::relation) {
      smaller.sections.push_back(s);
      continue;
    }
    std::size_t tk = text::count_tokens(s.body);
    if (kept + tk > target) continue;
    kept += tk;
    ++kept_chunks;
    smaller.sections.push_back(s);
  }
  // Always drop at least one chunk section so the retry is strictly smaller.
  if (kept_chunks == chunk_sections && chunk_sections > 0) {
    for (std::size_t i = smaller.sections.size(); i-- > 0;) {
      const auto k = smaller.sections[i].kind;
      if (k != SectionKind::entity && k != SectionKind::relation) {
        smaller.sections.erase(smaller.sections.begin() +
                               static_cast<std::ptrdiff_t>(i));
        break;
      }
    }
  }
  smaller.rendered = render_sections(smaller.sections);
  return smaller;
}

}  // namespace

std::string to_string(SectionKind k) {
  switch (k) {
    case SectionKind::entity: return "entity";
    case SectionKind::relation: return "relation";
    case SectionKind::chunk_text: return "chunk:text";
    case SectionKind::chunk_image: return "chunk:image";
    case SectionKind::chunk_table: return "chunk:table";
    case SectionKind::chunk_equation: return "chunk:equation";
  }
  return "?";
}

SynthesisContext build_context(const SelectionBundle& bundle,
                               const RetrievalIndex& index) {
  SynthesisContext ctx;
  for (const auto& eid : bundle.entity_ids) {
    auto it = index.graph.entities.find(eid);
    if (it == index.graph.entities.end())
      throw DanglingKeyError("bundle references unknown entity '" + eid + "'");
    const Entity& e = it->second;
    ctx.sections.push_back(
        {SectionKind::entity, e.entity_id,
         e.name + " (" + e.entity_type + "): " + e.description});
  }
  for (const auto& rid : bundle.relation_ids) {
    auto it = index.graph.relations.find(rid);
    if (it == index.graph.relations.end())
      throw DanglingKeyError("bundle references unknown relation '" + rid +
                             "'");
    const Relation& r = it->second;
    ctx.sections.push_back({SectionKind::relation, r.relation_id,
                            relation_embed_text(index.graph, r)});
  }
  for (const auto& key : bundle.chunk_keys) {
    auto it = index.chunks.find(key);
    if (it == index.chunks.end())
      throw DanglingKeyError("bundle references unknown chunk '" + key + "'");
    const ChunkRecord& c = it->second;
    ctx.sections.push_back({chunk_section_kind(c.modality), c.chunk_key,
                            c.retrieval_text});
  }
  ctx.rendered = render_sections(ctx.sections);
  return ctx;
}

VisualPayload dereference_visuals(const SelectionBundle& bundle,
                                  const RetrievalIndex& index,
                                  const std::string& corpus_root,
                                  std::size_t max_images) {
  VisualPayload payload;
  for (const auto& key : bundle.chunk_keys) {
    if (payload.items.size() >= max_images) break;
    auto it = index.chunks.find(key);
    if (it == index.chunks.end() || it->second.modality != ModalityType::image)
      continue;
    const ChunkRecord& c = it->second;
    if (c.image_ref.empty()) {
      payload.warnings.push_back(key + ": image chunk without image_ref");
      continue;
    }
    std::string caption;
    if (c.entity_summary) caption = c.entity_summary->entity_name;

    if (c.image_ref.rfind("base64:", 0) == 0) {
      try {
        std::string bytes = base64_decode(c.image_ref.substr(7));
        payload.items.push_back({key, std::move(bytes), caption});
      } catch (const EngineError& e) {
        payload.warnings.push_back(key + ": " + e.what());
      }
      continue;
    }

    std::filesystem::path p = std::filesystem::path(corpus_root) / c.image_ref;
    std::ifstream in(p, std::ios::binary);
    if (!in) {
      payload.warnings.push_back(key + ": cannot open '" + p.string() + "'");
      continue;
    }
    std::string bytes((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
    payload.items.push_back({key, std::move(bytes), caption});
  }
  return payload;
}

std::string generate_response(const std::string& query,
                              const SynthesisContext& context,
                              const VisualPayload& visuals,
                              ModelGateway& gateway,
                              const ModelProfile& chat_profile,
                              const SynthesisOptions& options) {
  if (options.dry_run) return context.rendered;

  auto build_messages = [&](const SynthesisContext& ctx) {
    std::string system =
        "Answer the question using only the provided context sections and "
        "attached images. Ground every claim in the context.";
    if (options.one_sentence) system += " Answer in exactly one sentence.";

    std::vector<ChatMessage> messages;
    messages.push_back({"system", system, {}});
    ChatMessage user{"user",
                     "Context:\n" + ctx.rendered + "\nQuestion: " + query,
                     {}};
    std::size_t attached = 0;
    for (const auto& item : visuals.items) {
      if (attached >= options.max_images) break;
      user.image_refs.push_back("data:image/png;base64," +
                                base64_encode(item.bytes));
      ++attached;
    }
    messages.push_back(std::move(user));
    return messages;
  };

  try {
    return gateway.generate(build_messages(context), chat_profile);
  } catch (const ContextTooLargeError&) {
    return gateway.generate(build_messages(shrink_context(context)),
                            chat_profile);
  }
}

}  // namespace raganything
