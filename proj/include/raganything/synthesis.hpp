#pragma once

#include <string>
#include <vector>

#include "raganything/model_gateway.hpp"
#include "raganything/retrieval.hpp"

namespace raganything {

enum class SectionKind {
  entity,
  relation,
  chunk_text,
  chunk_image,
  chunk_table,
  chunk_equation
};

std::string to_string(SectionKind k);

struct ContextSection {
  SectionKind kind = SectionKind::chunk_text;
  std::string heading;
  std::string body;
};

// P(q): delimiter-wrapped sections, entities then relations then chunks
// in rank order.
struct SynthesisContext {
  std::vector<ContextSection> sections;
  std::string rendered;
};

struct VisualItem {
  std::string chunk_key;
  std::string bytes;  // decoded image bytes
  std::string caption;
};

struct VisualPayload {
  std::vector<VisualItem> items;
  std::vector<std::string> warnings;
};

SynthesisContext build_context(const SelectionBundle& bundle,
                               const RetrievalIndex& index);

// Resolves image_refs of admitted image chunks against corpus_root;
// "base64:" refs decode inline. Unresolvable refs become warnings.
VisualPayload dereference_visuals(const SelectionBundle& bundle,
                                  const RetrievalIndex& index,
                                  const std::string& corpus_root,
                                  std::size_t max_images = 6);

struct SynthesisOptions {
  bool dry_run = false;
  bool one_sentence = true;
  std::size_t max_images = 6;
};

std::string generate_response(const std::string& query,
                              const SynthesisContext& context,
                              const VisualPayload& visuals,
                              ModelGateway& gateway,
                              const ModelProfile& chat_profile,
                              const SynthesisOptions& options = {});

}  // namespace raganything
