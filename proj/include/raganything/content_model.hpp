#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace raganything {

enum class ModalityType { text, image, table, equation, generic };

std::string to_string(ModalityType t);
ModalityType modality_from_string(const std::string& s);

struct TextPayload {
  std::string body;
  bool operator==(const TextPayload&) const = default;
};

struct ImagePayload {
  // Either a path relative to the corpus root or a base64 blob prefixed
  // with "base64:".
  std::string image_ref;
  std::optional<std::string> caption;
  std::vector<std::string> footnotes;
  bool operator==(const ImagePayload&) const = default;
};

struct TablePayload {
  std::optional<std::string> caption;
  std::vector<std::vector<std::string>> header_rows;
  std::vector<std::vector<std::string>> body_rows;
  std::string raw;
  bool operator==(const TablePayload&) const = default;
};

struct EquationPayload {
  std::string latex;
  std::optional<std::string> surrounding_text;
  bool operator==(const EquationPayload&) const = default;
};

struct GenericPayload {
  std::string body;
  bool operator==(const GenericPayload&) const = default;
};

using ModalityPayload = std::variant<TextPayload, ImagePayload, TablePayload,
                                     EquationPayload, GenericPayload>;

struct ContentUnit {
  std::string unit_id;  // "<source_id>#<index>"
  std::uint32_t index = 0;
  ModalityType modality = ModalityType::text;
  ModalityPayload content;
  std::optional<int> page_hint;

  bool operator==(const ContentUnit&) const = default;
};

struct KnowledgeSource {
  std::string source_id;
  std::string title;
  std::vector<ContentUnit> units;
  std::map<std::string, std::string> metadata;

  bool operator==(const KnowledgeSource&) const = default;
};

struct ContextWindow {
  std::uint32_t delta = 0;
  std::uint32_t center = 0;
  std::vector<ContentUnit> members;
};

// Parses and validates one canonical document. Throws SchemaError,
// OrderError or RaggedTableError.
KnowledgeSource load_source(const std::string& json_text);

std::string serialize_source(const KnowledgeSource& source);

// Units of the same source with |k - center| <= delta, clipped at source
// boundaries, index order. Throws UnitIndexError if center out of range.
ContextWindow neighborhood(const KnowledgeSource& source, std::uint32_t center,
                           std::uint32_t delta);

std::vector<ContentUnit> modality_filter(const KnowledgeSource& source,
                                         ModalityType tag);

// Flat text rendering of a payload, used by context windows and the stub
// describer. Table rows are rendered "cell | cell"; images render caption
// and footnotes.
std::string payload_text(const ContentUnit& unit);

}  // namespace raganything
