#include "raganything/prompts.hpp"

#include <cctype>

#include "raganything/errors.hpp"

namespace raganything {

namespace {

const char* kVisionTemplate =
    "You are analyzing an image from a document.\n"
    "Describe the image in detail: compositional elements, object "
    "relationships, visual attributes, and any chart or diagram content, "
    "with exact labels and values where visible. Connect the image to the "
    "surrounding document context.\n\n"
    "Image content:\n{content}\n\n"
    "Surrounding context:\n{context}\n\n"
    "Return only valid JSON with fields: \"description\" (string), "
    "\"entity_name\" (string), \"entity_type\" (string), \"summary\" "
    "(string).";

const char* kTableTemplate =
    "You are analyzing a table from a document.\n"
    "Decompose the table: structural organization, column semantics, "
    "critical values, and statistical patterns. Preserve exact terminology "
    "and numbers; avoid vague generalizations. Relate the table to the "
    "surrounding discourse.\n\n"
    "Table content:\n{content}\n\n"
    "Surrounding context:\n{context}\n\n"
    "Return only valid JSON with fields: \"description\" (string), "
    "\"entity_name\" (string), \"entity_type\" (string), \"summary\" "
    "(string).";

const char* kEquationTemplate =
    "You are analyzing a mathematical expression from a document.\n"
    "Interpret the expression semantically rather than restating its "
    "syntax: variable definitions, operational logic, theoretical role, "
    "relationships to other formulas, and practical applications.\n\n"
    "Expression:\n{content}\n\n"
    "Surrounding context:\n{context}\n\n"
    "Return only valid JSON with fields: \"description\" (string), "
    "\"entity_name\" (string), \"entity_type\" (string), \"summary\" "
    "(string).";

const char* kEntityExtractionTemplate =
    "Extract named entities and the relations between them from the text "
    "below. Entities need a name and a short type; relations connect two "
    "extracted entity names with a predicate and a one-line description.\n\n"
    "Text:\n{content}\n\n"
    "Return only valid JSON: {\"entities\": [{\"name\": str, \"type\": str, "
    "\"description\": str}], \"relations\": [{\"subject\": str, "
    "\"predicate\": str, \"object\": str, \"description\": str}]}.";

const char* kJudgeTemplate =
    "### ACCURACY JUDGE\n"
    "Judge whether the answer is factually correct with respect to the "
    "reference. Content correctness matters, style does not.\n"
    "Return only valid JSON: {\"correct\": true|false, \"reason\": str}.\n"
    "Question:\n{query}\n"
    "Reference:\n{reference}\n"
    "Answer:\n{answer}\n";

const char* template_for(PromptKind kind) {
  switch (kind) {
    case PromptKind::vision: return kVisionTemplate;
    case PromptKind::table: return kTableTemplate;
    case PromptKind::equation: return kEquationTemplate;
    case PromptKind::entity_extraction: return kEntityExtractionTemplate;
    case PromptKind::judge: return kJudgeTemplate;
  }
  return "";
}

}  // namespace

std::string to_string(PromptKind kind) {
  switch (kind) {
    case PromptKind::vision: return "vision";
    case PromptKind::table: return "table";
    case PromptKind::equation: return "equation";
    case PromptKind::entity_extraction: return "entity_extraction";
    case PromptKind::judge: return "judge";
  }
  return "?";
}

std::string render_prompt(PromptKind kind, const SlotMap& slots) {
  const std::string tpl = template_for(kind);
  std::string out;
  out.reserve(tpl.size());
  std::size_t i = 0;
  while (i < tpl.size()) {
    if (tpl[i] == '{') {
      std::size_t close = tpl.find('}', i);
      // A slot name is short and alphanumeric; anything else (JSON braces
      // in the instructions) is literal text.
      bool slot_like = close != std::string::npos && close > i + 1 &&
                       close - i <= 24;
      std::string name;
      if (slot_like) {
        name = tpl.substr(i + 1, close - i - 1);
        for (char c : name)
          if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_')
            slot_like = false;
      }
      if (slot_like) {
        auto it = slots.find(name);
        if (it == slots.end())
          throw MissingSlotError("prompt '" + to_string(kind) +
                                 "' requires slot '" + name + "'");
        out += it->second;
        i = close + 1;
        continue;
      }
    }
    out.push_back(tpl[i]);
    ++i;
  }
  return out;
}

}  // namespace raganything
