#pragma once

#include <map>
#include <string>

namespace raganything {

enum class PromptKind { vision, table, equation, entity_extraction, judge };

std::string to_string(PromptKind kind);

using SlotMap = std::map<std::string, std::string>;

// Renders the built-in template for `kind`, substituting {slot} markers.
// Throws MissingSlotError if a required slot is unbound.
std::string render_prompt(PromptKind kind, const SlotMap& slots);

// Marker line the judge template starts with. The stub chat backend keys
// on it to produce a deterministic verdict.
inline constexpr const char* kJudgeMarker = "### ACCURACY JUDGE";

}  // namespace raganything
