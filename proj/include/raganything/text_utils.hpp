#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace raganything::text {

// FNV-1a, 64-bit. Used wherever a hash must be stable across processes
// and platforms (stub embeddings, digests, archive checksums).
constexpr std::uint64_t kFnvOffset = 14695981039346656037ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

constexpr std::uint64_t fnv1a(std::string_view data,
                              std::uint64_t seed = kFnvOffset) {
  std::uint64_t h = seed;
  for (unsigned char c : data) {
    h ^= c;
    h *= kFnvPrime;
  }
  return h;
}

std::string fnv1a_hex(std::string_view data);

// Lowercase ASCII tokens split on non-alphanumeric boundaries.
std::vector<std::string> tokenize(std::string_view s);

// Whitespace-delimited token count (the documented counting rule for all
// token budgets).
std::size_t count_tokens(std::string_view s);

// Entity-name normalization: compatibility folding of common Unicode
// variants (fullwidth forms, exotic spaces), casefold, edge punctuation
// stripped, internal whitespace collapsed. Idempotent.
std::string normalize_name(std::string_view raw);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

bool is_blank(std::string_view s);

}  // namespace raganything::text
