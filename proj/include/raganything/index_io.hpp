#pragma once

#include <string>

#include "raganything/fusion.hpp"

namespace raganything {

inline constexpr const char* kIndexFormatVersion = "ragidx/1";

// Single-file archive: version line, JSON metadata section (graph,
// chunks, manifest, table keys), packed little-endian float64 vectors,
// trailing FNV-1a checksum. Throws IoError / VersionError / ChecksumError.
void persist_index(const RetrievalIndex& index, const std::string& path);
RetrievalIndex load_index(const std::string& path);

}  // namespace raganything
