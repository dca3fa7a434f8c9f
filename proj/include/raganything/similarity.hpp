#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "raganything/fusion.hpp"

namespace raganything::sim {

// Dense row-major score kernel: out[i] = cosine(query, rows[i*dim..]).
// Each row accumulates in index order in double precision, so the serial
// and OpenMP variants produce bit-identical scores.
void cosine_scores_serial(const double* query, const double* rows,
                          std::size_t n_rows, std::size_t dim, double* out);
void cosine_scores_parallel(const double* query, const double* rows,
                            std::size_t n_rows, std::size_t dim, double* out);

bool openmp_enabled();

// Contiguous view over the chunk vectors of an index, rows sorted by
// chunk key.
struct ChunkMatrix {
  std::vector<std::string> keys;
  std::vector<double> data;  // keys.size() x dim
  std::size_t dim = 0;

  static ChunkMatrix from_index(const RetrievalIndex& index);
};

// Scores every chunk of `matrix` against `query`. `parallel` selects the
// OpenMP kernel; results are identical either way.
std::vector<double> score_chunks(const Embedding& query,
                                 const ChunkMatrix& matrix,
                                 bool parallel = true);

}  // namespace raganything::sim
