#include "raganything/similarity.hpp"

#include <cmath>

#include "raganything/errors.hpp"

namespace raganything::sim {

namespace {

inline double row_cosine(const double* query, const double* row,
                         std::size_t dim) {
  double dot = 0, nq = 0, nr = 0;
  for (std::size_t i = 0; i < dim; ++i) {
    dot += static_cast<double>(query[i]) * row[i];
    nq += static_cast<double>(query[i]) * query[i];
    nr += static_cast<double>(row[i]) * row[i];
  }
  if (nq == 0 || nr == 0) return 0.0;
  return dot / (std::sqrt(nq) * std::sqrt(nr));
}

}  // namespace

void cosine_scores_serial(const double* query, const double* rows,
                          std::size_t n_rows, std::size_t dim, double* out) {
  for (std::size_t r = 0; r < n_rows; ++r)
    out[r] = row_cosine(query, rows + r * dim, dim);
}

void cosine_scores_parallel(const double* query, const double* rows,
                            std::size_t n_rows, std::size_t dim, double* out) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
  for (long long r = 0; r < static_cast<long long>(n_rows); ++r)
    out[r] = row_cosine(query, rows + static_cast<std::size_t>(r) * dim, dim);
#else
  cosine_scores_serial(query, rows, n_rows, dim, out);
#endif
}

bool openmp_enabled() {
#ifdef _OPENMP
  return true;
#else
  return false;
#endif
}

ChunkMatrix ChunkMatrix::from_index(const RetrievalIndex& index) {
  ChunkMatrix m;
  m.dim = static_cast<std::size_t>(index.table.dim);
  for (const auto& [key, chunk] : index.chunks) {
    const auto it = index.table.entries.find("chunk:" + key);
    if (it == index.table.entries.end())
      throw SchemaError("chunk '" + key + "' missing from embedding table");
    m.keys.push_back(key);
    m.data.insert(m.data.end(), it->second.vector.begin(),
                  it->second.vector.end());
  }
  return m;
}

std::vector<double> score_chunks(const Embedding& query,
                                 const ChunkMatrix& matrix, bool parallel) {
  if (matrix.dim != static_cast<std::size_t>(query.dim))
    throw DimMismatchError("query dim " + std::to_string(query.dim) +
                           " vs index dim " + std::to_string(matrix.dim));
  std::vector<double> scores(matrix.keys.size());
  if (parallel)
    cosine_scores_parallel(query.vector.data(), matrix.data.data(),
                           matrix.keys.size(), matrix.dim, scores.data());
  else
    cosine_scores_serial(query.vector.data(), matrix.data.data(),
                         matrix.keys.size(), matrix.dim, scores.data());
  return scores;
}

}  // namespace raganything::sim
