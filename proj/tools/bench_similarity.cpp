// Benchmark for the cosine scan kernel: serial reference vs OpenMP.
#include <chrono>
#include <cstdlib>
#include <iostream>
#include <random>
#include <vector>

#include "raganything/similarity.hpp"

using Clock = std::chrono::steady_clock;
namespace sim = raganything::sim;

static double run_ms(const std::vector<double>& q, const std::vector<double>& rows,
                     std::size_t n, std::size_t dim, std::vector<double>& out,
                     bool parallel, int reps) {
  auto t0 = Clock::now();
  for (int r = 0; r < reps; ++r) {
    if (parallel)
      sim::cosine_scores_parallel(q.data(), rows.data(), n, dim, out.data());
    else
      sim::cosine_scores_serial(q.data(), rows.data(), n, dim, out.data());
  }
  auto t1 = Clock::now();
  volatile double sink = out.empty() ? 0.0 : out[0];
  (void)sink;
  return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

int main(int argc, char** argv) {
  std::size_t n = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 20000;
  std::size_t dim = argc > 2 ? std::strtoull(argv[2], nullptr, 10) : 256;
  int reps = argc > 3 ? std::atoi(argv[3]) : 20;

  std::mt19937 rng(12345);
  std::normal_distribution<double> dist(0.0, 1.0);
  std::vector<double> rows(n * dim), q(dim);
  for (auto& v : rows) v = dist(rng);
  for (auto& v : q) v = dist(rng);

  std::vector<double> serial_out(n), parallel_out(n);
  double serial = run_ms(q, rows, n, dim, serial_out, false, reps);
  double parallel = run_ms(q, rows, n, dim, parallel_out, true, reps);
  bool identical = serial_out == parallel_out;

  std::cout << "rows=" << n << " dim=" << dim << " reps=" << reps
            << " openmp=" << (sim::openmp_enabled() ? "on" : "off") << "\n";
  std::cout << "serial   " << serial << " ms/scan\n";
  std::cout << "parallel " << parallel << " ms/scan\n";
  std::cout << "speedup  " << (parallel > 0 ? serial / parallel : 0.0) << "x\n";
  std::cout << "bit-identical: " << (identical ? "yes" : "NO") << "\n";
  return identical ? 0 : 1;
}
