// Serial reference vs OpenMP kernels of the oracle module. Prints wall time
// for each and verifies the results are bit-identical.

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cstring>

#include "ehrelay/oracle.hpp"

using namespace ehrelay;

namespace {

template <class F>
double seconds(F&& f, int reps) {
  const auto t0 = std::chrono::steady_clock::now();
  for (int r = 0; r < reps; ++r) f();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / reps;
}

bool same(const GridResult& a, const GridResult& b) {
  return a.best_bits == b.best_bits && a.slack == b.slack && a.best.p1 == b.best.p1 &&
         a.best.p2 == b.best.p2;
}

}  // namespace

int main(int argc, char** argv) {
  const int points = argc > 1 ? std::atoi(argv[1]) : 30;
  const ChannelParams ch{1.8, 1.0, 1.0};
  const HarvestProfile profile{{{0.0, 3.0, 1.0}, {1.5, 4.0, 6.0}, {3.0, 1.0, 2.0}}, 5.0};
  const GridConfig grid{points, 1, 1e12};

  std::printf("threads %d\n", omp_get_max_threads());

  GridResult serial, parallel;
  const double ts = seconds([&] { serial = grid_search_serial(ch, profile, grid); }, 1);
  const double tp = seconds([&] { parallel = grid_search(ch, profile, grid); }, 1);
  std::printf("grid_search  points=%d  serial %.3fs  openmp %.3fs  speedup %.2f  identical %s\n",
              points, ts, tp, ts / tp, same(serial, parallel) ? "yes" : "NO");

  const int n = 1000000;
  double rs = 0.0, rp = 0.0;
  const double us = seconds([&] { rs = rho_maxmin_serial(ch, 2.0, 1.5, n); }, 5);
  const double up = seconds([&] { rp = rho_maxmin(ch, 2.0, 1.5, n); }, 5);
  std::printf("rho_maxmin   points=%d  serial %.4fs  openmp %.4fs  speedup %.2f  identical %s\n", n,
              us, up, us / up, std::memcmp(&rs, &rp, sizeof rs) == 0 ? "yes" : "NO");
  return same(serial, parallel) && rs == rp ? 0 : 1;
}
