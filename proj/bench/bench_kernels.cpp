// Serial reference versus OpenMP kernel: wall time and bitwise agreement.
// Usage: bench_kernels [n] [reps]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <string>
#include <vector>

#include "spinsim/fast_sum.hpp"
#include "spinsim/kernels.hpp"
#include "spinsim/parallel.hpp"
#include "spinsim/rng.hpp"

namespace {

using namespace spinsim;

template <typename F>
double mean_ns(int reps, F&& body) {
  double total = 0.0;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    body();
    total += std::chrono::duration<double, std::nano>(std::chrono::steady_clock::now() - t0).count();
  }
  return total / reps;
}

template <typename T>
bool identical(const std::vector<T>& a, const std::vector<T>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(T)) == 0;
}

void report(const char* kernel, std::size_t n, double serial, double parallel, bool same) {
  std::printf("%s,%zu,%.0f,%.0f,%.3f,%s\n", kernel, n, serial, parallel, serial / parallel,
              same ? "yes" : "NO");
}

}  // namespace

int main(int argc, char** argv) {
  configure_threads_from_env();
  const std::size_t n = argc > 1 ? std::strtoul(argv[1], nullptr, 10) : 4096;
  const int reps = argc > 2 ? std::atoi(argv[2]) : 5;
  const CounterRng rng(2024);
  std::vector<double> x(n), up(n), down(n);
  std::vector<std::uint8_t> state(n);
  for (std::size_t i = 0; i < n; ++i) {
    state[i] = rng.uniform(make_stream(StreamTag::test, 0), i) < 0.3 ? 1 : 0;
    x[i] = state[i];
    up[i] = 2.0 * rng.uniform(make_stream(StreamTag::test, 1), i);
    down[i] = 1.0;
  }
  const double sigma = 20.0;
  const double nd = static_cast<double>(n);
  const KernelSpec kernel = KernelSpec::gaussian({1, n}, false, 2.0 * sigma / (nd * std::sqrt(M_PI)),
                                                 (sigma / nd) * (sigma / nd));

  std::printf("# workers=%d\n", worker_count());
  std::printf("kernel,n,serial_ns,parallel_ns,speedup,bitwise_equal\n");

  std::vector<double> a(n), b(n);
  if (n <= 8192) {
    const DenseMatrix dense = DenseMatrix::from_kernel(kernel);
    const double s = mean_ns(reps, [&] { kernels::dense_matvec_serial(dense, x, a); });
    const double p = mean_ns(reps, [&] { kernels::dense_matvec_parallel(dense, x, b); });
    report("dense_matvec", n, s, p, identical(a, b));
  }
  {
    const double s = mean_ns(reps, [&] { kernels::direct_convolve_serial(kernel, x, a); });
    const double p = mean_ns(reps, [&] { kernels::direct_convolve_parallel(kernel, x, b); });
    report("direct_convolve", n, s, p, identical(a, b));
  }
  {
    std::vector<std::uint8_t> na(n), nb(n);
    const std::uint64_t stream = make_stream(StreamTag::grid_step, 0);
    const double s = mean_ns(reps, [&] {
      kernels::decoupled_step_serial(up, down, state, 0.05, rng, stream, na);
    });
    const double p = mean_ns(reps, [&] {
      kernels::decoupled_step_parallel(up, down, state, 0.05, rng, stream, nb);
    });
    report("decoupled_step", n, s, p, identical(na, nb));
  }
  return 0;
}
