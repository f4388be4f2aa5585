#include "spinsim/parallel.hpp"

#include <omp.h>

#include <cstdlib>
#include <string>

namespace spinsim {

namespace {

int env_threads() {
  const char* raw = std::getenv("SPINSIM_THREADS");
  if (raw == nullptr || *raw == '\0') return 0;
  try {
    const int v = std::stoi(raw);
    return v > 0 ? v : 0;
  } catch (const std::exception&) {
    return 0;
  }
}

}  // namespace

int worker_count() {
  const int forced = env_threads();
  return forced > 0 ? forced : omp_get_max_threads();
}

void configure_threads_from_env() {
  const int forced = env_threads();
  if (forced > 0) omp_set_num_threads(forced);
}

}  // namespace spinsim
