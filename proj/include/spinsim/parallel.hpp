#pragma once

namespace spinsim {

/// Selects between the OpenMP kernel and its serial reference.
enum class Exec { serial, parallel };

/// Worker count for replicate farms and parallel kernels. Honours the
/// SPINSIM_THREADS environment variable, otherwise the OpenMP default.
int worker_count();

/// Applies SPINSIM_THREADS (if set) to the OpenMP runtime.
void configure_threads_from_env();

}  // namespace spinsim
