#pragma once

namespace dctshield {

/// Selects between the OpenMP kernel and its serial reference. Both paths
/// produce bit-identical results; the serial one exists for testing and
/// benchmarking.
enum class Exec { serial, parallel };

/// Applies the DCT_SHIELD_THREADS cap (if set and positive) to OpenMP.
/// Returns the thread count in effect afterwards.
int configure_threads_from_env();

/// Overrides the OpenMP thread count for subsequent parallel kernels.
void set_thread_count(int n);
int thread_count();

}  // namespace dctshield
