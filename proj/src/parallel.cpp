#include "dctshield/parallel.hpp"

#include <omp.h>

#include <cstdlib>
#include <string>

namespace dctshield {

int configure_threads_from_env() {
  if (const char* env = std::getenv("DCT_SHIELD_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n > 0) omp_set_num_threads(n);
    } catch (const std::exception&) {
      // unparsable values leave the OpenMP default in place
    }
  }
  return omp_get_max_threads();
}

void set_thread_count(int n) {
  if (n > 0) omp_set_num_threads(n);
}

int thread_count() { return omp_get_max_threads(); }

}  // namespace dctshield
