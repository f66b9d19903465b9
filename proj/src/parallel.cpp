#include "anb/parallel.hpp"

#include <omp.h>

namespace anb {

void set_num_threads(int jobs) {
  if (jobs > 0) {
    omp_set_num_threads(jobs);
  }
}

int max_threads() { return omp_get_max_threads(); }

} // namespace anb
