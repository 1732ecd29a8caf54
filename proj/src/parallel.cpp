// SPDX-FileCopyrightText: 2026 the occkit authors
// SPDX-License-Identifier: Apache-2.0

#include "occkit/parallel.hpp"

#include <omp.h>

namespace occkit {

void set_thread_count(int n) {
  if (n > 0) {
    omp_set_num_threads(n);
  } else {
    omp_set_num_threads(omp_get_num_procs());
  }
}

int thread_count() { return omp_get_max_threads(); }

}  // namespace occkit
