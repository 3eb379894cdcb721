#pragma once

#ifdef STEGCOST_OPENMP
#include <omp.h>
#define STEGCOST_OMP(content) _Pragma(content)
#else
#define STEGCOST_OMP(content)
#endif

namespace stegcost {

inline int max_threads() {
#ifdef STEGCOST_OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

inline void set_max_threads(int n) {
#ifdef STEGCOST_OPENMP
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

}  // namespace stegcost
