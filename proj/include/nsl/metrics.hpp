#pragma once

#include <cstdint>

#include "nsl/linalg.hpp"
#include "nsl/parallel.hpp"

namespace nsl {

// Sliced Wasserstein-2 distance between two sample sets of equal dimension:
// root-mean over random unit directions of the squared 1-D W2 between the
// projected empirical distributions. Directions are drawn from per-projection
// seeded streams, so the value is reproducible and thread-count independent.
double sliced_w2(const Matrix& a, const Matrix& b, int n_projections, std::uint64_t seed,
                 Exec mode = Exec::Parallel);

}  // namespace nsl
