#pragma once

#include <random>

#include "acflow/grid.hpp"

namespace acflow::testing {

/// No-slip face field with independent uniform(-1, 1) interior values.
inline FaceField random_faces(const MacGrid& g, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  FaceField u(g);
  for (double& v : u.ux()) v = d(rng);
  for (double& v : u.uy()) v = d(rng);
  return u.enforce_no_slip();
}

inline CellField random_cells(const MacGrid& g, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  CellField p(g);
  for (double& v : p.values()) v = d(rng);
  return p;
}

}  // namespace acflow::testing
