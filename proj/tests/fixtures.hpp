#pragma once

// The two benchmark plants, built directly in code so tests do not depend on
// the JSON loader (which is checked against these separately).

#include <cmath>
#include <random>

#include "sofsyn/plant.hpp"
#include "test_support.hpp"

namespace sofsyn::testing {

// Undamped oscillator, velocity measured: y = x₂, so u = K x₂ and the loop is
// Hurwitz iff K < 0.
inline PolytopicPlant example1_plant() {
  PlantVertex v;
  v.A = Matrix{{0, 1}, {-1, 0}};
  v.B1 = Matrix::identity(2);
  v.B2 = Matrix{{0}, {1}};
  v.C1 = Matrix(2, 2);
  v.D11 = Matrix(2, 2);
  v.D12 = Matrix(2, 1);
  v.C2 = Matrix{{1, 0}, {0, 0}};
  v.D21 = Matrix(2, 2);
  v.D22 = Matrix{{0}, {1}};
  return PolytopicPlant{{v}, Matrix{{0, 1}}};
}

inline PlantVertex example2_vertex(double a12) {
  PlantVertex v;
  v.A = Matrix{{-2.98, a12, 0, -0.034},
               {-0.99, -0.21, 0.035, -0.0011},
               {0, 0, 0, 1},
               {0.39, -5.555, 0, -1.89}};
  v.B1 = Matrix::identity(4);
  v.B2 = Matrix{{-0.032}, {0}, {0}, {-1.6}};
  v.C1 = Matrix::identity(4);
  v.D11 = Matrix(4, 4);
  v.D12 = Matrix(4, 1);
  v.C2 = Matrix::identity(4);
  v.D21 = Matrix(4, 4);
  v.D22 = Matrix{{1}, {0}, {0}, {0}};
  return v;
}

inline PolytopicPlant example2_plant() {
  return PolytopicPlant{{example2_vertex(-0.57), example2_vertex(2.43)},
                        Matrix{{0, 0, 1, 0}, {0, 0, 0, 1}}};
}

// Random plant with consistent dimensions; no stability guarantee.
inline PolytopicPlant random_plant(std::mt19937_64& rng, std::size_t vertices, PlantDims d) {
  PolytopicPlant plant;
  for (std::size_t i = 0; i < vertices; ++i) {
    PlantVertex v;
    v.A = random_matrix(rng, d.n, d.n);
    v.B1 = random_matrix(rng, d.n, d.l);
    v.B2 = random_matrix(rng, d.n, d.m);
    v.C1 = random_matrix(rng, d.p1, d.n);
    v.D11 = random_matrix(rng, d.p1, d.l);
    v.D12 = random_matrix(rng, d.p1, d.m);
    v.C2 = random_matrix(rng, d.p2, d.n);
    v.D21 = Matrix(d.p2, d.l);
    v.D22 = random_matrix(rng, d.p2, d.m);
    plant.vertices.push_back(std::move(v));
  }
  plant.C = random_matrix(rng, d.p, d.n);
  return plant;
}

// Single-vertex plant whose open loop is Hurwitz (rejection sampled), entries
// uniform in [−2, 2], with a zero gain channel so the closed loop equals the
// open loop. D21 = 0.
inline PolytopicPlant random_stable_single_vertex(std::mt19937_64& rng, std::size_t n,
                                                  std::size_t l, std::size_t p1, std::size_t p2) {
  for (;;) {
    PolytopicPlant plant = random_plant(rng, 1, PlantDims{n, 1, l, 1, p1, p2});
    if (is_stable(plant.vertices[0].A)) return plant;
  }
}

}  // namespace sofsyn::testing
