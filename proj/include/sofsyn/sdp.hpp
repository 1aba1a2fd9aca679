#pragma once

// Dense semidefinite programming in the affine-pencil form
//
//   minimize    cᵀy
//   subject to  F₀⁽ᵇ⁾ + Σⱼ yⱼ Fⱼ⁽ᵇ⁾ ⪰ 0   for every block b,
//
// solved with a log-barrier path-following method (damped Newton centering,
// dual certificate taken from the Newton step). A phase-I problem
// that maximizes the smallest block eigenvalue supplies a strictly feasible
// start and decides feasibility.

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sofsyn/linalg.hpp"

namespace sofsyn {

// One affine symmetric matrix pencil required to be positive semidefinite.
struct AffineBlock {
  std::string label;
  Matrix constant;
  // (variable index, coefficient matrix), strictly increasing by index.
  std::vector<std::pair<std::size_t, Matrix>> terms;

  std::size_t size() const { return constant.rows(); }
  Matrix evaluate(const std::vector<double>& y) const;
};

// Names a contiguous run of scalar variables. matrix_dim > 0 marks the run as
// the upper triangle (row by row) of a symmetric matrix of that order.
struct VariableSlice {
  std::string name;
  std::size_t offset = 0;
  std::size_t count = 0;
  std::size_t matrix_dim = 0;
};

struct SdpProblem {
  std::size_t num_vars = 0;
  std::vector<double> objective;
  std::vector<AffineBlock> blocks;
  std::vector<VariableSlice> variable_map;

  const VariableSlice* find_slice(const std::string& name) const;
  // Symmetric matrix held by a matrix-valued slice of y.
  Matrix unpack(const VariableSlice& slice, const std::vector<double>& y) const;
};

struct PointReport {
  std::vector<double> block_min_eigenvalues;
  double worst = 0.0;
  bool feasible = false;  // every block minimum eigenvalue ≥ −1e-8
};

inline constexpr double kPointFeasibilityTolerance = 1e-8;

PointReport check_point(const SdpProblem& problem, const std::vector<double>& y);

enum class SdpStatus { Optimal, Infeasible, Unbounded, MaxIterations, NumericalFailure };

const char* to_string(SdpStatus status);

struct SdpSettings {
  double tolerance = 1e-7;
  int max_iterations = 200;
  // Phase-I margins at or below this value mean "infeasible".
  double infeasibility_threshold = 1e-9;
  // Phase I confines |yⱼ| to this radius so its optimum is attained.
  double phase1_radius = 1e6;
  // Phase II bound on |yⱼ|; keeps the barrier bounded below when the
  // feasible set has a direction of constant objective.
  double box_radius = 1e8;
};

struct SdpSolution {
  std::vector<double> y;
  double objective_value = 0.0;
  SdpStatus status = SdpStatus::NumericalFailure;
  // Relative duality gap at termination.
  double gap = 0.0;
  int iterations = 0;
  std::string diagnostic;
};

SdpSolution solve(const SdpProblem& problem, const SdpSettings& settings = {});

struct FeasibilityResult {
  bool feasible = false;
  // Largest achievable smallest-block eigenvalue (capped at 1), or the margin
  // of the first iterate that cleared the early-exit level.
  double margin = 0.0;
  std::vector<double> y;
  SdpStatus status = SdpStatus::NumericalFailure;
  int iterations = 0;
};

FeasibilityResult find_strictly_feasible(const SdpProblem& problem, const SdpSettings& settings = {});

inline bool feasible(const SdpProblem& problem, const SdpSettings& settings = {}) {
  return find_strictly_feasible(problem, settings).feasible;
}

}  // namespace sofsyn
