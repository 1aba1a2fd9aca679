#pragma once

// Control-theoretic reference values computed without any SDP machinery:
// H2 norms from Lyapunov equations and H∞ norms from Hamiltonian bisection.
// These are the ground truth the LMI pipeline is validated against.

#include <optional>
#include <vector>

#include "sofsyn/linalg.hpp"
#include "sofsyn/plant.hpp"

namespace sofsyn {

// Solves aᵀX + X a + q = 0 for symmetric X through the n²×n² Kronecker
// system. a must be Hurwitz (ContractError otherwise).
Matrix lyapunov_solve(const Matrix& a, const Matrix& q);

// ‖G_{z2 w}‖₂² = Trace(Bclᵀ Q Bcl) with Aclᵀ Q + Q Acl + C2clᵀ C2cl = 0.
// Throws UndefinedNormError when Acl is not Hurwitz or D2cl ≠ 0.
double h2_norm_squared(const ClosedLoopVertex& cl);

// ‖G_{z∞ w}‖∞ by bisection on γ with the Hamiltonian imaginary-axis test;
// the result is within relative tolerance tol of the true norm.
// Throws UndefinedNormError when Acl is not Hurwitz.
double hinf_norm(const ClosedLoopVertex& cl, double tol = 1e-6);

// σ_max of G_{z∞ w}(jω) = Cinf (jωI − Acl)⁻¹ Bcl + Dinf.
double hinf_gain_at(const ClosedLoopVertex& cl, double omega);

struct NormReport {
  std::vector<double> weights;
  bool stable = false;
  double spectral_abscissa = 0.0;
  std::optional<double> h2_squared;  // requires stability and D2cl = 0
  std::optional<double> hinf;        // requires stability
};

// One report per grid point, evaluated on the blended system. Never throws on
// unstable points; their norms are left undefined.
std::vector<NormReport> certify(const PolytopicPlant& plant, const GainMatrix& K,
                                const std::vector<PolytopeWeights>& weights_grid);

}  // namespace sofsyn
