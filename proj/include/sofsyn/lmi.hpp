#pragma once

// For a fixed gain K the mixed H2/H∞ synthesis conditions are linear in the
// Lyapunov matrices. At every vertex i, with the closed loop (Acl, Bcl,
// Cinf, Dinf, C2cl) = close_loop(vertex i, C, K):
//
//   [ Aclᵀ X₂ + X₂ Acl   X₂ Bcl ]                [ X₂    C2clᵀ ]
//   [        *           −I     ]  ≺ 0,          [ C2cl  S     ]  ≻ 0,
//
//   [ Aclᵀ X∞ + X∞ Acl   X∞ Bcl   Cinfᵀ ]
//   [        *           −γI      Dinfᵀ ]  ≺ 0   (only when γ is given),
//   [        *            *       −γI   ]
//
// with X₂ ≻ 0, X∞ ≻ 0, Trace(S) < δ, and δ minimized. X₂ and X∞ are shared
// across vertices but independent of each other. Strict inequalities are
// enforced with margin ε.

#include <optional>

#include "sofsyn/plant.hpp"
#include "sofsyn/sdp.hpp"

namespace sofsyn {

struct LmiSpec {
  std::optional<double> gamma;      // H∞ level; absent disables the H∞ block
  std::optional<double> delta_cap;  // optional upper bound on δ
  double strictness_eps = 1e-7;

  friend bool operator==(const LmiSpec&, const LmiSpec&) = default;
};

// Throws ContractError on a non-positive ε or γ.
void validate_lmi_spec(const LmiSpec& spec);

// Assembles the SDP in the variables (X₂, [X∞,] S, δ). variable_map names the
// slices "X2", "Xinf" (when γ is given), "S" and "delta".
SdpProblem assemble(const PolytopicPlant& plant, const GainMatrix& K, const LmiSpec& spec);

// Number of free entries of an order-n symmetric matrix.
constexpr std::size_t symmetric_count(std::size_t n) { return n * (n + 1) / 2; }

}  // namespace sofsyn
