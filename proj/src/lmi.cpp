#include "sofsyn/lmi.hpp"

#include <map>

#include "sofsyn/errors.hpp"

namespace sofsyn {
namespace {

// Basis matrix of the k-th upper-triangle entry (row by row) of an order-n
// symmetric matrix.
Matrix symmetric_basis(std::size_t n, std::size_t k) {
  std::size_t r = 0;
  while (k >= n - r) {
    k -= n - r;
    ++r;
  }
  const std::size_t c = r + k;
  Matrix e(n, n);
  e(r, c) = 1.0;
  e(c, r) = 1.0;
  return e;
}

class BlockBuilder {
 public:
  BlockBuilder(std::string label, Matrix constant) : label_(std::move(label)), constant_(std::move(constant)) {}

  void add(std::size_t var, const Matrix& coefficient) {
    auto [it, inserted] = terms_.try_emplace(var, coefficient);
    if (!inserted) it->second += coefficient;
  }

  AffineBlock build() && {
    AffineBlock b{std::move(label_), std::move(constant_), {}};
    for (auto& [var, m] : terms_) b.terms.emplace_back(var, std::move(m));
    return b;
  }

 private:
  std::string label_;
  Matrix constant_;
  std::map<std::size_t, Matrix> terms_;
};

// −[[AᵀE + EA, E B], [Bᵀ E, 0]] padded to `order` (zeros beyond n + l).
Matrix lyapunov_coefficient(const Matrix& acl, const Matrix& bcl, const Matrix& e, std::size_t order) {
  const std::size_t n = acl.rows();
  Matrix f(order, order);
  f.set_block(0, 0, -(acl.transpose() * e + e * acl));
  const Matrix eb = e * bcl;
  f.set_block(0, n, -eb);
  f.set_block(n, 0, -eb.transpose());
  return f;
}

}  // namespace

void validate_lmi_spec(const LmiSpec& spec) {
  if (!(spec.strictness_eps > 0.0)) throw ContractError("LmiSpec: strictness_eps must be positive");
  if (spec.gamma && !(*spec.gamma > 0.0)) throw ContractError("LmiSpec: gamma must be positive");
  if (spec.delta_cap && !(*spec.delta_cap > 0.0)) throw ContractError("LmiSpec: delta_cap must be positive");
}

SdpProblem assemble(const PolytopicPlant& plant, const GainMatrix& K, const LmiSpec& spec) {
  validate_lmi_spec(spec);
  const PlantDims d = plant.dims();
  if (K.inputs() != d.m || K.outputs() != d.p) {
    throw ShapeError("assemble: gain must be " + std::to_string(d.m) + "x" + std::to_string(d.p));
  }
  const double eps = spec.strictness_eps;
  const bool with_hinf = spec.gamma.has_value();

  SdpProblem prob;
  std::size_t next = 0;
  const VariableSlice x2{"X2", next, symmetric_count(d.n), d.n};
  next += x2.count;
  VariableSlice xinf{"Xinf", next, 0, d.n};
  if (with_hinf) {
    xinf.count = symmetric_count(d.n);
    next += xinf.count;
  }
  const VariableSlice s{"S", next, symmetric_count(d.p2), d.p2};
  next += s.count;
  const std::size_t delta = next++;

  prob.num_vars = next;
  prob.objective.assign(next, 0.0);
  prob.objective[delta] = 1.0;
  prob.variable_map.push_back(x2);
  if (with_hinf) prob.variable_map.push_back(xinf);
  prob.variable_map.push_back(s);
  prob.variable_map.push_back(VariableSlice{"delta", delta, 1, 0});

  std::vector<Matrix> state_basis;
  for (std::size_t k = 0; k < x2.count; ++k) state_basis.push_back(symmetric_basis(d.n, k));

  for (std::size_t i = 0; i < plant.vertices.size(); ++i) {
    const ClosedLoopVertex cl = close_loop(plant.vertices[i], plant.C, K);
    const std::string tag = "vertex[" + std::to_string(i) + "].";

    // −[[Aclᵀ X₂ + X₂ Acl, X₂ B], [*, −I]] − εI ⪰ 0
    {
      const std::size_t order = d.n + d.l;
      Matrix f0 = -eps * Matrix::identity(order);
      for (std::size_t j = 0; j < d.l; ++j) f0(d.n + j, d.n + j) += 1.0;
      BlockBuilder b(tag + "h2_lyapunov", std::move(f0));
      for (std::size_t k = 0; k < x2.count; ++k)
        b.add(x2.offset + k, lyapunov_coefficient(cl.Acl, cl.Bcl, state_basis[k], order));
      prob.blocks.push_back(std::move(b).build());
    }

    // [[X₂, C2clᵀ], [C2cl, S]] − εI ⪰ 0
    {
      const std::size_t order = d.n + d.p2;
      Matrix f0 = -eps * Matrix::identity(order);
      f0.set_block(d.n, 0, cl.C2cl);
      f0.set_block(0, d.n, cl.C2cl.transpose());
      BlockBuilder b(tag + "h2_output", std::move(f0));
      for (std::size_t k = 0; k < x2.count; ++k) {
        Matrix f(order, order);
        f.set_block(0, 0, state_basis[k]);
        b.add(x2.offset + k, f);
      }
      for (std::size_t k = 0; k < s.count; ++k) {
        Matrix f(order, order);
        f.set_block(d.n, d.n, symmetric_basis(d.p2, k));
        b.add(s.offset + k, f);
      }
      prob.blocks.push_back(std::move(b).build());
    }

    // −[[Aclᵀ X∞ + X∞ Acl, X∞ B, Cinfᵀ], [*, −γI, Dinfᵀ], [*, *, −γI]] − εI ⪰ 0
    if (with_hinf) {
      const double gamma = *spec.gamma;
      const std::size_t order = d.n + d.l + d.p1;
      Matrix f0 = -eps * Matrix::identity(order);
      for (std::size_t j = d.n; j < order; ++j) f0(j, j) += gamma;
      f0.set_block(d.n + d.l, 0, -cl.Cinf);
      f0.set_block(0, d.n + d.l, -cl.Cinf.transpose());
      f0.set_block(d.n + d.l, d.n, -cl.Dinf);
      f0.set_block(d.n, d.n + d.l, -cl.Dinf.transpose());
      BlockBuilder b(tag + "hinf", std::move(f0));
      for (std::size_t k = 0; k < xinf.count; ++k)
        b.add(xinf.offset + k, lyapunov_coefficient(cl.Acl, cl.Bcl, state_basis[k], order));
      prob.blocks.push_back(std::move(b).build());
    }
  }

  {
    BlockBuilder b("X2_positive", -eps * Matrix::identity(d.n));
    for (std::size_t k = 0; k < x2.count; ++k) b.add(x2.offset + k, state_basis[k]);
    prob.blocks.push_back(std::move(b).build());
  }
  if (with_hinf) {
    BlockBuilder b("Xinf_positive", -eps * Matrix::identity(d.n));
    for (std::size_t k = 0; k < xinf.count; ++k) b.add(xinf.offset + k, state_basis[k]);
    prob.blocks.push_back(std::move(b).build());
  }
  {
    // δ − Trace(S) − ε ≥ 0
    BlockBuilder b("trace_bound", Matrix{{-eps}});
    for (std::size_t k = 0; k < s.count; ++k) {
      if (symmetric_basis(d.p2, k).trace() != 0.0) b.add(s.offset + k, Matrix{{-1.0}});
    }
    b.add(delta, Matrix{{1.0}});
    prob.blocks.push_back(std::move(b).build());
  }
  if (spec.delta_cap) {
    BlockBuilder b("delta_cap", Matrix{{*spec.delta_cap}});
    b.add(delta, Matrix{{-1.0}});
    prob.blocks.push_back(std::move(b).build());
  }
  return prob;
}

}  // namespace sofsyn
