#include "sofsyn/sdp.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

#include "sofsyn/errors.hpp"

namespace sofsyn {
namespace {

// Phase I stops as soon as every block clears this margin.
constexpr double kPhaseOneTarget = 1e-2;
constexpr double kInf = std::numeric_limits<double>::infinity();

// Minimizer over α of  α·slope − Σ log(1 + α·μᵢ)  on the domain 1 + α·μᵢ > 0,
// or nullopt when the function decreases without bound.
std::optional<double> barrier_line_minimum(double slope, const std::vector<double>& mu) {
  double hi = kInf;
  for (double v : mu)
    if (v < 0.0) hi = std::min(hi, -1.0 / v);
  auto derivative = [&](double a) {
    double g = slope;
    for (double v : mu) g -= v / (1.0 + a * v);
    return g;
  };
  double lo = 0.0;
  if (hi == kInf) {
    if (slope <= 0.0) return std::nullopt;
    hi = 1.0;
    while (derivative(hi) < 0.0) {
      lo = hi;
      hi *= 2.0;
      if (hi > 1e30) return std::nullopt;
    }
  }
  double a = std::min(1.0, 0.5 * (lo + hi));
  for (int it = 0; it < 100; ++it) {
    const double g = derivative(a);
    if (g < 0.0) lo = a; else hi = a;
    double curv = 0.0;
    for (double v : mu) curv += v * v / ((1.0 + a * v) * (1.0 + a * v));
    double next = curv > 0.0 ? a - g / curv : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - a) <= 1e-12 * a || hi - lo <= 1e-14 * hi) return next;
    a = next;
  }
  return a;
}

// Newton system H·x = r solved with Jacobi scaling, a Cholesky factor
// (regularized only if needed) and iterative refinement against H.
class NewtonSystem {
 public:
  static std::optional<NewtonSystem> factor(const Matrix& h) {
    NewtonSystem sys;
    const std::size_t m = h.rows();
    sys.h_ = h;
    sys.scale_.resize(m);
    for (std::size_t i = 0; i < m; ++i) sys.scale_[i] = h(i, i) > 0.0 ? 1.0 / std::sqrt(h(i, i)) : 1.0;
    Matrix scaled(m, m);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j) scaled(i, j) = h(i, j) * sys.scale_[i] * sys.scale_[j];
    for (double reg : {0.0, 1e-14, 1e-12, 1e-10}) {
      Matrix shifted = scaled;
      for (std::size_t i = 0; i < m; ++i) shifted(i, i) += reg;
      if (auto l = cholesky(shifted)) {
        sys.chol_ = std::move(*l);
        return sys;
      }
    }
    return std::nullopt;
  }

  std::vector<double> solve(const std::vector<double>& rhs) const {
    const std::size_t m = rhs.size();
    std::vector<double> x(m, 0.0), r = rhs;
    for (int pass = 0; pass < 3; ++pass) {
      Matrix b(m, 1);
      for (std::size_t i = 0; i < m; ++i) b(i, 0) = r[i] * scale_[i];
      b = backward_substitute_transposed(chol_, forward_substitute(chol_, std::move(b)));
      for (std::size_t i = 0; i < m; ++i) x[i] += b(i, 0) * scale_[i];
      for (std::size_t i = 0; i < m; ++i) {
        double acc = rhs[i];
        for (std::size_t j = 0; j < m; ++j) acc -= h_(i, j) * x[j];
        r[i] = acc;
      }
    }
    return x;
  }

 private:
  Matrix h_;
  Matrix chol_;
  std::vector<double> scale_;
};

double norm2(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

struct PathResult {
  std::vector<double> y;
  SdpStatus status = SdpStatus::NumericalFailure;
  double gap = 0.0;
  // Certified lower bound on the optimal value (dual objective).
  double lower_bound = -kInf;
  int iterations = 0;
  bool stopped_early = false;
  std::string diagnostic;
};

struct Barrier {
  std::vector<Matrix> chol;  // Cholesky factor L_b of F_b(y)
  double log_det = 0.0;      // Σ_b log det F_b(y)
};

// Evaluates the log-det barrier at y; nullopt when some block is not
// positive definite.
std::optional<Barrier> evaluate_barrier(const SdpProblem& prob, const std::vector<double>& y) {
  Barrier bar;
  bar.chol.reserve(prob.blocks.size());
  for (const auto& block : prob.blocks) {
    auto l = cholesky(symmetrize(block.evaluate(y)));
    if (!l) return std::nullopt;
    for (std::size_t i = 0; i < l->rows(); ++i) bar.log_det += 2.0 * std::log((*l)(i, i));
    bar.chol.push_back(std::move(*l));
  }
  return bar;
}

// L⁻¹ F L⁻ᵀ
Matrix whiten(const Matrix& chol, const Matrix& f) {
  const Matrix w = forward_substitute(chol, f);
  return symmetrize(forward_substitute(chol, w.transpose()));
}

// Barrier path following: for increasing t, Newton steps on
//   φ_t(y) = t·cᵀy − Σ_b log det F_b(y)
// from a strictly feasible start. All quantities live in the whitened
// coordinates G_j = L⁻¹ F_j L⁻ᵀ of each block, where the Hessian is
// H_ij = Σ_b ⟨G_i, G_j⟩ and the gradient of the log-det term is tr(G_j).
// A Newton step Δy with ΔG = Σ_j Δy_j G_j gives the dual point
// Z = L⁻ᵀ (I − ΔG) L⁻¹ / t. It meets the dual equalities up to the residual
// of the Newton solve, is positive definite iff eig(ΔG) < 1, and has gap
// Σ_b (n_b − tr ΔG_b) / t.
PathResult path_follow(const SdpProblem& prob, std::vector<double> y, const SdpSettings& settings,
                       const std::function<bool(const std::vector<double>&, double)>& stop_early,
                       double stop_if_bound_above = kInf) {
  constexpr double kGrowth = 16.0;
  constexpr double kCenteredDecrement = 0.25;
  const std::size_t m = prob.num_vars;
  const std::size_t nb = prob.blocks.size();
  std::size_t total_order = 0;
  for (const auto& b : prob.blocks) total_order += b.size();

  PathResult out;
  // Last iterate whose gap met the tolerance with a dual residual just above
  // it; returned if the path breaks down numerically afterwards.
  std::optional<std::pair<std::vector<double>, double>> fallback;
  auto finish = [&](SdpStatus status, std::string why) {
    if ((status == SdpStatus::NumericalFailure || status == SdpStatus::MaxIterations) && fallback) {
      y = std::move(fallback->first);
      out.gap = fallback->second;
      status = SdpStatus::Optimal;
      why.clear();
    }
    out.y = std::move(y);
    out.status = status;
    out.diagnostic = std::move(why);
    return out;
  };

  double t = 0.0;
  auto bar = evaluate_barrier(prob, y);
  if (!bar) return finish(SdpStatus::NumericalFailure, "start point is not strictly feasible");

  for (int iter = 0;; ++iter) {
    out.iterations = iter;
    double primal_obj = 0.0;
    for (std::size_t j = 0; j < m; ++j) primal_obj += prob.objective[j] * y[j];
    if (stop_early && stop_early(y, out.lower_bound)) {
      out.stopped_early = true;
      return finish(SdpStatus::Optimal, "");
    }

    std::vector<std::vector<Matrix>> g(nb);
    std::vector<double> trace_g(m, 0.0);
    Matrix hessian(m, m);
    for (std::size_t b = 0; b < nb; ++b) {
      const auto& terms = prob.blocks[b].terms;
      g[b].reserve(terms.size());
      for (const auto& [j, f] : terms) {
        g[b].push_back(whiten(bar->chol[b], f));
        trace_g[j] += g[b].back().trace();
      }
      for (std::size_t a = 0; a < terms.size(); ++a) {
        for (std::size_t c = a; c < terms.size(); ++c) {
          const double v = inner(g[b][a], g[b][c]);
          hessian(terms[a].first, terms[c].first) += v;
          if (a != c) hessian(terms[c].first, terms[a].first) += v;
        }
      }
    }
    const auto newton = NewtonSystem::factor(hessian);
    if (!newton) return finish(SdpStatus::NumericalFailure, "barrier Hessian is not positive definite");

    if (t == 0.0) {
      // Initial weight minimizing the Newton decrement ‖t·c − tr G‖ in H⁻¹.
      const std::vector<double> hc = newton->solve(prob.objective);
      double cc = 0.0, ca = 0.0;
      for (std::size_t j = 0; j < m; ++j) {
        cc += prob.objective[j] * hc[j];
        ca += trace_g[j] * hc[j];
      }
      t = (cc > 0.0 && ca > 0.0) ? ca / cc : 1.0;
      t = std::max(t, 1e-8);
    }

    std::vector<double> grad(m);
    for (std::size_t j = 0; j < m; ++j) grad[j] = t * prob.objective[j] - trace_g[j];
    std::vector<double> dy = newton->solve(grad);
    for (double& v : dy) v = -v;
    double decrement_sq = 0.0;
    for (std::size_t j = 0; j < m; ++j) decrement_sq -= grad[j] * dy[j];
    const double decrement = std::sqrt(std::max(decrement_sq, 0.0));

    // Eigenvalues μ of every ΔG_b.
    std::vector<double> mu;
    mu.reserve(total_order);
    for (std::size_t b = 0; b < nb; ++b) {
      const auto& terms = prob.blocks[b].terms;
      Matrix dg(prob.blocks[b].size(), prob.blocks[b].size());
      for (std::size_t a = 0; a < terms.size(); ++a) dg += dy[terms[a].first] * g[b][a];
      const auto e = sym_eig(dg).eigenvalues;
      mu.insert(mu.end(), e.begin(), e.end());
    }

    const double max_mu = mu.empty() ? 0.0 : *std::max_element(mu.begin(), mu.end());
    if (max_mu < 1.0) {
      double gap = 0.0;
      for (double v : mu) gap += 1.0 - v;
      gap /= t;
      // Dual residual rd = (g + H·Δy)/t, against the size of its terms.
      double worst_rd = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        double r = grad[i], size = std::abs(grad[i]) + std::abs(trace_g[i]);
        for (std::size_t j = 0; j < m; ++j) {
          r += hessian(i, j) * dy[j];
          size += std::abs(hessian(i, j) * dy[j]);
        }
        worst_rd = std::max(worst_rd, std::abs(r) / (size + t));
      }
      const double scale = 1.0 + std::abs(primal_obj);
      out.gap = gap / scale;
      out.lower_bound = primal_obj - gap;
      const bool dual_feasible = worst_rd <= settings.tolerance;
      if (out.gap <= settings.tolerance && dual_feasible) return finish(SdpStatus::Optimal, "");
      if (out.gap <= settings.tolerance && worst_rd <= 100.0 * settings.tolerance) fallback.emplace(y, out.gap);
      if (dual_feasible && out.lower_bound > stop_if_bound_above) {
        out.stopped_early = true;
        return finish(SdpStatus::Optimal, "");
      }
    }
    if (iter >= settings.max_iterations) return finish(SdpStatus::MaxIterations, "iteration cap reached");

    if (decrement <= kCenteredDecrement) {
      // Close enough to the central path: raise t and recompute the step.
      t *= kGrowth;
      if (t * settings.tolerance > 1e20) return finish(SdpStatus::NumericalFailure, "barrier weight overflow");
      continue;
    }

    // Exact line search on φ_t along the Newton direction:
    // φ_t(y + αΔy) − φ_t(y) = α·t·cᵀΔy − Σ log(1 + α·μ).
    double c_dy = 0.0;
    for (std::size_t j = 0; j < m; ++j) c_dy += prob.objective[j] * dy[j];
    const auto alpha = barrier_line_minimum(t * c_dy, mu);
    if (!alpha) return finish(SdpStatus::Unbounded, "objective decreasing without bound along a feasible ray");
    double step = *alpha;
    std::vector<double> y_next(m);
    for (int retreat = 0;; ++retreat) {
      for (std::size_t j = 0; j < m; ++j) y_next[j] = y[j] + step * dy[j];
      bar = evaluate_barrier(prob, y_next);
      if (bar) break;
      // Rounding at the domain edge.
      if (retreat == 10) return finish(SdpStatus::NumericalFailure, "iterate lost strict feasibility");
      step *= 0.5;
    }
    std::swap(y, y_next);

    double new_obj = 0.0;
    for (std::size_t j = 0; j < m; ++j) new_obj += prob.objective[j] * y[j];
    if (norm2(y) > 1e12 && new_obj < -1e12) return finish(SdpStatus::Unbounded, "objective decreasing without bound");
  }
}

// Appends |y_j| ≤ R for the first m variables.
void add_box(SdpProblem& prob, std::size_t m, double radius) {
  for (std::size_t j = 0; j < m; ++j) {
    prob.blocks.push_back(AffineBlock{"box_upper", Matrix{{radius}}, {{j, Matrix{{-1.0}}}}});
    prob.blocks.push_back(AffineBlock{"box_lower", Matrix{{radius}}, {{j, Matrix{{1.0}}}}});
  }
}

double objective_at(const SdpProblem& prob, const std::vector<double>& y) {
  double v = 0.0;
  for (std::size_t j = 0; j < prob.num_vars; ++j) v += prob.objective[j] * y[j];
  return v;
}

}  // namespace

Matrix AffineBlock::evaluate(const std::vector<double>& y) const {
  Matrix f = constant;
  for (const auto& [j, coeff] : terms) {
    if (y[j] != 0.0) f += y[j] * coeff;
  }
  return f;
}

const VariableSlice* SdpProblem::find_slice(const std::string& name) const {
  for (const auto& s : variable_map)
    if (s.name == name) return &s;
  return nullptr;
}

Matrix SdpProblem::unpack(const VariableSlice& slice, const std::vector<double>& y) const {
  const std::size_t n = slice.matrix_dim;
  if (n == 0) return Matrix(1, 1, {y.at(slice.offset)});
  Matrix x(n, n);
  std::size_t k = slice.offset;
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = r; c < n; ++c) x(r, c) = x(c, r) = y.at(k++);
  return x;
}

PointReport check_point(const SdpProblem& problem, const std::vector<double>& y) {
  if (y.size() != problem.num_vars) throw ShapeError("check_point: wrong number of variables");
  PointReport rep;
  rep.worst = kInf;
  for (const auto& b : problem.blocks) {
    const double e = min_eigenvalue(symmetrize(b.evaluate(y)));
    rep.block_min_eigenvalues.push_back(e);
    rep.worst = std::min(rep.worst, e);
  }
  if (problem.blocks.empty()) rep.worst = 0.0;
  rep.feasible = rep.worst >= -kPointFeasibilityTolerance;
  return rep;
}

const char* to_string(SdpStatus status) {
  switch (status) {
    case SdpStatus::Optimal: return "optimal";
    case SdpStatus::Infeasible: return "infeasible";
    case SdpStatus::Unbounded: return "unbounded";
    case SdpStatus::MaxIterations: return "max_iterations";
    case SdpStatus::NumericalFailure: return "numerical_failure";
  }
  return "unknown";
}

FeasibilityResult find_strictly_feasible(const SdpProblem& problem, const SdpSettings& settings) {
  const std::size_t m = problem.num_vars;
  FeasibilityResult res;
  std::vector<double> origin(m, 0.0);
  const PointReport at_origin = check_point(problem, origin);
  if (at_origin.worst >= kPhaseOneTarget) {
    res.feasible = true;
    res.margin = at_origin.worst;
    res.y = std::move(origin);
    res.status = SdpStatus::Optimal;
    return res;
  }

  // maximize t  s.t.  F_b(y) − t I ⪰ 0,  t ≤ 1,  |y_j| ≤ R.
  SdpProblem phase1;
  const std::size_t t = m;
  phase1.num_vars = m + 1;
  phase1.objective.assign(m + 1, 0.0);
  phase1.objective[t] = -1.0;
  for (const auto& b : problem.blocks) {
    AffineBlock shifted = b;
    shifted.terms.emplace_back(t, -1.0 * Matrix::identity(b.size()));
    phase1.blocks.push_back(std::move(shifted));
  }
  phase1.blocks.push_back(AffineBlock{"margin_cap", Matrix{{1.0}}, {{t, Matrix{{-1.0}}}}});
  add_box(phase1, m, settings.phase1_radius);

  std::vector<double> start(m + 1, 0.0);
  start[t] = std::min(at_origin.worst, 0.0) - 1.0;
  // Stop at the target margin, or once the margin is within a factor two of
  // the certified maximum.
  const auto stop = [&](const std::vector<double>& v, double lower_bound) {
    return v[t] >= kPhaseOneTarget || (v[t] > settings.infeasibility_threshold && 2.0 * v[t] >= -lower_bound);
  };
  // A dual bound proving the margin cannot exceed the threshold ends phase I.
  PathResult pr = path_follow(phase1, std::move(start), settings, stop, -settings.infeasibility_threshold);

  res.iterations = pr.iterations;
  res.margin = pr.y.empty() ? -kInf : pr.y[t];
  if (pr.status == SdpStatus::Optimal && -pr.lower_bound <= settings.infeasibility_threshold) res.margin = -pr.lower_bound;
  pr.y.resize(m);
  res.y = std::move(pr.y);
  if (pr.status == SdpStatus::Optimal || res.margin > settings.infeasibility_threshold) {
    res.status = SdpStatus::Optimal;
    res.feasible = res.margin > settings.infeasibility_threshold;
  } else {
    res.status = pr.status;
    res.feasible = false;
  }
  return res;
}

SdpSolution solve(const SdpProblem& problem, const SdpSettings& settings) {
  if (!(settings.tolerance > 0.0)) throw ContractError("SdpSettings: tolerance must be positive");
  if (problem.objective.size() != problem.num_vars) throw ShapeError("solve: objective size mismatch");

  SdpSolution sol;
  const FeasibilityResult start = find_strictly_feasible(problem, settings);
  sol.iterations = start.iterations;
  if (!start.feasible) {
    sol.y = start.y;
    if (start.status == SdpStatus::Optimal) {
      sol.status = SdpStatus::Infeasible;
      std::ostringstream os;
      os << "phase-I maximal margin " << start.margin << " <= " << settings.infeasibility_threshold;
      sol.diagnostic = os.str();
    } else {
      sol.status = start.status;
      sol.diagnostic = "phase I did not conclude";
    }
    return sol;
  }

  // The box keeps the barrier bounded below when the feasible set has a
  // recession direction along which the objective is constant.
  SdpProblem boxed = problem;
  add_box(boxed, problem.num_vars, settings.box_radius);
  PathResult pr = path_follow(boxed, start.y, settings, {});
  sol.iterations += pr.iterations;
  sol.gap = pr.gap;
  sol.status = pr.status;
  sol.diagnostic = std::move(pr.diagnostic);
  sol.y = std::move(pr.y);
  sol.objective_value = objective_at(problem, sol.y);
  double largest = 0.0;
  for (double v : sol.y) largest = std::max(largest, std::abs(v));
  if (sol.status == SdpStatus::Optimal && largest >= 0.5 * settings.box_radius) {
    if (sol.objective_value < -1e-2 * settings.box_radius) {
      sol.status = SdpStatus::Unbounded;
      sol.diagnostic = "objective keeps decreasing up to the variable box";
    } else {
      sol.diagnostic = "variable box active: infimum not attained, value is the boxed optimum";
    }
  }
  if (sol.status == SdpStatus::Optimal && !check_point(problem, sol.y).feasible) {
    sol.status = SdpStatus::NumericalFailure;
    sol.diagnostic = "final iterate failed the feasibility check";
  }
  return sol;
}

}  // namespace sofsyn
