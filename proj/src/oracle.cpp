#include "sofsyn/oracle.hpp"

#include <algorithm>
#include <cmath>

#include "sofsyn/errors.hpp"

namespace sofsyn {
namespace {

void require_hurwitz(const Matrix& a, const char* who) {
  if (!is_stable(a)) throw UndefinedNormError(std::string(who) + ": closed loop is not Hurwitz");
}

double sigma_max(const Matrix& m) {
  if (m.empty()) return 0.0;
  const Matrix gram = m.rows() <= m.cols() ? symmetrize(m * m.transpose())
                                           : symmetrize(m.transpose() * m);
  return std::sqrt(std::max(0.0, sym_eig(gram).eigenvalues.back()));
}

// Largest singular value of re + j·im via the real embedding
// [[Re, −Im], [Im, Re]], whose singular values are those of the complex
// matrix, each doubled in multiplicity.
double complex_sigma_max(const Matrix& re, const Matrix& im) {
  return sigma_max(vcat(hcat(re, -im), hcat(im, re)));
}

// Hamiltonian of the bounded-real test at level γ > σ_max(D).
Matrix hamiltonian(const ClosedLoopVertex& cl, double gamma) {
  const Matrix& a = cl.Acl;
  const Matrix& b = cl.Bcl;
  const Matrix& c = cl.Cinf;
  const Matrix& d = cl.Dinf;
  const std::size_t n = a.rows();
  const Matrix r = gamma * gamma * Matrix::identity(d.cols()) - d.transpose() * d;
  const Matrix r_inv = solve_linear(r, Matrix::identity(r.rows()));
  const Matrix a_hat = a + b * r_inv * d.transpose() * c;
  const Matrix top_right = b * r_inv * b.transpose();
  const Matrix s = Matrix::identity(d.rows()) + d * r_inv * d.transpose();
  const Matrix bottom_left = -(c.transpose() * s * c);

  Matrix h(2 * n, 2 * n);
  h.set_block(0, 0, a_hat);
  h.set_block(0, n, top_right);
  h.set_block(n, 0, bottom_left);
  h.set_block(n, n, -a_hat.transpose());
  return h;
}

bool has_imaginary_axis_eigenvalue(const ClosedLoopVertex& cl, double gamma) {
  const Matrix h = hamiltonian(cl, gamma);
  const double axis_tol = 1e-8 * (1.0 + h.frobenius_norm());
  const auto ev = general_eigenvalues(h);
  return std::any_of(ev.begin(), ev.end(),
                     [&](const auto& lambda) { return std::abs(lambda.real()) <= axis_tol; });
}

}  // namespace

Matrix lyapunov_solve(const Matrix& a, const Matrix& q) {
  if (!a.is_square() || q.rows() != a.rows() || q.cols() != a.cols()) {
    throw ShapeError("lyapunov_solve: incompatible shapes");
  }
  if (!is_stable(a)) throw ContractError("lyapunov_solve: a is not Hurwitz");
  const std::size_t n = a.rows();
  const Matrix at = a.transpose();
  const Matrix id = Matrix::identity(n);
  // Column-stacked vec: vec(aᵀX + Xa) = (I ⊗ aᵀ + aᵀ ⊗ I) vec(X).
  const Matrix op = kron(id, at) + kron(at, id);
  Matrix rhs(n * n, 1);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < n; ++i) rhs(j * n + i, 0) = -q(i, j);
  const Matrix v = solve_linear(op, rhs);
  Matrix x(n, n);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < n; ++i) x(i, j) = v(j * n + i, 0);
  return symmetrize(x);
}

double h2_norm_squared(const ClosedLoopVertex& cl) {
  if (!cl.D2cl.is_zero()) throw UndefinedNormError("h2_norm_squared: nonzero w->z2 feedthrough");
  require_hurwitz(cl.Acl, "h2_norm_squared");
  const Matrix gram = lyapunov_solve(cl.Acl, symmetrize(cl.C2cl.transpose() * cl.C2cl));
  return (cl.Bcl.transpose() * gram * cl.Bcl).trace();
}

double hinf_gain_at(const ClosedLoopVertex& cl, double omega) {
  const Matrix& a = cl.Acl;
  const std::size_t n = a.rows();
  // (jωI − A)(Xr + jXi) = B  ⇔  [[−A, −ωI], [ωI, −A]] [Xr; Xi] = [B; 0].
  Matrix sys(2 * n, 2 * n);
  sys.set_block(0, 0, -a);
  sys.set_block(0, n, -omega * Matrix::identity(n));
  sys.set_block(n, 0, omega * Matrix::identity(n));
  sys.set_block(n, n, -a);
  const Matrix rhs = vcat(cl.Bcl, Matrix(n, cl.Bcl.cols()));
  const Matrix x = solve_linear(sys, rhs);
  const Matrix re = cl.Cinf * x.block(0, 0, n, cl.Bcl.cols()) + cl.Dinf;
  const Matrix im = cl.Cinf * x.block(n, 0, n, cl.Bcl.cols());
  return complex_sigma_max(re, im);
}

double hinf_norm(const ClosedLoopVertex& cl, double tol) {
  require_hurwitz(cl.Acl, "hinf_norm");
  if (cl.Cinf.is_zero() && cl.Dinf.is_zero()) return 0.0;
  if (cl.Bcl.is_zero() && cl.Dinf.is_zero()) return 0.0;

  // Lower bound from D, the DC gain, and the gain at each pole's frequency.
  double lower = std::max(sigma_max(cl.Dinf), hinf_gain_at(cl, 0.0));
  for (const auto& lambda : general_eigenvalues(cl.Acl)) {
    if (lambda.imag() > 0.0) lower = std::max(lower, hinf_gain_at(cl, lambda.imag()));
  }

  double upper = std::max(2.0 * lower, 1e-12);
  for (int k = 0; has_imaginary_axis_eigenvalue(cl, upper); ++k) {
    if (k == 200) throw NumericError("hinf_norm: no upper bound found");
    lower = upper;
    upper *= 2.0;
  }
  while (upper - lower > tol * upper) {
    const double mid = 0.5 * (lower + upper);
    if (has_imaginary_axis_eigenvalue(cl, mid)) {
      lower = mid;
    } else {
      upper = mid;
    }
  }
  return 0.5 * (lower + upper);
}

std::vector<NormReport> certify(const PolytopicPlant& plant, const GainMatrix& K,
                                const std::vector<PolytopeWeights>& weights_grid) {
  std::vector<NormReport> out;
  out.reserve(weights_grid.size());
  for (const auto& w : weights_grid) {
    NormReport r;
    r.weights.assign(w.alpha().begin(), w.alpha().end());
    const ClosedLoopVertex cl = close_loop(blend_vertex(plant, w), plant.C, K);
    r.spectral_abscissa = spectral_abscissa(cl.Acl);
    r.stable = r.spectral_abscissa < 0.0;
    if (r.stable) {
      if (cl.D2cl.is_zero()) r.h2_squared = h2_norm_squared(cl);
      r.hinf = hinf_norm(cl);
    }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace sofsyn
