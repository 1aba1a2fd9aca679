#include "sofsyn/plant.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "sofsyn/errors.hpp"

namespace sofsyn {
namespace {

void expect_shape(const Matrix& m, std::size_t rows, std::size_t cols, const std::string& field) {
  if (m.rows() != rows || m.cols() != cols) {
    throw ValidationError(field, "expected " + std::to_string(rows) + "x" + std::to_string(cols) +
                                     ", got " + std::to_string(m.rows()) + "x" +
                                     std::to_string(m.cols()));
  }
}

template <typename Vertex, typename Fn>
void for_each_field(Vertex& v, Fn&& fn) {
  fn(v.A);
  fn(v.B1);
  fn(v.B2);
  fn(v.C1);
  fn(v.D11);
  fn(v.D12);
  fn(v.C2);
  fn(v.D21);
  fn(v.D22);
}

}  // namespace

PlantDims PolytopicPlant::dims() const {
  if (vertices.empty()) return {};
  const PlantVertex& v = vertices.front();
  return PlantDims{v.A.rows(), v.B2.cols(), v.B1.cols(), C.rows(), v.C1.rows(), v.C2.rows()};
}

GainMatrix GainMatrix::from_flat(std::size_t inputs, std::size_t outputs, std::span<const double> v) {
  if (v.size() != inputs * outputs) {
    throw ShapeError("GainMatrix: " + std::to_string(v.size()) + " entries for " +
                     std::to_string(inputs) + "x" + std::to_string(outputs));
  }
  return GainMatrix(Matrix(inputs, outputs, std::vector<double>(v.begin(), v.end())));
}

PolytopeWeights::PolytopeWeights(std::vector<double> alpha) : alpha_(std::move(alpha)) {
  if (alpha_.empty()) throw ContractError("PolytopeWeights: empty");
  for (double a : alpha_) {
    if (!(a >= 0.0) || !std::isfinite(a)) throw ContractError("PolytopeWeights: negative or non-finite weight");
  }
  const double sum = std::accumulate(alpha_.begin(), alpha_.end(), 0.0);
  if (std::abs(sum - 1.0) > 1e-12) throw ContractError("PolytopeWeights: weights do not sum to 1");
}

PolytopeWeights PolytopeWeights::vertex(std::size_t count, std::size_t k) {
  std::vector<double> a(count, 0.0);
  a.at(k) = 1.0;
  return PolytopeWeights(std::move(a));
}

PolytopeWeights PolytopeWeights::uniform(std::size_t count) {
  // Renormalize so the sum is 1 to the last bit regardless of count.
  std::vector<double> a(count, 1.0 / static_cast<double>(count));
  const double sum = std::accumulate(a.begin(), a.end(), 0.0);
  a.back() += 1.0 - sum;
  return PolytopeWeights(std::move(a));
}

PlantDiagnostics validate_plant(const PolytopicPlant& plant) {
  if (plant.vertices.empty()) throw ValidationError("vertices", "at least one vertex is required");
  const PlantDims d = plant.dims();
  if (d.n == 0) throw ValidationError("vertex[0].A", "state dimension must be positive");

  PlantDiagnostics diag;
  for (std::size_t i = 0; i < plant.vertices.size(); ++i) {
    const PlantVertex& v = plant.vertices[i];
    const std::string prefix = "vertex[" + std::to_string(i) + "].";
    expect_shape(v.A, d.n, d.n, prefix + "A");
    expect_shape(v.B1, d.n, d.l, prefix + "B1");
    expect_shape(v.B2, d.n, d.m, prefix + "B2");
    expect_shape(v.C1, d.p1, d.n, prefix + "C1");
    expect_shape(v.D11, d.p1, d.l, prefix + "D11");
    expect_shape(v.D12, d.p1, d.m, prefix + "D12");
    expect_shape(v.C2, d.p2, d.n, prefix + "C2");
    expect_shape(v.D21, d.p2, d.l, prefix + "D21");
    expect_shape(v.D22, d.p2, d.m, prefix + "D22");
    bool finite = true;
    for_each_field(v, [&](const Matrix& m) { finite = finite && m.all_finite(); });
    if (!finite) throw ValidationError(prefix + "*", "non-finite entry");
    if (!v.D21.is_zero()) {
      diag.warnings.push_back(prefix + "D21 is nonzero; the H2 bound ignores w->z2 feedthrough");
    }
  }
  expect_shape(plant.C, d.p, d.n, "C");
  return diag;
}

bool hinf_channel_present(const PolytopicPlant& plant) {
  return std::any_of(plant.vertices.begin(), plant.vertices.end(), [](const PlantVertex& v) {
    return !v.C1.is_zero() || !v.D11.is_zero() || !v.D12.is_zero();
  });
}

PlantVertex blend_vertex(const PolytopicPlant& plant, const PolytopeWeights& weights) {
  if (weights.size() != plant.vertices.size()) {
    throw ShapeError("blend_vertex: " + std::to_string(weights.size()) + " weights for " +
                     std::to_string(plant.vertices.size()) + " vertices");
  }
  PlantVertex out = plant.vertices.front();
  for_each_field(out, [](Matrix& m) { m *= 0.0; });
  for (std::size_t i = 0; i < plant.vertices.size(); ++i) {
    const double a = weights.alpha()[i];
    if (a == 0.0) continue;
    const PlantVertex& v = plant.vertices[i];
    out.A += a * v.A;
    out.B1 += a * v.B1;
    out.B2 += a * v.B2;
    out.C1 += a * v.C1;
    out.D11 += a * v.D11;
    out.D12 += a * v.D12;
    out.C2 += a * v.C2;
    out.D21 += a * v.D21;
    out.D22 += a * v.D22;
  }
  return out;
}

ClosedLoopVertex close_loop(const PlantVertex& v, const Matrix& C, const GainMatrix& K) {
  if (K.inputs() != v.B2.cols() || K.outputs() != C.rows()) {
    throw ShapeError("close_loop: gain is " + std::to_string(K.inputs()) + "x" +
                     std::to_string(K.outputs()) + ", plant expects " + std::to_string(v.B2.cols()) +
                     "x" + std::to_string(C.rows()));
  }
  const Matrix kc = K.matrix() * C;
  return ClosedLoopVertex{
      v.A + v.B2 * kc, v.B1, v.C1 + v.D12 * kc, v.D11, v.C2 + v.D22 * kc, v.D21,
  };
}

double spectral_abscissa(const Matrix& a) {
  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& lambda : general_eigenvalues(a)) worst = std::max(worst, lambda.real());
  return worst;
}

bool is_stable(const Matrix& acl, double margin) { return spectral_abscissa(acl) < -margin; }

}  // namespace sofsyn
