#pragma once

// Polytopic uncertain plants, static output feedback gains, and the closed
// loop they form.
//
//   ẋ  = A x + B1 w + B2 u
//   z∞ = C1 x + D11 w + D12 u
//   z2 = C2 x + D21 w + D22 u
//   y  = C x,          u = K y
//
// The system matrices range over the convex hull of N vertices; the
// measurement map C is certain.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "sofsyn/linalg.hpp"

namespace sofsyn {

struct PlantDims {
  std::size_t n = 0;   // states
  std::size_t m = 0;   // control inputs
  std::size_t l = 0;   // disturbance inputs
  std::size_t p = 0;   // measured outputs
  std::size_t p1 = 0;  // H∞ performance outputs
  std::size_t p2 = 0;  // H2 performance outputs

  friend bool operator==(const PlantDims&, const PlantDims&) = default;
};

struct PlantVertex {
  Matrix A, B1, B2;
  Matrix C1, D11, D12;
  Matrix C2, D21, D22;

  friend bool operator==(const PlantVertex&, const PlantVertex&) = default;
};

struct PolytopicPlant {
  std::vector<PlantVertex> vertices;
  Matrix C;

  // Dimensions read off the first vertex and C. Meaningful only for a plant
  // that passes validate_plant.
  PlantDims dims() const;
  std::size_t vertex_count() const { return vertices.size(); }

  friend bool operator==(const PolytopicPlant&, const PolytopicPlant&) = default;
};

// Static output feedback gain K (m×p). As a search-space point it is the
// row-major flattening of K.
class GainMatrix {
 public:
  GainMatrix() = default;
  explicit GainMatrix(Matrix k) : k_(std::move(k)) {}
  static GainMatrix zeros(std::size_t inputs, std::size_t outputs) {
    return GainMatrix(Matrix(inputs, outputs));
  }
  static GainMatrix from_flat(std::size_t inputs, std::size_t outputs, std::span<const double> v);

  const Matrix& matrix() const { return k_; }
  std::size_t inputs() const { return k_.rows(); }
  std::size_t outputs() const { return k_.cols(); }
  std::size_t dimension() const { return k_.size(); }
  std::span<const double> flat() const { return k_.data(); }
  std::span<double> flat() { return k_.data(); }
  double operator[](std::size_t i) const { return k_.data()[i]; }
  double& operator[](std::size_t i) { return k_.data()[i]; }

  friend bool operator==(const GainMatrix&, const GainMatrix&) = default;

 private:
  Matrix k_;
};

// Convex weights α over the vertices: α_i ≥ 0 and Σα_i = 1 within 1e-12.
class PolytopeWeights {
 public:
  explicit PolytopeWeights(std::vector<double> alpha);
  // Unit weight on vertex k of an N-vertex polytope.
  static PolytopeWeights vertex(std::size_t count, std::size_t k);
  static PolytopeWeights uniform(std::size_t count);

  std::span<const double> alpha() const { return alpha_; }
  std::size_t size() const { return alpha_.size(); }

 private:
  std::vector<double> alpha_;
};

struct ClosedLoopVertex {
  Matrix Acl;   // A + B2 K C
  Matrix Bcl;   // B1
  Matrix Cinf;  // C1 + D12 K C
  Matrix Dinf;  // D11
  Matrix C2cl;  // C2 + D22 K C
  Matrix D2cl;  // D21
};

struct PlantDiagnostics {
  std::vector<std::string> warnings;
};

// Throws ValidationError naming the first inconsistent field. Nonzero D21
// yields a warning: the H2 norm of the certified channel needs zero w→z2
// feedthrough.
PlantDiagnostics validate_plant(const PolytopicPlant& plant);

// True iff C1, D11 or D12 is nonzero at some vertex.
bool hinf_channel_present(const PolytopicPlant& plant);

PlantVertex blend_vertex(const PolytopicPlant& plant, const PolytopeWeights& weights);

ClosedLoopVertex close_loop(const PlantVertex& v, const Matrix& C, const GainMatrix& K);

// True iff every eigenvalue of acl has real part < −margin.
bool is_stable(const Matrix& acl, double margin = 0.0);
// Largest real part over the spectrum.
double spectral_abscissa(const Matrix& a);

}  // namespace sofsyn
