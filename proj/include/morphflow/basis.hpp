#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "morphflow/types.hpp"

namespace morphflow {

// Frequency multi-index of a Dirichlet sine eigenfunction plus the curl
// component selecting one of the divergence-free patterns built from it.
// j[d] is used for d < dimension; unused entries stay 0. component is 1..3
// for 3D and always 1 in 2D.
struct ModeIndex {
  std::array<int, 3> j{0, 0, 0};
  int component = 1;

  int freq_sq(int dim) const {
    int s = 0;
    for (int d = 0; d < dim; ++d) s += j[d] * j[d];
    return s;
  }
};

// Truncated divergence-free basis: modes sorted by ascending -laplace
// eigenvalue, ties broken lexicographically on j then component.
struct DeformationBasis {
  int dimension = 3;
  double exponent = 1.5;
  std::vector<ModeIndex> modes;
  Vector laplace_eigenvalues;  // negative, lambda_k of the Laplacian
  Vector kl_weights;           // lambda_k = (-lambda_k^Laplace)^(-exponent)

  int size() const { return static_cast<int>(modes.size()); }
};

// Enumerates the first K modes under the documented ordering. The default
// exponent is D/2; smaller values are accepted with a warning on stderr
// because the induced prior loses smoothness.
DeformationBasis enumerate_basis(int dimension, int K, double exponent);
DeformationBasis enumerate_basis(int dimension, int K);

// phi(x) = prod_d sqrt(2) sin(pi j_d x_d), unit L2 norm on [0,1]^D.
double eigenfunction(const ModeIndex& mode, const Vector& x);

// One divergence-free basis field v_k(x). 3D patterns per component:
// 1:(0, d3, -d2), 2:(-d3, 0, d1), 3:(d2, -d1, 0) applied to phi; 2D uses
// (d2, -d1).
Vector basis_field(const ModeIndex& mode, const Vector& x);

// Analytic spatial Jacobian of v_k; its trace cancels exactly.
Matrix basis_field_jacobian(const ModeIndex& mode, const Vector& x);

// v(x) = sum_k a_k v_k(x).
Vector evaluate_field(const DeformationBasis& basis, const Vector& a, const Vector& x);

// a_k = sqrt(lambda_k) xi_k with xi_k standard normal; deterministic per seed.
Vector sample_prior(const DeformationBasis& basis, std::uint64_t seed);

// Closed-form squared L2 norm of the field gradient; diagnostic only.
double dirichlet_energy(const DeformationBasis& basis, const Vector& a);

// Batched evaluation of the field, its spatial Jacobian, and the stacked
// basis matrix V(x) = [v_1(x) ... v_K(x)] using per-axis trig tables.
class FieldEvaluator {
 public:
  explicit FieldEvaluator(const DeformationBasis& basis);

  int dim() const { return dim_; }
  int modes() const { return k_; }

  // v(x); a must have length K.
  Vector velocity(const Vector& x, const Vector& a) const;
  // Fills V (D x K) with the basis fields at x.
  void basis_matrix(const Vector& x, Matrix& V) const;
  // Fills J (D x D) with sum_k a_k D_x v_k(x).
  void field_jacobian(const Vector& x, const Vector& a, Matrix& J) const;
  // Fused fill of V and the coefficient-weighted Jacobian in one table pass.
  void basis_and_jacobian(const Vector& x, const Vector& a, Matrix& V, Matrix& J) const;

 private:
  struct Tables {
    // s[d][j], c[d][j]: sqrt(2) sin / cos of pi j x_d, j = 1..jmax.
    double s[3][129];
    double c[3][129];
  };
  void fill_tables(const Vector& x, Tables& t) const;

  const DeformationBasis* basis_;
  int dim_ = 3;
  int k_ = 0;
  int jmax_ = 0;
  std::array<std::vector<int>, 3> j_;
  std::vector<int> comp_;
};

}  // namespace morphflow
