#include "morphflow/basis.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numbers>
#include <random>
#include <tuple>

namespace morphflow {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kSqrt2 = std::numbers::sqrt2;

inline double sinq(double x, int j) { return kSqrt2 * std::sin((kPi * x) * j); }
inline double cosq(double x, int j) { return kSqrt2 * std::cos((kPi * x) * j); }

// Per-axis sine/cosine factors of one mode at one point.
struct ModeTrig {
  double s[3];
  double c[3];
};

inline void mode_velocity(int dim, const int* j, int comp, const ModeTrig& t, double* v) {
  if (dim == 2) {
    double g1 = (kPi * j[0]) * t.c[0] * t.s[1];
    double g2 = (kPi * j[1]) * t.s[0] * t.c[1];
    v[0] = g2;
    v[1] = -g1;
    return;
  }
  switch (comp) {
    case 1: {
      double g3 = (kPi * j[2]) * t.s[0] * t.s[1] * t.c[2];
      double g2 = (kPi * j[1]) * t.s[0] * t.c[1] * t.s[2];
      v[0] = 0.0;
      v[1] = g3;
      v[2] = -g2;
      break;
    }
    case 2: {
      double g3 = (kPi * j[2]) * t.s[0] * t.s[1] * t.c[2];
      double g1 = (kPi * j[0]) * t.c[0] * t.s[1] * t.s[2];
      v[0] = -g3;
      v[1] = 0.0;
      v[2] = g1;
      break;
    }
    default: {
      double g2 = (kPi * j[1]) * t.s[0] * t.c[1] * t.s[2];
      double g1 = (kPi * j[0]) * t.c[0] * t.s[1] * t.s[2];
      v[0] = g2;
      v[1] = -g1;
      v[2] = 0.0;
      break;
    }
  }
}

// Row-major D x D Jacobian of one basis field. Built from the shared mixed
// partials of phi, so opposite diagonal entries cancel exactly.
inline void mode_jacobian(int dim, const int* j, int comp, const ModeTrig& t, double* J) {
  double p1 = kPi * j[0], p2 = kPi * j[1];
  if (dim == 2) {
    double h11 = -(p1 * p1) * t.s[0] * t.s[1];
    double h22 = -(p2 * p2) * t.s[0] * t.s[1];
    double h12 = p1 * p2 * t.c[0] * t.c[1];
    J[0] = h12;
    J[1] = h22;
    J[2] = -h11;
    J[3] = -h12;
    return;
  }
  double p3 = kPi * j[2];
  double phi = t.s[0] * t.s[1] * t.s[2];
  double h11 = -(p1 * p1) * phi;
  double h22 = -(p2 * p2) * phi;
  double h33 = -(p3 * p3) * phi;
  double h12 = p1 * p2 * t.c[0] * t.c[1] * t.s[2];
  double h13 = p1 * p3 * t.c[0] * t.s[1] * t.c[2];
  double h23 = p2 * p3 * t.s[0] * t.c[1] * t.c[2];
  switch (comp) {
    case 1:
      J[0] = 0.0;  J[1] = 0.0;  J[2] = 0.0;
      J[3] = h13;  J[4] = h23;  J[5] = h33;
      J[6] = -h12; J[7] = -h22; J[8] = -h23;
      break;
    case 2:
      J[0] = -h13; J[1] = -h23; J[2] = -h33;
      J[3] = 0.0;  J[4] = 0.0;  J[5] = 0.0;
      J[6] = h11;  J[7] = h12;  J[8] = h13;
      break;
    default:
      J[0] = h12;  J[1] = h22;  J[2] = h23;
      J[3] = -h11; J[4] = -h12; J[5] = -h13;
      J[6] = 0.0;  J[7] = 0.0;  J[8] = 0.0;
      break;
  }
}

inline void mode_trig_direct(const ModeIndex& mode, const Vector& x, int dim, ModeTrig& t) {
  for (int d = 0; d < dim; ++d) {
    t.s[d] = sinq(x[d], mode.j[d]);
    t.c[d] = cosq(x[d], mode.j[d]);
  }
}

void check_point(const Vector& x, int dim) {
  if (x.size() != dim) throw Error("point dimension does not match mode");
}

}  // namespace

DeformationBasis enumerate_basis(int dimension, int K, double exponent) {
  if (dimension != 2 && dimension != 3) throw Error("basis dimension must be 2 or 3");
  if (K < 1) throw Error("basis size must be at least 1");
  if (exponent < dimension / 2.0 - 1e-12)
    std::cerr << "warning: spectral exponent " << exponent << " below " << dimension / 2.0
              << " yields a rough field prior\n";

  std::vector<ModeIndex> modes;
  for (int bound = dimension;; bound *= 2) {
    modes.clear();
    if (dimension == 2) {
      for (int j1 = 1; j1 * j1 + 1 <= bound; ++j1)
        for (int j2 = 1; j1 * j1 + j2 * j2 <= bound; ++j2)
          modes.push_back({{j1, j2, 0}, 1});
    } else {
      for (int j1 = 1; j1 * j1 + 2 <= bound; ++j1)
        for (int j2 = 1; j1 * j1 + j2 * j2 + 1 <= bound; ++j2)
          for (int j3 = 1; j1 * j1 + j2 * j2 + j3 * j3 <= bound; ++j3)
            for (int c = 1; c <= 3; ++c) modes.push_back({{j1, j2, j3}, c});
    }
    if (static_cast<int>(modes.size()) >= K) break;
  }

  std::sort(modes.begin(), modes.end(), [dimension](const ModeIndex& a, const ModeIndex& b) {
    return std::make_tuple(a.freq_sq(dimension), a.j[0], a.j[1], a.j[2], a.component) <
           std::make_tuple(b.freq_sq(dimension), b.j[0], b.j[1], b.j[2], b.component);
  });
  modes.resize(K);

  DeformationBasis basis;
  basis.dimension = dimension;
  basis.exponent = exponent;
  basis.modes = std::move(modes);
  basis.laplace_eigenvalues.resize(K);
  basis.kl_weights.resize(K);
  for (int k = 0; k < K; ++k) {
    double s = kPi * kPi * basis.modes[k].freq_sq(dimension);
    basis.laplace_eigenvalues[k] = -s;
    basis.kl_weights[k] = std::pow(s, -exponent);
  }
  return basis;
}

DeformationBasis enumerate_basis(int dimension, int K) {
  return enumerate_basis(dimension, K, dimension / 2.0);
}

double eigenfunction(const ModeIndex& mode, const Vector& x) {
  double phi = 1.0;
  for (int d = 0; d < x.size(); ++d) phi *= sinq(x[d], mode.j[d]);
  return phi;
}

Vector basis_field(const ModeIndex& mode, const Vector& x) {
  const int dim = static_cast<int>(x.size());
  ModeTrig t;
  mode_trig_direct(mode, x, dim, t);
  Vector v(dim);
  mode_velocity(dim, mode.j.data(), mode.component, t, v.data());
  return v;
}

Matrix basis_field_jacobian(const ModeIndex& mode, const Vector& x) {
  const int dim = static_cast<int>(x.size());
  ModeTrig t;
  mode_trig_direct(mode, x, dim, t);
  double buf[9];
  mode_jacobian(dim, mode.j.data(), mode.component, t, buf);
  Matrix J(dim, dim);
  for (int r = 0; r < dim; ++r)
    for (int c = 0; c < dim; ++c) J(r, c) = buf[r * dim + c];
  return J;
}

Vector evaluate_field(const DeformationBasis& basis, const Vector& a, const Vector& x) {
  FieldEvaluator eval(basis);
  return eval.velocity(x, a);
}

Vector sample_prior(const DeformationBasis& basis, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector a(basis.size());
  for (int k = 0; k < basis.size(); ++k) a[k] = std::sqrt(basis.kl_weights[k]) * normal(rng);
  return a;
}

double dirichlet_energy(const DeformationBasis& basis, const Vector& a) {
  if (a.size() != basis.size()) throw Error("coefficient length does not match basis");
  const double pi4 = kPi * kPi * kPi * kPi;
  double total = 0.0;
  for (int k = 0; k < basis.size(); ++k) {
    const ModeIndex& m = basis.modes[k];
    double s = m.freq_sq(basis.dimension);
    double jc = basis.dimension == 3 ? double(m.j[m.component - 1] * m.j[m.component - 1]) : 0.0;
    total += a[k] * a[k] * pi4 * s * (s - jc);
  }
  return total;
}

FieldEvaluator::FieldEvaluator(const DeformationBasis& basis)
    : basis_(&basis), dim_(basis.dimension), k_(basis.size()) {
  comp_.resize(k_);
  for (int d = 0; d < dim_; ++d) j_[d].resize(k_);
  for (int k = 0; k < k_; ++k) {
    const ModeIndex& m = basis.modes[k];
    for (int d = 0; d < dim_; ++d) {
      if (m.j[d] < 1) throw Error("mode frequency must be positive");
      jmax_ = std::max(jmax_, m.j[d]);
      j_[d][k] = m.j[d];
    }
    comp_[k] = m.component;
  }
  if (jmax_ > 128) throw Error("mode frequency exceeds evaluator capacity (128)");
}

void FieldEvaluator::fill_tables(const Vector& x, Tables& t) const {
  check_point(x, dim_);
  for (int d = 0; d < dim_; ++d)
    for (int j = 1; j <= jmax_; ++j) {
      t.s[d][j] = sinq(x[d], j);
      t.c[d][j] = cosq(x[d], j);
    }
}

Vector FieldEvaluator::velocity(const Vector& x, const Vector& a) const {
  if (a.size() != k_) throw Error("coefficient length does not match basis");
  Tables t;
  fill_tables(x, t);
  double acc[3] = {0.0, 0.0, 0.0};
  int jm[3] = {0, 0, 0};
  ModeTrig mt;
  double v[3];
  for (int k = 0; k < k_; ++k) {
    for (int d = 0; d < dim_; ++d) {
      jm[d] = j_[d][k];
      mt.s[d] = t.s[d][jm[d]];
      mt.c[d] = t.c[d][jm[d]];
    }
    mode_velocity(dim_, jm, comp_[k], mt, v);
    for (int d = 0; d < dim_; ++d) acc[d] += a[k] * v[d];
  }
  Vector out(dim_);
  for (int d = 0; d < dim_; ++d) out[d] = acc[d];
  return out;
}

void FieldEvaluator::basis_matrix(const Vector& x, Matrix& V) const {
  Tables t;
  fill_tables(x, t);
  V.resize(dim_, k_);
  int jm[3];
  ModeTrig mt;
  double v[3];
  for (int k = 0; k < k_; ++k) {
    for (int d = 0; d < dim_; ++d) {
      jm[d] = j_[d][k];
      mt.s[d] = t.s[d][jm[d]];
      mt.c[d] = t.c[d][jm[d]];
    }
    mode_velocity(dim_, jm, comp_[k], mt, v);
    for (int d = 0; d < dim_; ++d) V(d, k) = v[d];
  }
}

void FieldEvaluator::field_jacobian(const Vector& x, const Vector& a, Matrix& J) const {
  if (a.size() != k_) throw Error("coefficient length does not match basis");
  Tables t;
  fill_tables(x, t);
  double acc[9] = {0, 0, 0, 0, 0, 0, 0, 0, 0};
  int jm[3];
  ModeTrig mt;
  double buf[9];
  for (int k = 0; k < k_; ++k) {
    for (int d = 0; d < dim_; ++d) {
      jm[d] = j_[d][k];
      mt.s[d] = t.s[d][jm[d]];
      mt.c[d] = t.c[d][jm[d]];
    }
    mode_jacobian(dim_, jm, comp_[k], mt, buf);
    for (int i = 0; i < dim_ * dim_; ++i) acc[i] += a[k] * buf[i];
  }
  J.resize(dim_, dim_);
  for (int r = 0; r < dim_; ++r)
    for (int c = 0; c < dim_; ++c) J(r, c) = acc[r * dim_ + c];
}

void FieldEvaluator::basis_and_jacobian(const Vector& x, const Vector& a, Matrix& V,
                                        Matrix& J) const {
  if (a.size() != k_) throw Error("coefficient length does not match basis");
  Tables t;
  fill_tables(x, t);
  V.resize(dim_, k_);
  double acc[9] = {0, 0, 0, 0, 0, 0, 0, 0, 0};
  int jm[3];
  ModeTrig mt;
  double v[3];
  double buf[9];
  for (int k = 0; k < k_; ++k) {
    for (int d = 0; d < dim_; ++d) {
      jm[d] = j_[d][k];
      mt.s[d] = t.s[d][jm[d]];
      mt.c[d] = t.c[d][jm[d]];
    }
    mode_velocity(dim_, jm, comp_[k], mt, v);
    for (int d = 0; d < dim_; ++d) V(d, k) = v[d];
    mode_jacobian(dim_, jm, comp_[k], mt, buf);
    for (int i = 0; i < dim_ * dim_; ++i) acc[i] += a[k] * buf[i];
  }
  J.resize(dim_, dim_);
  for (int r = 0; r < dim_; ++r)
    for (int c = 0; c < dim_; ++c) J(r, c) = acc[r * dim_ + c];
}

}  // namespace morphflow
