#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <tuple>
#include <vector>

#include "morphflow/basis.hpp"
#include "oracles.hpp"

using namespace morphflow;

namespace {

constexpr double kPi = std::numbers::pi;

Vector vec2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

Vector vec3(double a, double b, double c) {
  Vector v(3);
  v << a, b, c;
  return v;
}

// Independent enumeration: all modes with j_d <= cap, sorted by the
// documented order, truncated to K.
std::vector<ModeIndex> brute_force_modes(int dim, int K, int cap) {
  std::vector<ModeIndex> all;
  if (dim == 2) {
    for (int j1 = 1; j1 <= cap; ++j1)
      for (int j2 = 1; j2 <= cap; ++j2) all.push_back({{j1, j2, 0}, 1});
  } else {
    for (int j1 = 1; j1 <= cap; ++j1)
      for (int j2 = 1; j2 <= cap; ++j2)
        for (int j3 = 1; j3 <= cap; ++j3)
          for (int c = 1; c <= 3; ++c) all.push_back({{j1, j2, j3}, c});
  }
  std::sort(all.begin(), all.end(), [dim](const ModeIndex& a, const ModeIndex& b) {
    return std::make_tuple(a.freq_sq(dim), a.j[0], a.j[1], a.j[2], a.component) <
           std::make_tuple(b.freq_sq(dim), b.j[0], b.j[1], b.j[2], b.component);
  });
  REQUIRE(static_cast<int>(all.size()) >= K);
  // The cap must not clip the K-th shell.
  REQUIRE(all[K - 1].freq_sq(dim) < cap * cap + dim - 1);
  all.resize(K);
  return all;
}

bool same_mode(const ModeIndex& a, const ModeIndex& b) {
  return a.j == b.j && a.component == b.component;
}

}  // namespace

TEST_CASE("smallest 3d basis holds the three curl patterns of j=(1,1,1)") {
  DeformationBasis basis = enumerate_basis(3, 3);
  REQUIRE(basis.size() == 3);
  CHECK(basis.dimension == 3);
  CHECK(basis.exponent == 1.5);
  for (int k = 0; k < 3; ++k) {
    CHECK(basis.modes[k].j == std::array<int, 3>{1, 1, 1});
    CHECK(basis.modes[k].component == k + 1);
    CHECK(basis.laplace_eigenvalues[k] == -(kPi * kPi * 3));
    CHECK(basis.kl_weights[k] == std::pow(kPi * kPi * 3, -1.5));
  }
  CHECK(basis.laplace_eigenvalues[0] == doctest::Approx(-29.6088).epsilon(1e-5));
  CHECK(basis.kl_weights[0] == doctest::Approx(6.206e-3).epsilon(1e-3));
}

TEST_CASE("smallest 2d basis is j=(1,1) with weight (2 pi^2)^-1") {
  DeformationBasis basis = enumerate_basis(2, 1);
  REQUIRE(basis.size() == 1);
  CHECK(basis.exponent == 1.0);
  CHECK(basis.modes[0].j[0] == 1);
  CHECK(basis.modes[0].j[1] == 1);
  CHECK(basis.modes[0].component == 1);
  CHECK(basis.laplace_eigenvalues[0] == -(kPi * kPi * 2));
  CHECK(basis.kl_weights[0] == doctest::Approx(5.066e-2).epsilon(1e-3));
}

TEST_CASE("first twelve 3d modes fill the 3 pi^2 and 6 pi^2 shells in order") {
  DeformationBasis basis = enumerate_basis(3, 12);
  REQUIRE(basis.size() == 12);
  for (int k = 0; k < 3; ++k) {
    CHECK(basis.modes[k].j == std::array<int, 3>{1, 1, 1});
    CHECK(basis.laplace_eigenvalues[k] == -(kPi * kPi * 3));
  }
  const std::array<std::array<int, 3>, 3> second_shell = {{{1, 1, 2}, {1, 2, 1}, {2, 1, 1}}};
  for (int g = 0; g < 3; ++g)
    for (int c = 0; c < 3; ++c) {
      const ModeIndex& m = basis.modes[3 + 3 * g + c];
      CHECK(m.j == second_shell[g]);
      CHECK(m.component == c + 1);
      CHECK(basis.laplace_eigenvalues[3 + 3 * g + c] == -(kPi * kPi * 6));
    }
}

TEST_CASE("enumeration matches a brute-force sort for larger bases") {
  for (int dim : {2, 3}) {
    const int K = dim == 2 ? 60 : 200;
    DeformationBasis basis = enumerate_basis(dim, K);
    std::vector<ModeIndex> oracle = brute_force_modes(dim, K, 16);
    REQUIRE(basis.size() == K);
    for (int k = 0; k < K; ++k) {
      CAPTURE(dim);
      CAPTURE(k);
      CHECK(same_mode(basis.modes[k], oracle[k]));
      double s = kPi * kPi * oracle[k].freq_sq(dim);
      CHECK(basis.laplace_eigenvalues[k] == -s);
      CHECK(basis.kl_weights[k] == std::pow(s, -basis.exponent));
    }
  }
}

TEST_CASE("kl weights are positive and non-increasing") {
  for (int dim : {2, 3}) {
    DeformationBasis basis = enumerate_basis(dim, 120);
    for (int k = 0; k < basis.size(); ++k) {
      CHECK(basis.kl_weights[k] > 0.0);
      CHECK(basis.laplace_eigenvalues[k] < 0.0);
      if (k > 0) CHECK(basis.kl_weights[k] <= basis.kl_weights[k - 1]);
    }
  }
}

TEST_CASE("custom exponent feeds the weight formula directly") {
  DeformationBasis basis = enumerate_basis(3, 5, 2.0);
  CHECK(basis.exponent == 2.0);
  for (int k = 0; k < basis.size(); ++k)
    CHECK(basis.kl_weights[k] == std::pow(-basis.laplace_eigenvalues[k], -2.0));
  // Below-default exponents are accepted (with a stderr warning), not rejected.
  DeformationBasis rough = enumerate_basis(2, 3, 0.4);
  CHECK(rough.exponent == 0.4);
}

TEST_CASE("enumeration rejects bad dimensions and sizes") {
  CHECK_THROWS_AS(enumerate_basis(1, 3), Error);
  CHECK_THROWS_AS(enumerate_basis(4, 3), Error);
  CHECK_THROWS_AS(enumerate_basis(3, 0), Error);
  CHECK_THROWS_AS(enumerate_basis(3, -2), Error);
}

TEST_CASE("eigenfunction value at the cube center") {
  ModeIndex mode{{1, 1, 1}, 1};
  double phi = eigenfunction(mode, vec3(0.5, 0.5, 0.5));
  CHECK(phi == doctest::Approx(2.0 * std::sqrt(2.0)).epsilon(1e-12));
  CHECK(phi == doctest::Approx(2.8284).epsilon(1e-4));
}

TEST_CASE("eigenfunctions vanish on the boundary and have unit l2 norm") {
  ModeIndex mode{{2, 1, 3}, 1};
  CHECK(eigenfunction(mode, vec3(0.0, 0.3, 0.7)) == 0.0);
  CHECK(eigenfunction(mode, vec3(0.4, 1.0, 0.7)) == doctest::Approx(0.0).epsilon(1e-12));
  oracles::Quadrature1D q = oracles::gauss_legendre(24);
  double norm2 = oracles::tensor_quadrature(3, q, [&](const Vector& x) {
    double phi = eigenfunction(mode, x);
    return phi * phi;
  });
  CHECK(norm2 == doctest::Approx(1.0).epsilon(1e-10));
  ModeIndex flat{{1, 2, 0}, 1};
  double norm2d = oracles::tensor_quadrature(2, q, [&](const Vector& x) {
    double phi = eigenfunction(flat, x);
    return phi * phi;
  });
  CHECK(norm2d == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("distinct eigenfunctions are l2 orthogonal") {
  std::vector<ModeIndex> modes = {{{1, 1, 1}, 1}, {{1, 1, 2}, 1}, {{2, 1, 1}, 1},
                                  {{1, 2, 2}, 1}, {{2, 2, 2}, 1}, {{1, 1, 3}, 1}};
  oracles::Quadrature1D q = oracles::gauss_legendre(20);
  for (size_t a = 0; a < modes.size(); ++a)
    for (size_t b = 0; b < modes.size(); ++b) {
      double g = oracles::tensor_quadrature(3, q, [&](const Vector& x) {
        return eigenfunction(modes[a], x) * eigenfunction(modes[b], x);
      });
      CHECK(g == doctest::Approx(a == b ? 1.0 : 0.0).epsilon(1e-3));
      CHECK(std::abs(g - (a == b ? 1.0 : 0.0)) < 1e-3);
    }
}

TEST_CASE("2d basis field value at a pinned point") {
  ModeIndex mode{{1, 1, 0}, 1};
  Vector v = basis_field(mode, vec2(0.5, 0.25));
  CHECK(v[0] == doctest::Approx(4.4429).epsilon(1e-4));
  CHECK(v[0] == doctest::Approx(kPi * std::sqrt(2.0)).epsilon(1e-12));
  CHECK(v[1] == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("2d basis jacobian entry at a pinned point") {
  ModeIndex mode{{1, 1, 0}, 1};
  Matrix j = basis_field_jacobian(mode, vec2(0.25, 0.25));
  CHECK(j(0, 0) == doctest::Approx(kPi * kPi).epsilon(1e-12));
}

TEST_CASE("basis field jacobian matches central differences") {
  std::vector<ModeIndex> modes3 = {{{1, 1, 1}, 1}, {{1, 1, 1}, 2}, {{1, 1, 1}, 3},
                                   {{2, 3, 1}, 2}, {{1, 2, 2}, 3}};
  std::vector<Vector> points3 = {vec3(0.3, 0.6, 0.2), vec3(0.55, 0.15, 0.85)};
  const double h = 1e-6;
  for (const ModeIndex& mode : modes3)
    for (const Vector& x : points3) {
      Matrix analytic = basis_field_jacobian(mode, x);
      Matrix fd = oracles::jacobian_fd([&](const Vector& p) { return basis_field(mode, p); }, x, h);
      CHECK((analytic - fd).cwiseAbs().maxCoeff() < 1e-6);
    }
  ModeIndex flat{{2, 1, 0}, 1};
  Vector x2 = vec2(0.4, 0.7);
  Matrix analytic = basis_field_jacobian(flat, x2);
  Matrix fd = oracles::jacobian_fd([&](const Vector& p) { return basis_field(flat, p); }, x2, h);
  CHECK((analytic - fd).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("every basis field is divergence free") {
  std::vector<Vector> points = {vec3(0.3, 0.6, 0.2), vec3(0.05, 0.95, 0.5),
                                vec3(0.71, 0.33, 0.48)};
  DeformationBasis basis = enumerate_basis(3, 30);
  for (int k = 0; k < basis.size(); ++k)
    for (const Vector& x : points) {
      Matrix j = basis_field_jacobian(basis.modes[k], x);
      CHECK(j.trace() == 0.0);
      Vector v = basis_field(basis.modes[k], x);
      double div = oracles::divergence_fd(
          [&](const Vector& p) { return basis_field(basis.modes[k], p); }, x, 1e-5);
      CHECK(std::abs(div) < 1e-6 * (1.0 + v.norm()));
    }
}

TEST_CASE("no basis field crosses the domain boundary") {
  DeformationBasis basis = enumerate_basis(3, 30);
  std::vector<double> grid = {0.0, 0.21, 0.5, 0.83, 1.0};
  for (int k = 0; k < basis.size(); ++k)
    for (int face_dim = 0; face_dim < 3; ++face_dim)
      for (double side : {0.0, 1.0})
        for (double u : grid)
          for (double w : grid) {
            Vector x(3);
            x[face_dim] = side;
            x[(face_dim + 1) % 3] = u;
            x[(face_dim + 2) % 3] = w;
            Vector v = basis_field(basis.modes[k], x);
            CHECK(std::abs(v[face_dim]) < 1e-12);
          }
  DeformationBasis flat = enumerate_basis(2, 10);
  for (int k = 0; k < flat.size(); ++k)
    for (int face_dim = 0; face_dim < 2; ++face_dim)
      for (double side : {0.0, 1.0})
        for (double u : grid) {
          Vector x(2);
          x[face_dim] = side;
          x[1 - face_dim] = u;
          CHECK(std::abs(basis_field(flat.modes[k], x)[face_dim]) < 1e-12);
        }
}

TEST_CASE("evaluate_field is linear in the coefficients") {
  DeformationBasis basis = enumerate_basis(3, 25);
  std::mt19937_64 rng(71);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vector a(basis.size()), b(basis.size());
  for (int k = 0; k < basis.size(); ++k) {
    a[k] = gauss(rng);
    b[k] = gauss(rng);
  }
  Vector x = vec3(0.37, 0.58, 0.64);
  Vector lhs = evaluate_field(basis, a + b, x);
  Vector rhs = evaluate_field(basis, a, x) + evaluate_field(basis, b, x);
  CHECK((lhs - rhs).norm() < 1e-12);
  Vector scaled = evaluate_field(basis, 3.0 * a, x);
  CHECK((scaled - 3.0 * evaluate_field(basis, a, x)).norm() < 1e-12 * (1.0 + scaled.norm()));
  // Against the per-mode sum.
  Vector direct = Vector::Zero(3);
  for (int k = 0; k < basis.size(); ++k) direct += a[k] * basis_field(basis.modes[k], x);
  CHECK((evaluate_field(basis, a, x) - direct).norm() < 1e-12);
}

TEST_CASE("field evaluator agrees with the per-mode entry points") {
  DeformationBasis basis = enumerate_basis(3, 40);
  FieldEvaluator eval(basis);
  std::mt19937_64 rng(12);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vector a(basis.size());
  for (int k = 0; k < basis.size(); ++k) a[k] = gauss(rng);
  Vector x = vec3(0.22, 0.81, 0.47);

  Matrix V;
  eval.basis_matrix(x, V);
  REQUIRE(V.rows() == 3);
  REQUIRE(V.cols() == basis.size());
  for (int k = 0; k < basis.size(); ++k)
    CHECK((V.col(k) - basis_field(basis.modes[k], x)).cwiseAbs().maxCoeff() < 1e-13);

  Vector v = eval.velocity(x, a);
  CHECK((v - V * a).norm() < 1e-12 * (1.0 + v.norm()));

  Matrix J;
  eval.field_jacobian(x, a, J);
  Matrix direct = Matrix::Zero(3, 3);
  for (int k = 0; k < basis.size(); ++k) direct += a[k] * basis_field_jacobian(basis.modes[k], x);
  CHECK((J - direct).cwiseAbs().maxCoeff() < 1e-12 * (1.0 + direct.cwiseAbs().maxCoeff()));
  CHECK(std::abs(J.trace()) < 1e-12);

  Matrix V2, J2;
  eval.basis_and_jacobian(x, a, V2, J2);
  CHECK((V2 - V).cwiseAbs().maxCoeff() == 0.0);
  CHECK((J2 - J).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("field evaluator rejects out-of-range modes and lengths") {
  DeformationBasis bad = enumerate_basis(3, 3);
  bad.modes[1].j[0] = 200;
  CHECK_THROWS_AS(FieldEvaluator{bad}, Error);
  bad.modes[1].j[0] = 0;
  CHECK_THROWS_AS(FieldEvaluator{bad}, Error);

  DeformationBasis basis = enumerate_basis(3, 3);
  Vector short_a = Vector::Zero(2);
  CHECK_THROWS_AS(evaluate_field(basis, short_a, vec3(0.5, 0.5, 0.5)), Error);
  Vector a = Vector::Zero(3);
  CHECK_THROWS_AS(evaluate_field(basis, a, vec2(0.5, 0.5)), Error);
}

TEST_CASE("prior samples are deterministic per seed and match the spectrum") {
  DeformationBasis basis = enumerate_basis(3, 4);
  CHECK((sample_prior(basis, 42) - sample_prior(basis, 42)).norm() == 0.0);
  CHECK((sample_prior(basis, 42) - sample_prior(basis, 43)).norm() > 0.0);

  const int trials = 10000;
  double sum = 0.0, sum_sq = 0.0;
  for (int t = 0; t < trials; ++t) {
    double a1 = sample_prior(basis, 1000 + t)[0];
    sum += a1;
    sum_sq += a1 * a1;
  }
  double mean = sum / trials;
  double var = sum_sq / trials - mean * mean;
  double lambda1 = basis.kl_weights[0];
  CHECK(std::abs(var - lambda1) < 0.05 * lambda1);
  CHECK(std::abs(mean) < 3.0 * std::sqrt(lambda1 / trials));
}

TEST_CASE("dirichlet energy matches tensor quadrature of the gradient norm") {
  ModeIndex mode{{1, 1, 0}, 1};
  DeformationBasis single = enumerate_basis(2, 1);
  Vector one = Vector::Ones(1);
  double e = dirichlet_energy(single, one);
  CHECK(e == doctest::Approx(std::pow(2.0 * kPi * kPi, 2)).epsilon(1e-12));
  CHECK(e == doctest::Approx(389.64).epsilon(1e-4));

  oracles::Quadrature1D q = oracles::gauss_legendre(24);
  for (int dim : {2, 3}) {
    DeformationBasis basis = enumerate_basis(dim, dim == 2 ? 5 : 7);
    std::mt19937_64 rng(5 + dim);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Vector a(basis.size());
    for (int k = 0; k < basis.size(); ++k) a[k] = gauss(rng);
    FieldEvaluator eval(basis);
    double quad = oracles::tensor_quadrature(dim, q, [&](const Vector& x) {
      Matrix J;
      eval.field_jacobian(x, a, J);
      return J.squaredNorm();
    });
    CHECK(dirichlet_energy(basis, a) == doctest::Approx(quad).epsilon(1e-8));
  }

  Vector wrong = Vector::Zero(3);
  CHECK_THROWS_AS(dirichlet_energy(single, wrong), Error);
}
