#pragma once

// Deterministic geometry fixtures shared by the test suites.

#include <cmath>
#include <numbers>
#include <random>

#include "morphflow/types.hpp"

namespace fixtures {

using morphflow::Matrix;
using morphflow::Mesh;
using morphflow::PointCloud;
using morphflow::Vector;

inline constexpr double kPi = std::numbers::pi_v<double>;

// Uniform cloud in [lo, hi]^dim.
inline PointCloud cube_cloud(int n, unsigned seed, double lo = 0.15, double hi = 0.85,
                             int dim = 3) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(lo, hi);
  PointCloud cloud;
  cloud.points.resize(n, dim);
  for (int i = 0; i < n; ++i)
    for (int d = 0; d < dim; ++d) cloud.points(i, d) = uni(rng);
  return cloud;
}

// Points on the sphere of radius r about (0.5, 0.5, 0.5), via normalized
// gaussians.
inline PointCloud sphere_cloud(int n, unsigned seed, double r = 0.25) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  PointCloud cloud;
  cloud.points.resize(n, 3);
  for (int i = 0; i < n; ++i) {
    Vector g(3);
    do {
      g << gauss(rng), gauss(rng), gauss(rng);
    } while (g.norm() < 1e-8);
    cloud.points.row(i) = (Vector::Constant(3, 0.5) + r * g / g.norm()).transpose();
  }
  return cloud;
}

// Quasi-uniform sphere sampling (golden-angle spiral) of radius r about
// (0.5, 0.5, 0.5).
inline PointCloud fibonacci_sphere(int n, double r = 0.25) {
  PointCloud cloud;
  cloud.points.resize(n, 3);
  const double golden = kPi * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < n; ++i) {
    double z = 1.0 - 2.0 * (i + 0.5) / n;
    double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
    double ang = golden * i;
    cloud.points.row(i) << 0.5 + r * rho * std::cos(ang), 0.5 + r * rho * std::sin(ang),
        0.5 + r * z;
  }
  return cloud;
}

// Cloud with distinct per-axis variances and positive skew, so PCA axes and
// orientation signs are unambiguous.
inline PointCloud skewed_blob(int n, unsigned seed, int dim = 3) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const double scales[3] = {1.0, 0.6, 0.35};
  PointCloud cloud;
  cloud.points.resize(n, dim);
  for (int i = 0; i < n; ++i)
    for (int d = 0; d < dim; ++d) {
      double u = uni(rng);
      cloud.points(i, d) = scales[d] * u * u;
    }
  return cloud;
}

// Closed polygon (2D mesh, vertices ordered counterclockwise, no faces):
// circle of the given radius and center.
inline Mesh circle_polygon(int n, double cx, double cy, double r) {
  Mesh mesh;
  mesh.cloud.points.resize(n, 2);
  for (int i = 0; i < n; ++i) {
    double ang = 2.0 * kPi * i / n;
    mesh.cloud.points(i, 0) = cx + r * std::cos(ang);
    mesh.cloud.points(i, 1) = cy + r * std::sin(ang);
  }
  return mesh;
}

// Axis-aligned square boundary polygon with n vertices (n divisible by 4).
inline Mesh square_polygon(int n, double lo, double hi) {
  Mesh mesh;
  mesh.cloud.points.resize(n, 2);
  const int per_side = n / 4;
  const double step = (hi - lo) / per_side;
  int row = 0;
  for (int i = 0; i < per_side; ++i) mesh.cloud.points.row(row++) << lo + i * step, lo;
  for (int i = 0; i < per_side; ++i) mesh.cloud.points.row(row++) << hi, lo + i * step;
  for (int i = 0; i < per_side; ++i) mesh.cloud.points.row(row++) << hi - i * step, hi;
  for (int i = 0; i < per_side; ++i) mesh.cloud.points.row(row++) << lo, hi - i * step;
  return mesh;
}

// Tapered cylinder with azimuthal bulge, optionally bent along a circular
// arc. rings x segments vertices, triangulated side surface.
//   straight: P(theta, z) = (r(theta,z) cos, r sin, z), z in [0, length]
//   bent:     wrapped around a circle of radius bend_radius in the xz-plane
// r(theta, z) = r0 (1 + 0.25 z/length) (1 + 0.12 cos theta).
inline Mesh cylinder_mesh(int rings, int segments, double r0, double length, bool bent,
                          double bend_radius = 1.2) {
  Mesh mesh;
  mesh.cloud.points.resize(rings * segments, 3);
  for (int i = 0; i < rings; ++i) {
    double z = length * std::pow(static_cast<double>(i) / (rings - 1), 1.3);
    for (int s = 0; s < segments; ++s) {
      double theta = 2.0 * kPi * s / segments;
      double r = r0 * (1.0 + 0.25 * z / length) * (1.0 + 0.12 * std::cos(theta));
      double px = r * std::cos(theta);
      double py = r * std::sin(theta);
      int row = i * segments + s;
      if (!bent) {
        mesh.cloud.points.row(row) << px, py, z;
      } else {
        double ang = z / bend_radius;
        mesh.cloud.points.row(row) << (bend_radius + px) * std::cos(ang) - bend_radius, py,
            (bend_radius + px) * std::sin(ang);
      }
    }
  }
  for (int i = 0; i + 1 < rings; ++i) {
    for (int s = 0; s < segments; ++s) {
      int s1 = (s + 1) % segments;
      int a = i * segments + s;
      int b = i * segments + s1;
      int c = (i + 1) * segments + s;
      int d = (i + 1) * segments + s1;
      mesh.faces.push_back({a, b, d});
      mesh.faces.push_back({a, d, c});
    }
  }
  return mesh;
}

// Four collinear vertices joined by three unit edges.
inline Mesh path4_mesh() {
  Mesh mesh;
  mesh.cloud.points.resize(4, 3);
  mesh.cloud.points << 0, 0, 0, 1, 0, 0, 2, 0, 0, 3, 0, 0;
  mesh.faces = {{0, 1}, {1, 2}, {2, 3}};
  return mesh;
}

// Regular n x n grid on the plane z = z0, spanning [lo, hi]^2.
inline PointCloud plane_grid(int n, double lo, double hi, double z0) {
  PointCloud cloud;
  cloud.points.resize(n * n, 3);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double x = lo + (hi - lo) * i / (n - 1);
      double y = lo + (hi - lo) * j / (n - 1);
      cloud.points.row(i * n + j) << x, y, z0;
    }
  return cloud;
}

inline const char* tetrahedron_off() {
  return "OFF\n4 4 0\n0 0 0\n1 0 0\n0 1 0\n0 0 1\n3 0 1 2\n3 0 1 3\n3 0 2 3\n3 1 2 3\n";
}

}  // namespace fixtures
