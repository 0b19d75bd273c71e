#include "morphflow/flow.hpp"

#include <cmath>
#include <string>

#include "morphflow/parallel.hpp"

namespace morphflow {
namespace {

void check_flow_config(FlowConfig config) {
  if (config.steps < 1) throw Error("flow needs at least one step");
}

void check_domain(const Matrix& points) {
  if (points.rows() < 1) throw Error("flow input is empty");
  if (points.minCoeff() < -1e-9 || points.maxCoeff() > 1.0 + 1e-9)
    throw Error("flow input leaves the unit domain");
}

void check_trajectories(const TrajectoryBundle& bundle) {
  for (const Matrix& m : bundle.positions)
    if (!all_finite(m)) throw NonFiniteState("trajectory left the finite range");
}

// Shared RK2 driver; trajectories are independent, so points parallelize with
// bit-identical results for any thread count.
TrajectoryBundle rk2_core(const Matrix& points, FlowConfig config, int total_steps, int threads,
                          const std::function<void(const Vector&, Vector&)>& vel) {
  check_flow_config(config);
  check_domain(points);
  if (total_steps < 0) throw Error("negative step count");

  const int n = static_cast<int>(points.rows());
  const int dim = static_cast<int>(points.cols());
  const double h = config.step_size();

  TrajectoryBundle bundle;
  bundle.config = config;
  bundle.steps = total_steps;
  bundle.positions.assign(total_steps + 1, Matrix(n, dim));
  bundle.positions[0] = points;

  parallel_chunks(n, threads, [&](int, int begin, int end) {
    Vector x(dim), u(dim), v1(dim), v2(dim);
    for (int i = begin; i < end; ++i) {
      x = points.row(i).transpose();
      for (int t = 0; t < total_steps; ++t) {
        vel(x, v1);
        u = x + (h / 2.0) * v1;
        vel(u, v2);
        x += h * v2;
        bundle.positions[t + 1].row(i) = x.transpose();
      }
    }
  });
  check_trajectories(bundle);
  return bundle;
}

double polygon_area(const Matrix& pts) {
  double twice = 0.0;
  const int n = static_cast<int>(pts.rows());
  for (int i = 0; i < n; ++i) {
    int j = (i + 1) % n;
    twice += pts(i, 0) * pts(j, 1) - pts(j, 0) * pts(i, 1);
  }
  return std::abs(twice) / 2.0;
}

double mesh_volume(const Matrix& pts, const std::vector<std::vector<int>>& faces) {
  double six = 0.0;
  for (const auto& f : faces) {
    if (f.size() != 3) throw Error("volume measurement needs triangle faces");
    Eigen::Vector3d a = pts.row(f[0]), b = pts.row(f[1]), c = pts.row(f[2]);
    six += a.dot(b.cross(c));
  }
  return std::abs(six) / 6.0;
}

}  // namespace

TrajectoryBundle integrate_velocity(const Matrix& points, const VelocityFn& field,
                                    FlowConfig config, int total_steps, int threads) {
  return rk2_core(points, config, total_steps, threads,
                  [&field](const Vector& x, Vector& v) { v = field(x); });
}

TrajectoryBundle integrate(const PointCloud& points, const DeformationBasis& basis,
                           const Vector& a, FlowConfig config, int threads) {
  if (points.dim() != basis.dimension) throw Error("cloud and basis dimensions differ");
  if (a.size() != basis.size()) throw Error("coefficient length does not match basis");
  FieldEvaluator eval(basis);
  return rk2_core(points.points, config, config.steps, threads,
                  [&eval, &a](const Vector& x, Vector& v) { v = eval.velocity(x, a); });
}

PointCloud sample_time(const TrajectoryBundle& bundle, double t) {
  const double h = bundle.config.step_size();
  const double u = t / h;
  if (t < -1e-12 || u > bundle.steps + 1e-9)
    throw OutOfHorizon("time " + std::to_string(t) + " outside integrated horizon [0, " +
                       std::to_string(bundle.horizon()) + "]");
  PointCloud out;
  const double r = std::round(u);
  if (std::abs(u - r) < 1e-9) {
    int idx = std::min(static_cast<int>(r), bundle.steps);
    out.points = bundle.positions[std::max(idx, 0)];
  } else {
    int lo = std::min(static_cast<int>(std::floor(u)), bundle.steps - 1);
    lo = std::max(lo, 0);
    double w = u - lo;
    out.points = (1.0 - w) * bundle.positions[lo] + w * bundle.positions[lo + 1];
  }
  return out;
}

TrajectoryBundle extrapolate(const PointCloud& points, const DeformationBasis& basis,
                             const Vector& a, FlowConfig config, double t_max, int threads,
                             double guardrail) {
  if (t_max < 0.0) throw OutOfHorizon("extrapolation time must be nonnegative");
  if (t_max > guardrail + 1e-12)
    throw OutOfHorizon("extrapolation to t=" + std::to_string(t_max) + " exceeds guardrail " +
                       std::to_string(guardrail));
  if (points.dim() != basis.dimension) throw Error("cloud and basis dimensions differ");
  if (a.size() != basis.size()) throw Error("coefficient length does not match basis");
  check_flow_config(config);
  const int total = static_cast<int>(std::ceil(t_max * config.steps - 1e-9));
  FieldEvaluator eval(basis);
  return rk2_core(points.points, config, total, threads,
                  [&eval, &a](const Vector& x, Vector& v) { v = eval.velocity(x, a); });
}

EndpointState integrate_with_jacobians(const Matrix& points, const DeformationBasis& basis,
                                       const Vector& a, FlowConfig config, int threads) {
  if (points.cols() != basis.dimension) throw Error("cloud and basis dimensions differ");
  if (a.size() != basis.size()) throw Error("coefficient length does not match basis");
  check_flow_config(config);
  check_domain(points);

  const int n = static_cast<int>(points.rows());
  const int dim = basis.dimension;
  const int K = basis.size();
  const double h = config.step_size();
  FieldEvaluator eval(basis);

  EndpointState state;
  state.endpoints.resize(n, dim);
  state.jacobians.assign(n, Matrix());

  parallel_chunks(n, threads, [&](int, int begin, int end) {
    Matrix V1, V2, Jv1, Jv2;
    Matrix Jx(dim, K), Ju(dim, K);
    Vector x(dim), u(dim), v1(dim), v2(dim);
    for (int i = begin; i < end; ++i) {
      x = points.row(i).transpose();
      Jx.setZero();
      for (int t = 0; t < config.steps; ++t) {
        eval.basis_and_jacobian(x, a, V1, Jv1);
        v1.noalias() = V1 * a;
        u = x + (h / 2.0) * v1;
        Ju.noalias() = Jx + (h / 2.0) * (Jv1 * Jx + V1);
        eval.basis_and_jacobian(u, a, V2, Jv2);
        v2.noalias() = V2 * a;
        Jx += h * (Jv2 * Ju + V2);
        x += h * v2;
      }
      state.endpoints.row(i) = x.transpose();
      state.jacobians[i] = Jx;
    }
  });

  if (!all_finite(state.endpoints)) throw NonFiniteState("endpoint left the finite range");
  for (const Matrix& j : state.jacobians)
    if (!all_finite(j)) throw NonFiniteState("endpoint Jacobian left the finite range");
  return state;
}

JacobianStack endpoint_jacobians(const PointCloud& points, const DeformationBasis& basis,
                                 const Vector& a, FlowConfig config, int threads) {
  JacobianStack stack;
  stack.jac = integrate_with_jacobians(points.points, basis, a, config, threads).jacobians;
  return stack;
}

double measure_region_volume(const Mesh& region, const DeformationBasis& basis, const Vector& a,
                             FlowConfig config, double t, int threads) {
  region.validate();
  if (t < 0.0) throw OutOfHorizon("measurement time must be nonnegative");
  check_flow_config(config);
  const int total = std::max(static_cast<int>(std::ceil(t * config.steps - 1e-9)), 0);
  FieldEvaluator eval(basis);
  TrajectoryBundle bundle =
      rk2_core(region.cloud.points, config, total, threads,
               [&eval, &a](const Vector& x, Vector& v) { v = eval.velocity(x, a); });
  Matrix pts = sample_time(bundle, t).points;
  if (region.cloud.dim() == 2) return polygon_area(pts);
  if (region.faces.empty()) throw Error("3D volume measurement needs a closed triangle mesh");
  return mesh_volume(pts, region.faces);
}

}  // namespace morphflow
