#pragma once

#include <functional>
#include <vector>

#include "morphflow/basis.hpp"
#include "morphflow/types.hpp"

namespace morphflow {

struct FlowConfig {
  int steps = 20;
  double step_size() const { return 1.0 / steps; }
};

// Full trajectory grid: positions[t] holds all points after t RK2 steps.
// steps may exceed config.steps when the flow was extrapolated past t=1.
struct TrajectoryBundle {
  std::vector<Matrix> positions;
  FlowConfig config;
  int steps = 0;

  double horizon() const { return steps * config.step_size(); }
  const Matrix& endpoints() const { return positions.back(); }
};

// Per-point D x K endpoint derivatives with respect to the coefficients.
struct JacobianStack {
  std::vector<Matrix> jac;
};

struct EndpointState {
  Matrix endpoints;
  std::vector<Matrix> jacobians;
};

using VelocityFn = std::function<Vector(const Vector&)>;

// RK2 advection of raw points under an arbitrary velocity field; the test
// harness injects constant/linear fields through this entry.
TrajectoryBundle integrate_velocity(const Matrix& points, const VelocityFn& field,
                                    FlowConfig config, int total_steps, int threads = 1);

// x^{(t+1)} = x^{(t)} + h v(x^{(t)} + (h/2) v(x^{(t)})), h = 1/steps.
TrajectoryBundle integrate(const PointCloud& points, const DeformationBasis& basis,
                           const Vector& a, FlowConfig config, int threads = 1);

// Positions at time t: stored row when t hits the step grid (within 1e-9 of a
// multiple of h), linear interpolation between adjacent rows otherwise.
PointCloud sample_time(const TrajectoryBundle& bundle, double t);

// Continues the autonomous flow to t_max > 1 (ceil(t_max * steps) RK2 steps).
TrajectoryBundle extrapolate(const PointCloud& points, const DeformationBasis& basis,
                             const Vector& a, FlowConfig config, double t_max, int threads = 1,
                             double guardrail = 2.0);

// Chain rule through every RK2 step, D_a x^{(0)} = 0:
//   u       = x + (h/2) v(x)
//   D_a u   = D_a x + (h/2) (D_x v(x) D_a x + V(x))
//   D_a x'  = D_a x + h (D_x v(u) D_a u + V(u))
// with V(x) = [v_1(x) ... v_K(x)].
EndpointState integrate_with_jacobians(const Matrix& points, const DeformationBasis& basis,
                                       const Vector& a, FlowConfig config, int threads = 1);
JacobianStack endpoint_jacobians(const PointCloud& points, const DeformationBasis& basis,
                                 const Vector& a, FlowConfig config, int threads = 1);

// Advects the region boundary to time t and returns the enclosed area
// (shoelace over the vertex order, 2D) or volume (signed tetrahedra over
// triangle faces, 3D). Diagnostic harness for the conservation property.
double measure_region_volume(const Mesh& region, const DeformationBasis& basis, const Vector& a,
                             FlowConfig config, double t, int threads = 1);

}  // namespace morphflow
