#pragma once

#include <utility>
#include <vector>

#include "morphflow/basis.hpp"
#include "morphflow/descriptors.hpp"
#include "morphflow/flow.hpp"
#include "morphflow/types.hpp"

namespace morphflow {

struct EmConfig {
  double sigma2 = 0.01;
  double r0 = 0.01;
  int max_iters = 100;
  double rel_energy_tol = 1e-5;
  double w_truncation = 1e-8;
};

// Soft correspondences: column m sums to 1 together with its outlier mass
// (before truncation).
struct CorrespondenceMatrix {
  Matrix w;             // N x M
  Vector outlier_mass;  // M
};

struct EmState {
  Vector a;
  CorrespondenceMatrix w;
  int iteration = 0;
  std::vector<double> energy_history;
  bool monotonicity_flagged = false;
  Matrix endpoints;  // f_n at the final coefficients
};

// 0.5 r^2 inside |r| <= r0, r0 |r| - 0.5 r0^2 outside.
double huber(double r, double r0);

// w[n][m] = exp(-d^2/(2 sigma2)) / ((2 pi sigma2)^{D/2} + sum_n' exp(...)),
// d the combined distance; entries below w_truncation are zeroed afterwards
// without renormalizing.
CorrespondenceMatrix e_step(const DistanceModel& model, const Matrix& f, const Matrix& y,
                            const EmConfig& cfg, int threads = 1);

// E(a) = 0.5 a^T L^{-1} a + (1/sigma2) sum_nm W_nm huber(|y_m - f_n|).
double energy(const Vector& a, const CorrespondenceMatrix& w, const Matrix& f, const Matrix& y,
              const DeformationBasis& basis, const EmConfig& cfg);

// Surrogate with the plain squared residual and prefactor 1/(2 sigma2); the
// gradient of sigma2 * this is sigma2 L^{-1} a + J^T r.
double energy_least_squares(const Vector& a, const CorrespondenceMatrix& w, const Matrix& f,
                            const Matrix& y, const DeformationBasis& basis, const EmConfig& cfg);

// Solves (J^T W~ J + sigma2 L^{-1}) delta = -(J^T r + sigma2 L^{-1} a) and
// returns a + delta. r_n = sum_m W^_nm (f_n - y_m) with W^ the Huber
// reweighting of w (entries beyond r0 scaled by r0/|f_n - y_m|); W~ holds the
// row sums of W^ replicated per coordinate.
Vector gauss_newton_step(const Vector& a, const Matrix& f, const std::vector<Matrix>& jacobians,
                         const Matrix& y, const CorrespondenceMatrix& w,
                         const DeformationBasis& basis, const EmConfig& cfg, int threads = 1);

// Alternates e_step with one damped Gauss-Newton update from a^{(0)} = 0,
// guarding each update by step halving (at most 10) against the last
// accepted energy; stops when the relative energy change stays below
// rel_energy_tol for 3 consecutive iterations, at max_iters, or when no
// halved step can keep the energy from rising (monotonicity_flagged; the
// incumbent coefficients stay and energy_history stays non-increasing).
EmState run_em(const PointCloud& x, const PointCloud& y, const DeformationBasis& basis,
               const DescriptorSet& desc_x, const DescriptorSet& desc_y, FlowConfig flow_cfg,
               EmConfig em_cfg, int threads = 1);

// Per source point, the target minimizing the combined distance (lowest
// index on ties).
std::vector<std::pair<int, int>> extract_correspondences(const Matrix& f_full,
                                                         const Matrix& y_full,
                                                         const DistanceModel& model,
                                                         int threads = 1);

}  // namespace morphflow
