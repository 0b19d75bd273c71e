#include "morphflow/em.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "morphflow/parallel.hpp"

namespace morphflow {
namespace {

void check_em_config(const EmConfig& cfg) {
  if (cfg.sigma2 <= 0.0) throw Error("sigma2 must be positive");
  if (cfg.r0 <= 0.0) throw Error("huber threshold must be positive");
  if (cfg.max_iters < 1) throw Error("max_iters must be at least 1");
  if (cfg.w_truncation < 0.0) throw Error("w_truncation must be nonnegative");
}

double prior_term(const Vector& a, const DeformationBasis& basis) {
  if (a.size() != basis.size()) throw Error("coefficient length does not match basis");
  double s = 0.0;
  for (int k = 0; k < a.size(); ++k) s += a[k] * a[k] / basis.kl_weights[k];
  return 0.5 * s;
}

}  // namespace

double huber(double r, double r0) {
  if (r0 <= 0.0) throw Error("huber threshold must be positive");
  double x = std::abs(r);
  if (x <= r0) return 0.5 * x * x;
  return r0 * x - 0.5 * r0 * r0;
}

CorrespondenceMatrix e_step(const DistanceModel& model, const Matrix& f, const Matrix& y,
                            const EmConfig& cfg, int threads) {
  check_em_config(cfg);
  const int n = static_cast<int>(f.rows());
  const int m = static_cast<int>(y.rows());
  const int dim = static_cast<int>(f.cols());
  if (y.cols() != dim) throw Error("source and target dimensions differ");
  if (model.has_descriptors() &&
      (model.descriptor_distances.rows() != n || model.descriptor_distances.cols() != m))
    throw Error("distance model shape does not match the clouds");

  const double bg = std::pow(2.0 * std::numbers::pi * cfg.sigma2, dim / 2.0);
  const double inv2s = 1.0 / (2.0 * cfg.sigma2);
  const bool use_desc = model.has_descriptors() && model.mean_descriptor > 1e-12;
  const double ratio = use_desc ? model.mean_euclid / model.mean_descriptor : 0.0;

  CorrespondenceMatrix out;
  out.w.resize(n, m);
  out.outlier_mass.resize(m);

  // Columns are independent; each column is summed serially, so the result
  // is identical for any thread count.
  parallel_chunks(m, threads, [&](int, int begin, int end) {
    for (int col = begin; col < end; ++col) {
      double denom = bg;
      for (int row = 0; row < n; ++row) {
        double d = (y.row(col) - f.row(row)).norm();
        if (use_desc) d += ratio * model.descriptor_distances(row, col);
        double e = std::exp(-d * d * inv2s);
        out.w(row, col) = e;
        denom += e;
      }
      for (int row = 0; row < n; ++row) {
        double v = out.w(row, col) / denom;
        out.w(row, col) = v < cfg.w_truncation ? 0.0 : v;
      }
      out.outlier_mass[col] = bg / denom;
    }
  });
  return out;
}

double energy(const Vector& a, const CorrespondenceMatrix& w, const Matrix& f, const Matrix& y,
              const DeformationBasis& basis, const EmConfig& cfg) {
  check_em_config(cfg);
  double data = 0.0;
  for (int i = 0; i < w.w.rows(); ++i)
    for (int j = 0; j < w.w.cols(); ++j) {
      double wij = w.w(i, j);
      if (wij == 0.0) continue;
      data += wij * huber((y.row(j) - f.row(i)).norm(), cfg.r0);
    }
  return prior_term(a, basis) + data / cfg.sigma2;
}

double energy_least_squares(const Vector& a, const CorrespondenceMatrix& w, const Matrix& f,
                            const Matrix& y, const DeformationBasis& basis, const EmConfig& cfg) {
  check_em_config(cfg);
  double data = 0.0;
  for (int i = 0; i < w.w.rows(); ++i)
    for (int j = 0; j < w.w.cols(); ++j) {
      double wij = w.w(i, j);
      if (wij == 0.0) continue;
      data += wij * (y.row(j) - f.row(i)).squaredNorm();
    }
  return prior_term(a, basis) + data / (2.0 * cfg.sigma2);
}

Vector gauss_newton_step(const Vector& a, const Matrix& f, const std::vector<Matrix>& jacobians,
                         const Matrix& y, const CorrespondenceMatrix& w,
                         const DeformationBasis& basis, const EmConfig& cfg, int threads) {
  check_em_config(cfg);
  const int n = static_cast<int>(f.rows());
  const int m = static_cast<int>(y.rows());
  const int dim = static_cast<int>(f.cols());
  const int K = basis.size();
  if (static_cast<int>(jacobians.size()) != n) throw Error("jacobian count does not match cloud");
  if (a.size() != K) throw Error("coefficient length does not match basis");
  for (const Matrix& j : jacobians)
    if (j.rows() != dim || j.cols() != K) throw Error("jacobian shape does not match basis");

  // Huber-reweighted residuals and row masses.
  Matrix residual(n, dim);
  Vector mass(n);
  parallel_chunks(n, threads, [&](int, int begin, int end) {
    for (int i = begin; i < end; ++i) {
      Eigen::RowVectorXd r = Eigen::RowVectorXd::Zero(dim);
      double wt = 0.0;
      for (int j = 0; j < m; ++j) {
        double wij = w.w(i, j);
        if (wij == 0.0) continue;
        Eigen::RowVectorXd diff = f.row(i) - y.row(j);
        double d = diff.norm();
        if (d > cfg.r0) wij *= cfg.r0 / d;
        r += wij * diff;
        wt += wij;
      }
      residual.row(i) = r;
      mass[i] = wt;
    }
  });

  // Stacked normal equations: A = sum_n mass_n J_n^T J_n + sigma2 L^{-1}.
  Matrix jstack(n * dim, K);
  Matrix bstack(n * dim, K);
  Vector rstack(n * dim);
  parallel_chunks(n, threads, [&](int, int begin, int end) {
    for (int i = begin; i < end; ++i) {
      jstack.middleRows(i * dim, dim) = jacobians[i];
      bstack.middleRows(i * dim, dim) = std::sqrt(mass[i]) * jacobians[i];
      rstack.segment(i * dim, dim) = residual.row(i).transpose();
    }
  });

  Matrix A = bstack.transpose() * bstack;
  Vector rhs = -(jstack.transpose() * rstack);
  for (int k = 0; k < K; ++k) {
    double damp = cfg.sigma2 / basis.kl_weights[k];
    A(k, k) += damp;
    rhs[k] -= damp * a[k];
  }

  Eigen::LDLT<Matrix> solver(A);
  if (solver.info() != Eigen::Success) throw SingularSystem("normal equations are not solvable");
  Vector delta = solver.solve(rhs);
  if (!delta.allFinite()) throw SingularSystem("normal equations yield non-finite step");
  return a + delta;
}

EmState run_em(const PointCloud& x, const PointCloud& y, const DeformationBasis& basis,
               const DescriptorSet& desc_x, const DescriptorSet& desc_y, FlowConfig flow_cfg,
               EmConfig em_cfg, int threads) {
  check_em_config(em_cfg);
  x.validate();
  y.validate();
  if (x.dim() != basis.dimension || y.dim() != basis.dimension)
    throw Error("cloud and basis dimensions differ");

  DistanceModel model = build_distance_model(x.points, y.points, desc_x, desc_y, threads);

  EmState state;
  state.a = Vector::Zero(basis.size());
  EndpointState es = integrate_with_jacobians(x.points, basis, state.a, flow_cfg, threads);

  int streak = 0;
  for (int iter = 1; iter <= em_cfg.max_iters; ++iter) {
    try {
      state.w = e_step(model, es.endpoints, y.points, em_cfg, threads);
      if (iter == 1)
        state.energy_history.push_back(
            energy(state.a, state.w, es.endpoints, y.points, basis, em_cfg));
      const double target = state.energy_history.back();
      const double slack = 1e-12 * std::max(1.0, std::abs(target));

      Vector delta = gauss_newton_step(state.a, es.endpoints, es.jacobians, y.points, state.w,
                                       basis, em_cfg, threads) -
                     state.a;

      double best_e = std::numeric_limits<double>::infinity();
      Vector best_a;
      EndpointState best_es;
      bool accepted = false;
      double scale = 1.0;
      for (int attempt = 0; attempt <= 10; ++attempt, scale /= 2.0) {
        Vector a_try = state.a + scale * delta;
        EndpointState es_try = integrate_with_jacobians(x.points, basis, a_try, flow_cfg, threads);
        double e_try = energy(a_try, state.w, es_try.endpoints, y.points, basis, em_cfg);
        if (e_try < best_e) {
          best_e = e_try;
          best_a = a_try;
          best_es = std::move(es_try);
        }
        if (e_try <= target + slack) {
          accepted = true;
          break;
        }
      }
      if (!accepted) {
        // No scaled step reaches the last accepted energy: refreshing the
        // weights raised the energy at the incumbent itself by more than one
        // step can recover (the outlier mass shrinks as alignment improves).
        // The incumbent stays and the stall counts as convergence, which
        // keeps energy_history non-increasing.
        state.monotonicity_flagged = true;
        break;
      }

      state.a = best_a;
      es = std::move(best_es);
      state.energy_history.push_back(best_e);
      state.iteration = iter;

      double prev = state.energy_history[state.energy_history.size() - 2];
      double rel = std::abs(best_e - prev) / std::max(std::abs(prev), 1e-12);
      streak = rel < em_cfg.rel_energy_tol ? streak + 1 : 0;
      if (streak >= 3) break;
    } catch (const NonFiniteState& e) {
      throw NonFiniteState("iteration " + std::to_string(iter) + ": " + e.what());
    } catch (const SingularSystem& e) {
      throw SingularSystem("iteration " + std::to_string(iter) + ": " + e.what());
    }
  }
  state.endpoints = es.endpoints;
  return state;
}

std::vector<std::pair<int, int>> extract_correspondences(const Matrix& f_full,
                                                         const Matrix& y_full,
                                                         const DistanceModel& model,
                                                         int threads) {
  const int n = static_cast<int>(f_full.rows());
  const int m = static_cast<int>(y_full.rows());
  if (m < 1) throw Error("target cloud is empty");
  const bool use_desc = model.has_descriptors() && model.mean_descriptor > 1e-12;
  if (use_desc &&
      (model.descriptor_distances.rows() != n || model.descriptor_distances.cols() != m))
    throw Error("distance model shape does not match the clouds");
  const double ratio = use_desc ? model.mean_euclid / model.mean_descriptor : 0.0;

  std::vector<std::pair<int, int>> matches(n);
  parallel_chunks(n, threads, [&](int, int begin, int end) {
    for (int i = begin; i < end; ++i) {
      int arg = 0;
      double best = std::numeric_limits<double>::infinity();
      for (int j = 0; j < m; ++j) {
        double d = (y_full.row(j) - f_full.row(i)).norm();
        if (use_desc) d += ratio * model.descriptor_distances(i, j);
        if (d < best) {
          best = d;
          arg = j;
        }
      }
      matches[i] = {i, arg};
    }
  });
  return matches;
}

}  // namespace morphflow
