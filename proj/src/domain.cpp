#include "morphflow/domain.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>

namespace morphflow {

PointCloud pca_align_one(const PointCloud& cloud) {
  cloud.validate();
  const Matrix& p = cloud.points;
  const int n = cloud.size();
  const int d = cloud.dim();
  Eigen::RowVectorXd mean = p.colwise().mean();
  Matrix centered = p.rowwise() - mean;
  Matrix cov = centered.transpose() * centered / static_cast<double>(n);
  if (cov.trace() < 1e-18) throw DegenerateCovariance("cloud '" + cloud.id + "' has zero spread");

  Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
  if (eig.info() != Eigen::Success)
    throw DegenerateCovariance("eigendecomposition failed for cloud '" + cloud.id + "'");
  Matrix axes(d, d);
  for (int c = 0; c < d; ++c) axes.col(c) = eig.eigenvectors().col(d - 1 - c);

  // Sign convention: flip each axis so the third central moment of the
  // projections is >= 0; moments within 1e-12 of zero keep the solver's
  // orientation.
  Vector m3(d);
  for (int c = 0; c < d; ++c) {
    Vector proj = centered * axes.col(c);
    m3[c] = proj.array().cube().mean();
    if (m3[c] < -1e-12) {
      axes.col(c) = -axes.col(c);
      m3[c] = -m3[c];
    }
  }
  if (axes.determinant() < 0) {
    // Restore a proper rotation by flipping the axis whose moment constrains
    // the sign least; ties go to the highest index.
    int flip = 0;
    for (int c = 1; c < d; ++c)
      if (std::abs(m3[c]) <= std::abs(m3[flip])) flip = c;
    axes.col(flip) = -axes.col(flip);
  }

  PointCloud out = cloud;
  out.points = centered * axes;
  if (cloud.has_normals()) out.normals = cloud.normals * axes;
  return out;
}

std::pair<PointCloud, PointCloud> pca_align(const PointCloud& source, const PointCloud& target) {
  return {pca_align_one(source), pca_align_one(target)};
}

DomainTransform fit_domain(const PointCloud& source, const PointCloud& target, double margin) {
  source.validate();
  target.validate();
  if (!(margin > 0.0 && margin < 0.5)) throw Error("margin must lie in (0, 0.5)");
  if (source.dim() != target.dim()) throw Error("source and target dimensions differ");
  const int d = source.dim();
  const int n = source.size() + target.size();

  Eigen::RowVectorXd mean =
      (source.points.colwise().sum() + target.points.colwise().sum()) / static_cast<double>(n);
  double spread = 0.0;
  spread = std::max(spread, (source.points.rowwise() - mean).cwiseAbs().maxCoeff());
  spread = std::max(spread, (target.points.rowwise() - mean).cwiseAbs().maxCoeff());

  DomainTransform t;
  t.dimension = d;
  t.scale = spread <= 1e-12 ? 1.0 : (0.5 - margin) / spread;
  t.translation = Vector::Constant(d, 0.5) - t.scale * mean.transpose();
  return t;
}

int centroid_seed(const PointCloud& cloud) {
  Eigen::RowVectorXd centroid = cloud.points.colwise().mean();
  int best = 0;
  double best_d2 = std::numeric_limits<double>::infinity();
  for (int i = 0; i < cloud.size(); ++i) {
    double d2 = (cloud.points.row(i) - centroid).squaredNorm();
    if (d2 < best_d2) {
      best_d2 = d2;
      best = i;
    }
  }
  return best;
}

SampleIndexSet farthest_point_sample(const PointCloud& cloud, int k, int seed_index) {
  const int n = cloud.size();
  if (k < 1 || k > n) throw Error("sample size " + std::to_string(k) + " outside [1, " +
                                  std::to_string(n) + "]");
  if (seed_index < 0 || seed_index >= n) throw Error("seed index out of range");

  SampleIndexSet set;
  set.indices.reserve(k);
  std::vector<char> taken(n, 0);
  // The seed primes the first pick (farthest from it) but is not selected
  // itself; afterwards distances track the selected set only and the seed
  // stays a candidate like any other point.
  Vector min_d2 = (cloud.points.rowwise() - cloud.points.row(seed_index)).rowwise().squaredNorm();
  for (int step = 0; step < k; ++step) {
    int best = -1;
    for (int i = 0; i < n; ++i) {
      if (taken[i]) continue;
      if (best < 0 || min_d2[i] > min_d2[best]) best = i;
    }
    taken[best] = 1;
    set.indices.push_back(best);
    Vector d2 = (cloud.points.rowwise() - cloud.points.row(best)).rowwise().squaredNorm();
    min_d2 = step == 0 ? d2 : min_d2.cwiseMin(d2).eval();
  }
  return set;
}

}  // namespace morphflow
