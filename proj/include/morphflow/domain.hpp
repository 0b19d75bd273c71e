#pragma once

#include <utility>

#include "morphflow/types.hpp"

namespace morphflow {

// Similarity transform p' = scale * p + translation shared by source and
// target so both live in the same normalized coordinates.
struct DomainTransform {
  double scale = 1.0;
  Vector translation;
  int dimension = 3;

  Matrix apply(const Matrix& points) const {
    return (points * scale).rowwise() + translation.transpose();
  }
  Matrix invert(const Matrix& points) const {
    return (points.rowwise() - translation.transpose()) / scale;
  }
};

// Rotates each cloud independently onto its principal axes (descending
// eigenvalue order), moves the empirical mean to the origin, and fixes each
// axis sign so the third central moment of the projections is nonnegative.
// The returned rotation is always proper. Normals rotate along.
std::pair<PointCloud, PointCloud> pca_align(const PointCloud& source, const PointCloud& target);

// Single-cloud variant used by both entries of pca_align.
PointCloud pca_align_one(const PointCloud& cloud);

// Computes the shared transform mapping the joint bounding box of both clouds
// into [margin, 1-margin]^D with the joint mean at the domain center.
DomainTransform fit_domain(const PointCloud& source, const PointCloud& target, double margin);

// Greedy Euclidean farthest point sampling. The first pick maximizes the
// distance to the seed point; later picks maximize the minimum distance to
// the selected set. The seed is not selected up front and stays a candidate.
// Ties break toward the lowest index.
SampleIndexSet farthest_point_sample(const PointCloud& cloud, int k, int seed_index);

// Default FPS seed: index of the point nearest the centroid (lowest index on
// ties).
int centroid_seed(const PointCloud& cloud);

}  // namespace morphflow
