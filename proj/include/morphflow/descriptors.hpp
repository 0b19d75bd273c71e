#pragma once

#include <string>

#include "morphflow/types.hpp"

namespace morphflow {

enum class DescriptorProvenance { computed, ingested, none };

struct DescriptorSet {
  Matrix vectors;  // N x F
  DescriptorProvenance provenance = DescriptorProvenance::none;

  int count() const { return static_cast<int>(vectors.rows()); }
  int width() const { return static_cast<int>(vectors.cols()); }
  bool empty() const { return provenance == DescriptorProvenance::none || width() == 0; }
};

struct ShotBins {
  int radial = 2;
  int azimuth = 4;
  int elevation = 2;
  int cosine = 8;

  int width() const { return radial * azimuth * elevation * cosine; }
};

// Combined metric d = d_euclid + (mean_euclid / mean_descriptor) d_descriptor
// with both means frozen from the initial positions; the descriptor distance
// matrix never changes during EM.
struct DistanceModel {
  double mean_euclid = 0.0;
  double mean_descriptor = 0.0;
  Matrix descriptor_distances;  // N x M, empty when descriptors are off

  bool has_descriptors() const { return descriptor_distances.size() > 0; }
};

// Normal per point from the k-nearest-neighbor covariance (the neighborhood
// includes the point itself); sign points away from the cloud centroid as
// seen from the neighborhood centroid, with a largest-component tie rule.
PointCloud estimate_normals(const PointCloud& cloud, int k_neighbors, int threads = 1);

// Simplified SHOT: histogram over radial/azimuth/elevation shells around a
// covariance local reference frame times cosine-of-normal-angle bins,
// normalized to unit L2 norm; points with fewer than 3 neighbors in the
// radius get a zero descriptor. 3D only.
DescriptorSet compute_descriptors(const PointCloud& cloud, double radius, ShotBins bins = {},
                                  int threads = 1);

// CSV with header "MORPHFLOW-DESC v1 <N> <F>" and comma-separated rows.
DescriptorSet load_descriptors(const std::string& path, int expected_n);
void save_descriptors(const std::string& path, const DescriptorSet& set);

DistanceModel build_distance_model(const Matrix& x_points, const Matrix& y_points,
                                   const DescriptorSet& desc_x, const DescriptorSet& desc_y,
                                   int threads = 1);

inline double combined_distance(const DistanceModel& model, int n, int m, const Vector& f_n,
                                const Vector& y_m) {
  double d = (y_m - f_n).norm();
  if (model.has_descriptors() && model.mean_descriptor > 1e-12)
    d += model.mean_euclid / model.mean_descriptor * model.descriptor_distances(n, m);
  return d;
}

}  // namespace morphflow
