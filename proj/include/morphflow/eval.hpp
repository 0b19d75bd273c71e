#pragma once

#include <string>
#include <utility>
#include <vector>

#include "morphflow/types.hpp"

namespace morphflow {

// Edge graph of a mesh with Euclidean weights, connected-component labels,
// and a geodesic diameter estimated from farthest-point-sampled sources.
struct GeodesicIndex {
  std::vector<std::vector<std::pair<int, double>>> adjacency;
  std::vector<int> component;
  double diameter = 0.0;

  int vertex_count() const { return static_cast<int>(adjacency.size()); }
};

struct EvalReport {
  std::vector<double> per_point_error;
  std::vector<std::pair<double, double>> curve;  // (threshold, percent)
  double mean_error = 0.0;
};

struct SurfaceDistanceReport {
  Vector per_point;
  double avg = 0.0;
  double max = 0.0;
};

GeodesicIndex build_geodesic_index(const Mesh& mesh, int diameter_sources = 20, int threads = 1);

// All geodesic distances from one source (infinity off its component).
Vector geodesic_distances_from(const GeodesicIndex& index, int source);

// Dijkstra shortest path; throws Disconnected across components.
double geodesic_distance(const GeodesicIndex& index, int u, int v);

// Per match (source, predicted target vertex) against (source, true target
// vertex): error = geodesic(predicted, true) / diameter; cross-component
// pairs count as infinite. curve[t] = 100 * fraction of errors <= t.
EvalReport princeton_curve(const std::vector<std::pair<int, int>>& matches,
                           const std::vector<std::pair<int, int>>& ground_truth,
                           const GeodesicIndex& index, const std::vector<double>& thresholds,
                           int threads = 1);

// 0, 0.0025, ..., 0.25.
std::vector<double> default_thresholds();

// Exact distance from each registered point to the nearest point of any
// target face (triangle-fan split for larger faces; segments in 2D).
SurfaceDistanceReport surface_distance(const PointCloud& registered, const Mesh& target,
                                       int threads = 1);

// CSV with "threshold,percent" rows and a final "mean_error=<v>" line.
void save_eval_report(const std::string& path, const EvalReport& report);

}  // namespace morphflow
