#include "morphflow/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <queue>
#include <set>

#include "morphflow/domain.hpp"
#include "morphflow/io_util.hpp"
#include "morphflow/parallel.hpp"

namespace morphflow {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double point_segment_d2(const Vector& p, const Vector& a, const Vector& b) {
  Vector ab = b - a;
  double len2 = ab.squaredNorm();
  if (len2 <= 0.0) return (p - a).squaredNorm();
  double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return (p - (a + t * ab)).squaredNorm();
}

// Closest-point-on-triangle via barycentric region tests; falls back to edge
// distances for degenerate triangles.
double point_triangle_d2(const Vector& p, const Vector& a, const Vector& b, const Vector& c) {
  Vector ab = b - a, ac = c - a, ap = p - a;
  double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) return (p - a).squaredNorm();
  Vector bp = p - b;
  double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) return (p - b).squaredNorm();
  double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {
    double v = d1 / (d1 - d3);
    return (p - (a + v * ab)).squaredNorm();
  }
  Vector cp = p - c;
  double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) return (p - c).squaredNorm();
  double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {
    double w = d2 / (d2 - d6);
    return (p - (a + w * ac)).squaredNorm();
  }
  double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
    return (p - (b + w * (c - b))).squaredNorm();
  }
  double denom = va + vb + vc;
  if (!(std::abs(denom) > 0.0))
    return std::min({point_segment_d2(p, a, b), point_segment_d2(p, b, c),
                     point_segment_d2(p, a, c)});
  double v = vb / denom, w = vc / denom;
  return (p - (a + ab * v + ac * w)).squaredNorm();
}

void check_vertex(const GeodesicIndex& index, int v, const char* what) {
  if (v < 0 || v >= index.vertex_count())
    throw Error(std::string(what) + " vertex " + std::to_string(v) + " out of range");
}

}  // namespace

GeodesicIndex build_geodesic_index(const Mesh& mesh, int diameter_sources, int threads) {
  mesh.validate();
  const int n = mesh.cloud.size();
  GeodesicIndex index;
  index.adjacency.resize(n);

  std::vector<std::set<int>> neighbor_sets(n);
  auto add_edge = [&](int u, int v) {
    neighbor_sets[u].insert(v);
    neighbor_sets[v].insert(u);
  };
  for (const auto& face : mesh.faces) {
    const int arity = static_cast<int>(face.size());
    for (int i = 0; i + 1 < arity; ++i) add_edge(face[i], face[i + 1]);
    if (arity >= 3) add_edge(face[arity - 1], face[0]);
  }
  for (int u = 0; u < n; ++u)
    for (int v : neighbor_sets[u]) {
      double len = (mesh.cloud.points.row(u) - mesh.cloud.points.row(v)).norm();
      if (len <= 0.0)
        throw Error("zero-length edge between vertices " + std::to_string(u) + " and " +
                    std::to_string(v));
      index.adjacency[u].push_back({v, len});
    }

  // Connected components by BFS.
  index.component.assign(n, -1);
  int comp = 0;
  std::vector<int> stack;
  for (int s = 0; s < n; ++s) {
    if (index.component[s] >= 0) continue;
    index.component[s] = comp;
    stack.push_back(s);
    while (!stack.empty()) {
      int u = stack.back();
      stack.pop_back();
      for (const auto& [v, w] : index.adjacency[u])
        if (index.component[v] < 0) {
          index.component[v] = comp;
          stack.push_back(v);
        }
    }
    ++comp;
  }

  // Diameter from a handful of well-spread sources.
  int sources = std::min(diameter_sources, n);
  SampleIndexSet sample = farthest_point_sample(mesh.cloud, sources, centroid_seed(mesh.cloud));
  Vector maxima = Vector::Zero(sources);
  parallel_chunks(sources, threads, [&](int, int begin, int end) {
    for (int i = begin; i < end; ++i) {
      Vector dist = geodesic_distances_from(index, sample.indices[i]);
      double far = 0.0;
      for (int v = 0; v < n; ++v)
        if (std::isfinite(dist[v])) far = std::max(far, dist[v]);
      maxima[i] = far;
    }
  });
  index.diameter = maxima.size() > 0 ? maxima.maxCoeff() : 0.0;
  return index;
}

Vector geodesic_distances_from(const GeodesicIndex& index, int source) {
  check_vertex(index, source, "source");
  const int n = index.vertex_count();
  Vector dist = Vector::Constant(n, kInf);
  dist[source] = 0.0;
  using Entry = std::pair<double, int>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<Entry>> heap;
  heap.push({0.0, source});
  while (!heap.empty()) {
    auto [d, u] = heap.top();
    heap.pop();
    if (d > dist[u]) continue;
    for (const auto& [v, w] : index.adjacency[u]) {
      double nd = d + w;
      if (nd < dist[v]) {
        dist[v] = nd;
        heap.push({nd, v});
      }
    }
  }
  return dist;
}

double geodesic_distance(const GeodesicIndex& index, int u, int v) {
  check_vertex(index, u, "start");
  check_vertex(index, v, "end");
  if (index.component[u] != index.component[v])
    throw Disconnected("vertices " + std::to_string(u) + " and " + std::to_string(v) +
                       " lie in different components");
  if (u == v) return 0.0;
  return geodesic_distances_from(index, u)[v];
}

EvalReport princeton_curve(const std::vector<std::pair<int, int>>& matches,
                           const std::vector<std::pair<int, int>>& ground_truth,
                           const GeodesicIndex& index, const std::vector<double>& thresholds,
                           int threads) {
  if (matches.empty()) throw Error("no matches to evaluate");
  std::map<int, int> truth;
  for (const auto& [src, tgt] : ground_truth) {
    check_vertex(index, tgt, "ground-truth");
    if (!truth.emplace(src, tgt).second)
      throw Error("ground truth repeats source " + std::to_string(src));
  }

  // One Dijkstra per distinct true target serves every match sharing it.
  std::vector<int> unique_truth;
  for (const auto& [src, tgt] : truth) unique_truth.push_back(tgt);
  std::sort(unique_truth.begin(), unique_truth.end());
  unique_truth.erase(std::unique(unique_truth.begin(), unique_truth.end()), unique_truth.end());
  const int u = static_cast<int>(unique_truth.size());
  std::vector<Vector> fields(u);
  parallel_chunks(u, threads, [&](int, int begin, int end) {
    for (int i = begin; i < end; ++i) fields[i] = geodesic_distances_from(index, unique_truth[i]);
  });
  std::map<int, const Vector*> field_of;
  for (int i = 0; i < u; ++i) field_of[unique_truth[i]] = &fields[i];

  EvalReport report;
  report.per_point_error.reserve(matches.size());
  for (const auto& [src, predicted] : matches) {
    check_vertex(index, predicted, "match");
    auto it = truth.find(src);
    if (it == truth.end())
      throw Error("match source " + std::to_string(src) + " missing from ground truth");
    double d = (*field_of[it->second])[predicted];
    double eps;
    if (!std::isfinite(d))
      eps = kInf;
    else if (d == 0.0)
      eps = 0.0;
    else if (index.diameter > 0.0)
      eps = d / index.diameter;
    else
      eps = kInf;
    report.per_point_error.push_back(eps);
  }

  const double count = static_cast<double>(report.per_point_error.size());
  for (double t : thresholds) {
    int below = 0;
    for (double e : report.per_point_error)
      if (e <= t) ++below;
    report.curve.push_back({t, 100.0 * below / count});
  }
  double sum = 0.0;
  for (double e : report.per_point_error) sum += e;
  report.mean_error = sum / count;
  return report;
}

std::vector<double> default_thresholds() {
  std::vector<double> grid;
  for (int i = 0; i <= 100; ++i) grid.push_back(i * 0.0025);
  return grid;
}

SurfaceDistanceReport surface_distance(const PointCloud& registered, const Mesh& target,
                                       int threads) {
  registered.validate();
  target.validate();
  if (target.faces.empty()) throw Error("surface distance needs target faces");
  if (registered.dim() != target.cloud.dim()) throw Error("dimensions differ");
  const int n = registered.size();
  const int dim = registered.dim();

  SurfaceDistanceReport report;
  report.per_point.resize(n);
  parallel_chunks(n, threads, [&](int, int begin, int end) {
    for (int i = begin; i < end; ++i) {
      Vector p = registered.points.row(i).transpose();
      double best = kInf;
      for (const auto& face : target.faces) {
        if (dim == 2 || face.size() == 2) {
          for (size_t e = 0; e + 1 < face.size(); ++e)
            best = std::min(best,
                            point_segment_d2(p, target.cloud.points.row(face[e]).transpose(),
                                             target.cloud.points.row(face[e + 1]).transpose()));
        } else {
          Vector a = target.cloud.points.row(face[0]).transpose();
          for (size_t e = 1; e + 1 < face.size(); ++e)
            best = std::min(best,
                            point_triangle_d2(p, a, target.cloud.points.row(face[e]).transpose(),
                                              target.cloud.points.row(face[e + 1]).transpose()));
        }
      }
      report.per_point[i] = std::sqrt(best);
    }
  });
  report.avg = report.per_point.mean();
  report.max = report.per_point.maxCoeff();
  return report;
}

void save_eval_report(const std::string& path, const EvalReport& report) {
  AtomicWriter w(path);
  w.stream() << "threshold,percent\n";
  for (const auto& [t, p] : report.curve)
    w.stream() << format_double(t, "%.9g") << ',' << format_double(p, "%.9g") << '\n';
  w.stream() << "mean_error=" << format_double(report.mean_error, "%.9g") << '\n';
  w.commit();
}

}  // namespace morphflow
