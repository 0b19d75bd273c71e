#include "morphflow/descriptors.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <vector>

#include "morphflow/io_util.hpp"
#include "morphflow/parallel.hpp"

namespace morphflow {
namespace {

constexpr double kPi = std::numbers::pi;

// k smallest (squared distance, index) pairs from point i to the cloud,
// self included, ordered for a reproducible accumulation order.
std::vector<std::pair<double, int>> k_nearest(const Matrix& pts, int i, int k) {
  const int n = static_cast<int>(pts.rows());
  std::vector<std::pair<double, int>> dist(n);
  for (int j = 0; j < n; ++j) dist[j] = {(pts.row(j) - pts.row(i)).squaredNorm(), j};
  std::nth_element(dist.begin(), dist.begin() + (k - 1), dist.end());
  dist.resize(k);
  std::sort(dist.begin(), dist.end());
  return dist;
}

// Flips v so its largest-magnitude component is positive (lowest index on
// magnitude ties); used when the oriented rule is degenerate.
void canonical_sign(Vector& v) {
  int arg = 0;
  for (int d = 1; d < v.size(); ++d)
    if (std::abs(v[d]) > std::abs(v[arg])) arg = d;
  if (v[arg] < 0) v = -v;
}

}  // namespace

PointCloud estimate_normals(const PointCloud& cloud, int k_neighbors, int threads) {
  cloud.validate();
  const int n = cloud.size();
  const int dim = cloud.dim();
  if (k_neighbors < 3) throw Error("normal estimation needs at least 3 neighbors");
  if (k_neighbors > n) throw Error("neighborhood larger than the cloud");

  Eigen::RowVectorXd cloud_centroid = cloud.points.colwise().mean();
  PointCloud out = cloud;
  out.normals.resize(n, dim);
  std::vector<std::string> failures(chunk_count(n));

  parallel_chunks(n, threads, [&](int chunk, int begin, int end) {
    for (int i = begin; i < end; ++i) {
      auto nb = k_nearest(cloud.points, i, k_neighbors);
      Eigen::RowVectorXd local = Eigen::RowVectorXd::Zero(dim);
      for (const auto& [d2, j] : nb) local += cloud.points.row(j);
      local /= static_cast<double>(k_neighbors);
      Matrix cov = Matrix::Zero(dim, dim);
      for (const auto& [d2, j] : nb) {
        Eigen::RowVectorXd o = cloud.points.row(j) - local;
        cov += o.transpose() * o;
      }
      Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
      // A 3D neighborhood needs rank 2 (a surface patch); a 2D one needs
      // rank 1 (a curve segment).
      double largest = eig.eigenvalues()[dim - 1];
      double second = eig.eigenvalues()[1];
      if (!(largest > 1e-30) || (dim == 3 && second <= 1e-9 * largest)) {
        if (failures[chunk].empty())
          failures[chunk] = "neighborhood of point " + std::to_string(i) + " has rank < 2";
        continue;
      }
      Vector normal = eig.eigenvectors().col(0);
      double side = normal.dot((local - cloud_centroid).transpose());
      if (side < -1e-12)
        normal = -normal;
      else if (side <= 1e-12)
        canonical_sign(normal);
      out.normals.row(i) = normal.transpose();
    }
  });

  for (const auto& f : failures)
    if (!f.empty()) throw DegenerateNeighborhood(f);
  return out;
}

DescriptorSet compute_descriptors(const PointCloud& cloud, double radius, ShotBins bins,
                                  int threads) {
  cloud.validate();
  if (!cloud.has_normals()) throw Error("descriptors need normals");
  if (cloud.dim() != 3) throw Error("descriptors are defined for 3D clouds");
  if (radius <= 0.0) throw Error("descriptor radius must be positive");
  if (bins.radial < 1 || bins.azimuth < 1 || bins.elevation < 1 || bins.cosine < 1)
    throw Error("descriptor bin counts must be positive");

  const int n = cloud.size();
  const double r2 = radius * radius;
  DescriptorSet set;
  set.provenance = DescriptorProvenance::computed;
  set.vectors = Matrix::Zero(n, bins.width());

  parallel_chunks(n, threads, [&](int, int begin, int end) {
    std::vector<int> nb;
    for (int i = begin; i < end; ++i) {
      nb.clear();
      for (int j = 0; j < n; ++j)
        if (j != i && (cloud.points.row(j) - cloud.points.row(i)).squaredNorm() <= r2)
          nb.push_back(j);
      if (static_cast<int>(nb.size()) < 3) continue;

      Eigen::Vector3d p = cloud.points.row(i);
      Matrix cov = Matrix::Zero(3, 3);
      for (int j : nb) {
        Eigen::Vector3d o = cloud.points.row(j).transpose() - p;
        cov += o * o.transpose();
      }
      Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
      if (eig.eigenvalues()[2] <= 1e-30) continue;
      Eigen::Vector3d z = eig.eigenvectors().col(0);
      Eigen::Vector3d x = eig.eigenvectors().col(2);

      // Majority sign disambiguation over the neighbor directions.
      int xp = 0, xn = 0, zp = 0, zn = 0;
      for (int j : nb) {
        Eigen::Vector3d o = cloud.points.row(j).transpose() - p;
        double dx = o.dot(x), dz = o.dot(z);
        if (dx > 0) ++xp;
        if (dx < 0) ++xn;
        if (dz > 0) ++zp;
        if (dz < 0) ++zn;
      }
      if (xn > xp) x = -x;
      if (zn > zp) z = -z;
      Eigen::Vector3d y = z.cross(x);

      for (int j : nb) {
        Eigen::Vector3d o = cloud.points.row(j).transpose() - p;
        double r = o.norm();
        if (r <= 0.0) continue;
        double lx = o.dot(x), ly = o.dot(y), lz = o.dot(z);
        int rb = std::min(static_cast<int>(r / radius * bins.radial), bins.radial - 1);
        double az = std::atan2(ly, lx);
        int ab = std::min(static_cast<int>((az + kPi) / (2.0 * kPi) * bins.azimuth),
                          bins.azimuth - 1);
        ab = std::max(ab, 0);
        double el = std::asin(std::clamp(lz / r, -1.0, 1.0));
        int eb = std::min(static_cast<int>((el + kPi / 2.0) / kPi * bins.elevation),
                          bins.elevation - 1);
        eb = std::max(eb, 0);
        double cn = std::clamp(cloud.normals.row(j).transpose().dot(z), -1.0, 1.0);
        int cb = std::min(static_cast<int>((cn + 1.0) / 2.0 * bins.cosine), bins.cosine - 1);
        cb = std::max(cb, 0);
        int idx = ((rb * bins.azimuth + ab) * bins.elevation + eb) * bins.cosine + cb;
        set.vectors(i, idx) += 1.0;
      }
      double norm = set.vectors.row(i).norm();
      if (norm > 0.0) set.vectors.row(i) /= norm;
    }
  });
  return set;
}

DescriptorSet load_descriptors(const std::string& path, int expected_n) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  std::string header;
  if (!std::getline(in, header)) throw ParseError(path + ":1: empty file");
  if (!header.empty() && header.back() == '\r') header.pop_back();
  std::istringstream hs(header);
  std::string magic, version;
  int n = 0, f = 0;
  if (!(hs >> magic >> version >> n >> f) || magic != "MORPHFLOW-DESC" || version != "v1")
    throw ParseError(path + ":1: expected header 'MORPHFLOW-DESC v1 <N> <F>'");
  if (n < 1 || f < 1) throw ParseError(path + ":1: descriptor counts must be positive");
  if (expected_n >= 0 && n != expected_n)
    throw RowCountMismatch(path + " holds " + std::to_string(n) + " rows, expected " +
                           std::to_string(expected_n));

  DescriptorSet set;
  set.provenance = DescriptorProvenance::ingested;
  set.vectors.resize(n, f);
  std::string line;
  for (int i = 0; i < n; ++i) {
    if (!std::getline(in, line))
      throw RowCountMismatch(path + " holds " + std::to_string(i) + " rows, expected " +
                             std::to_string(n));
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::string cell;
    for (int c = 0; c < f; ++c) {
      if (!std::getline(ls, cell, ','))
        throw ParseError(path + ":" + std::to_string(i + 2) + ": expected " + std::to_string(f) +
                         " values");
      try {
        set.vectors(i, c) = std::stod(cell);
      } catch (const std::exception&) {
        throw ParseError(path + ":" + std::to_string(i + 2) + ": not a number: '" + cell + "'");
      }
    }
  }
  if (!all_finite(set.vectors)) throw ParseError(path + ": non-finite descriptor entries");
  return set;
}

void save_descriptors(const std::string& path, const DescriptorSet& set) {
  AtomicWriter w(path);
  w.stream() << "MORPHFLOW-DESC v1 " << set.count() << ' ' << set.width() << '\n';
  for (int i = 0; i < set.count(); ++i) {
    for (int c = 0; c < set.width(); ++c) {
      if (c) w.stream() << ',';
      w.stream() << format_double(set.vectors(i, c), "%.9g");
    }
    w.stream() << '\n';
  }
  w.commit();
}

DistanceModel build_distance_model(const Matrix& x_points, const Matrix& y_points,
                                   const DescriptorSet& desc_x, const DescriptorSet& desc_y,
                                   int threads) {
  const int n = static_cast<int>(x_points.rows());
  const int m = static_cast<int>(y_points.rows());
  if (n < 1 || m < 1) throw Error("distance model needs nonempty clouds");

  DistanceModel model;
  const bool with_desc = !desc_x.empty() && !desc_y.empty();
  if (!desc_x.empty() != !desc_y.empty()) throw Error("descriptors present on only one cloud");
  if (with_desc) {
    if (desc_x.width() != desc_y.width()) throw Error("descriptor widths differ");
    if (desc_x.count() != n || desc_y.count() != m)
      throw RowCountMismatch("descriptor rows do not match cloud sizes");
    model.descriptor_distances.resize(n, m);
  }

  // Row sums are computed serially per row and combined serially over rows,
  // so the means do not depend on the thread count.
  Vector row_euclid = Vector::Zero(n);
  Vector row_desc = Vector::Zero(n);
  parallel_chunks(n, threads, [&](int, int begin, int end) {
    for (int i = begin; i < end; ++i) {
      double se = 0.0, sd = 0.0;
      for (int j = 0; j < m; ++j) {
        se += (x_points.row(i) - y_points.row(j)).norm();
        if (with_desc) {
          double dd = (desc_x.vectors.row(i) - desc_y.vectors.row(j)).norm();
          model.descriptor_distances(i, j) = dd;
          sd += dd;
        }
      }
      row_euclid[i] = se;
      row_desc[i] = sd;
    }
  });
  double count = static_cast<double>(n) * static_cast<double>(m);
  model.mean_euclid = row_euclid.sum() / count;
  model.mean_descriptor = with_desc ? row_desc.sum() / count : 0.0;
  return model;
}

}  // namespace morphflow
