#include "morphflow/types.hpp"

#include <cmath>
#include <string>

namespace morphflow {

void PointCloud::validate() const {
  if (points.rows() < 1) throw Error("point cloud '" + id + "' is empty");
  if (dim() != 2 && dim() != 3)
    throw Error("point cloud '" + id + "' has dimension " + std::to_string(dim()));
  if (!all_finite(points)) throw Error("point cloud '" + id + "' holds non-finite coordinates");
  if (has_normals()) {
    if (normals.rows() != points.rows() || normals.cols() != points.cols())
      throw Error("point cloud '" + id + "' normals do not match points");
    for (int i = 0; i < normals.rows(); ++i)
      if (std::abs(normals.row(i).norm() - 1.0) > 1e-9)
        throw Error("point cloud '" + id + "' normal " + std::to_string(i) + " is not unit length");
  }
}

void Mesh::validate() const {
  cloud.validate();
  for (size_t f = 0; f < faces.size(); ++f) {
    const auto& face = faces[f];
    if (face.size() < 2) throw Error("face " + std::to_string(f) + " has fewer than 2 indices");
    for (size_t i = 0; i < face.size(); ++i) {
      if (face[i] < 0 || face[i] >= cloud.size())
        throw Error("face " + std::to_string(f) + " references vertex " + std::to_string(face[i]) +
                    " outside [0, " + std::to_string(cloud.size()) + ")");
      for (size_t j = 0; j < i; ++j)
        if (face[i] == face[j])
          throw Error("face " + std::to_string(f) + " repeats vertex " + std::to_string(face[i]));
    }
  }
}

}  // namespace morphflow
