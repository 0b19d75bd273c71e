#pragma once

#include <string>

#include "morphflow/types.hpp"

namespace morphflow {

enum class ShapeFormat { Off, PlyAscii, Obj };

// Chooses a format from the file extension (.off, .ply, .obj).
ShapeFormat shape_format_from_path(const std::string& path);

// Reads a mesh (or bare point cloud) from an ascii OFF/NOFF, ascii PLY, or
// OBJ file. Points keep file order; faces stay empty when absent; normals are
// read when present and renormalized to unit length. Binary PLY is rejected.
Mesh load_shape(const std::string& path, ShapeFormat format);
Mesh load_shape(const std::string& path);

// Writes a mesh in the given format with 9 significant digits per coordinate.
// The file is written atomically (temp + rename).
void write_shape(const std::string& path, const Mesh& mesh, ShapeFormat format);
void write_shape(const std::string& path, const Mesh& mesh);

}  // namespace morphflow
