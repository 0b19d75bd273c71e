#pragma once

#include <string>
#include <utility>
#include <vector>

#include "morphflow/basis.hpp"
#include "morphflow/types.hpp"

namespace morphflow {

// Contents of a "MORPHFLOW-FIELD v1" coefficient file.
struct FieldFile {
  int dimension = 3;
  std::vector<ModeIndex> modes;
  Vector coefficients;

  int size() const { return static_cast<int>(modes.size()); }
};

// Header "MORPHFLOW-FIELD v1 D=<d> K=<k>", then one line per mode:
// "j1 j2 [j3] comp a_k" with 17 significant digits, so write -> read -> write
// is byte-identical.
void save_field(const std::string& path, const DeformationBasis& basis, const Vector& a);
FieldFile load_field(const std::string& path);

// Checks a loaded field against an enumerated basis; throws FieldMismatch.
void match_field_to_basis(const FieldFile& field, const DeformationBasis& basis);

// "source_index,target_index" header plus 0-based rows.
void save_correspondences(const std::string& path, const std::vector<std::pair<int, int>>& matches);
std::vector<std::pair<int, int>> load_correspondences(const std::string& path);

// "iteration,energy" rows, full precision.
void save_energy_history(const std::string& path, const std::vector<double>& history);

}  // namespace morphflow
