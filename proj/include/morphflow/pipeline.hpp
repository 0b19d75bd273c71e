#pragma once

#include <string>
#include <utility>
#include <vector>

#include "morphflow/config.hpp"
#include "morphflow/domain.hpp"
#include "morphflow/eval.hpp"
#include "morphflow/types.hpp"

namespace morphflow {

// Source and target after PCA alignment and the shared domain transform;
// faces and ids survive, coordinates live in [margin, 1-margin]^D.
struct NormalizedPair {
  Mesh source;
  Mesh target;
  DomainTransform transform;
};

NormalizedPair load_and_normalize(const RunConfig& config);

struct RegistrationResult {
  Vector coefficients;
  std::vector<std::pair<int, int>> correspondences;
  std::vector<double> energy_history;
  int iterations = 0;
  bool monotonicity_flagged = false;
  double mean_outlier_mass = 0.0;
  int source_size = 0;
  int target_size = 0;
  int sampled_source = 0;
  int sampled_target = 0;
  int basis_size = 0;
  std::vector<std::pair<std::string, double>> timings_ms;
};

// Full pipeline: load, align, normalize, downsample, descriptors, EM; writes
// field.txt, correspondences.csv, energy.csv, registered.off, manifest.json
// into config.output_dir.
RegistrationResult cmd_register(const RunConfig& config);

// Integrates the full-resolution source under a saved field and writes one
// shape file per time; returns the written paths. Times live in [0, 2].
std::vector<std::string> cmd_morph(const RunConfig& config, const std::string& field_path,
                                   const std::vector<double>& times);

// Princeton-protocol curve of predicted vs true matches over the target mesh;
// writes the report CSV and returns it.
EvalReport cmd_evaluate(const std::string& matches_path, const std::string& truth_path,
                        const std::string& target_mesh_path, const std::string& report_path,
                        int threads = -1);

// Emits the (k, j, component, eigenvalue, weight) table; optionally samples
// one basis field on a grid cross-section (x3 = 0.5 in 3D).
void cmd_basis_info(const RunConfig& config, const std::string& table_path,
                    const std::string& grid_path = "", int grid_mode = 1,
                    int grid_resolution = 33);

}  // namespace morphflow
