#pragma once

#include <cstdint>
#include <set>
#include <string>

#include "morphflow/types.hpp"

namespace morphflow {

// Flat key=value run configuration; every key mirrors a CLI flag and the
// flag wins. threads < 0 means unset (falls back to MORPHFLOW_THREADS, then
// all cores); basis_exponent < 0 means the default D/2.
struct RunConfig {
  int dimension = 3;
  double sigma2 = 0.01;
  int steps = 20;
  int basis_k = 3000;
  double basis_exponent = -1.0;
  int downsample = 3000;
  double margin = 0.1;
  double huber_r0 = 0.01;
  int max_iters = 100;
  double energy_tol = 1e-5;
  std::string descriptor_mode = "shot";
  double descriptor_radius = 0.1;
  std::string descriptor_source;
  std::string descriptor_target;
  std::uint64_t seed = 0;
  int threads = -1;

  std::string source_path;
  std::string target_path;
  std::string output_dir = ".";

  std::set<std::string> explicit_keys;

  bool is_set(const std::string& key) const { return explicit_keys.count(key) > 0; }
  double exponent_or_default() const {
    return basis_exponent < 0.0 ? dimension / 2.0 : basis_exponent;
  }
};

// Applies one key=value pair; records the key as explicit.
void apply_config_key(RunConfig& config, const std::string& key, const std::string& value,
                      const std::string& context);

// Parses a config file ('#' comments, blank lines allowed).
RunConfig load_config(const std::string& path);

}  // namespace morphflow
