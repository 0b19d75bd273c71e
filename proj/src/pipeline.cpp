#include "morphflow/pipeline.hpp"

#include <chrono>
#include <filesystem>

#include "json.hpp"
#include "morphflow/basis.hpp"
#include "morphflow/descriptors.hpp"
#include "morphflow/em.hpp"
#include "morphflow/flow.hpp"
#include "morphflow/io_util.hpp"
#include "morphflow/parallel.hpp"
#include "morphflow/run_io.hpp"
#include "morphflow/shape_io.hpp"

namespace morphflow {
namespace {

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}

  double lap_ms() {
    auto now = std::chrono::steady_clock::now();
    double ms = std::chrono::duration<double, std::milli>(now - start_).count();
    start_ = now;
    return ms;
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

std::string join_path(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

PointCloud subset(const PointCloud& cloud, const SampleIndexSet& sample) {
  PointCloud out;
  out.points.resize(sample.count(), cloud.points.cols());
  if (cloud.has_normals()) out.normals.resize(sample.count(), cloud.normals.cols());
  for (int i = 0; i < sample.count(); ++i) {
    out.points.row(i) = cloud.points.row(sample.indices[i]);
    if (cloud.has_normals()) out.normals.row(i) = cloud.normals.row(sample.indices[i]);
  }
  out.id = cloud.id;
  return out;
}

DescriptorSet subset(const DescriptorSet& set, const SampleIndexSet& sample) {
  if (set.empty()) return set;
  DescriptorSet out;
  out.provenance = set.provenance;
  out.vectors.resize(sample.count(), set.vectors.cols());
  for (int i = 0; i < sample.count(); ++i)
    out.vectors.row(i) = set.vectors.row(sample.indices[i]);
  return out;
}

// Full-resolution descriptors for one normalized cloud under the configured
// mode; shot falls back to estimated normals when the file carried none.
DescriptorSet make_descriptors(const PointCloud& cloud, const RunConfig& config,
                               const std::string& file_path, int threads) {
  if (config.descriptor_mode == "none") return {};
  if (config.descriptor_mode == "file") {
    if (file_path.empty())
      throw Error("descriptor_mode=file needs descriptor_source and descriptor_target");
    return load_descriptors(file_path, cloud.size());
  }
  if (cloud.dim() != 3)
    throw Error("descriptor_mode=shot needs 3-d shapes; use descriptor_mode=none");
  if (cloud.has_normals()) return compute_descriptors(cloud, config.descriptor_radius, {}, threads);
  PointCloud with_normals = estimate_normals(cloud, std::min(16, cloud.size()), threads);
  return compute_descriptors(with_normals, config.descriptor_radius, {}, threads);
}

nlohmann::ordered_json config_snapshot(const RunConfig& config, int dimension, double exponent) {
  nlohmann::ordered_json j;
  j["source"] = config.source_path;
  j["target"] = config.target_path;
  j["output_dir"] = config.output_dir;
  j["dimension"] = dimension;
  j["sigma2"] = config.sigma2;
  j["steps"] = config.steps;
  j["basis_k"] = config.basis_k;
  j["basis_exponent"] = exponent;
  j["downsample"] = config.downsample;
  j["margin"] = config.margin;
  j["huber_r0"] = config.huber_r0;
  j["max_iters"] = config.max_iters;
  j["energy_tol"] = config.energy_tol;
  j["descriptor_mode"] = config.descriptor_mode;
  j["descriptor_radius"] = config.descriptor_radius;
  j["descriptor_source"] = config.descriptor_source;
  j["descriptor_target"] = config.descriptor_target;
  j["seed"] = config.seed;
  j["threads"] = config.threads;
  return j;
}

}  // namespace

NormalizedPair load_and_normalize(const RunConfig& config) {
  if (config.source_path.empty() || config.target_path.empty())
    throw Error("source and target paths are required");
  Mesh source = load_shape(config.source_path);
  Mesh target = load_shape(config.target_path);
  if (source.cloud.dim() != target.cloud.dim())
    throw Error("source is " + std::to_string(source.cloud.dim()) + "-d but target is " +
                std::to_string(target.cloud.dim()) + "-d");
  if (config.is_set("dimension") && config.dimension != source.cloud.dim())
    throw Error("config dimension " + std::to_string(config.dimension) +
                " does not match the " + std::to_string(source.cloud.dim()) + "-d inputs");

  auto [src_aligned, tgt_aligned] = pca_align(source.cloud, target.cloud);
  NormalizedPair pair;
  pair.transform = fit_domain(src_aligned, tgt_aligned, config.margin);
  src_aligned.points = pair.transform.apply(src_aligned.points);
  tgt_aligned.points = pair.transform.apply(tgt_aligned.points);
  pair.source = Mesh{std::move(src_aligned), std::move(source.faces)};
  pair.target = Mesh{std::move(tgt_aligned), std::move(target.faces)};
  return pair;
}

RegistrationResult cmd_register(const RunConfig& config) {
  const int threads = resolve_threads(config.threads);
  std::filesystem::create_directories(config.output_dir);

  Stopwatch watch;
  RegistrationResult result;
  NormalizedPair pair = load_and_normalize(config);
  const int dimension = pair.source.cloud.dim();
  const double exponent = config.basis_exponent < 0.0 ? dimension / 2.0 : config.basis_exponent;
  result.source_size = pair.source.cloud.size();
  result.target_size = pair.target.cloud.size();
  result.timings_ms.push_back({"load", watch.lap_ms()});

  DescriptorSet desc_x =
      make_descriptors(pair.source.cloud, config, config.descriptor_source, threads);
  DescriptorSet desc_y =
      make_descriptors(pair.target.cloud, config, config.descriptor_target, threads);
  result.timings_ms.push_back({"descriptors", watch.lap_ms()});

  const int ns = std::min(config.downsample, pair.source.cloud.size());
  const int nt = std::min(config.downsample, pair.target.cloud.size());
  SampleIndexSet sample_x =
      farthest_point_sample(pair.source.cloud, ns, centroid_seed(pair.source.cloud));
  SampleIndexSet sample_y =
      farthest_point_sample(pair.target.cloud, nt, centroid_seed(pair.target.cloud));
  PointCloud em_x = subset(pair.source.cloud, sample_x);
  PointCloud em_y = subset(pair.target.cloud, sample_y);
  result.sampled_source = em_x.size();
  result.sampled_target = em_y.size();
  result.timings_ms.push_back({"downsample", watch.lap_ms()});

  DeformationBasis basis = enumerate_basis(dimension, config.basis_k, exponent);
  result.basis_size = basis.size();
  FlowConfig flow_cfg{config.steps};
  EmConfig em_cfg;
  em_cfg.sigma2 = config.sigma2;
  em_cfg.r0 = config.huber_r0;
  em_cfg.max_iters = config.max_iters;
  em_cfg.rel_energy_tol = config.energy_tol;

  EmState state = run_em(em_x, em_y, basis, subset(desc_x, sample_x), subset(desc_y, sample_y),
                         flow_cfg, em_cfg, threads);
  result.coefficients = state.a;
  result.energy_history = state.energy_history;
  result.iterations = state.iteration;
  result.monotonicity_flagged = state.monotonicity_flagged;
  result.mean_outlier_mass =
      state.w.outlier_mass.size() > 0 ? state.w.outlier_mass.mean() : 0.0;
  result.timings_ms.push_back({"em", watch.lap_ms()});

  TrajectoryBundle full = integrate(pair.source.cloud, basis, state.a, flow_cfg, threads);
  DistanceModel full_model = build_distance_model(pair.source.cloud.points,
                                                  pair.target.cloud.points, desc_x, desc_y,
                                                  threads);
  result.correspondences =
      extract_correspondences(full.endpoints(), pair.target.cloud.points, full_model, threads);
  result.timings_ms.push_back({"full_resolution", watch.lap_ms()});

  save_field(join_path(config.output_dir, "field.txt"), basis, state.a);
  save_correspondences(join_path(config.output_dir, "correspondences.csv"),
                       result.correspondences);
  save_energy_history(join_path(config.output_dir, "energy.csv"), state.energy_history);

  Mesh registered;
  registered.cloud.points = full.endpoints();
  registered.cloud.id = "registered";
  registered.faces = pair.source.faces;
  write_shape(join_path(config.output_dir, "registered.off"), registered, ShapeFormat::Off);
  result.timings_ms.push_back({"outputs", watch.lap_ms()});

  nlohmann::ordered_json manifest;
  manifest["config"] = config_snapshot(config, dimension, exponent);
  manifest["sizes"] = {{"source", result.source_size},
                       {"target", result.target_size},
                       {"sampled_source", result.sampled_source},
                       {"sampled_target", result.sampled_target},
                       {"basis", result.basis_size}};
  manifest["iterations"] = result.iterations;
  manifest["monotonicity_flagged"] = result.monotonicity_flagged;
  manifest["final_energy"] =
      result.energy_history.empty() ? 0.0 : result.energy_history.back();
  manifest["mean_outlier_mass"] = result.mean_outlier_mass;
  nlohmann::ordered_json timings;
  for (const auto& [name, ms] : result.timings_ms) timings[name] = ms;
  manifest["timings_ms"] = timings;
  AtomicWriter manifest_out(join_path(config.output_dir, "manifest.json"));
  manifest_out.stream() << manifest.dump(2) << '\n';
  manifest_out.commit();

  return result;
}

std::vector<std::string> cmd_morph(const RunConfig& config, const std::string& field_path,
                                   const std::vector<double>& times) {
  if (times.empty()) throw Error("no times given");
  double t_max = 0.0;
  for (double t : times) {
    if (!(t >= 0.0 && t <= 2.0)) throw Error("times must lie in [0, 2]");
    t_max = std::max(t_max, t);
  }
  const int threads = resolve_threads(config.threads);
  std::filesystem::create_directories(config.output_dir);

  NormalizedPair pair = load_and_normalize(config);
  const int dimension = pair.source.cloud.dim();
  const double exponent = config.basis_exponent < 0.0 ? dimension / 2.0 : config.basis_exponent;

  FieldFile field = load_field(field_path);
  const int K = config.is_set("basis_k") ? config.basis_k : field.size();
  DeformationBasis basis = enumerate_basis(dimension, K, exponent);
  match_field_to_basis(field, basis);

  FlowConfig flow_cfg{config.steps};
  TrajectoryBundle bundle =
      t_max <= 1.0 ? integrate(pair.source.cloud, basis, field.coefficients, flow_cfg, threads)
                   : extrapolate(pair.source.cloud, basis, field.coefficients, flow_cfg, t_max,
                                 threads);

  std::vector<std::string> written;
  for (double t : times) {
    Mesh frame;
    frame.cloud = sample_time(bundle, t);
    frame.cloud.normals.resize(0, 0);
    frame.cloud.id = "morph";
    frame.faces = pair.source.faces;
    std::string path =
        join_path(config.output_dir, "morph_t" + format_double(t, "%g") + ".off");
    write_shape(path, frame, ShapeFormat::Off);
    written.push_back(path);
  }
  return written;
}

EvalReport cmd_evaluate(const std::string& matches_path, const std::string& truth_path,
                        const std::string& target_mesh_path, const std::string& report_path,
                        int threads) {
  threads = resolve_threads(threads);
  auto matches = load_correspondences(matches_path);
  if (matches.empty()) throw Error("no matches in " + matches_path);
  auto truth = load_correspondences(truth_path);
  if (truth.empty()) throw Error("no ground truth in " + truth_path);
  Mesh target = load_shape(target_mesh_path);
  GeodesicIndex index = build_geodesic_index(target, 20, threads);
  EvalReport report = princeton_curve(matches, truth, index, default_thresholds(), threads);
  save_eval_report(report_path, report);
  return report;
}

void cmd_basis_info(const RunConfig& config, const std::string& table_path,
                    const std::string& grid_path, int grid_mode, int grid_resolution) {
  const int dimension = config.dimension;
  DeformationBasis basis =
      enumerate_basis(dimension, config.basis_k, config.exponent_or_default());

  AtomicWriter table(table_path);
  table.stream() << (dimension == 3 ? "k,j1,j2,j3,component,laplace_eigenvalue,kl_weight"
                                    : "k,j1,j2,component,laplace_eigenvalue,kl_weight")
                 << '\n';
  for (int k = 0; k < basis.size(); ++k) {
    const ModeIndex& m = basis.modes[k];
    table.stream() << k;
    for (int d = 0; d < dimension; ++d) table.stream() << ',' << m.j[d];
    table.stream() << ',' << m.component << ',' << format_double(basis.laplace_eigenvalues[k])
                   << ',' << format_double(basis.kl_weights[k]) << '\n';
  }
  table.commit();

  if (grid_path.empty()) return;
  if (grid_mode < 1 || grid_mode > basis.size())
    throw Error("grid mode must lie in [1, " + std::to_string(basis.size()) + "]");
  if (grid_resolution < 2) throw Error("grid resolution must be at least 2");
  const ModeIndex& mode = basis.modes[grid_mode - 1];

  AtomicWriter grid(grid_path);
  grid.stream() << (dimension == 3 ? "x1,x2,v1,v2,v3" : "x1,x2,v1,v2") << '\n';
  Vector x = Vector::Constant(dimension, 0.5);
  for (int i = 0; i < grid_resolution; ++i) {
    x[0] = static_cast<double>(i) / (grid_resolution - 1);
    for (int j = 0; j < grid_resolution; ++j) {
      x[1] = static_cast<double>(j) / (grid_resolution - 1);
      Vector v = basis_field(mode, x);
      grid.stream() << format_double(x[0]) << ',' << format_double(x[1]);
      for (int d = 0; d < dimension; ++d) grid.stream() << ',' << format_double(v[d]);
      grid.stream() << '\n';
    }
  }
  grid.commit();
}

}  // namespace morphflow
