#include "morphflow/config.hpp"

#include <fstream>

namespace morphflow {
namespace {

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& value, const std::string& context) {
  size_t used = 0;
  double v = 0;
  try {
    v = std::stod(value, &used);
  } catch (const std::exception&) {
    throw ParseError(context + ": not a number: '" + value + "'");
  }
  if (used != value.size()) throw ParseError(context + ": not a number: '" + value + "'");
  return v;
}

int parse_int(const std::string& value, const std::string& context) {
  size_t used = 0;
  long v = 0;
  try {
    v = std::stol(value, &used);
  } catch (const std::exception&) {
    throw ParseError(context + ": not an integer: '" + value + "'");
  }
  if (used != value.size()) throw ParseError(context + ": not an integer: '" + value + "'");
  return static_cast<int>(v);
}

std::uint64_t parse_u64(const std::string& value, const std::string& context) {
  size_t used = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(value, &used);
  } catch (const std::exception&) {
    throw ParseError(context + ": not a nonnegative integer: '" + value + "'");
  }
  if (used != value.size())
    throw ParseError(context + ": not a nonnegative integer: '" + value + "'");
  return v;
}

}  // namespace

void apply_config_key(RunConfig& config, const std::string& key, const std::string& value,
                      const std::string& context) {
  if (key == "dimension") {
    config.dimension = parse_int(value, context);
    if (config.dimension != 2 && config.dimension != 3)
      throw ParseError(context + ": dimension must be 2 or 3");
  } else if (key == "sigma2") {
    config.sigma2 = parse_double(value, context);
  } else if (key == "steps") {
    config.steps = parse_int(value, context);
  } else if (key == "basis_k") {
    config.basis_k = parse_int(value, context);
  } else if (key == "basis_exponent") {
    config.basis_exponent = parse_double(value, context);
  } else if (key == "downsample") {
    config.downsample = parse_int(value, context);
  } else if (key == "margin") {
    config.margin = parse_double(value, context);
  } else if (key == "huber_r0") {
    config.huber_r0 = parse_double(value, context);
  } else if (key == "max_iters") {
    config.max_iters = parse_int(value, context);
  } else if (key == "energy_tol") {
    config.energy_tol = parse_double(value, context);
  } else if (key == "descriptor_mode") {
    if (value != "shot" && value != "file" && value != "none")
      throw ParseError(context + ": descriptor_mode must be shot, file, or none");
    config.descriptor_mode = value;
  } else if (key == "descriptor_radius") {
    config.descriptor_radius = parse_double(value, context);
  } else if (key == "descriptor_source") {
    config.descriptor_source = value;
  } else if (key == "descriptor_target") {
    config.descriptor_target = value;
  } else if (key == "seed") {
    config.seed = parse_u64(value, context);
  } else if (key == "threads") {
    config.threads = parse_int(value, context);
  } else {
    throw ParseError(context + ": unknown key '" + key + "'");
  }
  config.explicit_keys.insert(key);
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  RunConfig config;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ParseError(path + ":" + std::to_string(line_no) + ": expected key=value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ParseError(path + ":" + std::to_string(line_no) + ": empty key");
    apply_config_key(config, key, value, path + ":" + std::to_string(line_no));
  }
  return config;
}

}  // namespace morphflow
