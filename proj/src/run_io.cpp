#include "morphflow/run_io.hpp"

#include <fstream>
#include <sstream>

#include "morphflow/io_util.hpp"

namespace morphflow {
namespace {

[[noreturn]] void fail(const std::string& path, int line, const std::string& msg) {
  throw ParseError(path + ":" + std::to_string(line) + ": " + msg);
}

}  // namespace

void save_field(const std::string& path, const DeformationBasis& basis, const Vector& a) {
  if (a.size() != basis.size()) throw Error("coefficient length does not match basis");
  AtomicWriter w(path);
  w.stream() << "MORPHFLOW-FIELD v1 D=" << basis.dimension << " K=" << basis.size() << '\n';
  for (int k = 0; k < basis.size(); ++k) {
    const ModeIndex& m = basis.modes[k];
    for (int d = 0; d < basis.dimension; ++d) w.stream() << m.j[d] << ' ';
    w.stream() << m.component << ' ' << format_double(a[k]) << '\n';
  }
  w.commit();
}

FieldFile load_field(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) fail(path, 1, "empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::istringstream hs(line);
  std::string magic, version, dtok, ktok;
  if (!(hs >> magic >> version >> dtok >> ktok) || magic != "MORPHFLOW-FIELD" || version != "v1" ||
      dtok.rfind("D=", 0) != 0 || ktok.rfind("K=", 0) != 0)
    fail(path, 1, "expected header 'MORPHFLOW-FIELD v1 D=<d> K=<k>'");

  FieldFile field;
  int K = 0;
  try {
    field.dimension = std::stoi(dtok.substr(2));
    K = std::stoi(ktok.substr(2));
  } catch (const std::exception&) {
    fail(path, 1, "malformed D= or K= header field");
  }
  if (field.dimension != 2 && field.dimension != 3) fail(path, 1, "D must be 2 or 3");
  if (K < 1) fail(path, 1, "K must be positive");

  field.modes.resize(K);
  field.coefficients.resize(K);
  for (int k = 0; k < K; ++k) {
    if (!std::getline(in, line)) fail(path, k + 1, "expected " + std::to_string(K) + " mode lines");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    ModeIndex m;
    for (int d = 0; d < field.dimension; ++d)
      if (!(ls >> m.j[d]) || m.j[d] < 1) fail(path, k + 2, "frequency indices must be >= 1");
    if (!(ls >> m.component)) fail(path, k + 2, "missing component");
    int max_comp = field.dimension == 3 ? 3 : 1;
    if (m.component < 1 || m.component > max_comp) fail(path, k + 2, "component out of range");
    if (!(ls >> field.coefficients[k])) fail(path, k + 2, "missing coefficient");
    std::string extra;
    if (ls >> extra) fail(path, k + 2, "trailing fields: '" + extra + "'");
    field.modes[k] = m;
  }
  if (!field.coefficients.allFinite()) throw ParseError(path + ": non-finite coefficients");
  return field;
}

void match_field_to_basis(const FieldFile& field, const DeformationBasis& basis) {
  if (field.dimension != basis.dimension)
    throw FieldMismatch("field dimension " + std::to_string(field.dimension) +
                        " does not match basis dimension " + std::to_string(basis.dimension));
  if (field.size() != basis.size())
    throw FieldMismatch("field holds " + std::to_string(field.size()) + " modes, basis holds " +
                        std::to_string(basis.size()));
  for (int k = 0; k < basis.size(); ++k) {
    const ModeIndex& fm = field.modes[k];
    const ModeIndex& bm = basis.modes[k];
    bool same = fm.component == bm.component;
    for (int d = 0; d < basis.dimension; ++d) same = same && fm.j[d] == bm.j[d];
    if (!same)
      throw FieldMismatch("mode " + std::to_string(k) +
                          " does not follow the canonical basis ordering");
  }
}

void save_correspondences(const std::string& path,
                          const std::vector<std::pair<int, int>>& matches) {
  AtomicWriter w(path);
  w.stream() << "source_index,target_index\n";
  for (const auto& [s, t] : matches) w.stream() << s << ',' << t << '\n';
  w.commit();
}

std::vector<std::pair<int, int>> load_correspondences(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  std::vector<std::pair<int, int>> matches;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line_no == 1 && line.find_first_not_of("0123456789,- \t") != std::string::npos)
      continue;  // header row
    auto comma = line.find(',');
    if (comma == std::string::npos) fail(path, line_no, "expected 'source,target'");
    try {
      int s = std::stoi(line.substr(0, comma));
      int t = std::stoi(line.substr(comma + 1));
      if (s < 0 || t < 0) fail(path, line_no, "indices must be nonnegative");
      matches.push_back({s, t});
    } catch (const ParseError&) {
      throw;
    } catch (const std::exception&) {
      fail(path, line_no, "expected 'source,target'");
    }
  }
  return matches;
}

void save_energy_history(const std::string& path, const std::vector<double>& history) {
  AtomicWriter w(path);
  w.stream() << "iteration,energy\n";
  for (size_t i = 0; i < history.size(); ++i)
    w.stream() << i << ',' << format_double(history[i]) << '\n';
  w.commit();
}

}  // namespace morphflow
