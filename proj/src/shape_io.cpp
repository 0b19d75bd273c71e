#include "morphflow/shape_io.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <vector>

#include "morphflow/io_util.hpp"

namespace morphflow {
namespace {

[[noreturn]] void parse_fail(const std::string& path, int line, const std::string& msg) {
  throw ParseError(path + ":" + std::to_string(line) + ": " + msg);
}

struct LineReader {
  std::ifstream in;
  std::string path;
  int line_no = 0;

  explicit LineReader(const std::string& p) : in(p), path(p) {
    if (!in) throw ParseError("cannot open " + p);
  }

  // Next non-empty line as tokens; strips '#' comments when asked and any
  // trailing carriage return. Returns false at end of file.
  bool next(std::vector<std::string>& tokens, bool hash_comments = true) {
    std::string line;
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (hash_comments) {
        auto pos = line.find('#');
        if (pos != std::string::npos) line.erase(pos);
      }
      tokens.clear();
      std::istringstream ss(line);
      std::string tok;
      while (ss >> tok) tokens.push_back(tok);
      if (!tokens.empty()) return true;
    }
    return false;
  }

  void require(std::vector<std::string>& tokens, const std::string& what) {
    if (!next(tokens)) parse_fail(path, line_no + 1, "unexpected end of file, expected " + what);
  }
};

double to_double(const LineReader& r, const std::string& tok) {
  size_t used = 0;
  double v = 0;
  try {
    v = std::stod(tok, &used);
  } catch (const std::exception&) {
    parse_fail(r.path, r.line_no, "not a number: '" + tok + "'");
  }
  if (used != tok.size()) parse_fail(r.path, r.line_no, "not a number: '" + tok + "'");
  return v;
}

int to_int(const LineReader& r, const std::string& tok) {
  size_t used = 0;
  long v = 0;
  try {
    v = std::stol(tok, &used);
  } catch (const std::exception&) {
    parse_fail(r.path, r.line_no, "not an integer: '" + tok + "'");
  }
  if (used != tok.size()) parse_fail(r.path, r.line_no, "not an integer: '" + tok + "'");
  return static_cast<int>(v);
}

void check_face(const std::string& path, int line, const std::vector<int>& face, int nv) {
  if (face.size() < 2) parse_fail(path, line, "face needs at least 2 indices");
  for (size_t i = 0; i < face.size(); ++i) {
    if (face[i] < 0 || face[i] >= nv)
      parse_fail(path, line, "face index " + std::to_string(face[i]) + " out of range [0, " +
                                 std::to_string(nv) + ")");
    for (size_t j = 0; j < i; ++j)
      if (face[i] == face[j])
        parse_fail(path, line, "degenerate face repeats index " + std::to_string(face[i]));
  }
}

Matrix rows_to_matrix(const std::vector<std::vector<double>>& rows, int cols) {
  Matrix m(static_cast<int>(rows.size()), cols);
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = rows[i][j];
  return m;
}

void normalize_normals(Matrix& normals, const std::string& path) {
  for (int i = 0; i < normals.rows(); ++i) {
    double len = normals.row(i).norm();
    if (len < 1e-12) throw ParseError(path + ": zero-length normal at vertex " + std::to_string(i));
    normals.row(i) /= len;
  }
}

Mesh load_off(const std::string& path) {
  LineReader r(path);
  std::vector<std::string> tok;
  r.require(tok, "OFF header");
  bool has_normals = false;
  if (tok[0] == "NOFF")
    has_normals = true;
  else if (tok[0] != "OFF")
    parse_fail(path, r.line_no, "expected OFF or NOFF header, got '" + tok[0] + "'");
  std::vector<std::string> counts(tok.begin() + 1, tok.end());
  if (counts.empty()) r.require(counts, "vertex/face counts");
  if (counts.size() != 2 && counts.size() != 3)
    parse_fail(path, r.line_no, "expected 'nv nf [ne]' counts");
  int nv = to_int(r, counts[0]);
  int nf = to_int(r, counts[1]);
  if (nv < 1) parse_fail(path, r.line_no, "file declares no vertices");
  if (nf < 0) parse_fail(path, r.line_no, "negative face count");

  int dim = 0;
  std::vector<std::vector<double>> pts, nrm;
  pts.reserve(nv);
  for (int i = 0; i < nv; ++i) {
    r.require(tok, "vertex record");
    if (dim == 0) {
      int n = static_cast<int>(tok.size());
      dim = has_normals ? n / 2 : n;
      if ((has_normals && n != 2 * dim) || dim < 2 || dim > 3)
        parse_fail(path, r.line_no, "vertex record must hold 2 or 3 coordinates" +
                                        std::string(has_normals ? " plus a matching normal" : ""));
    }
    size_t want = has_normals ? 2 * dim : dim;
    if (tok.size() != want)
      parse_fail(path, r.line_no, "expected " + std::to_string(want) + " fields, got " +
                                      std::to_string(tok.size()));
    std::vector<double> p(dim), n(dim);
    for (int d = 0; d < dim; ++d) p[d] = to_double(r, tok[d]);
    pts.push_back(p);
    if (has_normals) {
      for (int d = 0; d < dim; ++d) n[d] = to_double(r, tok[dim + d]);
      nrm.push_back(n);
    }
  }

  Mesh mesh;
  mesh.cloud.points = rows_to_matrix(pts, dim);
  if (has_normals) {
    mesh.cloud.normals = rows_to_matrix(nrm, dim);
    normalize_normals(mesh.cloud.normals, path);
  }
  mesh.faces.reserve(nf);
  for (int f = 0; f < nf; ++f) {
    r.require(tok, "face record");
    int arity = to_int(r, tok[0]);
    if (arity < 2 || static_cast<size_t>(arity) + 1 > tok.size())
      parse_fail(path, r.line_no, "face record shorter than its own count");
    std::vector<int> face(arity);
    for (int i = 0; i < arity; ++i) face[i] = to_int(r, tok[i + 1]);
    check_face(path, r.line_no, face, nv);
    mesh.faces.push_back(std::move(face));
  }
  return mesh;
}

Mesh load_ply(const std::string& path) {
  LineReader r(path);
  std::vector<std::string> tok;
  r.require(tok, "ply magic");
  if (tok[0] != "ply") parse_fail(path, r.line_no, "not a PLY file");

  int nv = -1, nf = 0;
  std::vector<std::string> vertex_props;
  bool in_vertex = false, in_face = false, saw_format = false;
  for (;;) {
    if (!r.next(tok, false)) parse_fail(path, r.line_no + 1, "header lacks end_header");
    if (tok[0] == "end_header") break;
    if (tok[0] == "comment" || tok[0] == "obj_info") continue;
    if (tok[0] == "format") {
      if (tok.size() < 2 || tok[1] != "ascii")
        throw UnsupportedFormat(path + ": only ascii PLY is supported");
      saw_format = true;
    } else if (tok[0] == "element") {
      if (tok.size() != 3) parse_fail(path, r.line_no, "malformed element line");
      in_vertex = in_face = false;
      int count = to_int(r, tok[2]);
      if (tok[1] == "vertex") {
        nv = count;
        in_vertex = true;
      } else if (tok[1] == "face") {
        nf = count;
        in_face = true;
      } else if (count > 0) {
        throw UnsupportedFormat(path + ": unsupported element '" + tok[1] + "'");
      }
    } else if (tok[0] == "property") {
      if (in_vertex) {
        if (tok.size() != 3 || tok[1] == "list")
          throw UnsupportedFormat(path + ": vertex properties must be scalars");
        vertex_props.push_back(tok[2]);
      } else if (in_face) {
        if (tok.size() != 5 || tok[1] != "list" ||
            (tok[4] != "vertex_indices" && tok[4] != "vertex_index"))
          throw UnsupportedFormat(path + ": face element must hold a vertex index list");
      }
    } else {
      parse_fail(path, r.line_no, "unexpected header line '" + tok[0] + "'");
    }
  }
  if (!saw_format) parse_fail(path, r.line_no, "header lacks a format line");
  if (nv < 1) parse_fail(path, r.line_no, "file declares no vertices");

  auto prop_index = [&](const char* name) {
    auto it = std::find(vertex_props.begin(), vertex_props.end(), name);
    return it == vertex_props.end() ? -1 : static_cast<int>(it - vertex_props.begin());
  };
  int ix = prop_index("x"), iy = prop_index("y"), iz = prop_index("z");
  int inx = prop_index("nx"), iny = prop_index("ny"), inz = prop_index("nz");
  if (ix < 0 || iy < 0) parse_fail(path, r.line_no, "vertex element lacks x/y properties");
  int dim = iz >= 0 ? 3 : 2;
  bool has_normals = inx >= 0 && iny >= 0 && (dim == 2 || inz >= 0);

  std::vector<std::vector<double>> pts, nrm;
  pts.reserve(nv);
  for (int i = 0; i < nv; ++i) {
    r.require(tok, "vertex record");
    if (tok.size() != vertex_props.size())
      parse_fail(path, r.line_no, "expected " + std::to_string(vertex_props.size()) +
                                      " fields, got " + std::to_string(tok.size()));
    std::vector<double> p(dim), n;
    p[0] = to_double(r, tok[ix]);
    p[1] = to_double(r, tok[iy]);
    if (dim == 3) p[2] = to_double(r, tok[iz]);
    pts.push_back(p);
    if (has_normals) {
      n = {to_double(r, tok[inx]), to_double(r, tok[iny])};
      if (dim == 3) n.push_back(to_double(r, tok[inz]));
      nrm.push_back(n);
    }
  }

  Mesh mesh;
  mesh.cloud.points = rows_to_matrix(pts, dim);
  if (has_normals) {
    mesh.cloud.normals = rows_to_matrix(nrm, dim);
    normalize_normals(mesh.cloud.normals, path);
  }
  mesh.faces.reserve(nf);
  for (int f = 0; f < nf; ++f) {
    r.require(tok, "face record");
    int arity = to_int(r, tok[0]);
    if (arity < 2 || static_cast<size_t>(arity) + 1 != tok.size())
      parse_fail(path, r.line_no, "face record does not match its own count");
    std::vector<int> face(arity);
    for (int i = 0; i < arity; ++i) face[i] = to_int(r, tok[i + 1]);
    check_face(path, r.line_no, face, nv);
    mesh.faces.push_back(std::move(face));
  }
  return mesh;
}

Mesh load_obj(const std::string& path) {
  LineReader r(path);
  std::vector<std::string> tok;
  int dim = 0;
  std::vector<std::vector<double>> pts, nrm;
  std::vector<std::vector<int>> faces;
  std::vector<int> face_lines;
  while (r.next(tok)) {
    const std::string& key = tok[0];
    if (key == "v" || key == "vn") {
      int n = static_cast<int>(tok.size()) - 1;
      if (dim == 0 && key == "v") {
        if (n != 2 && n != 3) parse_fail(path, r.line_no, "vertex must hold 2 or 3 coordinates");
        dim = n;
      }
      if (dim == 0) parse_fail(path, r.line_no, "normal precedes any vertex");
      if (n != dim)
        parse_fail(path, r.line_no, "expected " + std::to_string(dim) + " components, got " +
                                        std::to_string(n));
      std::vector<double> v(dim);
      for (int d = 0; d < dim; ++d) v[d] = to_double(r, tok[d + 1]);
      (key == "v" ? pts : nrm).push_back(std::move(v));
    } else if (key == "f" || key == "l") {
      std::vector<int> face;
      face.reserve(tok.size() - 1);
      for (size_t i = 1; i < tok.size(); ++i) {
        std::string ref = tok[i].substr(0, tok[i].find('/'));
        int idx = to_int(r, ref);
        if (idx < 1) parse_fail(path, r.line_no, "face index must be positive, got '" + ref + "'");
        face.push_back(idx - 1);
      }
      faces.push_back(std::move(face));
      face_lines.push_back(r.line_no);
    }
    // vt, o, g, s, usemtl, mtllib and other statements carry no geometry here.
  }
  if (pts.empty()) throw ParseError(path + ": file declares no vertices");

  Mesh mesh;
  mesh.cloud.points = rows_to_matrix(pts, dim);
  if (!nrm.empty() && nrm.size() == pts.size()) {
    mesh.cloud.normals = rows_to_matrix(nrm, dim);
    normalize_normals(mesh.cloud.normals, path);
  }
  for (size_t f = 0; f < faces.size(); ++f)
    check_face(path, face_lines[f], faces[f], static_cast<int>(pts.size()));
  mesh.faces = std::move(faces);
  return mesh;
}

void write_coords(std::ostream& out, const Matrix& m, int row) {
  for (int d = 0; d < m.cols(); ++d) {
    if (d) out << ' ';
    out << format_double(m(row, d), "%.9g");
  }
}

void write_off(std::ostream& out, const Mesh& mesh) {
  bool nrm = mesh.cloud.has_normals();
  out << (nrm ? "NOFF" : "OFF") << '\n';
  out << mesh.cloud.size() << ' ' << mesh.faces.size() << " 0\n";
  for (int i = 0; i < mesh.cloud.size(); ++i) {
    write_coords(out, mesh.cloud.points, i);
    if (nrm) {
      out << ' ';
      write_coords(out, mesh.cloud.normals, i);
    }
    out << '\n';
  }
  for (const auto& face : mesh.faces) {
    out << face.size();
    for (int idx : face) out << ' ' << idx;
    out << '\n';
  }
}

void write_ply(std::ostream& out, const Mesh& mesh) {
  bool nrm = mesh.cloud.has_normals();
  int dim = mesh.cloud.dim();
  out << "ply\nformat ascii 1.0\n";
  out << "element vertex " << mesh.cloud.size() << '\n';
  const char* coord_names[] = {"x", "y", "z"};
  const char* normal_names[] = {"nx", "ny", "nz"};
  for (int d = 0; d < dim; ++d) out << "property double " << coord_names[d] << '\n';
  if (nrm)
    for (int d = 0; d < dim; ++d) out << "property double " << normal_names[d] << '\n';
  out << "element face " << mesh.faces.size() << '\n';
  out << "property list int int vertex_indices\n";
  out << "end_header\n";
  for (int i = 0; i < mesh.cloud.size(); ++i) {
    write_coords(out, mesh.cloud.points, i);
    if (nrm) {
      out << ' ';
      write_coords(out, mesh.cloud.normals, i);
    }
    out << '\n';
  }
  for (const auto& face : mesh.faces) {
    out << face.size();
    for (int idx : face) out << ' ' << idx;
    out << '\n';
  }
}

void write_obj(std::ostream& out, const Mesh& mesh) {
  bool nrm = mesh.cloud.has_normals();
  for (int i = 0; i < mesh.cloud.size(); ++i) {
    out << "v ";
    write_coords(out, mesh.cloud.points, i);
    out << '\n';
  }
  if (nrm)
    for (int i = 0; i < mesh.cloud.size(); ++i) {
      out << "vn ";
      write_coords(out, mesh.cloud.normals, i);
      out << '\n';
    }
  for (const auto& face : mesh.faces) {
    out << (face.size() == 2 ? 'l' : 'f');
    for (int idx : face) {
      out << ' ' << idx + 1;
      if (nrm && face.size() > 2) out << "//" << idx + 1;
    }
    out << '\n';
  }
}

}  // namespace

ShapeFormat shape_format_from_path(const std::string& path) {
  auto pos = path.rfind('.');
  std::string ext = pos == std::string::npos ? "" : path.substr(pos + 1);
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (ext == "off" || ext == "noff") return ShapeFormat::Off;
  if (ext == "ply") return ShapeFormat::PlyAscii;
  if (ext == "obj") return ShapeFormat::Obj;
  throw UnsupportedFormat("unrecognized shape extension '." + ext + "' in " + path);
}

Mesh load_shape(const std::string& path, ShapeFormat format) {
  Mesh mesh;
  switch (format) {
    case ShapeFormat::Off: mesh = load_off(path); break;
    case ShapeFormat::PlyAscii: mesh = load_ply(path); break;
    case ShapeFormat::Obj: mesh = load_obj(path); break;
  }
  mesh.cloud.id = path;
  mesh.validate();
  return mesh;
}

Mesh load_shape(const std::string& path) { return load_shape(path, shape_format_from_path(path)); }

void write_shape(const std::string& path, const Mesh& mesh, ShapeFormat format) {
  mesh.validate();
  AtomicWriter w(path);
  switch (format) {
    case ShapeFormat::Off: write_off(w.stream(), mesh); break;
    case ShapeFormat::PlyAscii: write_ply(w.stream(), mesh); break;
    case ShapeFormat::Obj: write_obj(w.stream(), mesh); break;
  }
  w.commit();
}

void write_shape(const std::string& path, const Mesh& mesh) {
  write_shape(path, mesh, shape_format_from_path(path));
}

}  // namespace morphflow
