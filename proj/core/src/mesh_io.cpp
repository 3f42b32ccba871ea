#include "meshspec/mesh_io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace meshspec {

namespace {

// Whitespace tokenizer that tracks the current line and strips '#' comments.
class Tokenizer {
 public:
  Tokenizer(std::istream& in, std::string path) : in_(in), path_(std::move(path)) {}

  bool next(std::string& tok) {
    while (true) {
      if (pos_ >= line_.size()) {
        if (!std::getline(in_, line_)) return false;
        ++lineno_;
        pos_ = 0;
        continue;
      }
      while (pos_ < line_.size() && std::isspace(static_cast<unsigned char>(line_[pos_]))) ++pos_;
      if (pos_ >= line_.size()) continue;
      if (line_[pos_] == '#') {
        pos_ = line_.size();
        continue;
      }
      std::size_t start = pos_;
      while (pos_ < line_.size() && !std::isspace(static_cast<unsigned char>(line_[pos_]))) ++pos_;
      tok = line_.substr(start, pos_ - start);
      return true;
    }
  }

  long expect_int(const char* what) {
    std::string tok;
    if (!next(tok)) fail(std::string("unexpected end of file, expected ") + what);
    long v = 0;
    auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || p != tok.data() + tok.size())
      fail(std::string("expected integer ") + what + ", got '" + tok + "'");
    return v;
  }

  double expect_real(const char* what) {
    std::string tok;
    if (!next(tok)) fail(std::string("unexpected end of file, expected ") + what);
    try {
      std::size_t used = 0;
      double v = std::stod(tok, &used);
      if (used != tok.size()) throw std::invalid_argument(tok);
      return v;
    } catch (const std::exception&) {
      fail(std::string("expected number ") + what + ", got '" + tok + "'");
    }
    return 0;  // unreachable
  }

  void skip_line() { pos_ = line_.size(); }

  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(path_, lineno_, msg); }
  long line() const { return lineno_; }

 private:
  std::istream& in_;
  std::string path_;
  std::string line_;
  std::size_t pos_ = 0;
  long lineno_ = 0;
};

TriMesh parse_off(std::istream& in, const std::string& path) {
  Tokenizer tk(in, path);
  std::string tok;
  if (!tk.next(tok)) tk.fail("empty file");
  if (tok != "OFF") tk.fail("missing OFF header, got '" + tok + "'");
  long nv = tk.expect_int("vertex count");
  long nf = tk.expect_int("face count");
  tk.expect_int("edge count");
  if (nv <= 0) tk.fail("empty mesh: vertex count is " + std::to_string(nv));

  std::vector<Vec3> verts(nv);
  for (long i = 0; i < nv; ++i) {
    double x = tk.expect_real("x"), y = tk.expect_real("y"), z = tk.expect_real("z");
    verts[i] = {x, y, z};
  }
  std::vector<std::array<int, 3>> faces(nf);
  for (long f = 0; f < nf; ++f) {
    long n = tk.expect_int("face vertex count");
    if (n != 3)
      tk.fail("non-triangular face at index " + std::to_string(f) + " (" + std::to_string(n) +
              " vertices)");
    for (int c = 0; c < 3; ++c) faces[f][c] = static_cast<int>(tk.expect_int("vertex index"));
  }
  return TriMesh(std::move(verts), std::move(faces));
}

TriMesh parse_obj(std::istream& in, const std::string& path) {
  std::vector<Vec3> verts;
  std::vector<std::array<int, 3>> faces;
  std::string line;
  long lineno = 0;

  auto resolve = [&](long idx, long lineno) -> int {
    long n = static_cast<long>(verts.size());
    long v = idx > 0 ? idx - 1 : n + idx;  // negative indices count from the end
    if (v < 0 || v >= n)
      throw ParseError(path, lineno, "vertex index " + std::to_string(idx) + " out of range");
    return static_cast<int>(v);
  };

  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string key;
    if (!(ls >> key) || key[0] == '#') continue;
    if (key == "v") {
      double x, y, z;
      if (!(ls >> x >> y >> z)) throw ParseError(path, lineno, "malformed vertex record");
      verts.push_back({x, y, z});
    } else if (key == "f") {
      std::vector<int> fv;
      std::string ref;
      while (ls >> ref) {
        // accept i, i/t, i//n, i/t/n; only the vertex index matters
        std::string head = ref.substr(0, ref.find('/'));
        long idx = 0;
        auto [p, ec] = std::from_chars(head.data(), head.data() + head.size(), idx);
        if (ec != std::errc() || p != head.data() + head.size())
          throw ParseError(path, lineno, "malformed face reference '" + ref + "'");
        fv.push_back(resolve(idx, lineno));
      }
      if (fv.size() != 3)
        throw ParseError(path, lineno,
                         "non-triangular face at index " + std::to_string(faces.size()) + " (" +
                             std::to_string(fv.size()) + " vertices)");
      faces.push_back({fv[0], fv[1], fv[2]});
    }
    // vn/vt/o/g/s/usemtl/mtllib are ignored
  }
  if (verts.empty()) throw ParseError(path, lineno, "empty mesh: no 'v' records");
  return TriMesh(std::move(verts), std::move(faces));
}

TriMesh parse_ply(std::istream& in, const std::string& path) {
  Tokenizer tk(in, path);
  std::string tok;
  if (!tk.next(tok) || tok != "ply") tk.fail("missing 'ply' magic");

  long nv = -1, nf = -1;
  // Per-element property layout; only vertex x/y/z positions are used.
  std::vector<std::string> vertex_props;
  std::string current_element;
  bool face_list_prop = false;

  while (tk.next(tok)) {
    if (tok == "format") {
      std::string kind;
      tk.next(kind);
      if (kind != "ascii") tk.fail("only ASCII PLY is supported, got format '" + kind + "'");
      tk.next(tok);  // version
    } else if (tok == "comment" || tok == "obj_info") {
      tk.skip_line();
    } else if (tok == "element") {
      std::string name;
      tk.next(name);
      long count = tk.expect_int("element count");
      current_element = name;
      if (name == "vertex") nv = count;
      else if (name == "face") nf = count;
    } else if (tok == "property") {
      std::string type;
      tk.next(type);
      if (type == "list") {
        std::string count_t, idx_t, name;
        tk.next(count_t);
        tk.next(idx_t);
        tk.next(name);
        if (current_element == "face" && (name == "vertex_indices" || name == "vertex_index"))
          face_list_prop = true;
      } else {
        std::string name;
        tk.next(name);
        if (current_element == "vertex") vertex_props.push_back(name);
      }
    } else if (tok == "end_header") {
      break;
    } else {
      tk.fail("unexpected header token '" + tok + "'");
    }
  }

  if (nv <= 0) tk.fail("PLY header missing vertex element");
  auto prop_index = [&](const char* name) {
    auto it = std::find(vertex_props.begin(), vertex_props.end(), name);
    if (it == vertex_props.end()) tk.fail(std::string("vertex element lacks property ") + name);
    return static_cast<int>(it - vertex_props.begin());
  };
  int ix = prop_index("x"), iy = prop_index("y"), iz = prop_index("z");
  if (nf > 0 && !face_list_prop) tk.fail("face element lacks vertex_indices list");

  std::vector<Vec3> verts(nv);
  std::vector<double> row(vertex_props.size());
  for (long i = 0; i < nv; ++i) {
    for (std::size_t p = 0; p < vertex_props.size(); ++p)
      row[p] = tk.expect_real(vertex_props[p].c_str());
    verts[i] = {row[ix], row[iy], row[iz]};
  }
  std::vector<std::array<int, 3>> faces(std::max(nf, 0L));
  for (long f = 0; f < nf; ++f) {
    long n = tk.expect_int("face vertex count");
    if (n != 3)
      tk.fail("non-triangular face at index " + std::to_string(f) + " (" + std::to_string(n) +
              " vertices)");
    for (int c = 0; c < 3; ++c) faces[f][c] = static_cast<int>(tk.expect_int("vertex index"));
  }
  return TriMesh(std::move(verts), std::move(faces));
}

std::string fmt_coord(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_off(const TriMesh& mesh, std::ostream& out) {
  out << "OFF\n" << mesh.vertex_count() << ' ' << mesh.face_count() << " 0\n";
  for (const auto& v : mesh.vertices())
    out << fmt_coord(v.x()) << ' ' << fmt_coord(v.y()) << ' ' << fmt_coord(v.z()) << '\n';
  for (const auto& f : mesh.faces()) out << "3 " << f[0] << ' ' << f[1] << ' ' << f[2] << '\n';
}

void write_obj(const TriMesh& mesh, std::ostream& out) {
  for (const auto& v : mesh.vertices())
    out << "v " << fmt_coord(v.x()) << ' ' << fmt_coord(v.y()) << ' ' << fmt_coord(v.z()) << '\n';
  for (const auto& f : mesh.faces())
    out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
}

void write_ply(const TriMesh& mesh, std::ostream& out) {
  out << "ply\nformat ascii 1.0\n"
      << "element vertex " << mesh.vertex_count() << '\n'
      << "property double x\nproperty double y\nproperty double z\n"
      << "element face " << mesh.face_count() << '\n'
      << "property list uchar int vertex_indices\nend_header\n";
  for (const auto& v : mesh.vertices())
    out << fmt_coord(v.x()) << ' ' << fmt_coord(v.y()) << ' ' << fmt_coord(v.z()) << '\n';
  for (const auto& f : mesh.faces()) out << "3 " << f[0] << ' ' << f[1] << ' ' << f[2] << '\n';
}

}  // namespace

MeshFormat format_from_extension(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (ext == ".off") return MeshFormat::off;
  if (ext == ".obj") return MeshFormat::obj;
  if (ext == ".ply") return MeshFormat::ply;
  return MeshFormat::autodetect;
}

TriMesh load_mesh(const std::filesystem::path& path, MeshFormat format) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());

  if (format == MeshFormat::autodetect) {
    format = format_from_extension(path);
    if (format == MeshFormat::autodetect) {
      // sniff the header
      std::string head;
      in >> head;
      in.seekg(0);
      if (head == "OFF") format = MeshFormat::off;
      else if (head == "ply") format = MeshFormat::ply;
      else format = MeshFormat::obj;
    }
  }
  switch (format) {
    case MeshFormat::off: return parse_off(in, path.string());
    case MeshFormat::obj: return parse_obj(in, path.string());
    case MeshFormat::ply: return parse_ply(in, path.string());
    default: throw IoError("cannot determine mesh format for " + path.string());
  }
}

void save_mesh(const TriMesh& mesh, const std::filesystem::path& path, MeshFormat format) {
  if (format == MeshFormat::autodetect) {
    format = format_from_extension(path);
    if (format == MeshFormat::autodetect)
      throw IoError("cannot determine mesh format for " + path.string());
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  switch (format) {
    case MeshFormat::off: write_off(mesh, out); break;
    case MeshFormat::obj: write_obj(mesh, out); break;
    case MeshFormat::ply: write_ply(mesh, out); break;
    default: break;
  }
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace meshspec
