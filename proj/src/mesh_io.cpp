#include <algorithm>
#include <bit>
#include <cctype>
#include <charconv>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "facelap/mesh.hpp"

namespace facelap {
namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path.string() + ": cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

bool parse_double(std::string_view s, double& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

bool parse_long(std::string_view s, long long& out) {
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

std::string at_line(const std::string& source, std::size_t line) {
  return source + ":" + std::to_string(line) + ": ";
}

// ---------------------------------------------------------------- PLY

enum class PlyScalar { Int8, UInt8, Int16, UInt16, Int32, UInt32, Float32, Float64 };

std::optional<PlyScalar> ply_scalar(std::string_view name) {
  if (name == "char" || name == "int8") return PlyScalar::Int8;
  if (name == "uchar" || name == "uint8") return PlyScalar::UInt8;
  if (name == "short" || name == "int16") return PlyScalar::Int16;
  if (name == "ushort" || name == "uint16") return PlyScalar::UInt16;
  if (name == "int" || name == "int32") return PlyScalar::Int32;
  if (name == "uint" || name == "uint32") return PlyScalar::UInt32;
  if (name == "float" || name == "float32") return PlyScalar::Float32;
  if (name == "double" || name == "float64") return PlyScalar::Float64;
  return std::nullopt;
}

std::size_t ply_size(PlyScalar s) {
  switch (s) {
    case PlyScalar::Int8:
    case PlyScalar::UInt8:
      return 1;
    case PlyScalar::Int16:
    case PlyScalar::UInt16:
      return 2;
    case PlyScalar::Int32:
    case PlyScalar::UInt32:
    case PlyScalar::Float32:
      return 4;
    case PlyScalar::Float64:
      return 8;
  }
  return 0;
}

struct PlyProperty {
  std::string name;
  PlyScalar type = PlyScalar::Float32;
  bool is_list = false;
  PlyScalar count_type = PlyScalar::UInt8;
};

struct PlyElement {
  std::string name;
  std::size_t count = 0;
  std::vector<PlyProperty> props;
};

class BinaryCursor {
 public:
  BinaryCursor(std::span<const char> bytes, std::size_t offset, const std::string& source)
      : bytes_(bytes), pos_(offset), source_(source) {}

  double read(PlyScalar type) {
    const std::size_t sz = ply_size(type);
    if (pos_ + sz > bytes_.size()) {
      throw ParseError(source_ + ": offset " + std::to_string(pos_) + ": unexpected end of binary data");
    }
    unsigned char raw[8];
    std::memcpy(raw, bytes_.data() + pos_, sz);
    if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sz);
    pos_ += sz;
    switch (type) {
      case PlyScalar::Int8: { std::int8_t v; std::memcpy(&v, raw, 1); return v; }
      case PlyScalar::UInt8: { std::uint8_t v; std::memcpy(&v, raw, 1); return v; }
      case PlyScalar::Int16: { std::int16_t v; std::memcpy(&v, raw, 2); return v; }
      case PlyScalar::UInt16: { std::uint16_t v; std::memcpy(&v, raw, 2); return v; }
      case PlyScalar::Int32: { std::int32_t v; std::memcpy(&v, raw, 4); return v; }
      case PlyScalar::UInt32: { std::uint32_t v; std::memcpy(&v, raw, 4); return v; }
      case PlyScalar::Float32: { float v; std::memcpy(&v, raw, 4); return v; }
      case PlyScalar::Float64: { double v; std::memcpy(&v, raw, 8); return v; }
    }
    return 0.0;
  }

  std::size_t offset() const { return pos_; }

 private:
  std::span<const char> bytes_;
  std::size_t pos_;
  const std::string& source_;
};

}  // namespace

MeshFormat format_from_path(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  if (ext == ".obj") return MeshFormat::Obj;
  if (ext == ".ply") return MeshFormat::Ply;
  throw ParseError(path.string() + ": unsupported mesh extension '" + ext + "'");
}

TriangleMesh parse_obj(std::string_view text, const std::string& source) {
  std::vector<Vec3> verts;
  std::vector<Face> faces;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const auto tok = split_ws(line);
    if (tok.empty()) continue;

    if (tok[0] == "v") {
      if (tok.size() < 4) throw ParseError(at_line(source, line_no) + "vertex record needs 3 coordinates");
      Vec3 v;
      for (int k = 0; k < 3; ++k) {
        if (!parse_double(tok[1 + k], v[k])) {
          throw ParseError(at_line(source, line_no) + "bad coordinate '" + std::string(tok[1 + k]) + "'");
        }
      }
      verts.push_back(v);
    } else if (tok[0] == "f") {
      if (tok.size() != 4) {
        throw ParseError(at_line(source, line_no) + "only triangular faces are supported (got " +
                         std::to_string(tok.size() - 1) + " vertices)");
      }
      Face f{};
      for (int k = 0; k < 3; ++k) {
        const std::string_view idx_tok = tok[1 + k].substr(0, tok[1 + k].find('/'));
        long long idx = 0;
        if (!parse_long(idx_tok, idx) || idx == 0) {
          throw ParseError(at_line(source, line_no) + "bad face index '" + std::string(tok[1 + k]) + "'");
        }
        // Negative indices are relative to the vertices read so far.
        const long long resolved = idx > 0 ? idx - 1 : static_cast<long long>(verts.size()) + idx;
        if (resolved < 0) {
          throw MeshError(at_line(source, line_no) + "face index " + std::to_string(idx) + " out of range");
        }
        f[k] = static_cast<std::uint32_t>(resolved);
      }
      faces.push_back(f);
    }
  }
  try {
    return TriangleMesh(std::move(verts), std::move(faces));
  } catch (const MeshError& e) {
    throw MeshError(source + ": " + e.what());
  }
}

TriangleMesh parse_ply(std::span<const char> bytes, const std::string& source) {
  const std::string_view text(bytes.data(), bytes.size());
  std::vector<PlyElement> elements;
  bool binary = false;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  bool header_done = false;

  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) throw ParseError(source + ": unterminated PLY header");
    std::string_view line = text.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos = end + 1;
    ++line_no;
    const auto tok = split_ws(line);
    if (line_no == 1) {
      if (tok.empty() || tok[0] != "ply") throw ParseError(at_line(source, 1) + "missing 'ply' magic");
      continue;
    }
    if (tok.empty() || tok[0] == "comment" || tok[0] == "obj_info") continue;
    if (tok[0] == "format") {
      if (tok.size() < 2) throw ParseError(at_line(source, line_no) + "malformed format line");
      if (tok[1] == "ascii") binary = false;
      else if (tok[1] == "binary_little_endian") binary = true;
      else throw ParseError(at_line(source, line_no) + "unsupported PLY format '" + std::string(tok[1]) + "'");
    } else if (tok[0] == "element") {
      long long count = 0;
      if (tok.size() != 3 || !parse_long(tok[2], count) || count < 0) {
        throw ParseError(at_line(source, line_no) + "malformed element line");
      }
      elements.push_back({std::string(tok[1]), static_cast<std::size_t>(count), {}});
    } else if (tok[0] == "property") {
      if (elements.empty()) throw ParseError(at_line(source, line_no) + "property before element");
      PlyProperty prop;
      if (tok.size() == 5 && tok[1] == "list") {
        const auto ct = ply_scalar(tok[2]);
        const auto it = ply_scalar(tok[3]);
        if (!ct || !it) throw ParseError(at_line(source, line_no) + "unknown list property type");
        prop = {std::string(tok[4]), *it, true, *ct};
      } else if (tok.size() == 3) {
        const auto t = ply_scalar(tok[1]);
        if (!t) throw ParseError(at_line(source, line_no) + "unknown property type '" + std::string(tok[1]) + "'");
        prop = {std::string(tok[2]), *t, false, PlyScalar::UInt8};
      } else {
        throw ParseError(at_line(source, line_no) + "malformed property line");
      }
      elements.back().props.push_back(prop);
    } else if (tok[0] == "end_header") {
      header_done = true;
      break;
    } else {
      throw ParseError(at_line(source, line_no) + "unexpected header keyword '" + std::string(tok[0]) + "'");
    }
  }
  if (!header_done) throw ParseError(source + ": missing end_header");

  std::vector<Vec3> verts;
  std::vector<Face> faces;

  // ASCII bodies are consumed token by token across line breaks.
  std::vector<std::string_view> ascii_tokens;
  std::size_t ascii_next = 0;
  if (!binary) ascii_tokens = split_ws(text.substr(pos));
  auto next_ascii = [&](const char* what) -> double {
    if (ascii_next >= ascii_tokens.size()) {
      throw ParseError(source + ": unexpected end of ASCII body while reading " + what);
    }
    double v = 0.0;
    const std::string_view t = ascii_tokens[ascii_next++];
    if (!parse_double(t, v)) {
      throw ParseError(source + ": token " + std::to_string(ascii_next) + ": bad number '" + std::string(t) + "'");
    }
    return v;
  };
  BinaryCursor cursor(bytes, pos, source);
  auto read_value = [&](PlyScalar type, const char* what) {
    return binary ? cursor.read(type) : next_ascii(what);
  };

  for (const PlyElement& el : elements) {
    const bool is_vertex = el.name == "vertex";
    const bool is_face = el.name == "face";
    int ix = -1, iy = -1, iz = -1, ilist = -1;
    for (std::size_t p = 0; p < el.props.size(); ++p) {
      const auto& n = el.props[p].name;
      if (n == "x") ix = static_cast<int>(p);
      if (n == "y") iy = static_cast<int>(p);
      if (n == "z") iz = static_cast<int>(p);
      if (el.props[p].is_list && (n == "vertex_indices" || n == "vertex_index")) ilist = static_cast<int>(p);
    }
    if (is_vertex && (ix < 0 || iy < 0 || iz < 0)) throw ParseError(source + ": vertex element lacks x/y/z");
    if (is_face && ilist < 0) throw ParseError(source + ": face element lacks vertex_indices");

    for (std::size_t i = 0; i < el.count; ++i) {
      Vec3 v;
      Face f{};
      for (std::size_t p = 0; p < el.props.size(); ++p) {
        const PlyProperty& prop = el.props[p];
        if (!prop.is_list) {
          const double val = read_value(prop.type, "property");
          if (is_vertex) {
            if (static_cast<int>(p) == ix) v.x = val;
            if (static_cast<int>(p) == iy) v.y = val;
            if (static_cast<int>(p) == iz) v.z = val;
          }
          continue;
        }
        const std::size_t before = binary ? cursor.offset() : ascii_next;
        const double cnt = read_value(prop.count_type, "list count");
        if (cnt < 0) throw ParseError(source + ": negative list count");
        const auto count = static_cast<std::size_t>(cnt);
        if (is_face && static_cast<int>(p) == ilist && count != 3) {
          throw ParseError(source + (binary ? ": offset " : ": token ") + std::to_string(before) +
                           ": face " + std::to_string(i) + " has " + std::to_string(count) +
                           " vertices; only triangles are supported");
        }
        for (std::size_t c = 0; c < count; ++c) {
          const double idx = read_value(prop.type, "list entry");
          if (is_face && static_cast<int>(p) == ilist) {
            if (idx < 0) throw MeshError(source + ": face " + std::to_string(i) + " has a negative index");
            f[c] = static_cast<std::uint32_t>(idx);
          }
        }
      }
      if (is_vertex) verts.push_back(v);
      if (is_face) faces.push_back(f);
    }
  }
  try {
    return TriangleMesh(std::move(verts), std::move(faces));
  } catch (const MeshError& e) {
    throw MeshError(source + ": " + e.what());
  }
}

TriangleMesh load_mesh(const std::filesystem::path& path, MeshFormat format, double unit_scale) {
  const std::string bytes = read_file(path);
  TriangleMesh mesh = format == MeshFormat::Obj ? parse_obj(bytes, path.string())
                                                : parse_ply(std::span<const char>(bytes), path.string());
  if (unit_scale == 1.0) return mesh;
  return apply_transform(mesh, RigidTransform({{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}}, {}, unit_scale));
}

TriangleMesh load_mesh(const std::filesystem::path& path, double unit_scale) {
  return load_mesh(path, format_from_path(path), unit_scale);
}

void save_obj(const TriangleMesh& mesh, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(path.string() + ": cannot write");
  out << std::setprecision(17);
  for (const Vec3& v : mesh.vertices()) out << "v " << v.x << ' ' << v.y << ' ' << v.z << '\n';
  for (const Face& f : mesh.faces()) out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
  if (!out) throw std::runtime_error(path.string() + ": write failed");
}

void save_ply(const TriangleMesh& mesh, const std::filesystem::path& path, bool binary) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(path.string() + ": cannot write");
  out << "ply\nformat " << (binary ? "binary_little_endian" : "ascii") << " 1.0\n"
      << "element vertex " << mesh.vertex_count() << "\n"
      << "property double x\nproperty double y\nproperty double z\n"
      << "element face " << mesh.face_count() << "\n"
      << "property list uchar int vertex_indices\nend_header\n";
  static_assert(std::endian::native == std::endian::little, "binary PLY writer assumes little-endian host");
  if (binary) {
    for (const Vec3& v : mesh.vertices()) {
      const double xyz[3] = {v.x, v.y, v.z};
      out.write(reinterpret_cast<const char*>(xyz), sizeof xyz);
    }
    for (const Face& f : mesh.faces()) {
      const std::uint8_t n = 3;
      const std::int32_t idx[3] = {static_cast<std::int32_t>(f[0]), static_cast<std::int32_t>(f[1]),
                                   static_cast<std::int32_t>(f[2])};
      out.write(reinterpret_cast<const char*>(&n), 1);
      out.write(reinterpret_cast<const char*>(idx), sizeof idx);
    }
  } else {
    out << std::setprecision(17);
    for (const Vec3& v : mesh.vertices()) out << v.x << ' ' << v.y << ' ' << v.z << '\n';
    for (const Face& f : mesh.faces()) out << "3 " << f[0] << ' ' << f[1] << ' ' << f[2] << '\n';
  }
}

LandmarkSet parse_landmarks(std::string_view text, const std::string& source) {
  std::vector<Landmark> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool header = false;
  // UTF-8 byte order mark
  if (text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    std::vector<std::string_view> cells;
    std::size_t c = 0;
    while (true) {
      const std::size_t comma = line.find(',', c);
      cells.push_back(line.substr(c, comma == std::string_view::npos ? std::string_view::npos : comma - c));
      if (comma == std::string_view::npos) break;
      c = comma + 1;
    }
    if (!header) {
      if (cells.size() != 4 || cells[0] != "label" || cells[1] != "x" || cells[2] != "y" || cells[3] != "z") {
        throw ParseError(at_line(source, line_no) + "expected header 'label,x,y,z'");
      }
      header = true;
      continue;
    }
    if (cells.size() != 4) throw ParseError(at_line(source, line_no) + "expected 4 columns");
    Landmark l{std::string(cells[0]), {}};
    for (int k = 0; k < 3; ++k) {
      if (!parse_double(cells[1 + k], l.position[k])) {
        throw ParseError(at_line(source, line_no) + "bad coordinate '" + std::string(cells[1 + k]) + "'");
      }
    }
    out.push_back(std::move(l));
  }
  if (!header) throw ParseError(source + ": missing header 'label,x,y,z'");
  return LandmarkSet(std::move(out));
}

LandmarkSet load_landmarks(const std::filesystem::path& path, double unit_scale) {
  LandmarkSet set = parse_landmarks(read_file(path), path.string());
  if (unit_scale == 1.0) return set;
  std::vector<Landmark> scaled = set.entries();
  for (auto& l : scaled) l.position *= unit_scale;
  return LandmarkSet(std::move(scaled));
}

void save_landmarks(const LandmarkSet& landmarks, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(path.string() + ": cannot write");
  out << "label,x,y,z\n" << std::setprecision(17);
  for (const Landmark& l : landmarks.entries()) {
    out << l.label << ',' << l.position.x << ',' << l.position.y << ',' << l.position.z << '\n';
  }
}

}  // namespace facelap
