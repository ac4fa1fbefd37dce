#include "facelap/archive.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "json.hpp"

namespace facelap {

static_assert(std::endian::native == std::endian::little, "archive I/O assumes a little-endian host");

namespace {

using nlohmann::json;

std::string read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArchiveError(path.string() + ": cannot open");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json(const std::filesystem::path& path) {
  try {
    return json::parse(read_bytes(path));
  } catch (const json::exception& e) {
    throw ArchiveError(path.string() + ": " + e.what());
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ArchiveError(path.string() + ": cannot write");
  out << text;
  if (!out) throw ArchiveError(path.string() + ": write failed");
}

class Writer {
 public:
  explicit Writer(const std::filesystem::path& path) : out_(path, std::ios::binary), path_(path) {
    if (!out_) throw ArchiveError(path.string() + ": cannot write");
  }
  void bytes(const void* p, std::size_t n) { out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n)); }
  void u64(std::uint64_t v) { bytes(&v, 8); }
  void f64(std::span<const double> v) { bytes(v.data(), v.size() * 8); }
  void close() {
    out_.close();
    if (!out_) throw ArchiveError(path_.string() + ": write failed");
  }

 private:
  std::ofstream out_;
  std::filesystem::path path_;
};

class Reader {
 public:
  Reader(std::string data, std::string source) : data_(std::move(data)), source_(std::move(source)) {}
  void bytes(void* p, std::size_t n) {
    if (n > data_.size() - pos_) {
      throw ArchiveError(source_ + ": truncated at offset " + std::to_string(pos_) + " (needed " + std::to_string(n) +
                         " more bytes)");
    }
    std::memcpy(p, data_.data() + pos_, n);
    pos_ += n;
  }
  std::uint64_t u64() {
    std::uint64_t v;
    bytes(&v, 8);
    return v;
  }
  void f64(std::span<double> v) { bytes(v.data(), v.size() * 8); }
  void expect_magic(const char (&magic)[9]) {
    char got[8];
    bytes(got, 8);
    if (std::memcmp(got, magic, 8) != 0) throw ArchiveError(source_ + ": bad magic, not a " + magic + " file");
  }
  void expect_end() const {
    if (pos_ != data_.size())
      throw ArchiveError(source_ + ": " + std::to_string(data_.size() - pos_) + " trailing bytes");
  }

 private:
  std::string data_;
  std::string source_;
  std::size_t pos_ = 0;
};

json patch_config_json(const PatchConfig& c) {
  return {{"lambda_min", c.lambda_min}, {"lambda_max", c.lambda_max}, {"curves", c.curves}, {"samples", c.samples}};
}

PatchConfig patch_config_from(const json& j) {
  PatchConfig c;
  c.lambda_min = j.at("lambda_min").get<double>();
  c.lambda_max = j.at("lambda_max").get<double>();
  c.curves = j.at("curves").get<std::size_t>();
  c.samples = j.at("samples").get<std::size_t>();
  c.validate();
  return c;
}

std::filesystem::path with_suffix(std::filesystem::path p, const std::string& suffix) {
  p += suffix;
  return p;
}

bool has_ext(const std::filesystem::path& p, const char* ext) { return p.extension() == ext; }

std::string fmt_double(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

bool parse_double(std::string_view s, double& out) {
  const auto r = std::from_chars(s.data(), s.data() + s.size(), out);
  return !s.empty() && r.ec == std::errc{} && r.ptr == s.data() + s.size();
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t c = 0;
  for (;;) {
    const std::size_t p = line.find(sep, c);
    out.push_back(line.substr(c, p == std::string_view::npos ? std::string_view::npos : p - c));
    if (p == std::string_view::npos) return out;
    c = p + 1;
  }
}

std::vector<std::string_view> lines_of(std::string_view text) {
  std::vector<std::string_view> out;
  for (auto l : split(text, '\n')) {
    if (!l.empty() && l.back() == '\r') l.remove_suffix(1);
    if (!l.empty()) out.push_back(l);
  }
  return out;
}

}  // namespace

// ------------------------------------------------------------ patches

void save_patch_archive(const PatchArchive& a, const std::filesystem::path& path) {
  const std::size_t n = a.config.vertex_count();
  json meta = {{"format", "facelap-patches"}, {"version", 1}, {"config", patch_config_json(a.config)},
               {"scan", a.scan}, {"encoding", has_ext(path, ".csv") ? "csv" : "binary"}};
  json& items = meta["patches"] = json::array();
  for (const auto& p : a.patches) {
    if (p.vertices.size() != n)
      throw ArchiveError("patch archive: patch '" + p.label + "' has " + std::to_string(p.vertices.size()) +
                         " vertices, expected " + std::to_string(n));
    items.push_back({{"label", p.label}, {"missing", p.missing}, {"error", p.error}});
  }
  if (has_ext(path, ".csv")) {
    std::string out = "landmark,vertex,x,y,z\n";
    for (std::size_t l = 0; l < a.patches.size(); ++l)
      for (std::size_t i = 0; i < n; ++i) {
        const Vec3& v = a.patches[l].vertices[i];
        out += std::to_string(l) + ',' + std::to_string(i) + ',' + fmt_double(v.x) + ',' + fmt_double(v.y) + ',' +
               fmt_double(v.z) + '\n';
      }
    write_text(path, out);
  } else {
    Writer w(path);
    w.bytes("FLPATCH1", 8);
    w.u64(a.patches.size());
    w.u64(n);
    for (const auto& p : a.patches) {
      const std::uint8_t miss = p.missing;
      w.bytes(&miss, 1);
      for (const Vec3& v : p.vertices) {
        const double xyz[3] = {v.x, v.y, v.z};
        w.bytes(xyz, sizeof xyz);
      }
    }
    w.close();
  }
  write_text(with_suffix(path, ".json"), meta.dump(2) + "\n");
}

PatchArchive load_patch_archive(const std::filesystem::path& path) {
  const json meta = read_json(with_suffix(path, ".json"));
  PatchArchive a;
  try {
    if (meta.at("format") != "facelap-patches") throw ArchiveError(path.string() + ": not a patch archive");
    a.config = patch_config_from(meta.at("config"));
    a.scan = meta.value("scan", "");
    for (const auto& item : meta.at("patches")) {
      CanonicalPatch p;
      p.label = item.at("label").get<std::string>();
      p.missing = item.at("missing").get<bool>();
      p.error = item.value("error", "");
      a.patches.push_back(std::move(p));
    }
  } catch (const json::exception& e) {
    throw ArchiveError(path.string() + ".json: " + e.what());
  }
  const std::size_t n = a.config.vertex_count();
  for (auto& p : a.patches) p.vertices.assign(n, Vec3{});
  if (meta.value("encoding", "binary") == "csv") {
    const std::string text = read_bytes(path);
    const auto lines = lines_of(text);
    if (lines.empty() || lines[0] != "landmark,vertex,x,y,z") throw ArchiveError(path.string() + ": bad CSV header");
    if (lines.size() - 1 != a.patches.size() * n)
      throw ArchiveError(path.string() + ": expected " + std::to_string(a.patches.size() * n) + " rows");
    for (std::size_t r = 1; r < lines.size(); ++r) {
      const auto cells = split(lines[r], ',');
      double v[5];
      if (cells.size() != 5) throw ArchiveError(path.string() + ":" + std::to_string(r + 1) + ": expected 5 columns");
      for (int c = 0; c < 5; ++c)
        if (!parse_double(cells[c], v[c]))
          throw ArchiveError(path.string() + ":" + std::to_string(r + 1) + ": bad number");
      const auto l = static_cast<std::size_t>(v[0]), i = static_cast<std::size_t>(v[1]);
      if (l >= a.patches.size() || i >= n) throw ArchiveError(path.string() + ":" + std::to_string(r + 1) + ": index out of range");
      a.patches[l].vertices[i] = {v[2], v[3], v[4]};
    }
    return a;
  }
  Reader r(read_bytes(path), path.string());
  r.expect_magic("FLPATCH1");
  if (r.u64() != a.patches.size() || r.u64() != n) throw ArchiveError(path.string() + ": header disagrees with sidecar");
  for (auto& p : a.patches) {
    std::uint8_t miss;
    r.bytes(&miss, 1);
    if (static_cast<bool>(miss) != p.missing) throw ArchiveError(path.string() + ": missing flag disagrees with sidecar");
    for (Vec3& v : p.vertices) {
      double xyz[3];
      r.bytes(xyz, sizeof xyz);
      v = {xyz[0], xyz[1], xyz[2]};
    }
  }
  r.expect_end();
  return a;
}

// ------------------------------------------------------------ basis

void save_basis(const SpectralBasis& basis, const PatchConfig& cfg, const std::filesystem::path& path) {
  if (basis.dimension() != cfg.vertex_count())
    throw ArchiveError("save_basis: basis dimension " + std::to_string(basis.dimension()) +
                       " does not match the patch configuration (" + std::to_string(cfg.vertex_count()) + ")");
  Writer w(path);
  w.bytes("FLBASIS1", 8);
  w.u64(basis.dimension());
  w.u64(basis.size());
  w.u64(config_hash(cfg));
  w.f64(basis.eigenvectors.data());
  w.f64(basis.eigenvalues);
  w.close();
}

SpectralBasis load_basis(const std::filesystem::path& path, const PatchConfig& expected) {
  Reader r(read_bytes(path), path.string());
  r.expect_magic("FLBASIS1");
  const std::uint64_t n = r.u64(), k = r.u64(), hash = r.u64();
  if (hash != config_hash(expected)) {
    throw BasisMismatchError(path.string() + ": basis was built for a different patch configuration (expected K=" +
                             std::to_string(expected.curves) + ", m=" + std::to_string(expected.samples) + ")");
  }
  if (n != expected.vertex_count())
    throw BasisMismatchError(path.string() + ": basis dimension " + std::to_string(n) + " does not match " +
                             std::to_string(expected.vertex_count()));
  if (k == 0 || k > n) throw ArchiveError(path.string() + ": invalid basis size " + std::to_string(k));
  SpectralBasis b;
  b.eigenvectors = Matrix(n, k);
  b.eigenvalues.resize(k);
  r.f64(b.eigenvectors.data());
  r.f64(b.eigenvalues);
  r.expect_end();
  return b;
}

// ------------------------------------------------------------ features

void FeatureTable::check() const {
  const std::size_t rows = samples.size();
  if (values.rows() != rows || scans.size() != rows || missing.size() != rows)
    throw ArchiveError("feature table: row counts disagree");
  if (values.cols() != columns())
    throw ArchiveError("feature table: " + std::to_string(values.cols()) + " columns, expected " +
                       std::to_string(columns()));
  for (const auto& m : missing)
    if (m.size() != landmarks()) throw ArchiveError("feature table: missing-mask length mismatch");
}

FeatureTable FeatureTable::slice(std::size_t k_new) const {
  if (k_new < 1 || k_new > k)
    throw std::invalid_argument("feature table: cannot slice k = " + std::to_string(k_new) + " from k = " +
                                std::to_string(k));
  FeatureTable out = *this;
  out.k = k_new;
  const std::size_t ch = channels();
  const std::size_t old_block = k * ch, new_block = k_new * ch;
  out.values = Matrix(values.rows(), landmarks() * new_block);
  for (std::size_t r = 0; r < values.rows(); ++r) {
    auto src = values.row(r);
    auto dst = out.values.row(r);
    for (std::size_t l = 0; l < landmarks(); ++l)
      std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(l * old_block), new_block,
                  dst.begin() + static_cast<std::ptrdiff_t>(l * new_block));
  }
  return out;
}

FeatureTable FeatureTable::select(std::span<const std::size_t> rows) const {
  FeatureTable out = *this;
  out.samples.clear();
  out.scans.clear();
  out.missing.clear();
  out.values = Matrix(rows.size(), values.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.samples.push_back(samples.at(rows[i]));
    out.scans.push_back(scans[rows[i]]);
    out.missing.push_back(missing[rows[i]]);
    std::copy_n(values.row(rows[i]).begin(), values.cols(), out.values.row(i).begin());
  }
  return out;
}

std::vector<int> FeatureTable::expressions() const {
  std::vector<int> out;
  for (const auto& s : samples) out.push_back(s.expression);
  return out;
}

std::vector<AuMask> FeatureTable::aus() const {
  std::vector<AuMask> out;
  for (const auto& s : samples) out.push_back(s.aus);
  return out;
}

std::vector<std::string> FeatureTable::subjects() const {
  std::vector<std::string> out;
  for (const auto& s : samples) out.push_back(s.subject);
  return out;
}

namespace {

std::string missing_list(const std::vector<std::uint8_t>& m) {
  std::string out;
  for (std::size_t l = 0; l < m.size(); ++l)
    if (m[l]) out += (out.empty() ? "" : "+") + std::to_string(l);
  return out;
}

std::vector<std::uint8_t> parse_missing(std::string_view s, std::size_t landmarks, const std::string& where) {
  std::vector<std::uint8_t> m(landmarks, 0);
  if (s.empty()) return m;
  for (auto tok : split(s, '+')) {
    double v;
    if (!parse_double(tok, v) || v < 0 || v >= static_cast<double>(landmarks))
      throw ArchiveError(where + "bad missing-landmark entry '" + std::string(tok) + "'");
    m[static_cast<std::size_t>(v)] = 1;
  }
  return m;
}

}  // namespace

void save_feature_table(const FeatureTable& t, const std::filesystem::path& base, bool csv) {
  t.check();
  const auto bin = with_suffix(base, ".bin");
  Writer w(bin);
  w.f64(t.values.data());
  w.close();
  json meta = {{"format", "facelap-features"},
               {"version", 1},
               {"method", to_string(t.method)},
               {"mode", to_string(t.mode)},
               {"k", t.k},
               {"patch", patch_config_json(t.patch)},
               {"rows", t.values.rows()},
               {"cols", t.values.cols()},
               {"binary", bin.filename().string()},
               {"landmarks", t.landmark_labels}};
  json& rows = meta["samples"] = json::array();
  for (std::size_t r = 0; r < t.samples.size(); ++r) {
    const auto& s = t.samples[r];
    json missing = json::array();
    for (std::size_t l = 0; l < t.missing[r].size(); ++l)
      if (t.missing[r][l]) missing.push_back(l);
    rows.push_back({{"subject", s.subject},
                    {"expression", std::string(expression_code(s.expression))},
                    {"intensity", s.intensity},
                    {"aus", format_au_list(s.aus)},
                    {"scan", t.scans[r]},
                    {"missing", missing}});
  }
  write_text(with_suffix(base, ".json"), meta.dump(1) + "\n");
  if (csv) save_feature_csv(t, with_suffix(base, ".csv"));
}

namespace {

FeatureTable load_feature_binary(const std::filesystem::path& sidecar) {
  const json meta = read_json(sidecar);
  FeatureTable t;
  std::size_t rows = 0, cols = 0;
  std::filesystem::path bin;
  try {
    if (meta.at("format") != "facelap-features") throw ArchiveError(sidecar.string() + ": not a feature table");
    t.method = parse_feature_method(meta.at("method").get<std::string>());
    t.mode = parse_feature_mode(meta.at("mode").get<std::string>());
    t.k = meta.at("k").get<std::size_t>();
    t.patch = patch_config_from(meta.at("patch"));
    rows = meta.at("rows").get<std::size_t>();
    cols = meta.at("cols").get<std::size_t>();
    t.landmark_labels = meta.at("landmarks").get<std::vector<std::string>>();
    bin = sidecar.parent_path() / meta.at("binary").get<std::string>();
    for (const auto& s : meta.at("samples")) {
      SampleInfo info;
      info.subject = s.at("subject").get<std::string>();
      const auto e = expression_index(s.at("expression").get<std::string>());
      if (!e) throw ArchiveError(sidecar.string() + ": unknown expression");
      info.expression = *e;
      info.intensity = s.at("intensity").get<int>();
      info.aus = parse_au_list(s.at("aus").get<std::string>());
      t.samples.push_back(info);
      t.scans.push_back(s.at("scan").get<std::string>());
      std::vector<std::uint8_t> m(t.landmark_labels.size(), 0);
      for (const auto& l : s.at("missing")) m.at(l.get<std::size_t>()) = 1;
      t.missing.push_back(std::move(m));
    }
  } catch (const json::exception& e) {
    throw ArchiveError(sidecar.string() + ": " + e.what());
  }
  Reader r(read_bytes(bin), bin.string());
  t.values = Matrix(rows, cols);
  r.f64(t.values.data());
  r.expect_end();
  t.check();
  return t;
}

}  // namespace

FeatureTable load_feature_table(const std::filesystem::path& path) {
  if (has_ext(path, ".csv")) return load_feature_csv(path);
  if (has_ext(path, ".json")) return load_feature_binary(path);
  if (has_ext(path, ".bin")) {
    auto p = path;
    p.replace_extension(".json");
    return load_feature_binary(p);
  }
  return load_feature_binary(with_suffix(path, ".json"));
}

void save_feature_csv(const FeatureTable& t, const std::filesystem::path& path) {
  t.check();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ArchiveError(path.string() + ": cannot write");
  out << "subject,expression,intensity,aus,missing";
  for (const auto& name : t.column_names()) out << ',' << name;
  out << '\n';
  for (std::size_t r = 0; r < t.samples.size(); ++r) {
    const auto& s = t.samples[r];
    out << s.subject << ',' << expression_code(s.expression) << ',' << s.intensity << ',' << format_au_list(s.aus)
        << ',' << missing_list(t.missing[r]);
    for (double v : t.values.row(r)) out << ',' << fmt_double(v);
    out << '\n';
  }
  if (!out) throw ArchiveError(path.string() + ": write failed");
}

FeatureTable load_feature_csv(const std::filesystem::path& path) {
  const std::string text = read_bytes(path);
  const auto lines = lines_of(text);
  const std::string src = path.string();
  if (lines.empty()) throw ArchiveError(src + ": empty feature CSV");
  const auto header = split(lines[0], ',');
  constexpr std::size_t kMeta = 5;
  if (header.size() < kMeta + 1 || header[0] != "subject" || header[1] != "expression" || header[2] != "intensity" ||
      header[3] != "aus" || header[4] != "missing")
    throw ArchiveError(src + ":1: expected header subject,expression,intensity,aus,missing,<features>");

  // Recover the layout from the column names L{l}_e{i}[_{x|y|z|n}].
  FeatureTable t;
  std::size_t max_l = 0, max_e = 0;
  const std::string_view last = header.back();
  if (last.ends_with("_x") || last.ends_with("_y") || last.ends_with("_z")) {
    t.method = FeatureMethod::Glf;
    t.mode = FeatureMode::Coords;
  } else if (last.ends_with("_n")) {
    t.method = FeatureMethod::Glf;
    t.mode = FeatureMode::Norms;
  } else {
    t.method = FeatureMethod::ShapeDna;
    t.mode = FeatureMode::Coords;
  }
  for (std::size_t c = kMeta; c < header.size(); ++c) {
    const auto h = header[c];
    const auto e = h.find("_e");
    double l = 0, i = 0;
    const auto tail = h.substr(e + 2);
    if (h.empty() || h[0] != 'L' || e == std::string_view::npos || !parse_double(h.substr(1, e - 1), l) ||
        !parse_double(tail.substr(0, tail.find('_')), i))
      throw ArchiveError(src + ":1: bad feature column '" + std::string(h) + "'");
    max_l = std::max(max_l, static_cast<std::size_t>(l));
    max_e = std::max(max_e, static_cast<std::size_t>(i));
  }
  t.k = max_e + 1;
  for (std::size_t l = 0; l <= max_l; ++l) t.landmark_labels.push_back("L" + std::to_string(l));
  const auto expected = t.column_names();
  if (expected.size() != header.size() - kMeta)
    throw ArchiveError(src + ":1: feature columns do not form complete landmark blocks");
  for (std::size_t c = 0; c < expected.size(); ++c)
    if (expected[c] != header[kMeta + c])
      throw ArchiveError(src + ":1: column " + std::to_string(kMeta + c + 1) + " is '" + std::string(header[kMeta + c]) +
                         "', expected '" + expected[c] + "'");

  t.values = Matrix(lines.size() - 1, expected.size());
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const std::string where = src + ":" + std::to_string(r + 1) + ": ";
    const auto cells = split(lines[r], ',');
    if (cells.size() != header.size()) throw ArchiveError(where + "column count mismatch");
    SampleInfo s;
    s.subject = std::string(cells[0]);
    const auto e = expression_index(cells[1]);
    if (!e) throw ArchiveError(where + "unknown expression '" + std::string(cells[1]) + "'");
    s.expression = *e;
    double in;
    if (!parse_double(cells[2], in)) throw ArchiveError(where + "bad intensity");
    s.intensity = static_cast<int>(in);
    s.aus = parse_au_list(cells[3]);
    t.samples.push_back(s);
    t.scans.emplace_back();
    t.missing.push_back(parse_missing(cells[4], t.landmarks(), where));
    for (std::size_t c = 0; c < expected.size(); ++c)
      if (!parse_double(cells[kMeta + c], t.values(r - 1, c)))
        throw ArchiveError(where + "bad value in column " + std::to_string(kMeta + c + 1));
  }
  return t;
}

}  // namespace facelap
