#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <map>
#include <regex>
#include <set>
#include <sstream>
#include <tuple>

#include "json.hpp"

#include "facelap/dataset.hpp"

namespace facelap {

namespace {

constexpr const char* kColumns[] = {"subject", "expression", "intensity", "mesh", "landmarks", "aus"};

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ManifestError(path.string() + ": cannot open manifest");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// RFC 4180 subset: fields may be double-quoted, "" escapes a quote.
std::vector<std::string> split_csv(std::string_view line, const std::string& where) {
  std::vector<std::string> cells(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cells.back() += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        cells.back() += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      cells.emplace_back();
    } else {
      cells.back() += ch;
    }
  }
  if (quoted) throw ManifestError(where + "unterminated quote");
  return cells;
}

std::string quote_csv(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

int parse_intensity(std::string_view s, const std::string& where) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size())
    throw ManifestError(where + "intensity '" + std::string(s) + "' is not an integer");
  return v;
}

ManifestRecord make_record(const std::string& subject, const std::string& expression, int intensity,
                           const std::string& mesh, const std::string& landmarks, const std::string* aus,
                           const std::string& where) {
  ManifestRecord r;
  if (subject.empty()) throw ManifestError(where + "empty subject id");
  r.subject = subject;
  const auto e = expression_index(expression);
  if (!e)
    throw ManifestError(where + "unknown expression '" + expression + "' (expected one of AN, DI, FE, HA, SA, SU)");
  r.expression = *e;
  if (intensity < 1 || intensity > kMaxIntensity)
    throw ManifestError(where + "intensity " + std::to_string(intensity) + " outside 1.." +
                        std::to_string(kMaxIntensity));
  r.intensity = intensity;
  if (mesh.empty() || landmarks.empty()) throw ManifestError(where + "empty mesh or landmark path");
  r.mesh = mesh;
  r.landmarks = landmarks;
  if (aus) {
    try {
      r.aus = parse_au_list(*aus);
    } catch (const std::invalid_argument& ex) {
      throw ManifestError(where + ex.what());
    }
    r.has_aus = true;
  }
  return r;
}

}  // namespace

DatasetManifest parse_manifest_csv(std::string_view text, const std::string& source) {
  if (text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);
  DatasetManifest m;
  std::size_t pos = 0, line_no = 0;
  std::map<std::string, std::size_t> col;
  bool header = false;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    const std::string where = source + ":" + std::to_string(line_no) + ": ";
    const auto cells = split_csv(line, where);
    if (!header) {
      for (std::size_t i = 0; i < cells.size(); ++i) col[cells[i]] = i;
      for (std::size_t i = 0; i < 5; ++i)
        if (!col.count(kColumns[i]))
          throw ManifestError(where + "header is missing column '" + kColumns[i] +
                              "' (expected subject,expression,intensity,mesh,landmarks,aus)");
      header = true;
      continue;
    }
    if (cells.size() != col.size())
      throw ManifestError(where + "expected " + std::to_string(col.size()) + " columns, found " +
                          std::to_string(cells.size()));
    const auto au_col = col.find("aus");
    const std::string* aus = au_col == col.end() ? nullptr : &cells[au_col->second];
    m.records.push_back(make_record(cells[col["subject"]], cells[col["expression"]],
                                    parse_intensity(cells[col["intensity"]], where), cells[col["mesh"]],
                                    cells[col["landmarks"]], aus, where));
  }
  return m;
}

DatasetManifest parse_manifest_json(std::string_view text, const std::string& source) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ManifestError(source + ": " + e.what());
  }
  const nlohmann::json* rows = &doc;
  if (doc.is_object()) {
    if (!doc.contains("records")) throw ManifestError(source + ": expected a 'records' array");
    rows = &doc["records"];
  }
  if (!rows->is_array()) throw ManifestError(source + ": records must be an array");
  DatasetManifest m;
  for (std::size_t i = 0; i < rows->size(); ++i) {
    const auto& r = (*rows)[i];
    const std::string where = source + ": record " + std::to_string(i) + ": ";
    try {
      std::string aus;
      const bool has_aus = r.contains("aus");
      if (has_aus) {
        if (r["aus"].is_array()) {
          for (const auto& a : r["aus"]) aus += (aus.empty() ? "" : "+") + std::to_string(a.get<int>());
        } else {
          aus = r["aus"].get<std::string>();
        }
      }
      const auto& in = r.at("intensity");
      const int intensity = in.is_string() ? parse_intensity(in.get<std::string>(), where) : in.get<int>();
      m.records.push_back(make_record(r.at("subject").get<std::string>(), r.at("expression").get<std::string>(),
                                      intensity, r.at("mesh").get<std::string>(),
                                      r.at("landmarks").get<std::string>(), has_aus ? &aus : nullptr, where));
    } catch (const nlohmann::json::exception& e) {
      throw ManifestError(where + e.what());
    }
  }
  return m;
}

void validate_manifest(const DatasetManifest& manifest, bool check_paths) {
  std::set<std::tuple<std::string, int, int>> seen;
  for (const auto& r : manifest.records) {
    if (!seen.emplace(r.subject, r.expression, r.intensity).second) {
      throw ManifestError("duplicate record for subject " + r.subject + ", expression " +
                          std::string(expression_code(r.expression)) + ", intensity " + std::to_string(r.intensity));
    }
    if (check_paths) {
      for (const auto* p : {&r.mesh, &r.landmarks}) {
        const auto full = manifest.resolve(*p);
        if (!std::filesystem::exists(full)) throw ManifestError("file not found: " + full.string());
      }
    }
  }
}

DatasetManifest load_manifest(const std::filesystem::path& path, bool check_paths) {
  const std::string text = read_text(path);
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  DatasetManifest m = ext == ".json" ? parse_manifest_json(text, path.string()) : parse_manifest_csv(text, path.string());
  m.base_dir = path.parent_path();
  validate_manifest(m, check_paths);
  return m;
}

void save_manifest_csv(const DatasetManifest& manifest, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ManifestError(path.string() + ": cannot write");
  out << "subject,expression,intensity,mesh,landmarks,aus\n";
  for (const auto& r : manifest.records) {
    out << quote_csv(r.subject) << ',' << expression_code(r.expression) << ',' << r.intensity << ','
        << quote_csv(r.mesh.generic_string()) << ',' << quote_csv(r.landmarks.generic_string()) << ','
        << (r.has_aus ? format_au_list(r.aus) : std::string()) << '\n';
  }
  if (!out) throw ManifestError(path.string() + ": write failed");
}

void sort_records(DatasetManifest& manifest) {
  std::stable_sort(manifest.records.begin(), manifest.records.end(), [](const auto& a, const auto& b) {
    return std::tie(a.subject, a.expression, a.intensity) < std::tie(b.subject, b.expression, b.intensity);
  });
}

DatasetManifest scan_bu3dfe(const std::filesystem::path& root) {
  if (!std::filesystem::is_directory(root)) throw ManifestError(root.string() + ": not a directory");
  static const std::regex name(R"(([FM]\d{4})_([A-Z]{2})(\d{2})([A-Z]{2})_F3D\.(obj|ply))", std::regex::icase);
  DatasetManifest m;
  m.base_dir = root;
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(root))
    if (entry.is_regular_file()) files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    std::smatch match;
    const std::string fname = f.filename().string();
    if (!std::regex_match(fname, match, name)) continue;
    std::string code = match[2].str();
    std::transform(code.begin(), code.end(), code.begin(), [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    if (code == "NE") continue;
    const auto e = expression_index(code);
    if (!e) throw ManifestError(f.string() + ": unknown expression code '" + code + "'");
    ManifestRecord r;
    r.subject = match[1].str();
    r.expression = *e;
    r.intensity = std::stoi(match[3].str());
    if (r.intensity < 1 || r.intensity > kMaxIntensity)
      throw ManifestError(f.string() + ": intensity " + std::to_string(r.intensity) + " out of range");
    r.mesh = std::filesystem::relative(f, root);
    std::filesystem::path lm = f;
    lm.replace_extension(".csv");
    if (!std::filesystem::exists(lm)) throw ManifestError(f.string() + ": landmark file " + lm.string() + " missing");
    r.landmarks = std::filesystem::relative(lm, root);
    m.records.push_back(std::move(r));
  }
  sort_records(m);
  validate_manifest(m, true);
  return m;
}

}  // namespace facelap
