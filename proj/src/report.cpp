#include "facelap/report.hpp"

#include <cmath>
#include <cstdio>
#include <iomanip>
#include <sstream>
#include <thread>

#include "facelap/kernels.hpp"

namespace facelap {

extern const char* const kReportSchemaText;  // generated from docs/report.schema.json

Json to_json(const ConfusionMatrix& m) {
  return {{"labels", m.labels}, {"counts", m.counts}, {"percent", m.percent}};
}

Json to_json(const ExpressionResult& r) {
  return {{"fold_accuracy", r.fold_accuracy},
          {"mean_accuracy", r.mean_accuracy},
          {"std_accuracy", r.std_accuracy},
          {"confusion", to_json(r.confusion)}};
}

Json to_json(const AuResult& r) {
  Json scores = Json::array();
  for (const auto& s : r.scores) {
    scores.push_back({{"au", s.au},
                      {"positives", s.positives},
                      {"tp", s.tp},
                      {"fp", s.fp},
                      {"fn", s.fn},
                      {"tn", s.tn},
                      {"precision", s.precision},
                      {"recall", s.recall},
                      {"f1", s.f1},
                      {"defined", s.defined},
                      {"skipped_folds", s.skipped_folds}});
  }
  return {{"scores", scores}, {"weighted_f1", r.weighted_f1}};
}

Json to_json(const SweepResult& r) {
  Json mean = Json::array(), sd = Json::array(), folds = Json::array();
  for (const auto& e : r.results) {
    mean.push_back(e.mean_accuracy);
    sd.push_back(e.std_accuracy);
    folds.push_back(e.fold_accuracy);
  }
  return {{"k", r.ks}, {"mean_accuracy", mean}, {"std_accuracy", sd}, {"fold_accuracy", folds}};
}

Json folds_json(const std::vector<Fold>& folds) {
  Json out = Json::array();
  for (std::size_t f = 0; f < folds.size(); ++f) {
    out.push_back({{"index", f},
                   {"train_size", folds[f].train.size()},
                   {"test_size", folds[f].test.size()},
                   {"test_subjects", folds[f].test_subjects}});
  }
  return out;
}

Json errors_json(const std::vector<RunError>& errors) {
  Json out = Json::array();
  for (const auto& e : errors) out.push_back({{"stage", e.stage}, {"item", e.item}, {"message", e.message}});
  return out;
}

MethodComparison compare_methods(const std::string& first, const ExpressionResult& a, const std::string& second,
                                 const ExpressionResult& b) {
  if (a.fold_accuracy.size() != b.fold_accuracy.size())
    throw std::invalid_argument("compare_methods: results come from different fold sets");
  MethodComparison c{first, second, a, b, {}, 0.0, false};
  for (std::size_t f = 0; f < a.fold_accuracy.size(); ++f) {
    c.differences.push_back(a.fold_accuracy[f] - b.fold_accuracy[f]);
    c.mean_difference += c.differences.back();
  }
  if (!c.differences.empty()) c.mean_difference /= static_cast<double>(c.differences.size());
  c.first_not_worse = a.mean_accuracy >= b.mean_accuracy;
  return c;
}

Json to_json(const MethodComparison& c) {
  return {{"methods", {c.first, c.second}},
          {"mean_accuracy", {c.first_result.mean_accuracy, c.second_result.mean_accuracy}},
          {"fold_differences", c.differences},
          {"mean_difference", c.mean_difference},
          {"first_not_worse", c.first_not_worse}};
}

Json environment_fingerprint() {
#if defined(__clang__)
  const std::string compiler = "clang " __clang_version__;
#elif defined(__GNUC__)
  const std::string compiler = "gcc " __VERSION__;
#else
  const std::string compiler = "unknown";
#endif
#ifdef NDEBUG
  const char* build = "release";
#else
  const char* build = "debug";
#endif
  return {{"version", "1.0.0"},
          {"compiler", compiler},
          {"simd", std::string(simd::isa_name(simd::active().isa))},
          {"hardware_threads", std::thread::hardware_concurrency()},
          {"build", build}};
}

Json make_report(const std::string& task, const Json& config) {
  return {{"schema", "facelap-report/1"},
          {"task", task},
          {"status", "ok"},
          {"config", config},
          {"environment", environment_fingerprint()},
          {"errors", Json::array()}};
}

const Json& report_schema() {
  static const Json schema = Json::parse(kReportSchemaText);
  return schema;
}

namespace {

bool type_matches(const Json& v, const std::string& t) {
  if (t == "object") return v.is_object();
  if (t == "array") return v.is_array();
  if (t == "string") return v.is_string();
  if (t == "boolean") return v.is_boolean();
  if (t == "null") return v.is_null();
  if (t == "number") return v.is_number();
  if (t == "integer") {
    if (v.is_number_integer()) return true;
    return v.is_number_float() && std::floor(v.get<double>()) == v.get<double>();
  }
  return false;
}

void check(const Json& v, const Json& s, const Json& root, const std::string& at, std::vector<std::string>& out) {
  if (s.contains("$ref")) {
    const std::string ref = s["$ref"].get<std::string>();
    if (ref.rfind("#", 0) != 0) {
      out.push_back(at + ": unsupported $ref " + ref);
      return;
    }
    check(v, root.at(Json::json_pointer(ref.substr(1))), root, at, out);
    return;
  }
  if (s.contains("type")) {
    const Json& t = s["type"];
    bool ok = false;
    if (t.is_array()) {
      for (const auto& x : t) ok = ok || type_matches(v, x.get<std::string>());
    } else {
      ok = type_matches(v, t.get<std::string>());
    }
    if (!ok) {
      out.push_back(at + ": expected type " + t.dump() + ", got " + v.type_name());
      return;
    }
  }
  if (s.contains("const") && v != s["const"]) out.push_back(at + ": expected " + s["const"].dump());
  if (s.contains("enum")) {
    bool found = false;
    for (const auto& e : s["enum"]) found = found || e == v;
    if (!found) out.push_back(at + ": value " + v.dump() + " not in " + s["enum"].dump());
  }
  if (v.is_number()) {
    const double x = v.get<double>();
    if (s.contains("minimum") && x < s["minimum"].get<double>())
      out.push_back(at + ": " + v.dump() + " below minimum " + s["minimum"].dump());
    if (s.contains("maximum") && x > s["maximum"].get<double>())
      out.push_back(at + ": " + v.dump() + " above maximum " + s["maximum"].dump());
  }
  if (v.is_object()) {
    if (s.contains("required"))
      for (const auto& r : s["required"])
        if (!v.contains(r.get<std::string>())) out.push_back(at + ": missing required property '" + r.get<std::string>() + "'");
    const Json* props = s.contains("properties") ? &s["properties"] : nullptr;
    for (auto it = v.begin(); it != v.end(); ++it) {
      if (props && props->contains(it.key())) {
        check(it.value(), (*props)[it.key()], root, at + "/" + it.key(), out);
      } else if (s.contains("additionalProperties") && s["additionalProperties"] == false) {
        out.push_back(at + ": unexpected property '" + it.key() + "'");
      }
    }
  }
  if (v.is_array()) {
    if (s.contains("minItems") && v.size() < s["minItems"].get<std::size_t>())
      out.push_back(at + ": fewer than " + s["minItems"].dump() + " items");
    if (s.contains("maxItems") && v.size() > s["maxItems"].get<std::size_t>())
      out.push_back(at + ": more than " + s["maxItems"].dump() + " items");
    if (s.contains("items"))
      for (std::size_t i = 0; i < v.size(); ++i) check(v[i], s["items"], root, at + "/" + std::to_string(i), out);
  }
}

std::string fixed(double v, int prec) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(prec) << v;
  return ss.str();
}

// Right-aligned columns, first column left-aligned.
std::string render(const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width;
  for (const auto& r : rows)
    for (std::size_t c = 0; c < r.size(); ++c) {
      if (width.size() <= c) width.push_back(0);
      width[c] = std::max(width[c], r[c].size());
    }
  std::string out;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    for (std::size_t c = 0; c < r.size(); ++c) {
      const std::string pad(width[c] - r[c].size(), ' ');
      out += c == 0 ? r[c] + pad : "  " + pad + r[c];
    }
    out += '\n';
    if (i == 0) {
      std::size_t total = 0;
      for (std::size_t c = 0; c < width.size(); ++c) total += width[c] + (c ? 2 : 0);
      out += std::string(total, '-') + '\n';
    }
  }
  return out;
}

}  // namespace

std::vector<std::string> validate_json(const Json& doc, const Json& schema) {
  std::vector<std::string> out;
  check(doc, schema, schema, "", out);
  for (auto& m : out)
    if (m.empty() || m[0] == ':') m = "/" + m;
  return out;
}

std::string format_confusion(const ConfusionMatrix& m) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> head = {"true\\pred"};
  for (const auto& l : m.labels) head.push_back(l);
  rows.push_back(head);
  for (std::size_t r = 0; r < m.labels.size(); ++r) {
    std::vector<std::string> row = {m.labels[r]};
    for (double v : m.percent[r]) row.push_back(fixed(v, 2));
    rows.push_back(row);
  }
  return render(rows);
}

std::string format_expression_summary(const ExpressionResult& r) {
  std::string out = "mean accuracy " + fixed(r.mean_accuracy, 2) + "% (sd " + fixed(r.std_accuracy, 2) + ")\nfolds:";
  for (double a : r.fold_accuracy) out += " " + fixed(a, 1);
  return out + "\n" + format_confusion(r.confusion);
}

std::string format_au_table(const AuResult& r) {
  std::vector<std::vector<std::string>> rows = {{"AU", "positives", "precision", "recall", "F1", "skipped folds"}};
  for (const auto& s : r.scores) {
    std::string skipped;
    for (std::size_t f : s.skipped_folds) skipped += (skipped.empty() ? "" : ",") + std::to_string(f);
    rows.push_back({"AU" + std::to_string(s.au), std::to_string(s.positives), fixed(s.precision, 3), fixed(s.recall, 3),
                    s.defined ? fixed(s.f1, 3) : "n/a", skipped.empty() ? "-" : skipped});
  }
  rows.push_back({"weighted", "", "", "", fixed(r.weighted_f1, 3), ""});
  return render(rows);
}

std::string format_sweep_table(const SweepResult& r) {
  std::vector<std::string> head = {"k"}, mean = {"accuracy %"}, sd = {"sd"};
  for (std::size_t i = 0; i < r.ks.size(); ++i) {
    head.push_back(std::to_string(r.ks[i]));
    mean.push_back(fixed(r.results[i].mean_accuracy, 2));
    sd.push_back(fixed(r.results[i].std_accuracy, 2));
  }
  return render({head, mean, sd});
}

std::string format_comparison(const MethodComparison& c) {
  std::vector<std::vector<std::string>> rows = {{"fold", c.first, c.second, "difference"}};
  for (std::size_t f = 0; f < c.differences.size(); ++f)
    rows.push_back({std::to_string(f), fixed(c.first_result.fold_accuracy[f], 2),
                    fixed(c.second_result.fold_accuracy[f], 2), fixed(c.differences[f], 2)});
  rows.push_back({"mean", fixed(c.first_result.mean_accuracy, 2), fixed(c.second_result.mean_accuracy, 2),
                  fixed(c.mean_difference, 2)});
  return render(rows) + c.first + (c.first_not_worse ? " >= " : " < ") + c.second + " on mean accuracy\n";
}

}  // namespace facelap
