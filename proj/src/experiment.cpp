#include "facelap/experiment.hpp"

#include <map>
#include <set>
#include <tuple>

namespace facelap {

std::string to_string(Task t) { return t == Task::Expressions ? "expressions" : "aus"; }

Task parse_task(const std::string& s) {
  if (s == "expressions") return Task::Expressions;
  if (s == "aus") return Task::Aus;
  throw std::invalid_argument("unknown task '" + s + "' (expected expressions or aus)");
}

namespace {

using Key = std::tuple<std::string, int, int>;

Key key_of(const SampleInfo& s) { return {s.subject, s.expression, s.intensity}; }

}  // namespace

void align_tables(FeatureTable& a, FeatureTable& b) {
  std::map<Key, std::size_t> in_b;
  for (std::size_t i = 0; i < b.samples.size(); ++i) in_b[key_of(b.samples[i])] = i;
  std::vector<std::size_t> rows_a, rows_b;
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    const auto it = in_b.find(key_of(a.samples[i]));
    if (it == in_b.end()) continue;
    rows_a.push_back(i);
    rows_b.push_back(it->second);
  }
  a = a.select(rows_a);
  b = b.select(rows_b);
}

std::vector<int> shuffled_labels(std::span<const int> labels, std::uint64_t seed) {
  std::vector<std::size_t> perm(labels.size());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  seeded_shuffle(perm, seed ^ 0x5eed5eed5eed5eedull);
  std::vector<int> out(labels.size());
  for (std::size_t i = 0; i < perm.size(); ++i) out[i] = labels[perm[i]];
  return out;
}

ExperimentOutcome run_experiment(const FeatureTable& table_in, const FeatureTable* compare_in, const EvaluateJob& job,
                                 const Json& config) {
  FeatureTable table = table_in;
  FeatureTable other;
  if (compare_in) {
    other = *compare_in;
    align_tables(table, other);
  }
  ExperimentOutcome out;
  const std::string task = !job.sweep.empty() ? "sweep" : compare_in ? "compare" : to_string(job.task);
  out.report = make_report(task, config);
  Json& rep = out.report;

  const std::vector<std::string> subjects = table.subjects();
  const std::set<std::string> unique(subjects.begin(), subjects.end());
  std::size_t missing = 0;
  for (const auto& m : table.missing)
    for (auto v : m) missing += v;
  rep["dataset"] = {{"samples", table.samples.size()},
                    {"subjects", unique.size()},
                    {"columns", table.values.cols()},
                    {"missing_patches", missing}};

  try {
    const std::vector<Fold> folds = identity_disjoint_folds(subjects, job.folds, job.seed);
    rep["folds"] = folds_json(folds);
    const std::vector<int> expr = table.expressions();
    const std::string name = to_string(table.method);

    if (!job.sweep.empty()) {
      for (std::size_t k : job.sweep)
        if (k > table.k)
          throw std::invalid_argument("sweep value k = " + std::to_string(k) + " exceeds the feature table's k = " +
                                      std::to_string(table.k));
      const SweepResult s = eigen_sweep(
          job.sweep, [&](std::size_t k) { return table.slice(k).values; }, expr, folds, job.classifier);
      rep["sweep"] = to_json(s);
      out.text += "eigen sweep (" + name + ", " + to_string(job.classifier.kind) + ")\n" + format_sweep_table(s);
    } else if (job.task == Task::Aus) {
      const AuResult r = evaluate_aus(table.values, table.aus(), folds, job.classifier);
      rep["aus"] = to_json(r);
      out.text += "Action Unit F1 (" + name + ", " + to_string(job.classifier.kind) + ")\n" + format_au_table(r);
    } else {
      const ExpressionResult r = evaluate_expressions(table.values, expr, folds, job.classifier);
      rep["expressions"] = to_json(r);
      out.text += "expressions (" + name + ", " + to_string(job.classifier.kind) + ")\n" +
                  format_expression_summary(r);
      if (compare_in) {
        const ExpressionResult r2 = evaluate_expressions(other.values, other.expressions(), folds, job.classifier);
        const std::string name2 = to_string(other.method) + (other.method == table.method ? " (2)" : "");
        const MethodComparison c = compare_methods(name, r, name2, r2);
        rep["comparison"] = to_json(c);
        out.text += "\npaired comparison on identical folds\n" + format_comparison(c);
      }
    }
    if (job.shuffle_labels) {
      const std::vector<int> shuffled = shuffled_labels(expr, job.seed);
      const ExpressionResult chance = evaluate_expressions(table.values, shuffled, folds, job.classifier);
      rep["chance_control"] = to_json(chance);
      out.text += "\nchance control (shuffled labels): " + std::to_string(chance.mean_accuracy) + "%\n";
    }
  } catch (const EvaluationError& e) {
    rep["status"] = "failed";
    rep["errors"].push_back({{"stage", "fold"}, {"item", std::to_string(e.fold())}, {"message", e.what()}});
    out.ok = false;
  } catch (const std::exception& e) {
    rep["status"] = "failed";
    rep["errors"].push_back({{"stage", "evaluate"}, {"item", ""}, {"message", e.what()}});
    out.ok = false;
  }
  return out;
}

}  // namespace facelap
