#pragma once

// Cross-validated experiments over feature tables, producing the report.

#include <string>
#include <vector>

#include "facelap/archive.hpp"
#include "facelap/report.hpp"

namespace facelap {

enum class Task { Expressions, Aus };
std::string to_string(Task t);
Task parse_task(const std::string& s);

struct EvaluateJob {
  Task task = Task::Expressions;
  ClassifierConfig classifier;
  std::size_t folds = 10;
  std::uint64_t seed = 1;
  std::vector<std::size_t> sweep;  // k values; empty = no sweep
  bool shuffle_labels = false;     // add a chance-level control
};

struct ExperimentOutcome {
  Json report;
  std::string text;  // human-readable tables
  bool ok = true;
};

// Aligns two tables on (subject, expression, intensity); rows missing from
// either side are dropped from both.
void align_tables(FeatureTable& a, FeatureTable& b);

// Runs the requested experiment. With `compare` the same folds evaluate both
// tables and a paired comparison is reported. `config` is echoed verbatim.
ExperimentOutcome run_experiment(const FeatureTable& table, const FeatureTable* compare, const EvaluateJob& job,
                                 const Json& config);

// Label permutation used by the chance control.
std::vector<int> shuffled_labels(std::span<const int> labels, std::uint64_t seed);

}  // namespace facelap
