#pragma once

// Experiment report documents with their schema check, plus text tables.

#include <string>
#include <vector>

#include "json.hpp"

#include "facelap/classify.hpp"

namespace facelap {

using Json = nlohmann::json;

struct RunError {
  std::string stage;  // "features", "fold", ...
  std::string item;   // scan path, fold index, ...
  std::string message;
};

Json to_json(const ConfusionMatrix& m);
Json to_json(const ExpressionResult& r);
Json to_json(const AuResult& r);
Json to_json(const SweepResult& r);
Json folds_json(const std::vector<Fold>& folds);
Json errors_json(const std::vector<RunError>& errors);

// Paired per-fold comparison of two methods evaluated on the same folds.
struct MethodComparison {
  std::string first, second;
  ExpressionResult first_result, second_result;
  std::vector<double> differences;  // first - second, per fold
  double mean_difference = 0.0;
  bool first_not_worse = false;
};

MethodComparison compare_methods(const std::string& first, const ExpressionResult& a, const std::string& second,
                                 const ExpressionResult& b);
Json to_json(const MethodComparison& c);

// Build and host details recorded with every report.
Json environment_fingerprint();

// Skeleton with the schema tag and config echo; callers add the
// task sections.
Json make_report(const std::string& task, const Json& config);

// The bundled report schema (docs/report.schema.json).
const Json& report_schema();

// Checks `doc` against a JSON Schema subset: type, enum, const, required,
// properties, additionalProperties (bool), items, minItems, maxItems,
// minimum, maximum. Returns one message per violation.
std::vector<std::string> validate_json(const Json& doc, const Json& schema);
inline std::vector<std::string> validate_report(const Json& doc) { return validate_json(doc, report_schema()); }

std::string format_confusion(const ConfusionMatrix& m);
std::string format_expression_summary(const ExpressionResult& r);
std::string format_au_table(const AuResult& r);
std::string format_sweep_table(const SweepResult& r);
std::string format_comparison(const MethodComparison& c);

}  // namespace facelap
