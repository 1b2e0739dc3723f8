#pragma once

#include <json.hpp>

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "structcond/cn_engine.hpp"
#include "structcond/cv.hpp"
#include "structcond/oracle.hpp"
#include "structcond/qs.hpp"

namespace structcond {

using Json = nlohmann::ordered_json;

struct CvInstance {
  CvParams params;
  std::optional<Vector> rhs;
};
struct QsInstance {
  QsParams params;
  std::optional<Vector> rhs;
};
struct GvInstance {
  GvTangentParams params;
  std::optional<Vector> rhs;
};
struct DenseInstance {
  Matrix m;
  std::optional<Vector> rhs;
};

using Instance = std::variant<CvInstance, QsInstance, GvInstance, DenseInstance>;

// Parses one instance object; throws SchemaError on malformed input.
Instance parse_instance(const Json& j);
Instance load_instance(const std::string& path);

Json instance_echo(const Instance& inst);

Json vector_json(const Vector& v);
Json matrix_json(const Matrix& m);
Vector vector_from_json(const Json& j, const std::string& field);

struct LabeledReport {
  std::string label;
  CnReport report;
};

struct OracleSection {
  OracleEstimate estimate;
  PerturbSpec spec;
  std::string target;  // which computation was probed
};

struct ComparisonRow {
  std::string quantity;
  std::optional<double> computed;
  std::optional<double> reference;
  std::optional<double> rel_error;
  std::string status;  // pass | fail | seed-dependent | blocked | info
};

struct ReportDocument {
  Json instance;
  std::vector<LabeledReport> reports;
  std::optional<OracleSection> oracle;
  std::map<std::string, Verdict> verdicts;
  std::vector<ComparisonRow> comparison;
  std::vector<std::string> diagnostics;
  std::optional<std::uint64_t> seed;
};

enum class OutputFormat { json, csv, table };

Json document_json(const ReportDocument& doc, bool with_kernels = true);
std::string render_document(const ReportDocument& doc, OutputFormat format);

}  // namespace structcond
