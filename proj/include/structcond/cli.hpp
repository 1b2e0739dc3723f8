#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include "structcond/json_io.hpp"

namespace structcond {

enum class Command { cn_pinv, cn_ls, oracle, compare, reproduce };

struct RunConfig {
  Command command = Command::cn_pinv;
  std::string input_path;
  OutputFormat format = OutputFormat::json;
  std::optional<double> rank_tol;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> table_id;  // t1, t2, t3, t4, t5, t7, t8
  long trials = 1000;
  double epsilon = 1e-6;
};

// Exit codes: 0 success, 2 degenerate input, 3 schema/usage errors.
inline constexpr int kExitOk = 0;
inline constexpr int kExitDegenerate = 2;
inline constexpr int kExitSchema = 3;

// Dispatches one command and prints the rendered document to `out`.
int run(const RunConfig& config, std::ostream& out, std::ostream& err);

// Builds the document for one command without rendering (used by tests).
ReportDocument run_document(const RunConfig& config);

// Reproduction harness for the published reference tables (t6 does not
// exist in the source material).
ReportDocument reproduce_table(const std::string& table_id,
                               std::uint64_t seed);

}  // namespace structcond
