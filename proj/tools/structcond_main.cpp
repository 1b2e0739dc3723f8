#include <CLI11.hpp>

#include <iostream>
#include <string>

#include "structcond/cli.hpp"
#include "structcond/version.hpp"

namespace {

structcond::OutputFormat parse_format(const std::string& s) {
  if (s == "json") return structcond::OutputFormat::json;
  if (s == "csv") return structcond::OutputFormat::csv;
  if (s == "table") return structcond::OutputFormat::table;
  throw CLI::ValidationError("--format", "must be json, csv or table");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "structcond: mixed and componentwise condition numbers for the "
      "Moore-Penrose inverse and minimum-norm least-squares solutions of "
      "parameterized rank-structured matrices"};
  app.set_version_flag("--version",
                       std::string("structcond ") + structcond::kVersion);
  app.require_subcommand(1);

  structcond::RunConfig cfg;
  std::string format = "json";
  double rank_tol = -1.0;
  long long seed = -1;
  std::string table;

  auto add_common = [&](CLI::App* sub, bool needs_input) {
    if (needs_input) {
      sub->add_option("--input", cfg.input_path, "instance JSON file")
          ->required();
    }
    sub->add_option("--format", format, "output format: json, csv or table");
    sub->add_option("--rank-tol", rank_tol,
                    "absolute singular-value cutoff (default: "
                    "max(m,n)*eps*sigma_max)");
    sub->add_option("--seed", seed, "random seed for seeded computations");
  };

  CLI::App* cn_pinv = app.add_subcommand(
      "cn-pinv", "condition numbers of the Moore-Penrose inverse");
  add_common(cn_pinv, true);

  CLI::App* cn_ls = app.add_subcommand(
      "cn-ls",
      "condition numbers of the minimum-norm least-squares solution");
  add_common(cn_ls, true);

  CLI::App* oracle = app.add_subcommand(
      "oracle", "perturbation-sampling lower-bound estimate");
  add_common(oracle, true);
  oracle->add_option("--trials", cfg.trials, "random draws for large p");
  oracle->add_option("--epsilon", cfg.epsilon,
                     "componentwise perturbation size");

  CLI::App* compare = app.add_subcommand(
      "compare", "all report families plus the proved inequalities");
  add_common(compare, true);

  CLI::App* reproduce = app.add_subcommand(
      "reproduce",
      "reproduce a published reference table (t1, t2, t3, t4, t5, t7, t8; "
      "the source material has no t6)");
  add_common(reproduce, false);
  reproduce->add_option("--table", table, "table id")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    cfg.format = parse_format(format);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "schema error: " << e.what() << "\n";
    return structcond::kExitSchema;
  }
  if (rank_tol > 0.0) cfg.rank_tol = rank_tol;
  if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
  if (!table.empty()) cfg.table_id = table;

  if (cn_pinv->parsed()) cfg.command = structcond::Command::cn_pinv;
  if (cn_ls->parsed()) cfg.command = structcond::Command::cn_ls;
  if (oracle->parsed()) cfg.command = structcond::Command::oracle;
  if (compare->parsed()) cfg.command = structcond::Command::compare;
  if (reproduce->parsed()) cfg.command = structcond::Command::reproduce;

  return structcond::run(cfg, std::cout, std::cerr);
}
