#include "structcond/cli.hpp"

#include <cmath>
#include <ostream>
#include <sstream>

#include "structcond/corpus.hpp"
#include "structcond/oracle.hpp"

namespace structcond {

namespace {

constexpr std::uint64_t kDefaultSeed = 20240601;

// Reference values from the published experiments this tool reproduces.
struct Table1Refs {
  double unstr_mixed = 1.9309e+04;
  double str_mixed = 8.4149;
  double unstr_comp = 2.6103e+06;
  double str_comp = 63.7873;
  double ls_unstr_mixed = 3.9137e+04;
  double ls_str_mixed = 12.3655;
  double ls_unstr_comp = 2.1903e+06;
  double ls_str_comp = 12.3655;
};

struct Table2Refs {
  double unstr_mixed = 1.1568e+05;
  double str_mixed = 8.5419e+01;
  double unstr_comp = 5.3826e+07;
  double str_comp = 3.3542e+04;
};

// Single-draw reference values for the order-5 random instance tables.
constexpr double kTable3Refs[6] = {817.7856, 3.0,      2.0,
                                   5.3877e11, 2.4189e5, 1.5682e5};
constexpr double kTable4Refs[6] = {1.7838e3, 4.0024, 3.0016,
                                   2.3669e3, 8.8136, 6.5184};

// Corpus means for the rank-deficient tangent-representation experiment:
// columns are unstructured, gv, qs, effective (mixed then componentwise).
struct CorpusRefs {
  Index n;
  double cols[8];
};
constexpr CorpusRefs kTable7Refs[4] = {
    {30, {1.0667e2, 7.4873e1, 1.2388e2, 8.9215e1, 2.3780e5, 1.2730e4,
          2.2102e4, 1.5815e4}},
    {40, {1.1429e2, 7.4757e1, 1.2356e2, 8.9427e1, 6.1267e8, 1.4452e5,
          2.3753e5, 1.7285e5}},
    {50, {1.6711e2, 1.0323e2, 1.7182e2, 1.2296e2, 6.9215e6, 1.6133e5,
          3.2430e5, 2.1980e5}},
    {60, {3.2135e2, 1.8140e2, 2.9452e2, 2.1359e2, 2.7856e7, 3.0500e5,
          5.2242e5, 3.9791e5}}};
constexpr CorpusRefs kTable8Refs[4] = {
    {30, {1.1278e2, 7.8851e1, 2.6113e2, 9.4414e1, 4.6667e3, 1.7445e3,
          2.2102e4, 2.1646e3}},
    {40, {1.1990e2, 7.7823e1, 2.4226e2, 9.3005e1, 7.3841e3, 4.1774e3,
          2.3753e5, 5.2069e3}},
    {50, {1.6512e2, 1.0080e2, 3.2184e2, 1.2072e2, 9.2143e3, 4.2351e3,
          3.2430e5, 5.3584e3}},
    {60, {3.3149e2, 1.8715e2, 7.6179e2, 2.2120e2, 7.0839e4, 5.9482e4,
          5.2242e5, 7.2054e4}}};

double rel_error(double computed, double reference) {
  return std::abs(computed - reference) / std::abs(reference);
}

ComparisonRow deterministic_row(const std::string& quantity, double computed,
                                double reference, double tol) {
  ComparisonRow row;
  row.quantity = quantity;
  row.computed = computed;
  row.reference = reference;
  row.rel_error = rel_error(computed, reference);
  row.status = *row.rel_error <= tol ? "pass" : "fail";
  return row;
}

ComparisonRow seed_dependent_row(const std::string& quantity, double computed,
                                 std::optional<double> reference) {
  ComparisonRow row;
  row.quantity = quantity;
  row.computed = computed;
  row.reference = reference;
  row.status = "seed-dependent";
  return row;
}

void append_verdict_rows(ReportDocument& doc,
                         const std::map<std::string, Verdict>& verdicts,
                         std::map<std::string, long>& failures) {
  for (const auto& [name, v] : verdicts) {
    if (!v.pass) ++failures[name];
    if (failures.find(name) == failures.end()) failures[name];
  }
  (void)doc;
}

void finish_verdict_rows(ReportDocument& doc,
                         const std::map<std::string, long>& failures,
                         long instances) {
  for (const auto& [name, fails] : failures) {
    ComparisonRow row;
    row.quantity = "ordering " + name + " (failures over " +
                   std::to_string(instances) + " instances)";
    row.computed = static_cast<double>(fails);
    row.status = fails == 0 ? "pass" : "fail";
    doc.comparison.push_back(std::move(row));
  }
}

Vector instance_rhs_or_throw(const Instance& inst) {
  const std::optional<Vector>* rhs = nullptr;
  std::visit([&rhs](const auto& i) { rhs = &i.rhs; }, inst);
  if (!*rhs) {
    throw SchemaError(
        "cn-ls needs a right-hand side (\"b\" for cv, \"b_rhs\" otherwise)");
  }
  return **rhs;
}

struct ModelView {
  MatrixModel model;
  ParamSet psi;
  Matrix matrix;
};

ModelView model_view(const Instance& inst) {
  ModelView mv;
  if (const auto* cv = std::get_if<CvInstance>(&inst)) {
    mv.model = cv_model(cv->params);
    mv.psi = cv_param_set(cv->params);
    mv.matrix = build_cv(cv->params);
  } else if (const auto* qs = std::get_if<QsInstance>(&inst)) {
    mv.model = qs_model(qs->params);
    mv.psi = qs_param_set(qs->params);
    mv.matrix = build_qs(qs->params);
  } else if (const auto* gv = std::get_if<GvInstance>(&inst)) {
    mv.model = gv_model(gv->params);
    mv.psi = gv_param_set(gv->params);
    mv.matrix = gv_expand(gv->params).second;
  } else {
    const auto& dense = std::get<DenseInstance>(inst);
    mv.model = entrywise_model(dense.m);
    mv.psi = entrywise_params(dense.m);
    mv.matrix = dense.m;
  }
  return mv;
}

void echo_rank_info(ReportDocument& doc, const Matrix& m,
                    std::optional<double> rank_tol) {
  const PinvBundle bundle = pinv(m, rank_tol);
  doc.instance["rank"] = bundle.rank;
  doc.instance["rank_tol_used"] = bundle.tol_used;
}

void add_cv_diagnostics(ReportDocument& doc, const CvParams& p) {
  const CvValidation v = check_cv(p);
  for (const auto& nc : v.near_collisions) {
    std::ostringstream msg;
    msg << "near node collision: |c[" << nc.i + 1 << "] - d[" << nc.j + 1
        << "]| has relative gap " << nc.gap
        << "; entries of the Cauchy block are overflow-prone";
    doc.diagnostics.push_back(msg.str());
  }
}

ReportDocument cmd_cn_pinv(const Instance& inst, const RunConfig& cfg) {
  ReportDocument doc;
  doc.instance = instance_echo(inst);
  if (const auto* cv = std::get_if<CvInstance>(&inst)) {
    add_cv_diagnostics(doc, cv->params);
    doc.reports.push_back(
        {"cv structured upper bound", cv_pinv_cn_upper(cv->params, cfg.rank_tol)});
    if (doc.reports.back().report.rank == cv->params.n) {
      doc.reports.push_back(
          {"cv structured exact",
           cv_pinv_cn_exact_fullrank(cv->params, cfg.rank_tol)});
    }
    doc.reports.push_back(
        {"unstructured upper bound",
         pinv_cn_unstructured(build_cv(cv->params), cfg.rank_tol)});
  } else if (const auto* qs = std::get_if<QsInstance>(&inst)) {
    doc.reports.push_back(
        {"qs structured upper bound", qs_pinv_cn_upper(qs->params, cfg.rank_tol)});
    doc.reports.push_back(
        {"qs effective", qs_effective_pinv_cn(qs->params, cfg.rank_tol)});
    doc.reports.push_back(
        {"unstructured upper bound",
         pinv_cn_unstructured(build_qs(qs->params), cfg.rank_tol)});
  } else if (const auto* gv = std::get_if<GvInstance>(&inst)) {
    const auto [qsp, m] = gv_expand(gv->params);
    doc.reports.push_back(
        {"gv structured upper bound", gv_pinv_cn_upper(gv->params, cfg.rank_tol)});
    doc.reports.push_back(
        {"qs structured upper bound", qs_pinv_cn_upper(qsp, cfg.rank_tol)});
    doc.reports.push_back(
        {"qs effective", qs_effective_pinv_cn(qsp, cfg.rank_tol)});
    doc.reports.push_back(
        {"unstructured upper bound", pinv_cn_unstructured(m, cfg.rank_tol)});
  } else {
    const auto& dense = std::get<DenseInstance>(inst);
    doc.reports.push_back(
        {"unstructured upper bound",
         pinv_cn_unstructured(dense.m, cfg.rank_tol)});
  }
  echo_rank_info(doc, model_view(inst).matrix, cfg.rank_tol);
  return doc;
}

ReportDocument cmd_cn_ls(const Instance& inst, const RunConfig& cfg) {
  ReportDocument doc;
  doc.instance = instance_echo(inst);
  const Vector b = instance_rhs_or_throw(inst);
  if (const auto* cv = std::get_if<CvInstance>(&inst)) {
    add_cv_diagnostics(doc, cv->params);
    doc.reports.push_back(
        {"cv structured upper bound",
         cv_ls_cn_upper(cv->params, b, cfg.rank_tol)});
    if (doc.reports.back().report.rank == cv->params.n) {
      doc.reports.push_back(
          {"cv structured exact",
           cv_ls_cn_exact_fullrank(cv->params, b, cfg.rank_tol)});
    }
    doc.reports.push_back(
        {"unstructured upper bound",
         ls_cn_unstructured(build_cv(cv->params), b, cfg.rank_tol)});
  } else if (const auto* qs = std::get_if<QsInstance>(&inst)) {
    doc.reports.push_back(
        {"qs structured upper bound",
         qs_ls_cn_upper(qs->params, b, cfg.rank_tol)});
    doc.reports.push_back(
        {"qs effective", qs_effective_ls_cn(qs->params, b, cfg.rank_tol)});
    doc.reports.push_back(
        {"unstructured upper bound",
         ls_cn_unstructured(build_qs(qs->params), b, cfg.rank_tol)});
  } else if (const auto* gv = std::get_if<GvInstance>(&inst)) {
    const auto [qsp, m] = gv_expand(gv->params);
    doc.reports.push_back(
        {"gv structured upper bound",
         gv_ls_cn_upper(gv->params, b, cfg.rank_tol)});
    doc.reports.push_back(
        {"qs structured upper bound", qs_ls_cn_upper(qsp, b, cfg.rank_tol)});
    doc.reports.push_back(
        {"qs effective", qs_effective_ls_cn(qsp, b, cfg.rank_tol)});
    doc.reports.push_back(
        {"unstructured upper bound", ls_cn_unstructured(m, b, cfg.rank_tol)});
  } else {
    const auto& dense = std::get<DenseInstance>(inst);
    doc.reports.push_back(
        {"unstructured upper bound",
         ls_cn_unstructured(dense.m, b, cfg.rank_tol)});
  }
  echo_rank_info(doc, model_view(inst).matrix, cfg.rank_tol);
  return doc;
}

ReportDocument cmd_oracle(const Instance& inst, const RunConfig& cfg) {
  ReportDocument doc;
  doc.instance = instance_echo(inst);
  doc.seed = cfg.seed.value_or(kDefaultSeed);
  ModelView mv = model_view(inst);

  PerturbSpec spec;
  spec.epsilon = cfg.epsilon;
  spec.trials = cfg.trials;
  spec.seed = *doc.seed;
  spec.mode = mv.psi.size() <= 20 ? PerturbMode::extrapolated
                                  : PerturbMode::monte_carlo;

  std::optional<Vector> rhs;
  std::visit([&rhs](const auto& i) { rhs = i.rhs; }, inst);

  OracleSection section;
  section.spec = spec;
  if (rhs) {
    LsProblem problem = make_ls_problem(mv.model, mv.psi, *rhs, cfg.rank_tol);
    section.estimate = estimate_ls_cn(problem, spec, cfg.rank_tol);
    section.target = "least-squares solution";
    doc.reports.push_back({"upper bound under parameterization",
                           ls_cn_upper(problem)});
  } else {
    section.estimate = estimate_pinv_cn(mv.model, mv.psi, spec, cfg.rank_tol);
    section.target = "pseudoinverse";
    doc.reports.push_back({"upper bound under parameterization",
                           pinv_cn_upper(mv.model, mv.psi, cfg.rank_tol)});
  }
  doc.oracle = std::move(section);
  echo_rank_info(doc, mv.matrix, cfg.rank_tol);
  return doc;
}

ReportDocument cmd_compare(const Instance& inst, const RunConfig& cfg) {
  ReportDocument doc;
  doc.instance = instance_echo(inst);
  QsCnComparison cmp;
  if (const auto* qs = std::get_if<QsInstance>(&inst)) {
    cmp = compare_all(qs->params, qs->rhs, cfg.rank_tol);
  } else if (const auto* gv = std::get_if<GvInstance>(&inst)) {
    cmp = compare_all(gv->params, gv->rhs, cfg.rank_tol);
  } else {
    throw SchemaError("compare needs a qs or gv instance");
  }
  if (cmp.structured_gv) {
    doc.reports.push_back({"gv structured upper bound", *cmp.structured_gv});
  }
  doc.reports.push_back({"qs structured upper bound", cmp.structured_qs});
  doc.reports.push_back({"qs effective", cmp.effective});
  doc.reports.push_back({"unstructured upper bound", cmp.unstructured});
  if (cmp.ls_structured_qs) {
    if (cmp.ls_structured_gv) {
      doc.reports.push_back({"gv structured upper bound (ls)",
                             *cmp.ls_structured_gv});
    }
    doc.reports.push_back({"qs structured upper bound (ls)",
                           *cmp.ls_structured_qs});
    doc.reports.push_back({"qs effective (ls)", *cmp.ls_effective});
    doc.reports.push_back({"unstructured upper bound (ls)",
                           *cmp.ls_unstructured});
  }
  doc.verdicts = cmp.verdicts;
  echo_rank_info(doc, model_view(inst).matrix, cfg.rank_tol);
  return doc;
}

ReportDocument reproduce_t1(std::uint64_t seed) {
  ReportDocument doc;
  doc.seed = seed;
  const CvParams p = reference_cv_5x6();
  doc.instance = instance_echo(CvInstance{p, std::nullopt});
  doc.diagnostics.push_back(
      "the published parameter listing prints the second node as a "
      "duplicate 1; this run uses the recovered value c[2] = 2, which "
      "reproduces all four deterministic reference columns to ~1e-4");
  const Table1Refs refs;

  const Matrix m = build_cv(p);
  const CnReport unstr = pinv_cn_unstructured(m);
  const CnReport str = cv_pinv_cn_upper(p);
  doc.comparison.push_back(deterministic_row("pinv unstructured mixed",
                                             unstr.mixed, refs.unstr_mixed,
                                             1e-2));
  doc.comparison.push_back(deterministic_row("pinv structured mixed",
                                             str.mixed, refs.str_mixed, 1e-2));
  doc.comparison.push_back(deterministic_row("pinv unstructured componentwise",
                                             unstr.componentwise,
                                             refs.unstr_comp, 1e-2));
  doc.comparison.push_back(deterministic_row("pinv structured componentwise",
                                             str.componentwise, refs.str_comp,
                                             1e-2));

  // The published least-squares columns used an unrecorded random b; fresh
  // draws are comparable only in distribution.
  Rng rng(seed);
  const Vector b = rng.normal_vector(p.m());
  const CnReport ls_unstr = ls_cn_unstructured(m, b);
  const CnReport ls_str = cv_ls_cn_upper(p, b);
  doc.comparison.push_back(seed_dependent_row("ls unstructured mixed",
                                              ls_unstr.mixed,
                                              refs.ls_unstr_mixed));
  doc.comparison.push_back(seed_dependent_row("ls structured mixed",
                                              ls_str.mixed,
                                              refs.ls_str_mixed));
  doc.comparison.push_back(seed_dependent_row("ls unstructured componentwise",
                                              ls_unstr.componentwise,
                                              refs.ls_unstr_comp));
  doc.comparison.push_back(seed_dependent_row("ls structured componentwise",
                                              ls_str.componentwise,
                                              refs.ls_str_comp));
  doc.instance["rank"] = str.rank;
  return doc;
}

ReportDocument reproduce_t2(std::uint64_t seed) {
  ReportDocument doc;
  doc.seed = seed;
  CvParams p = reference_cv_12x20();
  doc.instance = instance_echo(CvInstance{p, std::nullopt});
  const Table2Refs refs;

  const CvValidation v = check_cv(p);
  if (!v.collisions.empty()) {
    for (const auto& col : v.collisions) {
      std::ostringstream msg;
      msg << "node collision: c[" << col.i + 1 << "] == d[" << col.j + 1
          << "] == " << p.c(col.i);
      doc.diagnostics.push_back(msg.str());
    }
    doc.diagnostics.push_back(
        "blocked-by-paper-ambiguity: the stated node grids violate the "
        "disjointness premise of the Cauchy block, so the reference values "
        "cannot be reproduced from these nodes");

    const char* names[4] = {"pinv unstructured mixed", "pinv structured mixed",
                            "pinv unstructured componentwise",
                            "pinv structured componentwise"};
    const double refvals[4] = {refs.unstr_mixed, refs.str_mixed,
                               refs.unstr_comp, refs.str_comp};
    for (int i = 0; i < 4; ++i) {
      ComparisonRow row;
      row.quantity = names[i];
      row.reference = refvals[i];
      row.status = "blocked";
      doc.comparison.push_back(std::move(row));
    }

    // Nearest non-colliding perturbation: shift only the colliding pole
    // nodes by a relative 1e-9.
    CvParams nudged = p;
    std::ostringstream applied;
    applied << "informational rows use the nearest non-colliding "
               "perturbation: ";
    for (size_t i = 0; i < v.collisions.size(); ++i) {
      const Index j = v.collisions[i].j;
      nudged.d(j) *= 1.0 + 1e-9;
      if (i) applied << ", ";
      applied << "d[" << j + 1 << "] *= (1 + 1e-9)";
    }
    doc.diagnostics.push_back(applied.str());

    const Matrix m = build_cv(nudged);
    const CnReport unstr = pinv_cn_unstructured(m);
    const CnReport str = cv_pinv_cn_upper(nudged);
    auto info = [](const std::string& q, double val,
                   double ref) {
      ComparisonRow row;
      row.quantity = q;
      row.computed = val;
      row.reference = ref;
      row.status = "info";
      return row;
    };
    doc.comparison.push_back(info("pinv unstructured mixed (nudged nodes)",
                                  unstr.mixed, refs.unstr_mixed));
    doc.comparison.push_back(info("pinv structured mixed (nudged nodes)",
                                  str.mixed, refs.str_mixed));
    doc.comparison.push_back(
        info("pinv unstructured componentwise (nudged nodes)",
             unstr.componentwise, refs.unstr_comp));
    doc.comparison.push_back(
        info("pinv structured componentwise (nudged nodes)",
             str.componentwise, refs.str_comp));
    return doc;
  }

  // Unreachable for the stated grids, kept for corrected node sets.
  const Matrix m = build_cv(p);
  const CnReport unstr = pinv_cn_unstructured(m);
  const CnReport str = cv_pinv_cn_upper(p);
  doc.comparison.push_back(deterministic_row("pinv unstructured mixed",
                                             unstr.mixed, refs.unstr_mixed,
                                             1e-2));
  doc.comparison.push_back(deterministic_row("pinv structured mixed",
                                             str.mixed, refs.str_mixed, 1e-2));
  doc.comparison.push_back(deterministic_row("pinv unstructured componentwise",
                                             unstr.componentwise,
                                             refs.unstr_comp, 1e-2));
  doc.comparison.push_back(deterministic_row("pinv structured componentwise",
                                             str.componentwise, refs.str_comp,
                                             1e-2));
  return doc;
}

ReportDocument reproduce_t3_t4(std::uint64_t seed, bool ls) {
  ReportDocument doc;
  doc.seed = seed;
  const Index n = 5;
  const long seeds = 20;
  doc.instance["type"] = "qs corpus";
  doc.instance["n"] = n;
  doc.instance["instances"] = seeds;

  double mean[6] = {0, 0, 0, 0, 0, 0};
  std::map<std::string, long> failures;
  for (long i = 0; i < seeds; ++i) {
    Rng rng = Rng::substream(seed, static_cast<std::uint64_t>(i));
    const QsParams p = random_qs(rng, n);
    std::optional<Vector> b;
    if (ls) b = rng.normal_vector(n);
    const QsCnComparison cmp = compare_all(p, b);
    const CnReport& unstr = ls ? *cmp.ls_unstructured : cmp.unstructured;
    const CnReport& qs = ls ? *cmp.ls_structured_qs : cmp.structured_qs;
    const CnReport& eff = ls ? *cmp.ls_effective : cmp.effective;
    mean[0] += unstr.mixed;
    mean[1] += qs.mixed;
    mean[2] += eff.mixed;
    mean[3] += unstr.componentwise;
    mean[4] += qs.componentwise;
    mean[5] += eff.componentwise;
    append_verdict_rows(doc, cmp.verdicts, failures);
  }
  for (double& v : mean) v /= static_cast<double>(seeds);

  const double* refs = ls ? kTable4Refs : kTable3Refs;
  const char* names[6] = {"unstructured mixed", "qs structured mixed",
                          "qs effective mixed", "unstructured componentwise",
                          "qs structured componentwise",
                          "qs effective componentwise"};
  for (int i = 0; i < 6; ++i) {
    doc.comparison.push_back(seed_dependent_row(
        std::string(names[i]) + " (corpus mean)", mean[i], refs[i]));
  }
  finish_verdict_rows(doc, failures, seeds);
  doc.diagnostics.push_back(
      "reference values come from a single unrecorded draw; fresh-seed "
      "corpora are compared through the ordering verdicts");
  return doc;
}

ReportDocument reproduce_t5(std::uint64_t seed) {
  ReportDocument doc;
  doc.seed = seed;
  doc.instance["type"] = "qs corpus with scaled corners";
  const Index orders[3] = {5, 7, 10};
  const int scales[6] = {-2, -1, 0, 1, 2, 3};
  const long seeds_per_cell = 5;

  std::map<std::string, long> failures;
  long instances = 0;
  for (Index n : orders) {
    double mean[4] = {0, 0, 0, 0};
    long count = 0;
    for (int k : scales) {
      for (long i = 0; i < seeds_per_cell; ++i) {
        Rng rng = Rng::substream(
            seed, static_cast<std::uint64_t>((n * 100 + k + 10) * 1000 + i));
        const QsParams p =
            scale_qs_corners(random_qs(rng, n), k);
        const Vector b = rng.normal_vector(n);
        const QsCnComparison cmp = compare_all(p, std::optional<Vector>(b));
        mean[0] += cmp.unstructured.mixed;
        mean[1] += cmp.effective.mixed;
        mean[2] += cmp.unstructured.componentwise;
        mean[3] += cmp.effective.componentwise;
        append_verdict_rows(doc, cmp.verdicts, failures);
        ++count;
        ++instances;
      }
    }
    for (double& v : mean) v /= static_cast<double>(count);
    const std::string tag = " (n=" + std::to_string(n) + ", corpus mean)";
    doc.comparison.push_back(
        seed_dependent_row("unstructured mixed" + tag, mean[0], std::nullopt));
    doc.comparison.push_back(
        seed_dependent_row("qs effective mixed" + tag, mean[1], std::nullopt));
    doc.comparison.push_back(seed_dependent_row(
        "unstructured componentwise" + tag, mean[2], std::nullopt));
    doc.comparison.push_back(seed_dependent_row(
        "qs effective componentwise" + tag, mean[3], std::nullopt));
  }
  finish_verdict_rows(doc, failures, instances);
  return doc;
}

ReportDocument reproduce_t7_t8(std::uint64_t seed, bool ls) {
  ReportDocument doc;
  doc.seed = seed;
  doc.instance["type"] = "rank-deficient gv corpus";
  const long seeds = 100;
  doc.instance["instances_per_order"] = seeds;

  const CorpusRefs* refs = ls ? kTable8Refs : kTable7Refs;
  std::map<std::string, long> failures;
  for (int block = 0; block < 4; ++block) {
    const Index n = refs[block].n;
    double mean[8] = {0, 0, 0, 0, 0, 0, 0, 0};
    for (long i = 0; i < seeds; ++i) {
      Rng rng = Rng::substream(
          seed, static_cast<std::uint64_t>(n) * 1009 +
                    static_cast<std::uint64_t>(i));
      const GvTangentParams p = random_gv_rank_deficient(rng, n);
      std::optional<Vector> b;
      if (ls) b = rng.normal_vector(n);
      const QsCnComparison cmp = compare_all(p, b);
      const CnReport& unstr = ls ? *cmp.ls_unstructured : cmp.unstructured;
      const CnReport& gv = ls ? *cmp.ls_structured_gv : *cmp.structured_gv;
      const CnReport& qs = ls ? *cmp.ls_structured_qs : cmp.structured_qs;
      const CnReport& eff = ls ? *cmp.ls_effective : cmp.effective;
      mean[0] += unstr.mixed;
      mean[1] += gv.mixed;
      mean[2] += qs.mixed;
      mean[3] += eff.mixed;
      mean[4] += unstr.componentwise;
      mean[5] += gv.componentwise;
      mean[6] += qs.componentwise;
      mean[7] += eff.componentwise;
      append_verdict_rows(doc, cmp.verdicts, failures);
    }
    for (double& v : mean) v /= static_cast<double>(seeds);
    const char* names[8] = {
        "unstructured mixed",      "gv structured mixed",
        "qs structured mixed",     "qs effective mixed",
        "unstructured componentwise", "gv structured componentwise",
        "qs structured componentwise", "qs effective componentwise"};
    for (int c = 0; c < 8; ++c) {
      ComparisonRow row;
      row.quantity = std::string(names[c]) + " mean (n=" + std::to_string(n) +
                     ")";
      row.computed = mean[c];
      row.reference = refs[block].cols[c];
      const double ratio = mean[c] / refs[block].cols[c];
      row.rel_error = rel_error(mean[c], refs[block].cols[c]);
      row.status = (ratio >= 0.1 && ratio <= 10.0) ? "pass" : "fail";
      doc.comparison.push_back(std::move(row));
    }
  }
  finish_verdict_rows(doc, failures, 4 * seeds);
  doc.diagnostics.push_back(
      "corpus means are compared to the reference means within one order of "
      "magnitude; individual draws are not comparable");
  doc.diagnostics.push_back(
      "componentwise columns divide kernel entries by structurally zero "
      "pseudoinverse entries that carry only roundoff noise, so their "
      "corpus means are heavy-tailed lottery draws for any implementation; "
      "they are reported for completeness");
  return doc;
}

}  // namespace

ReportDocument reproduce_table(const std::string& table_id,
                               std::uint64_t seed) {
  if (table_id == "t1") return reproduce_t1(seed);
  if (table_id == "t2") return reproduce_t2(seed);
  if (table_id == "t3") return reproduce_t3_t4(seed, false);
  if (table_id == "t4") return reproduce_t3_t4(seed, true);
  if (table_id == "t5") return reproduce_t5(seed);
  if (table_id == "t7") return reproduce_t7_t8(seed, false);
  if (table_id == "t8") return reproduce_t7_t8(seed, true);
  throw SchemaError("unknown table id \"" + table_id +
                    "\" (valid: t1, t2, t3, t4, t5, t7, t8; there is no t6)");
}

ReportDocument run_document(const RunConfig& config) {
  if (config.command == Command::reproduce) {
    if (!config.table_id) {
      throw SchemaError("reproduce needs --table");
    }
    return reproduce_table(*config.table_id,
                           config.seed.value_or(kDefaultSeed));
  }
  const Instance inst = load_instance(config.input_path);
  switch (config.command) {
    case Command::cn_pinv: return cmd_cn_pinv(inst, config);
    case Command::cn_ls: return cmd_cn_ls(inst, config);
    case Command::oracle: return cmd_oracle(inst, config);
    case Command::compare: return cmd_compare(inst, config);
    default: throw SchemaError("unknown command");
  }
}

int run(const RunConfig& config, std::ostream& out, std::ostream& err) {
  try {
    const ReportDocument doc = run_document(config);
    out << render_document(doc, config.format);
    return kExitOk;
  } catch (const SchemaError& e) {
    err << "schema error: " << e.what() << "\n";
    return kExitSchema;
  } catch (const NodeCollisionError& e) {
    err << "degenerate input: " << e.what() << "\n";
    return kExitDegenerate;
  } catch (const DegenerateInputError& e) {
    err << "degenerate input: " << e.what() << "\n";
    return kExitDegenerate;
  } catch (const DomainError& e) {
    err << "degenerate input: " << e.what() << "\n";
    return kExitDegenerate;
  } catch (const NotFullColumnRankError& e) {
    err << "degenerate input: " << e.what() << "\n";
    return kExitDegenerate;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace structcond
