#include "structcond/json_io.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

#include "structcond/version.hpp"

namespace structcond {

namespace {

const Json& require_field(const Json& j, const std::string& field) {
  auto it = j.find(field);
  if (it == j.end()) {
    throw SchemaError("missing field \"" + field + "\"");
  }
  return *it;
}

double number_from(const Json& j, const std::string& field) {
  if (!j.is_number()) {
    throw SchemaError("field \"" + field + "\" must be a number");
  }
  return j.get<double>();
}

std::optional<Vector> optional_vector(const Json& j, const std::string& field) {
  auto it = j.find(field);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return vector_from_json(*it, field);
}

std::string timestamp_utc() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

}  // namespace

Vector vector_from_json(const Json& j, const std::string& field) {
  if (!j.is_array()) {
    throw SchemaError("field \"" + field + "\" must be an array of numbers");
  }
  Vector v(static_cast<Index>(j.size()));
  Index i = 0;
  for (const auto& item : j) {
    v(i++) = number_from(item, field);
  }
  if (!v.allFinite()) {
    throw SchemaError("field \"" + field + "\" contains non-finite values");
  }
  return v;
}

Json vector_json(const Vector& v) {
  Json out = Json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Json matrix_json(const Matrix& m) {
  Json out = Json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    out.push_back(std::move(row));
  }
  return out;
}

Instance parse_instance(const Json& j) {
  if (!j.is_object()) throw SchemaError("instance must be a JSON object");
  const Json& type = require_field(j, "type");
  if (!type.is_string()) throw SchemaError("field \"type\" must be a string");
  const std::string t = type.get<std::string>();

  if (t == "cv") {
    CvInstance inst;
    inst.params.c = vector_from_json(require_field(j, "c"), "c");
    inst.params.d = vector_from_json(require_field(j, "d"), "d");
    const Json& n = require_field(j, "n");
    if (!n.is_number_integer() || n.get<long>() < 1) {
      throw SchemaError("field \"n\" must be a positive integer");
    }
    inst.params.n = n.get<Index>();
    if (inst.params.l() > inst.params.n) {
      throw SchemaError("cv instance has more pole nodes than columns");
    }
    inst.rhs = optional_vector(j, "b");
    if (inst.rhs && inst.rhs->size() != inst.params.m()) {
      throw SchemaError("field \"b\" must have one entry per row");
    }
    return inst;
  }
  if (t == "qs") {
    QsInstance inst;
    inst.params.a = vector_from_json(require_field(j, "a"), "a");
    inst.params.e = vector_from_json(require_field(j, "e"), "e");
    inst.params.b = vector_from_json(require_field(j, "b"), "b");
    inst.params.d = vector_from_json(require_field(j, "d"), "d");
    inst.params.f = vector_from_json(require_field(j, "f"), "f");
    inst.params.g = vector_from_json(require_field(j, "g"), "g");
    inst.params.h = vector_from_json(require_field(j, "h"), "h");
    const Index n = inst.params.n();
    if (n < 2 || inst.params.a.size() != n - 1 ||
        inst.params.b.size() != n - 1 || inst.params.f.size() != n - 1 ||
        inst.params.h.size() != n - 1 || inst.params.e.size() != n - 2 ||
        inst.params.g.size() != n - 2) {
      throw SchemaError("qs generator lengths are inconsistent");
    }
    inst.rhs = optional_vector(j, "b_rhs");
    if (inst.rhs && inst.rhs->size() != n) {
      throw SchemaError("field \"b_rhs\" must have one entry per row");
    }
    return inst;
  }
  if (t == "gv") {
    GvInstance inst;
    inst.params.t = vector_from_json(require_field(j, "t"), "t");
    inst.params.u = vector_from_json(require_field(j, "u"), "u");
    inst.params.d = vector_from_json(require_field(j, "d"), "d");
    inst.params.v = vector_from_json(require_field(j, "v"), "v");
    inst.params.w = vector_from_json(require_field(j, "w"), "w");
    const Index n = inst.params.n();
    if (n < 2 || inst.params.u.size() != n - 1 ||
        inst.params.v.size() != n - 1 || inst.params.t.size() != n - 2 ||
        inst.params.w.size() != n - 2) {
      throw SchemaError("gv generator lengths are inconsistent");
    }
    inst.rhs = optional_vector(j, "b_rhs");
    if (inst.rhs && inst.rhs->size() != n) {
      throw SchemaError("field \"b_rhs\" must have one entry per row");
    }
    return inst;
  }
  if (t == "dense") {
    DenseInstance inst;
    const Json& rows = require_field(j, "rows");
    const Json& cols = require_field(j, "cols");
    if (!rows.is_number_integer() || !cols.is_number_integer() ||
        rows.get<long>() < 1 || cols.get<long>() < 1) {
      throw SchemaError("fields \"rows\"/\"cols\" must be positive integers");
    }
    const Index m = rows.get<Index>(), n = cols.get<Index>();
    const Vector entries =
        vector_from_json(require_field(j, "entries"), "entries");
    if (entries.size() != m * n) {
      throw SchemaError("field \"entries\" must hold rows*cols values");
    }
    inst.m = Matrix(m, n);
    for (Index i = 0; i < m; ++i) {
      for (Index jj = 0; jj < n; ++jj) inst.m(i, jj) = entries(i * n + jj);
    }
    inst.rhs = optional_vector(j, "b_rhs");
    if (inst.rhs && inst.rhs->size() != m) {
      throw SchemaError("field \"b_rhs\" must have one entry per row");
    }
    return inst;
  }
  throw SchemaError("unknown instance type \"" + t + "\"");
}

Instance load_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot read input file: " + path);
  Json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw SchemaError(std::string("invalid JSON: ") + e.what());
  }
  return parse_instance(j);
}

Json instance_echo(const Instance& inst) {
  Json out;
  if (const auto* cv = std::get_if<CvInstance>(&inst)) {
    out["type"] = "cv";
    out["c"] = vector_json(cv->params.c);
    out["d"] = vector_json(cv->params.d);
    out["n"] = cv->params.n;
    out["shape"] = {cv->params.m(), cv->params.n};
    if (cv->rhs) out["b"] = vector_json(*cv->rhs);
  } else if (const auto* qs = std::get_if<QsInstance>(&inst)) {
    out["type"] = "qs";
    out["a"] = vector_json(qs->params.a);
    out["e"] = vector_json(qs->params.e);
    out["b"] = vector_json(qs->params.b);
    out["d"] = vector_json(qs->params.d);
    out["f"] = vector_json(qs->params.f);
    out["g"] = vector_json(qs->params.g);
    out["h"] = vector_json(qs->params.h);
    out["shape"] = {qs->params.n(), qs->params.n()};
    if (qs->rhs) out["b_rhs"] = vector_json(*qs->rhs);
  } else if (const auto* gv = std::get_if<GvInstance>(&inst)) {
    out["type"] = "gv";
    out["t"] = vector_json(gv->params.t);
    out["u"] = vector_json(gv->params.u);
    out["d"] = vector_json(gv->params.d);
    out["v"] = vector_json(gv->params.v);
    out["w"] = vector_json(gv->params.w);
    out["shape"] = {gv->params.n(), gv->params.n()};
    if (gv->rhs) out["b_rhs"] = vector_json(*gv->rhs);
  } else {
    const auto& dense = std::get<DenseInstance>(inst);
    out["type"] = "dense";
    out["shape"] = {dense.m.rows(), dense.m.cols()};
    out["entries"] = matrix_json(dense.m);
    if (dense.rhs) out["b_rhs"] = vector_json(*dense.rhs);
  }
  return out;
}

Json document_json(const ReportDocument& doc, bool with_kernels) {
  Json out;
  out["instance"] = doc.instance;
  if (!doc.reports.empty()) {
    Json reports = Json::array();
    for (const auto& lr : doc.reports) {
      Json r;
      r["label"] = lr.label;
      r["mode"] = to_string(lr.report.mode);
      r["mixed"] = lr.report.mixed;
      r["componentwise"] = lr.report.componentwise;
      r["rank"] = lr.report.rank;
      r["kernel_max_norm"] = max_norm(lr.report.kernel);
      r["kernel_inf_norm"] = inf_norm(lr.report.kernel);
      if (with_kernels) r["kernel"] = matrix_json(lr.report.kernel);
      reports.push_back(std::move(r));
    }
    out["reports"] = std::move(reports);
  }
  if (doc.oracle) {
    Json o;
    o["target"] = doc.oracle->target;
    o["mode"] = doc.oracle->spec.mode == PerturbMode::sign_vertices
                    ? "sign_vertices"
                    : doc.oracle->spec.mode == PerturbMode::monte_carlo
                          ? "monte_carlo"
                          : "extrapolated";
    o["epsilon"] = doc.oracle->spec.epsilon;
    o["trials"] = doc.oracle->spec.trials;
    o["mixed_lb"] = doc.oracle->estimate.mixed_lb;
    o["componentwise_lb"] = doc.oracle->estimate.componentwise_lb;
    o["accepted"] = doc.oracle->estimate.accepted;
    o["rejected"] = doc.oracle->estimate.rejected;
    o["inconclusive"] = doc.oracle->estimate.inconclusive;
    if (doc.oracle->estimate.achiever.size() > 0) {
      o["achiever"] = vector_json(doc.oracle->estimate.achiever);
    }
    out["oracle"] = std::move(o);
  }
  if (!doc.verdicts.empty()) {
    Json v;
    for (const auto& [name, verdict] : doc.verdicts) {
      Json one;
      one["pass"] = verdict.pass;
      one["lhs"] = verdict.lhs;
      one["rhs"] = verdict.rhs;
      v[name] = std::move(one);
    }
    out["verdicts"] = std::move(v);
  }
  if (!doc.comparison.empty()) {
    Json rows = Json::array();
    for (const auto& row : doc.comparison) {
      Json r;
      r["quantity"] = row.quantity;
      if (row.computed) r["computed"] = *row.computed;
      if (row.reference) r["reference"] = *row.reference;
      if (row.rel_error) r["rel_error"] = *row.rel_error;
      r["status"] = row.status;
      rows.push_back(std::move(r));
    }
    out["comparison"] = std::move(rows);
  }
  if (!doc.diagnostics.empty()) out["diagnostics"] = doc.diagnostics;
  Json prov;
  prov["tool"] = std::string("structcond ") + kVersion;
  if (doc.seed) prov["seed"] = *doc.seed;
  prov["timestamp"] = timestamp_utc();
  out["provenance"] = std::move(prov);
  return out;
}

std::string render_document(const ReportDocument& doc, OutputFormat format) {
  if (format == OutputFormat::json) {
    return document_json(doc, /*with_kernels=*/true).dump(2) + "\n";
  }
  if (format == OutputFormat::csv) {
    std::ostringstream out;
    if (!doc.reports.empty()) {
      out << "label,mode,mixed,componentwise,rank,kernel_max_norm,"
             "kernel_inf_norm\n";
      for (const auto& lr : doc.reports) {
        char buf[256];
        std::snprintf(buf, sizeof(buf), "%s,%s,%.17g,%.17g,%ld,%.17g,%.17g\n",
                      lr.label.c_str(), to_string(lr.report.mode),
                      lr.report.mixed, lr.report.componentwise,
                      static_cast<long>(lr.report.rank),
                      max_norm(lr.report.kernel), inf_norm(lr.report.kernel));
        out << buf;
      }
    }
    if (!doc.comparison.empty()) {
      out << "quantity,computed,reference,rel_error,status\n";
      for (const auto& row : doc.comparison) {
        out << row.quantity << ',';
        if (row.computed) out << format_number(*row.computed);
        out << ',';
        if (row.reference) out << format_number(*row.reference);
        out << ',';
        if (row.rel_error) out << format_number(*row.rel_error);
        out << ',' << row.status << '\n';
      }
    }
    if (!doc.verdicts.empty()) {
      out << "verdict,pass,lhs,rhs\n";
      for (const auto& [name, v] : doc.verdicts) {
        out << name << ',' << (v.pass ? "true" : "false") << ','
            << format_number(v.lhs) << ',' << format_number(v.rhs) << '\n';
      }
    }
    return out.str();
  }

  // table
  std::ostringstream out;
  for (const auto& diag : doc.diagnostics) out << "! " << diag << "\n";
  if (!doc.reports.empty()) {
    out << "  report                          mode              mixed"
           "          componentwise  rank\n";
    for (const auto& lr : doc.reports) {
      char buf[256];
      std::snprintf(buf, sizeof(buf), "  %-30s  %-16s  %-13.6g  %-13.6g  %ld\n",
                    lr.label.c_str(), to_string(lr.report.mode),
                    lr.report.mixed, lr.report.componentwise,
                    static_cast<long>(lr.report.rank));
      out << buf;
    }
  }
  if (doc.oracle) {
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "  oracle[%s]: mixed_lb %.6g componentwise_lb %.6g "
                  "(accepted %ld, rejected %ld)%s\n",
                  doc.oracle->target.c_str(), doc.oracle->estimate.mixed_lb,
                  doc.oracle->estimate.componentwise_lb,
                  doc.oracle->estimate.accepted, doc.oracle->estimate.rejected,
                  doc.oracle->estimate.inconclusive ? " INCONCLUSIVE" : "");
    out << buf;
  }
  if (!doc.comparison.empty()) {
    out << "  quantity                                computed      reference"
           "     status\n";
    for (const auto& row : doc.comparison) {
      char buf[256];
      std::string computed = row.computed ? format_number(*row.computed) : "-";
      std::string reference =
          row.reference ? format_number(*row.reference) : "-";
      std::snprintf(buf, sizeof(buf), "  %-38s  %-12s  %-12s  %s\n",
                    row.quantity.c_str(), computed.c_str(), reference.c_str(),
                    row.status.c_str());
      out << buf;
    }
  }
  if (!doc.verdicts.empty()) {
    for (const auto& [name, v] : doc.verdicts) {
      char buf[256];
      std::snprintf(buf, sizeof(buf), "  %-28s %s   (lhs %.6g, rhs %.6g)\n",
                    name.c_str(), v.pass ? "PASS" : "FAIL", v.lhs, v.rhs);
      out << buf;
    }
  }
  return out.str();
}

}  // namespace structcond
