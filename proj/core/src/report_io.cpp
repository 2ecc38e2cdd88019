#include <cmath>
#include <fstream>
#include <iostream>

#include "json.hpp"

#include "isoreg/errors.hpp"
#include "isoreg/experiments.hpp"

namespace isoreg {

namespace {

using nlohmann::json;

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double number_from(const json& v) {
  if (v.is_null()) return std::nan("");
  return v.get<double>();
}

json config_to_json(const ExperimentConfig& c) {
  return json{{"experiment", c.experiment},
              {"d", c.d},
              {"n_grid", c.n_grid},
              {"signal", c.signal},
              {"design", to_string(c.design)},
              {"sampler", c.sampler},
              {"rho", c.rho},
              {"solver", to_string(c.solver)},
              {"tol", c.tol},
              {"replicates", c.replicates},
              {"mc_points", c.mc_points},
              {"seed", c.seed},
              {"with_statdim", c.with_statdim},
              {"output", c.output}};
}

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  c.experiment = j.at("experiment").get<std::string>();
  c.d = j.at("d").get<std::size_t>();
  c.n_grid = j.at("n_grid").get<std::vector<std::size_t>>();
  c.signal = j.at("signal").get<std::string>();
  c.design = parse_design_kind(j.at("design").get<std::string>());
  c.sampler = j.at("sampler").get<std::string>();
  c.rho = j.at("rho").get<double>();
  c.solver = parse_solver_choice(j.at("solver").get<std::string>());
  c.tol = j.at("tol").get<double>();
  c.replicates = j.at("replicates").get<std::size_t>();
  c.mc_points = j.at("mc_points").get<std::size_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.with_statdim = j.at("with_statdim").get<bool>();
  c.output = j.at("output").get<std::string>();
  return c;
}

const char* const kCsvHeader =
    "experiment,d,n,replicates,seed,risk_mean,risk_stderr,statdim_mean,bound_C1,slope_fit,"
    "scaled_risk_mean,l2p_mean,l2p_stderr,failures";

}  // namespace

ReportFormat parse_report_format(const std::string& name) {
  if (name == "csv") return ReportFormat::csv;
  if (name == "json") return ReportFormat::json;
  throw ArgumentError("unknown format '" + name + "' (expected csv or json)");
}

void write_report_csv(std::ostream& out, const RiskReport& report) {
  out << kCsvHeader << '\n';
  for (const auto& r : report.rows) {
    out << r.experiment << ',' << r.d << ',' << r.n << ',' << r.replicates << ',' << r.seed << ','
        << format_double(r.risk_mean) << ',' << format_double(r.risk_stderr) << ','
        << format_double(r.statdim_mean) << ',' << format_double(r.bound_C1) << ','
        << format_double(r.slope_fit) << ',' << format_double(r.scaled_risk_mean) << ','
        << format_double(r.l2p_mean) << ',' << format_double(r.l2p_stderr) << ',' << r.failures
        << '\n';
  }
}

void write_report_json(std::ostream& out, const RiskReport& report) {
  json rows = json::array();
  for (const auto& r : report.rows) {
    rows.push_back(json{{"experiment", r.experiment},
                        {"d", r.d},
                        {"n", r.n},
                        {"replicates", r.replicates},
                        {"seed", r.seed},
                        {"risk_mean", number_or_null(r.risk_mean)},
                        {"risk_stderr", number_or_null(r.risk_stderr)},
                        {"statdim_mean", number_or_null(r.statdim_mean)},
                        {"bound_C1", number_or_null(r.bound_C1)},
                        {"slope_fit", number_or_null(r.slope_fit)},
                        {"scaled_risk_mean", number_or_null(r.scaled_risk_mean)},
                        {"l2p_mean", number_or_null(r.l2p_mean)},
                        {"l2p_stderr", number_or_null(r.l2p_stderr)},
                        {"failures", r.failures}});
  }
  const json doc{{"config", config_to_json(report.config)}, {"rows", rows}, {"version", kReportVersion}};
  out << doc.dump(2) << '\n';
}

RiskReport read_report_json(std::istream& in) {
  json doc;
  try {
    in >> doc;
    RiskReport report;
    report.config = config_from_json(doc.at("config"));
    for (const auto& j : doc.at("rows")) {
      RiskRow r;
      r.experiment = j.at("experiment").get<std::string>();
      r.d = j.at("d").get<std::size_t>();
      r.n = j.at("n").get<std::size_t>();
      r.replicates = j.at("replicates").get<std::size_t>();
      r.seed = j.at("seed").get<std::uint64_t>();
      r.risk_mean = number_from(j.at("risk_mean"));
      r.risk_stderr = number_from(j.at("risk_stderr"));
      r.statdim_mean = number_from(j.at("statdim_mean"));
      r.bound_C1 = number_from(j.at("bound_C1"));
      r.slope_fit = number_from(j.at("slope_fit"));
      r.scaled_risk_mean = number_from(j.at("scaled_risk_mean"));
      r.l2p_mean = number_from(j.at("l2p_mean"));
      r.l2p_stderr = number_from(j.at("l2p_stderr"));
      r.failures = j.at("failures").get<std::size_t>();
      report.rows.push_back(std::move(r));
    }
    return report;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed report JSON: ") + e.what());
  }
}

void emit_report(const RiskReport& report, ReportFormat format, const std::string& path) {
  auto write = [&](std::ostream& out) {
    if (format == ReportFormat::csv) {
      write_report_csv(out, report);
    } else {
      write_report_json(out, report);
    }
  };
  if (path.empty() || path == "-") {
    write(std::cout);
    std::cout.flush();
    return;
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw IoError("cannot open '" + path + "' for writing");
  write(file);
  file.close();
  if (!file) throw IoError("failed writing '" + path + "'");
}

}  // namespace isoreg
