// Command-line harness for isotonic regression experiments.

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "isoreg/complexity.hpp"
#include "isoreg/cone_solver.hpp"
#include "isoreg/errors.hpp"
#include "isoreg/experiments.hpp"
#include "isoreg/order.hpp"
#include "isoreg/random_design.hpp"
#include "isoreg/rng.hpp"
#include "isoreg/signals.hpp"

namespace {

using namespace isoreg;

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitValidation = 2;
constexpr int kExitConvergence = 3;

struct Options {
  std::size_t d = 2;
  std::vector<std::size_t> n1;
  std::vector<std::size_t> n_grid;
  std::string signal = "zero";
  std::size_t k = 0;
  double rho = 0.0;
  std::uint64_t seed = 1;
  std::size_t reps = 100;
  std::size_t mc_samples = 0;
  std::string solver = "auto";
  double tol = 1e-8;
  std::string out = "-";
  std::string format = "csv";
  std::string sampler = "uniform";
  std::string experiment;
  unsigned threads = 1;
  bool certify = false;
  std::string dag_path;
  std::string y_path;
  std::string input;
};

// Runs `write` against the --out target (stdout for "-").
template <class Writer>
void with_output(const std::string& path, Writer write) {
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

std::vector<std::size_t> require_sizes(const std::vector<std::size_t>& v, const char* flag) {
  if (v.empty()) throw ArgumentError(std::string(flag) + " is required");
  return v;
}

FitOptions fit_options(const Options& o) {
  FitOptions f;
  f.solver = parse_solver_choice(o.solver);
  f.tol = o.tol;
  f.certify = o.certify;
  return f;
}

ExperimentConfig experiment_config(const Options& o, DesignKind design) {
  ExperimentConfig c;
  c.design = design;
  c.experiment = o.experiment.empty() ? (design == DesignKind::lattice ? "sweep-fixed" : "sweep-random")
                                      : o.experiment;
  c.d = o.d;
  c.n_grid = design == DesignKind::lattice ? require_sizes(o.n1, "--n1") : require_sizes(o.n_grid, "--n-grid");
  c.signal = o.signal;
  c.sampler = o.sampler;
  c.rho = o.rho;
  c.solver = parse_solver_choice(o.solver);
  c.tol = o.tol;
  c.replicates = o.reps;
  c.mc_points = o.mc_samples;
  c.seed = o.seed;
  c.threads = o.threads;
  c.output = o.out;
  return c;
}

std::vector<double> read_values(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::vector<double> values;
  double v = 0.0;
  while (in >> v) values.push_back(v);
  if (!in.eof()) throw ValidationError("non-numeric value in '" + path + "'");
  return values;
}

int run_fit(const Options& o) {
  std::vector<double> y;
  Dag dag = [&] {
    if (!o.dag_path.empty()) {
      std::ifstream in(o.dag_path);
      if (!in) throw IoError("cannot open '" + o.dag_path + "'");
      return read_dag(in);
    }
    const auto sides = require_sizes(o.n1, "--n1 (or --dag)");
    return build_lattice(LatticeSpec::cube(o.d, sides.front()));
  }();
  if (!o.y_path.empty()) {
    y = read_values(o.y_path);
  } else {
    if (!o.dag_path.empty()) throw ArgumentError("--y is required with --dag");
    const LatticeSpec lattice = LatticeSpec::cube(o.d, o.n1.front());
    const auto theta0 = generate_signal(parse_signal(o.signal, lattice), lattice);
    RandomStream rng(o.seed, 0);
    y = rng.normals(dag.size());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += theta0[i];
  }
  const auto result = lse_fit(dag, y, fit_options(o));
  std::cerr << "iterations " << result.iterations << " max_violation "
            << format_double(result.max_violation) << " inner_product_gap "
            << format_double(result.inner_product_gap) << '\n';
  with_output(o.out, [&](std::ostream& out) {
    const std::size_t dim = dag.coordinate_dimension();
    out << "vertex_index";
    for (std::size_t j = 1; j <= dim; ++j) out << ",x_" << j;
    out << ",y,theta_hat\n";
    for (std::size_t v = 0; v < dag.size(); ++v) {
      out << v;
      if (dim > 0) {
        for (double c : dag.coordinates()[v]) out << ',' << format_double(c);
      }
      out << ',' << format_double(y[v]) << ',' << format_double(result.theta_hat[v]) << '\n';
    }
  });
  return kExitOk;
}

MonteCarloOptions mc_options(const Options& o) {
  MonteCarloOptions mc;
  mc.replicates = o.reps;
  mc.seed = o.seed;
  mc.threads = o.threads;
  mc.fit = fit_options(o);
  mc.fit.certify = false;
  return mc;
}

int run_statdim(const Options& o) {
  std::vector<EstimateRow> rows;
  BoundParams params;
  params.d = o.d;
  for (std::size_t n1 : require_sizes(o.n1, "--n1")) {
    const Dag dag = build_lattice(LatticeSpec::cube(o.d, n1));
    EstimateRow row{"statdim", o.d, dag.size(), statdim_mc(dag, mc_options(o)), 0.0};
    row.bound_C1 = bound_eval("statdim_upper", params, static_cast<double>(dag.size()));
    rows.push_back(std::move(row));
  }
  with_output(o.out, [&](std::ostream& out) { write_estimates_csv(out, rows); });
  return kExitOk;
}

int run_width(const Options& o) {
  std::vector<EstimateRow> rows;
  BoundParams params;
  params.d = o.d;
  for (std::size_t n1 : require_sizes(o.n1, "--n1")) {
    const LatticeSpec lattice = LatticeSpec::cube(o.d, n1);
    const Dag dag = build_lattice(lattice);
    const auto n = static_cast<double>(dag.size());
    EstimateRow width{"width", o.d, dag.size(), gaussian_width_mc(dag, mc_options(o)), 0.0};
    width.bound_C1 = bound_eval("width_upper", params, n);
    const auto lower = width_lower_bound_mc(dag, level_antichain_report(lattice), mc_options(o));
    EstimateRow lb{"width_lower", o.d, dag.size(), lower.estimate, lower.target};
    rows.push_back(std::move(width));
    rows.push_back(std::move(lb));
  }
  with_output(o.out, [&](std::ostream& out) { write_estimates_csv(out, rows); });
  return kExitOk;
}

int run_sweep_command(const Options& o, DesignKind design) {
  const auto report = run_sweep(experiment_config(o, design));
  std::size_t failures = 0;
  for (const auto& row : report.rows) failures += row.failures;
  emit_report(report, parse_report_format(o.format), o.out);
  if (failures > 0) {
    std::cerr << failures << " replicate(s) failed to converge\n";
    return kExitConvergence;
  }
  return kExitOk;
}

int run_antichain(const Options& o) {
  const auto sampler = parse_sampler(o.sampler, o.d);
  const auto sizes = require_sizes(o.n_grid, "--n-grid");
  std::vector<AntichainStats> stats;
  for (std::size_t n : sizes) stats.push_back(antichain_stats(n, sampler, o.reps, o.seed, o.threads));
  with_output(o.out, [&](std::ostream& out) {
    out << "d,n,rep,antichain_size,bound\n";
    for (std::size_t i = 0; i < sizes.size(); ++i) {
      for (std::size_t r = 0; r < stats[i].sizes.size(); ++r) {
        out << o.d << ',' << sizes[i] << ',' << r << ',' << stats[i].sizes[r] << ','
            << format_double(stats[i].bound) << '\n';
      }
    }
  });
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    std::cerr << "n " << sizes[i] << " mean " << format_double(stats[i].mean) << " fraction_meeting_bound "
              << format_double(stats[i].fraction_meeting_bound) << " failure_probability_bound "
              << format_double(stats[i].failure_probability) << '\n';
    if (o.k > 0) {
      const auto tail = chain_tail_check(sizes[i], o.k, sampler, o.reps, o.seed, o.threads);
      std::cerr << "chain_tail n " << sizes[i] << " k " << o.k << " bound " << format_double(tail.bound)
                << " frequency " << format_double(tail.frequency) << '\n';
    }
  }
  return kExitOk;
}

int run_table1(const Options& o) {
  Table1Config config;
  config.d = o.d;
  config.replicates = o.reps;
  config.seed = o.seed;
  config.threads = o.threads;
  if (!o.n1.empty()) {
    config.sizes = o.n1;
  } else if (o.d == 1) {
    config.sizes = {2, 4, 8, 16, 64};
  } else if (o.d == 2) {
    config.sizes = {2, 4, 8, 16};
  } else {
    config.sizes = {3, 4, 5, 6, 7, 8};
  }
  const auto result = table1(config);
  with_output(o.out, [&](std::ostream& out) { write_estimates_csv(out, result.rows); });
  std::cerr << "log-log slope " << format_double(result.slope.slope) << " stderr "
            << format_double(result.slope.slope_stderr) << " (1 - 2/d = "
            << format_double(1.0 - 2.0 / static_cast<double>(o.d)) << ")\n";
  return kExitOk;
}

// Reads `n` and `risk` (or `risk_mean`) columns from a CSV file.
int run_rate_fit(const Options& o) {
  if (o.input.empty()) throw ArgumentError("--input is required");
  std::ifstream in(o.input);
  if (!in) throw IoError("cannot open '" + o.input + "'");
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("'" + o.input + "' is empty");
  auto split = [](const std::string& s) {
    std::vector<std::string> cells;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    return cells;
  };
  const auto header = split(line);
  std::ptrdiff_t n_col = -1;
  std::ptrdiff_t risk_col = -1;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == "n") n_col = static_cast<std::ptrdiff_t>(i);
    if (header[i] == "risk" || (header[i] == "risk_mean" && risk_col < 0)) {
      risk_col = static_cast<std::ptrdiff_t>(i);
    }
  }
  if (n_col < 0 || risk_col < 0) throw ValidationError("CSV needs columns n and risk (or risk_mean)");
  std::vector<double> ns;
  std::vector<double> risks;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() <= static_cast<std::size_t>(std::max(n_col, risk_col))) {
      throw ValidationError("short CSV row: " + line);
    }
    try {
      ns.push_back(std::stod(cells[static_cast<std::size_t>(n_col)]));
      risks.push_back(std::stod(cells[static_cast<std::size_t>(risk_col)]));
    } catch (const std::exception&) {
      throw ValidationError("non-numeric CSV row: " + line);
    }
  }
  const auto fit = fit_rate_exponent(ns, risks);
  with_output(o.out, [&](std::ostream& out) {
    out << "slope,slope_stderr,intercept\n"
        << format_double(fit.slope) << ',' << format_double(fit.slope_stderr) << ','
        << format_double(fit.intercept) << '\n';
  });
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Least-squares isotonic regression on lattices and DAGs"};
  app.set_config("--config", "", "Read `key = value` defaults from a file; flags override");
  app.require_subcommand(1);
  app.fallthrough();

  Options o;
  app.add_option("--d", o.d, "Dimension")->check(CLI::PositiveNumber);
  app.add_option("--n1", o.n1, "Lattice side lengths (comma separated)")->delimiter(',');
  app.add_option("--n-grid", o.n_grid, "Random-design sample sizes (comma separated)")->delimiter(',');
  app.add_option("--signal", o.signal, "Ground-truth signal");
  app.add_option("--k", o.k, "Chain length for the chain-tail check");
  app.add_option("--rho", o.rho, "Perturbation size for assouad signals");
  app.add_option("--seed", o.seed, "Base seed");
  app.add_option("--reps", o.reps, "Replicates");
  app.add_option("--mc-samples", o.mc_samples, "Monte Carlo points for L2(P) risk");
  app.add_option("--solver", o.solver, "auto, pava, dykstra or oracle");
  app.add_option("--tol", o.tol, "Solver tolerance");
  app.add_option("--out", o.out, "Output path (- for stdout)");
  app.add_option("--format", o.format, "csv or json");
  app.add_option("--sampler", o.sampler, "uniform or checkerboard:<level>:<low>:<high>");
  app.add_option("--experiment", o.experiment, "Experiment name written to reports");
  app.add_option("--threads", o.threads, "Worker threads (0 = all cores)");

  auto* fit = app.add_subcommand("fit", "Fit one noisy lattice signal or a DAG from files");
  fit->add_option("--dag", o.dag_path, "DAG in text format");
  fit->add_option("--y", o.y_path, "Observations, one per line");
  fit->add_flag("--certify", o.certify, "Verify the dual certificate");
  app.add_subcommand("statdim", "Monte Carlo statistical dimension of lattice cones");
  app.add_subcommand("width", "Monte Carlo Gaussian width and its antichain lower bound");
  app.add_subcommand("sweep-fixed", "Risk sweep over lattice sizes");
  app.add_subcommand("sweep-random", "Risk sweep over random-design sample sizes");
  app.add_subcommand("antichain", "Maximum antichains of random designs");
  app.add_subcommand("table1", "Statistical dimension against its bounds");
  auto* rate = app.add_subcommand("rate-fit", "Log-log slope of risk against n from a CSV");
  rate->add_option("--input", o.input, "CSV with columns n and risk or risk_mean");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    if (command == "fit") return run_fit(o);
    if (command == "statdim") return run_statdim(o);
    if (command == "width") return run_width(o);
    if (command == "sweep-fixed") return run_sweep_command(o, DesignKind::lattice);
    if (command == "sweep-random") return run_sweep_command(o, DesignKind::random);
    if (command == "antichain") return run_antichain(o);
    if (command == "table1") return run_table1(o);
    if (command == "rate-fit") return run_rate_fit(o);
  } catch (const ConvergenceError& e) {
    std::cerr << "convergence error: " << e.what() << '\n';
    return kExitConvergence;
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const ArgumentError& e) {
    std::cerr << "invalid argument: " << e.what() << '\n';
    return kExitValidation;
  } catch (const SizeError& e) {
    std::cerr << "size limit: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitFailure;
}
