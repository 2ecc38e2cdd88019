#include "isoreg/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "isoreg/errors.hpp"
#include "isoreg/parallel.hpp"
#include "isoreg/rng.hpp"

namespace isoreg {

const char* to_string(DesignKind kind) {
  return kind == DesignKind::lattice ? "lattice" : "random";
}

DesignKind parse_design_kind(const std::string& name) {
  if (name == "lattice") return DesignKind::lattice;
  if (name == "random") return DesignKind::random;
  throw ArgumentError("unknown design '" + name + "' (expected lattice or random)");
}

void ExperimentConfig::validate() const {
  if (d == 0) throw ValidationError("d must be positive");
  if (n_grid.empty()) throw ValidationError("n grid is empty");
  for (std::size_t i = 0; i < n_grid.size(); ++i) {
    if (n_grid[i] == 0) throw ValidationError("n grid entries must be positive");
    if (i > 0 && n_grid[i] <= n_grid[i - 1]) throw ValidationError("n grid must be strictly increasing");
  }
  if (replicates < 2) throw ValidationError("sweeps need at least 2 replicates");
  if (!(tol > 0.0)) throw ValidationError("tolerance must be positive");
  if (mc_points == 1) throw ValidationError("mc_points must be 0 or at least 2");
}

bool RiskRow::operator==(const RiskRow& other) const {
  auto same = [](double a, double b) { return a == b || (std::isnan(a) && std::isnan(b)); };
  return experiment == other.experiment && d == other.d && n == other.n &&
         replicates == other.replicates && seed == other.seed && same(risk_mean, other.risk_mean) &&
         same(risk_stderr, other.risk_stderr) && same(statdim_mean, other.statdim_mean) &&
         same(bound_C1, other.bound_C1) && same(slope_fit, other.slope_fit) &&
         same(scaled_risk_mean, other.scaled_risk_mean) && same(l2p_mean, other.l2p_mean) &&
         same(l2p_stderr, other.l2p_stderr) && failures == other.failures;
}

namespace {

FitOptions fit_options_of(const ExperimentConfig& config) {
  FitOptions options;
  options.solver = config.solver;
  options.tol = config.tol;
  return options;
}

struct ReplicateOutcome {
  bool ok = false;
  double sse = 0.0;
  double statdim = 0.0;
  double l2p = 0.0;
};

double nan() { return std::nan(""); }

RiskRow aggregate(const ExperimentConfig& config, std::size_t n,
                  const std::vector<ReplicateOutcome>& outcomes, bool with_l2p) {
  std::vector<double> risks;
  std::vector<double> sses;
  std::vector<double> statdims;
  std::vector<double> l2ps;
  RiskRow row;
  for (const auto& o : outcomes) {
    if (!o.ok) {
      ++row.failures;
      continue;
    }
    sses.push_back(o.sse);
    risks.push_back(o.sse / static_cast<double>(n));
    statdims.push_back(o.statdim);
    l2ps.push_back(o.l2p);
  }
  row.experiment = config.experiment;
  row.d = config.d;
  row.n = n;
  row.seed = config.seed;
  row.replicates = risks.size();
  const auto risk = summarize(std::move(risks), config.seed, 0);
  row.risk_mean = risk.mean;
  row.risk_stderr = risk.standard_error;
  row.scaled_risk_mean = summarize(std::move(sses), config.seed, 0).mean;
  row.statdim_mean = config.with_statdim ? summarize(std::move(statdims), config.seed, 0).mean : nan();
  if (with_l2p) {
    const auto l2p = summarize(std::move(l2ps), config.seed, 0);
    row.l2p_mean = l2p.mean;
    row.l2p_stderr = l2p.standard_error;
  } else {
    row.l2p_mean = nan();
    row.l2p_stderr = nan();
  }
  row.slope_fit = nan();
  return row;
}

void fill_slopes(RiskReport& report) {
  std::vector<double> ns;
  std::vector<double> risks;
  for (const auto& row : report.rows) {
    if (row.replicates == 0 || !(row.risk_mean > 0.0)) return;
    ns.push_back(static_cast<double>(row.n));
    risks.push_back(row.risk_mean);
  }
  if (ns.size() < 3) return;
  const double slope = fit_rate_exponent(ns, risks).slope;
  for (auto& row : report.rows) row.slope_fit = slope;
}

bool all_zero(std::span<const double> v) {
  for (double x : v) {
    if (x != 0.0) return false;
  }
  return true;
}

}  // namespace

RiskReport run_fixed_sweep(const ExperimentConfig& config) {
  config.validate();
  if (config.design != DesignKind::lattice) throw ArgumentError("fixed sweeps need a lattice design");
  RiskReport report;
  report.config = config;
  const FitOptions fit_options = fit_options_of(config);

  for (std::size_t n1 : config.n_grid) {
    const LatticeSpec lattice = LatticeSpec::cube(config.d, n1);
    const Dag dag = build_lattice(lattice);
    const auto theta0 = generate_signal(parse_signal(config.signal, lattice), lattice);
    const bool zero_signal = all_zero(theta0);
    const std::size_t n = dag.size();

    std::vector<ReplicateOutcome> outcomes(config.replicates);
    parallel_for(config.replicates, config.threads, [&](std::size_t r) {
      RandomStream rng(config.seed, r);
      const auto eps = rng.normals(n);
      std::vector<double> y(n);
      for (std::size_t i = 0; i < n; ++i) y[i] = theta0[i] + eps[i];
      ReplicateOutcome& out = outcomes[r];
      try {
        const auto fit = lse_fit(dag, y, fit_options);
        out.sse = empirical_sse(fit.theta_hat, theta0);
        if (config.with_statdim) {
          out.statdim = zero_signal ? out.sse : squared_norm(lse_fit(dag, eps, fit_options).theta_hat);
        }
        out.ok = true;
      } catch (const ConvergenceError&) {
        out.ok = false;
      }
    });

    RiskRow row = aggregate(config, n, outcomes, false);
    BoundParams params;
    params.d = config.d;
    row.bound_C1 = config.d == 1 ? harmonic_sum(n) / static_cast<double>(n)
                                 : bound_eval("thm1", params, static_cast<double>(n));
    report.rows.push_back(std::move(row));
  }
  fill_slopes(report);
  return report;
}

DesignSampler parse_sampler(const std::string& text, std::size_t d) {
  if (text == "uniform") return DesignSampler::uniform(d);
  if (text.rfind("checkerboard:", 0) == 0) {
    std::istringstream in(text.substr(13));
    std::size_t level = 0;
    double low = 0.0;
    double high = 0.0;
    char c1 = 0;
    char c2 = 0;
    if ((in >> level >> c1 >> low >> c2 >> high) && c1 == ':' && c2 == ':' && in.peek() == EOF) {
      return DesignSampler::checkerboard(d, level, low, high);
    }
  }
  throw ArgumentError("unknown sampler '" + text +
                      "' (expected uniform or checkerboard:<level>:<low>:<high>)");
}

Function parse_function_signal(const std::string& text, std::size_t d, double rho,
                               const DesignSampler& sampler) {
  Function f;
  f.dimension = d;
  if (text == "zero") {
    f.evaluate = [](std::span<const double>) { return 0.0; };
    return f;
  }
  if (text.rfind("constant:", 0) == 0) {
    std::size_t used = 0;
    const std::string rest = text.substr(9);
    double c = 0.0;
    try {
      c = std::stod(rest, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != rest.size()) throw ArgumentError("bad constant in signal '" + text + "'");
    f.evaluate = [c](std::span<const double>) { return c; };
    return f;
  }
  if (text == "linear") {
    f.evaluate = [d](std::span<const double> x) {
      double s = 0.0;
      for (double v : x) s += v;
      return 2.0 * s / static_cast<double>(d) - 1.0;
    };
    return f;
  }
  if (text.rfind("assouad:", 0) == 0) {
    std::istringstream in(text.substr(8));
    std::size_t n1 = 0;
    int bit = -1;
    char c = 0;
    if ((in >> n1 >> c >> bit) && c == ':' && in.peek() == EOF && (bit == 0 || bit == 1) && n1 >= 1) {
      const double r = rho > 0.0 ? rho : default_rho_random(sampler.m0, sampler.M0);
      const std::size_t cells = diagonal_cells(d, n1).size();
      return assouad_random(d, n1, r, std::vector<int>(cells, bit));
    }
  }
  throw ArgumentError("unknown random-design signal '" + text +
                      "' (expected zero, constant:<c>, linear or assouad:<n1>:<bit>)");
}

RiskReport run_random_sweep(const ExperimentConfig& config) {
  config.validate();
  if (config.design != DesignKind::random) throw ArgumentError("random sweeps need a random design");
  const DesignSampler sampler = parse_sampler(config.sampler, config.d);
  const Function f0 = parse_function_signal(config.signal, config.d, config.rho, sampler);
  const FitOptions fit_options = fit_options_of(config);
  const bool with_l2p = config.mc_points > 0;
  RiskReport report;
  report.config = config;

  for (std::size_t n : config.n_grid) {
    std::vector<ReplicateOutcome> outcomes(config.replicates);
    parallel_for(config.replicates, config.threads, [&](std::size_t r) {
      const auto points = sample_design(sampler, n, config.seed, 3 * r);
      RandomStream rng(config.seed, 3 * r + 1);
      const auto eps = rng.normals(n);
      std::vector<double> f0_values(n);
      std::vector<double> y(n);
      for (std::size_t i = 0; i < n; ++i) {
        f0_values[i] = f0(points[i]);
        y[i] = f0_values[i] + eps[i];
      }
      ReplicateOutcome& out = outcomes[r];
      try {
        const auto fit = fit_design(points, y, fit_options);
        out.sse = empirical_sse(fit.values, f0_values);
        if (config.with_statdim) {
          if (all_zero(f0_values)) {
            out.statdim = out.sse;
          } else {
            out.statdim = squared_norm(fit_design(points, eps, fit_options).values);
          }
        }
        if (with_l2p) {
          out.l2p = l2p_risk_mc(fit, f0, sampler, config.mc_points, config.seed, 3 * r + 2).mean;
        }
        out.ok = true;
      } catch (const ConvergenceError&) {
        out.ok = false;
      }
    });
    RiskRow row = aggregate(config, n, outcomes, with_l2p);
    BoundParams params;
    params.d = config.d;
    row.bound_C1 = bound_eval("thm7", params, static_cast<double>(n));
    report.rows.push_back(std::move(row));
  }
  fill_slopes(report);
  return report;
}

RiskReport run_sweep(const ExperimentConfig& config) {
  return config.design == DesignKind::lattice ? run_fixed_sweep(config) : run_random_sweep(config);
}

RateFit fit_rate_exponent(std::span<const double> n, std::span<const double> risk) {
  if (n.size() != risk.size()) throw ArgumentError("n and risk lists differ in length");
  std::vector<double> xs;
  std::vector<double> ys;
  for (std::size_t i = 0; i < n.size(); ++i) {
    if (!(risk[i] > 0.0)) throw ArgumentError("rate fit needs positive risks");
    if (!(n[i] > 0.0)) throw ArgumentError("rate fit needs positive n");
    xs.push_back(std::log(n[i]));
    ys.push_back(std::log(risk[i]));
  }
  std::vector<double> distinct = xs;
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (distinct.size() < 3) throw ArgumentError("rate fit needs at least three distinct n");

  const auto m = static_cast<double>(xs.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= m;
  my /= m;
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  RateFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ssr = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double e = ys[i] - fit.intercept - fit.slope * xs[i];
    ssr += e * e;
  }
  fit.slope_stderr = xs.size() > 2 ? std::sqrt(ssr / (m - 2.0) / sxx) : nan();
  return fit;
}

Table1Result table1(const Table1Config& config) {
  if (config.d == 0) throw ArgumentError("d must be positive");
  if (config.sizes.empty()) throw ArgumentError("table1 needs at least one size");
  Table1Result result;
  BoundParams params;
  params.d = config.d;
  std::vector<double> ns;
  std::vector<double> means;
  for (std::size_t size : config.sizes) {
    const LatticeSpec lattice = LatticeSpec::cube(config.d, size);
    const Dag dag = build_lattice(lattice);
    MonteCarloOptions options;
    options.replicates = config.replicates;
    options.seed = config.seed;
    options.threads = config.threads;
    EstimateRow row;
    row.metric = "statdim";
    row.d = config.d;
    row.n = dag.size();
    row.estimate = statdim_mc(dag, options);
    row.estimate.samples.clear();
    const auto n = static_cast<double>(row.n);
    row.bound_C1 = bound_eval("statdim_upper", params, n);
    result.lower_bound_C1.push_back(bound_eval("statdim_lower", params, n));
    ns.push_back(n);
    means.push_back(row.estimate.mean);
    result.rows.push_back(std::move(row));
  }
  if (ns.size() >= 3) {
    result.slope = fit_rate_exponent(ns, means);
  } else {
    result.slope = {nan(), nan(), nan()};
  }
  return result;
}

}  // namespace isoreg
