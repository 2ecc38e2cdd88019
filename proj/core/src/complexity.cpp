#include "isoreg/complexity.hpp"

#include <charconv>
#include <cmath>
#include <numbers>
#include <ostream>

#include "isoreg/errors.hpp"
#include "isoreg/parallel.hpp"
#include "isoreg/rng.hpp"
#include "isoreg/signals.hpp"

namespace isoreg {

MonteCarloEstimate summarize(std::vector<double> samples, std::uint64_t seed,
                             std::uint64_t stream_id) {
  MonteCarloEstimate est;
  est.seed = seed;
  est.stream_id = stream_id;
  est.replicates = samples.size();
  if (samples.empty()) {
    est.mean = std::nan("");
    est.standard_error = std::nan("");
    return est;
  }
  double sum = 0.0;
  for (double s : samples) sum += s;
  est.mean = sum / static_cast<double>(samples.size());
  if (samples.size() >= 2) {
    double ss = 0.0;
    for (double s : samples) ss += (s - est.mean) * (s - est.mean);
    const auto r = static_cast<double>(samples.size());
    est.standard_error = std::sqrt(ss / (r - 1.0)) / std::sqrt(r);
  } else {
    est.standard_error = std::nan("");
  }
  est.samples = std::move(samples);
  return est;
}

double squared_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

namespace {

void require_replicates(const MonteCarloOptions& options) {
  if (options.replicates < 2) throw ArgumentError("Monte Carlo estimates need at least 2 replicates");
}

template <class Statistic>
MonteCarloEstimate run_projection_mc(const Dag& dag, const MonteCarloOptions& options,
                                     Statistic statistic) {
  require_replicates(options);
  std::vector<double> samples(options.replicates);
  parallel_for(options.replicates, options.threads, [&](std::size_t r) {
    RandomStream rng(options.seed, options.stream_id + r);
    const auto eps = rng.normals(dag.size());
    try {
      const auto fit = lse_fit(dag, eps, options.fit);
      samples[r] = statistic(fit.theta_hat);
    } catch (const ConvergenceError& e) {
      throw ConvergenceError("replicate " + std::to_string(r) + ": " + e.what(), e.best());
    }
  });
  return summarize(std::move(samples), options.seed, options.stream_id);
}

}  // namespace

MonteCarloEstimate statdim_mc(const Dag& dag, const MonteCarloOptions& options) {
  return run_projection_mc(dag, options,
                           [](const std::vector<double>& theta) { return squared_norm(theta); });
}

MonteCarloEstimate gaussian_width_mc(const Dag& dag, const MonteCarloOptions& options) {
  return run_projection_mc(dag, options, [](const std::vector<double>& theta) {
    return std::sqrt(squared_norm(theta));
  });
}

WidthLowerBound width_lower_bound_mc(const Dag& dag, const AntichainReport& report,
                                     const MonteCarloOptions& options) {
  require_replicates(options);
  const std::size_t n = dag.size();
  std::vector<int> role(n, 2);
  for (auto v : report.lower_split) role.at(v) = -1;
  for (auto v : report.antichain) role.at(v) = 0;
  for (auto v : report.upper_split) role.at(v) = 1;
  for (int r : role) {
    if (r == 2) throw ValidationError("antichain report splits do not cover every vertex");
  }
  const double root_n = std::sqrt(static_cast<double>(n));
  std::vector<double> samples(options.replicates);
  parallel_for(options.replicates, options.threads, [&](std::size_t r) {
    RandomStream rng(options.seed, options.stream_id + r);
    const auto eps = rng.normals(n);
    double inner = 0.0;
    for (std::size_t v = 0; v < n; ++v) {
      const double theta = role[v] == 0 ? (eps[v] < 0.0 ? -1.0 : 1.0) : static_cast<double>(role[v]);
      inner += eps[v] * theta;
    }
    samples[r] = inner / root_n;
  });
  WidthLowerBound out;
  out.estimate = summarize(std::move(samples), options.seed, options.stream_id);
  out.target = std::sqrt(2.0 / std::numbers::pi) * static_cast<double>(report.antichain.size()) / root_n;
  return out;
}

Dag sheet_union_dag(const LatticeSpec& lattice) {
  lattice.validate();
  const auto decomposition = sheet_decomposition(std::span<const std::size_t>(lattice.side_lengths));
  const std::size_t n = lattice.size();
  std::vector<Edge> edges;
  std::vector<Point> coords;
  coords.reserve(n);
  for (std::size_t v = 0; v < n; ++v) {
    auto t = lattice.tuple_of(v);
    coords.emplace_back(t.begin(), t.end());
    for (auto j : decomposition.free_axes) {
      if (t[j] < lattice.side_lengths[j]) {
        ++t[j];
        edges.push_back({v, lattice.index_of(t)});
        --t[j];
      }
    }
  }
  return Dag::from_relation(n, edges, std::move(coords));
}

double harmonic_sum(std::size_t n) {
  if (n == 0) throw ArgumentError("harmonic_sum needs n >= 1");
  double s = 0.0;
  // Smallest terms first.
  for (std::size_t i = n; i >= 1; --i) s += 1.0 / static_cast<double>(i);
  return s;
}

double log_plus(double x) { return std::log(std::max(x, std::numbers::e)); }

double BoundParams::gamma_d() const {
  if (d == 0) throw ArgumentError("d must be positive");
  if (d == 2) return 4.5;
  const auto dd = static_cast<double>(d);
  return (dd * dd + dd + 1.0) / 2.0;
}

const std::vector<std::string>& bound_names() {
  static const std::vector<std::string> names{"thm1", "thm3", "thm4", "variables", "thm7",
                                              "thm8", "statdim_upper", "statdim_lower",
                                              "width_upper"};
  return names;
}

double bound_eval(const std::string& name, const BoundParams& params, double n,
                  double complexity) {
  if (params.d == 0) throw ArgumentError("d must be positive");
  if (!(n >= 1.0)) throw ArgumentError("n must be at least 1");
  const double C = params.C;
  const auto d = static_cast<double>(params.d);
  const double log_n = std::log(n);
  auto need_complexity = [&](const char* what) {
    if (!(complexity >= 1.0) || complexity > n) {
      throw ArgumentError(name + " needs " + what + " in [1, n]");
    }
  };

  if (name == "thm1") return C * std::pow(n, -1.0 / d) * std::pow(log_n, 4.0);
  if (name == "thm3") {
    need_complexity("K");
    return C * complexity / n * std::pow(log_plus(n / complexity), 8.0);
  }
  if (name == "thm4") {
    need_complexity("k");
    return C * std::pow(complexity / n, 2.0 / d) * std::pow(log_plus(n / complexity), 8.0);
  }
  if (name == "variables") {
    if (complexity < 0.0 || complexity > d || complexity != std::floor(complexity)) {
      throw ArgumentError("variables needs an integer r in [0, d]");
    }
    if (complexity + 2.0 <= d) return C * std::pow(n, -2.0 / d) * std::pow(log_n, 8.0);
    if (complexity + 1.0 == d) return C * std::pow(n, -4.0 / (3.0 * d)) * std::pow(log_n, 16.0 / 3.0);
    return C * std::pow(n, -1.0 / d) * std::pow(log_n, 4.0);
  }
  if (name == "thm7") return C * std::pow(n, -1.0 / d) * std::pow(log_n, params.gamma_d());
  if (name == "thm8") {
    need_complexity("k");
    return C * std::pow(complexity / n, 2.0 / d) *
           std::pow(log_plus(n / complexity), 2.0 * params.gamma_d());
  }
  const auto n_count = static_cast<std::size_t>(std::llround(n));
  if (name == "statdim_upper") {
    if (params.d == 1) return harmonic_sum(n_count);
    if (params.d == 2) return C * std::pow(log_n, 8.0);
    return C * std::pow(n, 1.0 - 2.0 / d) * std::pow(log_n, 8.0);
  }
  if (name == "statdim_lower") {
    if (params.d == 1) return harmonic_sum(n_count);
    if (params.d == 2) return C * log_n * log_n;
    return C * std::pow(n, 1.0 - 2.0 / d);
  }
  if (name == "width_upper") {
    if (params.d == 1) return std::sqrt(harmonic_sum(n_count));
    return C * std::pow(n, 0.5 - 1.0 / d) * std::pow(log_n, 4.0);
  }
  std::string known;
  for (const auto& b : bound_names()) known += (known.empty() ? "" : ", ") + b;
  throw ArgumentError("unknown bound '" + name + "' (known: " + known + ")");
}

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

void write_estimates_csv(std::ostream& out, std::span<const EstimateRow> rows) {
  out << "metric,d,n,replicates,seed,mean,stderr,bound_C1\n";
  for (const auto& row : rows) {
    out << row.metric << ',' << row.d << ',' << row.n << ',' << row.estimate.replicates << ','
        << row.estimate.seed << ',' << format_double(row.estimate.mean) << ','
        << format_double(row.estimate.standard_error) << ',' << format_double(row.bound_C1) << '\n';
  }
  if (!out) throw IoError("failed writing estimates CSV");
}

}  // namespace isoreg
