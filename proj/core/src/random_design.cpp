#include "isoreg/random_design.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>

#include "isoreg/cone_solver.hpp"
#include "isoreg/errors.hpp"
#include "isoreg/parallel.hpp"
#include "isoreg/rng.hpp"

namespace isoreg {

DesignSampler DesignSampler::uniform(std::size_t d) {
  if (d == 0) throw ArgumentError("d must be positive");
  DesignSampler s;
  s.d = d;
  s.level = 0;
  s.density = {1.0};
  s.m0 = 1.0;
  s.M0 = 1.0;
  return s;
}

DesignSampler DesignSampler::checkerboard(std::size_t d, std::size_t level, double low, double high) {
  if (d == 0) throw ArgumentError("d must be positive");
  if (level == 0) throw ArgumentError("checkerboard needs level >= 1");
  if (d * level > 24) throw SizeError("checkerboard has too many cells");
  DesignSampler s;
  s.d = d;
  s.level = level;
  const std::size_t side = s.cells_per_axis();
  std::size_t cells = 1;
  for (std::size_t j = 0; j < d; ++j) cells *= side;
  s.density.resize(cells);
  for (std::size_t c = 0; c < cells; ++c) {
    std::size_t rest = c;
    std::size_t parity = 0;
    for (std::size_t j = 0; j < d; ++j) {
      parity += rest % side;
      rest /= side;
    }
    s.density[c] = parity % 2 == 0 ? low : high;
  }
  s.m0 = std::min(low, high);
  s.M0 = std::max(low, high);
  s.validate();
  return s;
}

void DesignSampler::validate() const {
  if (d == 0) throw ValidationError("density dimension must be positive");
  std::size_t expected = 1;
  for (std::size_t j = 0; j < d; ++j) {
    if (expected > (std::size_t{1} << 30) >> level) throw ValidationError("density grid too large");
    expected *= cells_per_axis();
  }
  if (density.size() != expected) {
    throw ValidationError("density needs " + std::to_string(expected) + " cell values, got " +
                          std::to_string(density.size()));
  }
  if (!(m0 > 0.0) || !(m0 <= 1.0) || !(M0 >= 1.0)) {
    throw ValidationError("density bounds must satisfy 0 < m0 <= 1 <= M0");
  }
  double total = 0.0;
  for (double p : density) {
    if (!(p >= m0) || !(p <= M0)) throw ValidationError("density leaves [m0, M0]");
    total += p;
  }
  const double integral = total / static_cast<double>(density.size());
  if (std::abs(integral - 1.0) > 1e-12) {
    throw ValidationError("density integrates to " + std::to_string(integral) + ", not 1");
  }
}

std::size_t DesignSampler::cell_of(std::span<const double> x) const {
  if (x.size() != d) throw ArgumentError("point has wrong dimension");
  const std::size_t side = cells_per_axis();
  std::size_t c = 0;
  for (std::size_t j = 0; j < d; ++j) {
    const auto k = static_cast<std::size_t>(
        std::clamp(std::floor(x[j] * static_cast<double>(side)), 0.0, static_cast<double>(side - 1)));
    c = c * side + k;
  }
  return c;
}

double DesignSampler::density_at(std::span<const double> x) const { return density[cell_of(x)]; }

double DesignSampler::cell_mass(std::size_t c) const {
  return density.at(c) / static_cast<double>(density.size());
}

std::vector<Point> sample_design(const DesignSampler& sampler, std::size_t n, std::uint64_t seed,
                                 std::uint64_t stream_id) {
  sampler.validate();
  if (n == 0) throw ArgumentError("sample_design needs n >= 1");
  std::vector<double> cumulative(sampler.cell_count());
  double acc = 0.0;
  for (std::size_t c = 0; c < cumulative.size(); ++c) {
    acc += sampler.density[c];
    cumulative[c] = acc;
  }
  RandomStream rng(seed, stream_id);
  const std::size_t side = sampler.cells_per_axis();
  std::vector<Point> points(n, Point(sampler.d));
  std::vector<std::size_t> index(sampler.d);
  for (auto& p : points) {
    std::size_t cell = 0;
    if (cumulative.size() > 1) {
      const double u = rng.uniform() * acc;
      cell = static_cast<std::size_t>(std::upper_bound(cumulative.begin(), cumulative.end(), u) -
                                      cumulative.begin());
      cell = std::min(cell, cumulative.size() - 1);
    }
    for (std::size_t j = sampler.d; j-- > 0;) {
      index[j] = cell % side;
      cell /= side;
    }
    for (std::size_t j = 0; j < sampler.d; ++j) {
      p[j] = (static_cast<double>(index[j]) + rng.uniform()) / static_cast<double>(side);
    }
  }
  return points;
}

FittedFunction FittedFunction::from_fit(std::vector<Point> points, const DesignDag& design,
                                        std::span<const double> theta_hat) {
  if (points.size() != design.vertex_of_point.size()) {
    throw ArgumentError("point count differs from the design DAG");
  }
  if (theta_hat.size() != design.dag.size()) throw ArgumentError("fit length differs from the DAG");
  FittedFunction fit;
  fit.points = std::move(points);
  fit.values.resize(fit.points.size());
  for (std::size_t i = 0; i < fit.points.size(); ++i) fit.values[i] = theta_hat[design.vertex_of_point[i]];
  fit.max_fitted = *std::max_element(fit.values.begin(), fit.values.end());
  return fit;
}

double extend_estimator(const FittedFunction& fit, std::span<const double> x) {
  if (fit.points.empty()) throw ArgumentError("empty fit");
  double value = fit.max_fitted;
  for (std::size_t i = 0; i < fit.points.size(); ++i) {
    if (fit.values[i] < value && dominated(x, fit.points[i])) value = fit.values[i];
  }
  return value;
}

FittedFunction fit_design(std::span<const Point> points, std::span<const double> y,
                          const FitOptions& options) {
  if (points.size() != y.size()) throw ArgumentError("observation count differs from point count");
  const auto design = build_design_dag(points);
  const std::size_t m = design.dag.size();
  std::vector<double> sums(m, 0.0);
  for (std::size_t i = 0; i < y.size(); ++i) sums[design.vertex_of_point[i]] += y[i];
  const auto& weights = design.dag.multiplicity();
  for (std::size_t v = 0; v < m; ++v) sums[v] /= weights[v];
  const bool merged = m != points.size();
  const auto result = lse_fit(design.dag, sums, options,
                              merged ? std::span<const double>(weights) : std::span<const double>());
  return FittedFunction::from_fit(std::vector<Point>(points.begin(), points.end()), design,
                                  result.theta_hat);
}

double empirical_sse(std::span<const double> fitted, std::span<const double> f0_values) {
  if (fitted.size() != f0_values.size()) throw ArgumentError("risk inputs differ in length");
  double s = 0.0;
  for (std::size_t i = 0; i < fitted.size(); ++i) {
    const double diff = fitted[i] - f0_values[i];
    s += diff * diff;
  }
  return s;
}

double empirical_risk(std::span<const double> fitted, std::span<const double> f0_values) {
  if (fitted.empty()) throw ArgumentError("empirical risk of an empty fit");
  return empirical_sse(fitted, f0_values) / static_cast<double>(fitted.size());
}

MonteCarloEstimate l2p_risk_mc(const FittedFunction& fit, const Function& f0,
                               const DesignSampler& sampler, std::size_t mc_points,
                               std::uint64_t seed, std::uint64_t stream_id) {
  if (mc_points < 2) throw ArgumentError("l2p_risk_mc needs at least 2 points");
  const auto xs = sample_design(sampler, mc_points, seed, stream_id);
  std::vector<double> samples(mc_points);
  for (std::size_t i = 0; i < mc_points; ++i) {
    const double diff = extend_estimator(fit, xs[i]) - f0(xs[i]);
    samples[i] = diff * diff;
  }
  return summarize(std::move(samples), seed, stream_id);
}

AntichainStats antichain_stats(std::size_t n, const DesignSampler& sampler, std::size_t reps,
                               std::uint64_t seed, unsigned threads) {
  sampler.validate();
  if (n == 0 || reps == 0) throw ArgumentError("antichain_stats needs n >= 1 and reps >= 1");
  AntichainStats stats;
  stats.sizes.resize(reps);
  parallel_for(reps, threads, [&](std::size_t r) {
    const auto points = sample_design(sampler, n, seed, r);
    const auto design = build_design_dag(points);
    stats.sizes[r] = maximum_antichain(design.dag).antichain.size();
  });
  const auto d = static_cast<double>(sampler.d);
  const auto nd = static_cast<double>(n);
  stats.bound = std::pow(nd, 1.0 - 1.0 / d) / (2.0 * std::numbers::e * std::pow(sampler.M0, 1.0 / d));
  const double mn = sampler.M0 * nd;
  stats.failure_probability = std::exp(-std::numbers::e / d * std::pow(mn, 1.0 / d) * std::log(mn));
  std::size_t meeting = 0;
  double sum = 0.0;
  for (auto s : stats.sizes) {
    meeting += static_cast<double>(s) >= stats.bound;
    sum += static_cast<double>(s);
  }
  stats.fraction_meeting_bound = static_cast<double>(meeting) / static_cast<double>(reps);
  stats.mean = sum / static_cast<double>(reps);
  return stats;
}

std::size_t longest_chain_length(std::span<const Point> points) {
  const std::size_t n = points.size();
  if (n == 0) return 0;
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  // Lexicographic order is a linear extension of ⪯.
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return points[a] < points[b]; });
  std::vector<std::size_t> best(n, 1);
  std::size_t longest = 1;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < i; ++k) {
      if (dominated(points[order[k]], points[order[i]])) best[i] = std::max(best[i], best[k] + 1);
    }
    longest = std::max(longest, best[i]);
  }
  return longest;
}

ChainTail chain_tail_check(std::size_t n, std::size_t k, const DesignSampler& sampler,
                           std::size_t reps, std::uint64_t seed, unsigned threads) {
  sampler.validate();
  if (k == 0 || k > n) throw ArgumentError("chain_tail_check needs 1 <= k <= n");
  ChainTail tail;
  const auto nd = static_cast<double>(n);
  const auto kd = static_cast<double>(k);
  const double log_binom = std::lgamma(nd + 1.0) - std::lgamma(kd + 1.0) - std::lgamma(nd - kd + 1.0);
  tail.log_bound = log_binom - static_cast<double>(sampler.d) * std::lgamma(kd + 1.0) +
                   kd * std::log(sampler.M0);
  tail.bound = std::exp(tail.log_bound);
  tail.reps = reps;
  if (reps == 0) return tail;
  std::vector<char> hit(reps, 0);
  parallel_for(reps, threads, [&](std::size_t r) {
    const auto points = sample_design(sampler, n, seed, r);
    hit[r] = longest_chain_length(points) >= k;
  });
  std::size_t count = 0;
  for (char h : hit) count += static_cast<std::size_t>(h);
  tail.frequency = static_cast<double>(count) / static_cast<double>(reps);
  return tail;
}

void write_design_csv(std::ostream& out, std::span<const Point> points, std::span<const double> y) {
  if (points.size() != y.size()) throw ArgumentError("observation count differs from point count");
  const std::size_t d = points.empty() ? 0 : points.front().size();
  out << "index";
  for (std::size_t j = 1; j <= d; ++j) out << ",x_" << j;
  out << ",y\n";
  for (std::size_t i = 0; i < points.size(); ++i) {
    out << i;
    for (double x : points[i]) out << ',' << format_double(x);
    out << ',' << format_double(y[i]) << '\n';
  }
  if (!out) throw IoError("failed writing design CSV");
}

}  // namespace isoreg
