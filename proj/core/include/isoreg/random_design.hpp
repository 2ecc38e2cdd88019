#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "isoreg/complexity.hpp"
#include "isoreg/order.hpp"
#include "isoreg/signals.hpp"

namespace isoreg {

/// Piecewise-constant density on the dyadic grid with 2^level cells per axis.
/// Cells are numbered row-major (last axis fastest); each cell is the box
/// prod_j [c_j / 2^level, (c_j + 1) / 2^level).
struct DesignSampler {
  std::size_t d = 1;
  std::size_t level = 0;
  std::vector<double> density;
  double m0 = 1.0;
  double M0 = 1.0;

  static DesignSampler uniform(std::size_t d);
  /// Density `low` on cells whose index sum is even and `high` on the rest.
  /// low + high must equal 2 so that the density integrates to one.
  static DesignSampler checkerboard(std::size_t d, std::size_t level, double low, double high);

  std::size_t cells_per_axis() const { return std::size_t{1} << level; }
  std::size_t cell_count() const { return density.size(); }
  /// Throws ValidationError unless the density is nonnegative, integrates to
  /// one, and satisfies 0 < m0 <= density <= M0 with m0 <= 1 <= M0.
  void validate() const;
  std::size_t cell_of(std::span<const double> x) const;
  double density_at(std::span<const double> x) const;
  /// Probability of cell c.
  double cell_mass(std::size_t c) const;
};

/// n i.i.d. points: a cell is chosen by mass, then a uniform point inside it.
std::vector<Point> sample_design(const DesignSampler& sampler, std::size_t n, std::uint64_t seed,
                                 std::uint64_t stream_id = 0);

/// Least-squares fit evaluated at the design points.
struct FittedFunction {
  std::vector<Point> points;
  /// Fitted value at each design point (duplicates repeat the shared value).
  std::vector<double> values;
  double max_fitted = 0.0;

  static FittedFunction from_fit(std::vector<Point> points, const DesignDag& design,
                                 std::span<const double> theta_hat);
};

/// min({f(X_i) : X_i ⪰ x} ∪ {max_i f(X_i)}), by linear scan.
double extend_estimator(const FittedFunction& fit, std::span<const double> x);

/// Least-squares fit of observations y_i at design points. Duplicates are
/// merged and fitted with their multiplicities as weights.
FittedFunction fit_design(std::span<const Point> points, std::span<const double> y,
                          const FitOptions& options = {});

/// (1/n) sum_i (fitted_i - f0_i)^2.
double empirical_risk(std::span<const double> fitted, std::span<const double> f0_values);
/// sum_i (fitted_i - f0_i)^2 in index order.
double empirical_sse(std::span<const double> fitted, std::span<const double> f0_values);

/// Mean of (extended fit - f0)^2 over `mc_points` draws from the sampler
/// (stream (seed, stream_id)).
MonteCarloEstimate l2p_risk_mc(const FittedFunction& fit, const Function& f0,
                               const DesignSampler& sampler, std::size_t mc_points,
                               std::uint64_t seed, std::uint64_t stream_id = 0);

struct AntichainStats {
  std::vector<std::size_t> sizes;
  /// n^{1-1/d} / (2 e M0^{1/d}).
  double bound = 0.0;
  /// exp(-e d^{-1} (M0 n)^{1/d} log(M0 n)).
  double failure_probability = 0.0;
  double fraction_meeting_bound = 0.0;
  double mean = 0.0;
};

/// Maximum antichain size of G_X for `reps` designs; rep r uses stream r.
AntichainStats antichain_stats(std::size_t n, const DesignSampler& sampler, std::size_t reps,
                               std::uint64_t seed, unsigned threads = 1);

struct ChainTail {
  /// log of binom(n, k) (k!)^{-d} M0^k.
  double log_bound = 0.0;
  double bound = 0.0;
  /// Fraction of replicates whose longest chain has at least k points.
  double frequency = 0.0;
  std::size_t reps = 0;
};

/// Analytic bound only when reps == 0.
ChainTail chain_tail_check(std::size_t n, std::size_t k, const DesignSampler& sampler,
                           std::size_t reps, std::uint64_t seed, unsigned threads = 1);

/// Length of the longest chain among points under ⪯ (O(n^2 d)).
std::size_t longest_chain_length(std::span<const Point> points);

/// CSV `index,x_1,...,x_d,y`.
void write_design_csv(std::ostream& out, std::span<const Point> points, std::span<const double> y);

}  // namespace isoreg
