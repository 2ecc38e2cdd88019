#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "isoreg/cone_solver.hpp"
#include "isoreg/order.hpp"

namespace isoreg {

/// Monte Carlo mean with its standard error. Replicate r draws from
/// RandomStream(seed, stream_id + r).
struct MonteCarloEstimate {
  double mean = 0.0;
  /// Sample standard deviation / sqrt(replicates).
  double standard_error = 0.0;
  std::size_t replicates = 0;
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;
  /// Per-replicate values in stream order.
  std::vector<double> samples;
};

/// Mean and standard error summed in index order.
MonteCarloEstimate summarize(std::vector<double> samples, std::uint64_t seed,
                             std::uint64_t stream_id);

struct MonteCarloOptions {
  std::size_t replicates = 1000;
  std::uint64_t seed = 1;
  std::uint64_t stream_id = 0;
  /// 0 = hardware concurrency. Results do not depend on this.
  unsigned threads = 1;
  FitOptions fit;
};

/// Squared Euclidean norm accumulated in index order.
double squared_norm(std::span<const double> v);

/// Mean of ||Π(ε)||^2 over standard normal ε, one coordinate per vertex in
/// vertex order. A ConvergenceError names the failing replicate.
MonteCarloEstimate statdim_mc(const Dag& dag, const MonteCarloOptions& options);

/// Mean of ||Π(ε)||, the Gaussian width of the cone intersected with the unit
/// ball. Shares noise with statdim_mc for equal options.
MonteCarloEstimate gaussian_width_mc(const Dag& dag, const MonteCarloOptions& options);

struct WidthLowerBound {
  MonteCarloEstimate estimate;
  /// sqrt(2/π) |W| / sqrt(n).
  double target = 0.0;
};

/// Mean of <ε, θ(ε)> / sqrt(n) with θ = +1 on W^+, sgn(ε) on W and -1 on W^-.
WidthLowerBound width_lower_bound_mc(const Dag& dag, const AntichainReport& report,
                                     const MonteCarloOptions& options);

/// Lattice keeping only the cover edges inside the parallel two-dimensional
/// sheets of sheet_decomposition, i.e. the disjoint union of the sheets.
Dag sheet_union_dag(const LatticeSpec& lattice);

double harmonic_sum(std::size_t n);

/// log(max(x, e)).
double log_plus(double x);

struct BoundParams {
  double C = 1.0;
  std::size_t d = 1;

  /// 9/2 when d = 2, (d^2 + d + 1)/2 when d >= 3 (and d = 1 by extension).
  double gamma_d() const;
};

/// Evaluates a named rate bound. `complexity` is k, K or r depending on the
/// name; natural logarithms throughout.
///   thm1         C n^{-1/d} log^4 n
///   thm3         C (K/n) log_+^8(n/K)
///   thm4         C (k/n)^{2/d} log_+^8(n/k)
///   variables    C n^{-2/d} log^8 n (r <= d-2), C n^{-4/(3d)} log^{16/3} n
///                (r = d-1), C n^{-1/d} log^4 n (r = d)
///   thm7         C n^{-1/d} log^{γ_d} n
///   thm8         C (k/n)^{2/d} log_+^{2γ_d}(n/k)
///   statdim_upper  H_n (d=1), C log^8 n (d=2), C n^{1-2/d} log^8 n (d>=3)
///   statdim_lower  H_n (d=1), C log^2 n (d=2), C n^{1-2/d} (d>=3)
///   width_upper  C n^{1/2-1/d} log^4 n for d >= 2, sqrt(H_n) for d = 1
/// Throws ArgumentError for unknown names or missing complexity.
double bound_eval(const std::string& name, const BoundParams& params, double n,
                  double complexity = 0.0);

const std::vector<std::string>& bound_names();

struct EstimateRow {
  std::string metric;
  std::size_t d = 0;
  std::size_t n = 0;
  MonteCarloEstimate estimate;
  double bound_C1 = 0.0;
};

/// CSV `metric,d,n,replicates,seed,mean,stderr,bound_C1`.
void write_estimates_csv(std::ostream& out, std::span<const EstimateRow> rows);

/// Shortest round-trip decimal form; NaN prints as `nan`.
std::string format_double(double value);

}  // namespace isoreg
