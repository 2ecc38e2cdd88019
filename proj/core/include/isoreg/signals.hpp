#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "isoreg/order.hpp"

namespace isoreg {

class RandomStream;

/// Real function on [0,1]^d.
struct Function {
  std::size_t dimension = 0;
  std::function<double(std::span<const double>)> evaluate;

  double operator()(std::span<const double> x) const { return evaluate(x); }
};

enum class SignalKind { constant, staircase, linear_mean, r_variable, custom_grid };

/// Ground-truth signal on a lattice.
struct SignalSpec {
  SignalKind kind = SignalKind::constant;
  /// constant: the value.
  double value = 0.0;
  /// staircase: per-axis 1-based indices where a new block starts (each in
  /// (1, n_j], increasing) and per-axis nondecreasing heights, one per block.
  /// The signal is the sum of the per-axis heights.
  std::vector<std::vector<std::size_t>> cuts;
  std::vector<std::vector<double>> steps;
  /// r_variable: active coordinates J (0-based) and nondecreasing levels.
  /// The mean of (x_j - 1) / n_j over J is split into levels.size() equal
  /// bins; r = 0 gives levels[0] everywhere.
  std::vector<std::size_t> active;
  std::vector<double> levels;
  /// custom_grid: one value per lattice vertex in row-major order.
  std::vector<double> grid;
  /// Require ||θ||_∞ <= 1.
  bool bounded = false;

  static SignalSpec constant_value(double c);
  /// θ_x = 2 sum_j x_j / (d n_1) - 1, i.e. (x_1 + x_2)/n_1 - 1 when d = 2.
  static SignalSpec linear_mean();
  static SignalSpec r_variable(std::vector<std::size_t> active, std::vector<double> levels);
  static SignalSpec staircase(std::vector<std::vector<std::size_t>> cuts,
                              std::vector<std::vector<double>> steps);
  static SignalSpec custom(std::vector<double> grid);
};

/// Isotonic signal vector in row-major vertex order. Throws ValidationError
/// for non-monotone grids, malformed staircases, or a bounded signal that
/// leaves [-1, 1].
std::vector<double> generate_signal(const SignalSpec& spec, const LatticeSpec& lattice);

/// 1-based inclusive integer box prod_j [lo_j, hi_j].
struct Box {
  std::vector<std::size_t> lo;
  std::vector<std::size_t> hi;

  std::size_t size() const;
  std::size_t degenerate_axes() const;
  bool contains(std::span<const std::size_t> tuple) const;
};

struct HyperrectPartition {
  std::vector<Box> blocks;

  /// Throws ValidationError unless the blocks are nonempty, disjoint and
  /// cover the lattice.
  void validate(const LatticeSpec& lattice) const;
};

/// Product-block partition on which a staircase signal is constant.
HyperrectPartition staircase_partition(const SignalSpec& spec, const LatticeSpec& lattice);

struct AssouadSpec {
  double rho = 0.0;
  /// One bit per antichain vertex, in the order of AntichainReport::antichain.
  std::vector<int> tau;
};

/// 2 / (3 sqrt(n)).
double default_rho_fixed(std::size_t n);
/// 2^{3/2} m0 / (3 M0^{3/2}).
double default_rho_random(double m0, double M0);

/// θ^τ: -1 on W^-, ρ(2τ_v - 1) on W, +1 on W^+. Throws ValidationError if
/// the splits do not partition the vertices or τ is not binary.
std::vector<double> assouad_fixed(const Dag& dag, const AntichainReport& report,
                                  const AssouadSpec& spec);

/// Cells C_w with sum_j w_j = n_1, w_j >= 1, lexicographic.
std::vector<std::vector<std::size_t>> diagonal_cells(std::size_t d, std::size_t n1);

/// Block increasing function with value 0 below the diagonal band of cells,
/// 1 above it, and ρ τ_w on cell C_w = prod_j ((w_j - 1)/n_1, w_j/n_1].
/// Boundary points with some ceil(n_1 x_j) = 0 and band sum get 0.
Function assouad_random(std::size_t d, std::size_t n1, double rho, std::vector<int> tau);

struct SheetDecomposition {
  std::vector<Box> sheets;
  std::size_t count = 0;
  /// Axes (0-based) left free in every sheet: the two largest side lengths.
  std::vector<std::size_t> free_axes;
};

/// Splits the box [1, m_1] x ... x [1, m_d] into parallel two-dimensional
/// sheets spanned by its two largest sides.
SheetDecomposition sheet_decomposition(std::span<const std::size_t> dims);
/// Same for an arbitrary box.
SheetDecomposition sheet_decomposition(const Box& box);

struct SheetBound {
  /// sum_l |R_l|^{1 - 2/d}.
  double block_sum = 0.0;
  /// k (n / k)^{1 - 2/d}.
  double jensen = 0.0;
  /// Total number of parallel sheets over all blocks.
  std::size_t sheet_count = 0;
};

SheetBound k_sheet_bound(const HyperrectPartition& partition, std::size_t d);

/// Exact K(θ): fewest disjoint two-dimensional sheets covering the lattice
/// with θ constant on each. Searches each connected constant region
/// separately. Throws SizeError above kMaxSheetSearchVertices.
inline constexpr std::size_t kMaxSheetSearchVertices = 16;
std::size_t min_sheet_partition_bruteforce(std::span<const double> theta,
                                           const LatticeSpec& lattice);

struct RiemannEnvelopes {
  Function lower;
  Function upper;
  /// Integral of (f_U - f_L)^2 over [0,1]^d, evaluated cellwise.
  double integral = 0.0;
  /// 4 d n^{-1/d} ||f||_∞^2 with n = n_1^d.
  double bound = 0.0;
  double sup_norm = 0.0;
};

/// f_L(x) = f(floor(n_1 x) / n_1), f_U(x) = f(ceil(n_1 x) / n_1). f must be
/// block increasing so that ||f||_∞ = max(|f(0)|, |f(1)|).
RiemannEnvelopes riemann_envelopes(const Function& f, std::size_t n1);

/// f(θ)(x) = θ(floor(n_1 x_1), ..., floor(n_1 x_d)) with indices clamped to
/// [1, n_j].
Function function_of_lattice(std::vector<double> theta, const LatticeSpec& lattice);
/// θ(f)(i) = f(i_1 / n_1, ..., i_d / n_d).
std::vector<double> lattice_of_function(const Function& f, const LatticeSpec& lattice);

/// Random block increasing step function with ||f||_∞ = 1: up to
/// `max_cuts` random thresholds per axis and random isotonic cell values.
Function random_staircase_function(std::size_t d, std::size_t max_cuts, RandomStream& rng);

struct PackingSet {
  std::size_t ell = 0;
  std::size_t n1 = 0;
  std::size_t n = 0;
  /// Greedy first-fit code over {0,1}^{ell^2}; bit (r-1)*ell + (s-1) selects
  /// the value on block I_r x I_s.
  std::vector<std::vector<int>> codewords;
  /// Row-major vectors on L_{2,n}.
  std::vector<std::vector<double>> vectors;
  std::size_t required_distance = 0;
  std::size_t min_hamming = 0;
  double min_squared_distance = 0.0;
  /// (1/4)(1 - 2^{-1/2})^2 / log^2 n: squared distance per differing block.
  double squared_distance_per_bit = 0.0;
};

/// Dyadic-block packing of M(L_{2,n}) ∩ B_2(1) with n_1 = 2^ell - 1.
/// Throws ArgumentError for ell < 2 and SizeError for ell > 4.
PackingSet packing_set_2d(std::size_t ell);

std::vector<double> packing_vector(std::size_t ell, std::span<const int> bits);

/// CSV with header `vertex_index,x_1,...,x_d,value`; vertex indices are 0-based.
void write_signal_csv(std::ostream& out, std::span<const double> theta,
                      const LatticeSpec& lattice);

/// Parses CLI signal names: zero, constant:<c>, linear, rvar:<j,..>:<l,..>,
/// staircase:<k> (up to k equal blocks per axis, heights spread over [-1,1]).
SignalSpec parse_signal(const std::string& text, const LatticeSpec& lattice);

}  // namespace isoreg
