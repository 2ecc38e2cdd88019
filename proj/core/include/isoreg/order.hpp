#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace isoreg {

/// u precedes v in the partial order (u ≺ v).
struct Edge {
  std::size_t from = 0;
  std::size_t to = 0;
  auto operator<=>(const Edge&) const = default;
};

using Point = std::vector<double>;

/// Side lengths n_1, ..., n_d of the lattice prod_j {1, ..., n_j}.
///
/// Vertices are numbered row-major with the last coordinate varying
/// fastest, so for the 2x2 lattice the order is (1,1), (1,2), (2,1), (2,2).
struct LatticeSpec {
  std::vector<std::size_t> side_lengths;

  static LatticeSpec cube(std::size_t d, std::size_t n1);

  std::size_t dimension() const { return side_lengths.size(); }
  /// Product of side lengths; throws SizeError on overflow.
  std::size_t size() const;
  /// Throws ArgumentError when d == 0 or some n_j == 0.
  void validate() const;

  /// 1-based coordinate tuple of vertex `index`.
  std::vector<std::size_t> tuple_of(std::size_t index) const;
  std::size_t index_of(std::span<const std::size_t> tuple) const;
};

/// Immutable finite partial order.
///
/// Stores the transitive reduction (cover edges), a topological order and the
/// strict reachability relation as a bit matrix. All three are computed once
/// at construction; a Dag is safe to share between concurrent readers.
class Dag {
 public:
  static constexpr std::size_t kDefaultMaxVertices = 16384;

  /// Builds the order generated by `relation` (any edge set whose transitive
  /// closure is the intended order). Throws ValidationError on cycles and
  /// ArgumentError on out-of-range endpoints.
  static Dag from_relation(std::size_t n, std::span<const Edge> relation,
                           std::vector<Point> coordinates = {},
                           std::vector<double> multiplicity = {});

  std::size_t size() const { return n_; }
  const std::vector<Edge>& cover_edges() const { return cover_edges_; }
  const std::vector<std::size_t>& topological_order() const { return topo_; }
  std::size_t topological_position(std::size_t v) const { return position_[v]; }

  /// Strict order u ≺ v.
  bool precedes(std::size_t u, std::size_t v) const {
    return (reach_[u * words_ + v / 64] >> (v % 64)) & 1U;
  }
  bool leq(std::size_t u, std::size_t v) const { return u == v || precedes(u, v); }
  bool comparable(std::size_t u, std::size_t v) const {
    return leq(u, v) || precedes(v, u);
  }

  /// Bit row of strict successors of u; bit v of word v/64 is set iff u ≺ v.
  std::span<const std::uint64_t> successor_bits(std::size_t u) const {
    return {reach_.data() + u * words_, words_};
  }
  std::size_t words_per_row() const { return words_; }

  std::vector<std::size_t> strict_successors(std::size_t u) const;
  /// Number of pairs u ≺ v.
  std::size_t comparable_pair_count() const;

  /// Vertex labels (lattice tuples or design points); empty when unlabeled.
  const std::vector<Point>& coordinates() const { return coordinates_; }
  std::size_t coordinate_dimension() const {
    return coordinates_.empty() ? 0 : coordinates_.front().size();
  }
  /// Number of merged observations per vertex (all ones unless duplicates
  /// were merged).
  const std::vector<double>& multiplicity() const { return multiplicity_; }

  /// True when the order is total.
  bool is_chain() const { return is_chain_; }

 private:
  Dag() = default;
  void finish(std::vector<std::size_t> topo);

  std::size_t n_ = 0;
  std::size_t words_ = 0;
  std::vector<std::uint64_t> reach_;
  std::vector<Edge> cover_edges_;
  std::vector<std::size_t> topo_;
  std::vector<std::size_t> position_;
  std::vector<Point> coordinates_;
  std::vector<double> multiplicity_;
  bool is_chain_ = false;

  friend struct DesignDag build_design_dag(std::span<const Point> points);
};

/// The lattice as a Dag; cover edges join tuples that differ by +1 in one
/// coordinate. Throws SizeError when the vertex count exceeds max_vertices.
Dag build_lattice(const LatticeSpec& spec,
                  std::size_t max_vertices = Dag::kDefaultMaxVertices);

/// Comparability DAG of design points under the componentwise order.
struct DesignDag {
  Dag dag;
  /// vertex_of_point[i] is the vertex carrying design point i; exactly equal
  /// points share a vertex whose multiplicity counts them.
  std::vector<std::size_t> vertex_of_point;
};

/// Throws ArgumentError for an empty list, mixed dimensions, or coordinates
/// outside [0, 1].
DesignDag build_design_dag(std::span<const Point> points);

/// Componentwise x ⪯ y.
bool dominated(std::span<const double> x, std::span<const double> y);

/// θ_u <= θ_v + tol across every cover edge.
bool is_isotonic(const Dag& dag, std::span<const double> theta, double tol = 0.0);

/// Largest θ_u - θ_v over cover edges (negative or zero when isotonic).
double max_violation(const Dag& dag, std::span<const double> theta);

struct AntichainReport {
  std::vector<std::size_t> antichain;
  /// Chains (listed bottom to top) partitioning the vertex set.
  std::vector<std::vector<std::size_t>> chain_cover;
  /// Vertices strictly above some antichain element.
  std::vector<std::size_t> upper_split;
  /// Vertices strictly below some antichain element.
  std::vector<std::size_t> lower_split;
};

/// Maximum antichain via Dilworth: Hopcroft-Karp matching on the bipartite
/// split of the transitive closure, antichain read off the König cover.
AntichainReport maximum_antichain(const Dag& dag);

/// Computes W^+ and W^- around an antichain. Throws ValidationError unless
/// the three sets partition the vertices (true for maximal antichains).
AntichainReport split_around(const Dag& dag, std::vector<std::size_t> antichain);

bool is_antichain(const Dag& dag, std::span<const std::size_t> vertices);

struct LevelAntichain {
  std::size_t level = 0;
  /// Vertex indices (row-major) of tuples whose coordinates sum to `level`.
  std::vector<std::size_t> vertices;
};

/// Tuples with coordinate sum `level`; nullopt selects the level of maximum
/// cardinality (ties go to the lower level). Throws ArgumentError when the
/// level lies outside [d, sum_j n_j].
LevelAntichain level_antichain(const LatticeSpec& spec,
                               std::optional<std::size_t> level = std::nullopt);

/// Level antichain together with the level-set splits {sum > s} and {sum < s}.
AntichainReport level_antichain_report(const LatticeSpec& spec,
                                       std::optional<std::size_t> level = std::nullopt);

/// Two closed forms for the diagonal level {w : sum_j w_j = n_1} of the cube
/// L_{d,n}: the stated binom(d+n_1-1, d-1) and the enumeration-consistent
/// binom(n_1-1, d-1). Callers compare both against level_antichain.
double diagonal_count_stated(std::size_t d, std::size_t n1);
double diagonal_count_exact(std::size_t d, std::size_t n1);

/// A maximum chain, bottom to top.
std::vector<std::size_t> longest_chain(const Dag& dag);

struct UpperLowerSets {
  static constexpr std::size_t kMaxVertices = 12;
  /// Bit masks over vertices, ascending; both include 0 and the full mask.
  std::vector<std::uint32_t> upper;
  std::vector<std::uint32_t> lower;
};

/// Exhaustive enumeration; throws SizeError above kMaxVertices.
UpperLowerSets enumerate_upper_lower_sets(const Dag& dag);

/// Text format: `n d`, n coordinate lines, `edges`, then `u v` cover edges.
void write_dag(std::ostream& out, const Dag& dag);
/// Throws ValidationError when the listed edges are not the cover relation
/// of the order they generate.
Dag read_dag(std::istream& in);

}  // namespace isoreg
