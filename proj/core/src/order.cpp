#include "isoreg/order.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <functional>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <queue>
#include <sstream>
#include <string>

#include "isoreg/errors.hpp"

namespace isoreg {

// ---------------------------------------------------------------- LatticeSpec

LatticeSpec LatticeSpec::cube(std::size_t d, std::size_t n1) {
  LatticeSpec spec{std::vector<std::size_t>(d, n1)};
  spec.validate();
  return spec;
}

void LatticeSpec::validate() const {
  if (side_lengths.empty()) throw ArgumentError("lattice dimension must be >= 1");
  for (std::size_t n : side_lengths) {
    if (n == 0) throw ArgumentError("lattice side lengths must be >= 1");
  }
}

std::size_t LatticeSpec::size() const {
  std::size_t n = 1;
  for (std::size_t side : side_lengths) {
    if (side != 0 && n > std::numeric_limits<std::size_t>::max() / side) {
      throw SizeError("lattice size overflows");
    }
    n *= side;
  }
  return n;
}

std::vector<std::size_t> LatticeSpec::tuple_of(std::size_t index) const {
  std::vector<std::size_t> tuple(dimension());
  for (std::size_t j = dimension(); j-- > 0;) {
    tuple[j] = index % side_lengths[j] + 1;
    index /= side_lengths[j];
  }
  return tuple;
}

std::size_t LatticeSpec::index_of(std::span<const std::size_t> tuple) const {
  if (tuple.size() != dimension()) throw ArgumentError("tuple dimension mismatch");
  std::size_t index = 0;
  for (std::size_t j = 0; j < dimension(); ++j) {
    if (tuple[j] < 1 || tuple[j] > side_lengths[j]) {
      throw ArgumentError("tuple coordinate out of range");
    }
    index = index * side_lengths[j] + (tuple[j] - 1);
  }
  return index;
}

// ------------------------------------------------------------------------ Dag

namespace {

void set_bit(std::vector<std::uint64_t>& bits, std::size_t row_offset, std::size_t v) {
  bits[row_offset + v / 64] |= std::uint64_t{1} << (v % 64);
}

template <class Fn>
void for_each_bit(std::span<const std::uint64_t> row, Fn&& fn) {
  for (std::size_t w = 0; w < row.size(); ++w) {
    std::uint64_t word = row[w];
    while (word != 0) {
      const int b = std::countr_zero(word);
      fn(w * 64 + static_cast<std::size_t>(b));
      word &= word - 1;
    }
  }
}

}  // namespace

Dag Dag::from_relation(std::size_t n, std::span<const Edge> relation,
                       std::vector<Point> coordinates, std::vector<double> multiplicity) {
  if (n == 0) throw ArgumentError("a DAG needs at least one vertex");
  if (n > kDefaultMaxVertices) {
    throw SizeError("DAG has " + std::to_string(n) + " vertices; the maximum is " +
                    std::to_string(kDefaultMaxVertices));
  }
  std::vector<std::vector<std::size_t>> out(n);
  std::vector<std::size_t> indegree(n, 0);
  for (const Edge& e : relation) {
    if (e.from >= n || e.to >= n) throw ArgumentError("edge endpoint out of range");
    if (e.from == e.to) throw ValidationError("self-loop: relation is not acyclic");
    out[e.from].push_back(e.to);
    ++indegree[e.to];
  }

  // Kahn's algorithm, smallest index first, so the topological order is
  // deterministic and equals the identity on row-major lattices.
  std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
  for (std::size_t v = 0; v < n; ++v) {
    if (indegree[v] == 0) ready.push(v);
  }
  std::vector<std::size_t> topo;
  topo.reserve(n);
  while (!ready.empty()) {
    const std::size_t u = ready.top();
    ready.pop();
    topo.push_back(u);
    for (std::size_t v : out[u]) {
      if (--indegree[v] == 0) ready.push(v);
    }
  }
  if (topo.size() != n) throw ValidationError("relation contains a directed cycle");

  Dag dag;
  dag.n_ = n;
  dag.words_ = (n + 63) / 64;
  dag.reach_.assign(n * dag.words_, 0);
  for (std::size_t i = n; i-- > 0;) {
    const std::size_t u = topo[i];
    const std::size_t ru = u * dag.words_;
    for (std::size_t v : out[u]) {
      set_bit(dag.reach_, ru, v);
      const std::size_t rv = v * dag.words_;
      for (std::size_t w = 0; w < dag.words_; ++w) dag.reach_[ru + w] |= dag.reach_[rv + w];
    }
  }
  dag.coordinates_ = std::move(coordinates);
  dag.multiplicity_ = std::move(multiplicity);
  dag.finish(std::move(topo));
  return dag;
}

void Dag::finish(std::vector<std::size_t> topo) {
  if (!coordinates_.empty() && coordinates_.size() != n_) {
    throw ArgumentError("coordinate count does not match vertex count");
  }
  if (multiplicity_.empty()) multiplicity_.assign(n_, 1.0);
  if (multiplicity_.size() != n_) throw ArgumentError("multiplicity length mismatch");
  topo_ = std::move(topo);
  position_.assign(n_, 0);
  for (std::size_t i = 0; i < n_; ++i) position_[topo_[i]] = i;

  // Cover edges of u are the minimal elements of its successor set: scan the
  // successors in topological order and drop everything above an accepted one.
  cover_edges_.clear();
  std::vector<std::uint64_t> covered(words_);
  std::vector<std::size_t> succ;
  for (std::size_t u : topo_) {
    succ.clear();
    for_each_bit(successor_bits(u), [&](std::size_t v) { succ.push_back(v); });
    std::sort(succ.begin(), succ.end(),
              [&](std::size_t a, std::size_t b) { return position_[a] < position_[b]; });
    std::fill(covered.begin(), covered.end(), 0);
    for (std::size_t v : succ) {
      if ((covered[v / 64] >> (v % 64)) & 1U) continue;
      cover_edges_.push_back({u, v});
      const auto row = successor_bits(v);
      for (std::size_t w = 0; w < words_; ++w) covered[w] |= row[w];
    }
  }

  is_chain_ = true;
  for (std::size_t i = 0; i + 1 < n_; ++i) {
    if (!precedes(topo_[i], topo_[i + 1])) {
      is_chain_ = false;
      break;
    }
  }
}

std::vector<std::size_t> Dag::strict_successors(std::size_t u) const {
  std::vector<std::size_t> out;
  for_each_bit(successor_bits(u), [&](std::size_t v) { out.push_back(v); });
  return out;
}

std::size_t Dag::comparable_pair_count() const {
  std::size_t count = 0;
  for (std::uint64_t word : reach_) count += static_cast<std::size_t>(std::popcount(word));
  return count;
}

Dag build_lattice(const LatticeSpec& spec, std::size_t max_vertices) {
  spec.validate();
  const std::size_t n = spec.size();
  if (n > max_vertices || n > Dag::kDefaultMaxVertices) {
    throw SizeError("lattice has " + std::to_string(n) + " vertices; the maximum is " +
                    std::to_string(std::min(max_vertices, Dag::kDefaultMaxVertices)));
  }
  const std::size_t d = spec.dimension();
  std::vector<std::size_t> stride(d, 1);
  for (std::size_t j = d - 1; j-- > 0;) stride[j] = stride[j + 1] * spec.side_lengths[j + 1];

  std::vector<Edge> edges;
  std::vector<Point> coords(n);
  for (std::size_t v = 0; v < n; ++v) {
    const auto tuple = spec.tuple_of(v);
    coords[v].assign(tuple.begin(), tuple.end());
    for (std::size_t j = 0; j < d; ++j) {
      if (tuple[j] < spec.side_lengths[j]) edges.push_back({v, v + stride[j]});
    }
  }
  return Dag::from_relation(n, edges, std::move(coords));
}

// ----------------------------------------------------------------- design DAG

bool dominated(std::span<const double> x, std::span<const double> y) {
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (x[j] > y[j]) return false;
  }
  return true;
}

DesignDag build_design_dag(std::span<const Point> points) {
  if (points.empty()) throw ArgumentError("design point list is empty");
  const std::size_t d = points.front().size();
  if (d == 0) throw ArgumentError("design points must have dimension >= 1");
  for (const Point& p : points) {
    if (p.size() != d) throw ArgumentError("design points have mixed dimensions");
    for (double c : p) {
      if (!(c >= 0.0 && c <= 1.0)) throw ArgumentError("design point outside [0,1]^d");
    }
  }

  // Merge exact duplicates; vertices are numbered by first occurrence.
  std::vector<std::size_t> order(points.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return points[a] < points[b]; });
  std::vector<std::size_t> representative(points.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    const bool same = i > 0 && points[order[i]] == points[order[i - 1]];
    representative[order[i]] = same ? representative[order[i - 1]] : order[i];
  }
  DesignDag result{Dag{}, std::vector<std::size_t>(points.size())};
  std::vector<std::size_t> vertex_of_first(points.size(), 0);
  std::vector<Point> coords;
  std::vector<double> multiplicity;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (representative[i] == i) {
      vertex_of_first[i] = coords.size();
      coords.push_back(points[i]);
      multiplicity.push_back(0.0);
    }
    const std::size_t v = vertex_of_first[representative[i]];
    result.vertex_of_point[i] = v;
    multiplicity[v] += 1.0;
  }

  const std::size_t n = coords.size();
  if (n > Dag::kDefaultMaxVertices) {
    throw SizeError("design has " + std::to_string(n) + " distinct points; the maximum is " +
                    std::to_string(Dag::kDefaultMaxVertices));
  }
  Dag& dag = result.dag;
  dag.n_ = n;
  dag.words_ = (n + 63) / 64;
  dag.reach_.assign(n * dag.words_, 0);
  std::vector<std::size_t> below_count(n, 0);
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t v = 0; v < n; ++v) {
      if (u != v && dominated(coords[u], coords[v])) {
        set_bit(dag.reach_, u * dag.words_, v);
        ++below_count[v];
      }
    }
  }
  // u ≺ v implies every predecessor of u precedes v, so predecessor counts
  // strictly increase along the order.
  std::vector<std::size_t> topo(n);
  std::iota(topo.begin(), topo.end(), 0);
  std::stable_sort(topo.begin(), topo.end(), [&](std::size_t a, std::size_t b) {
    return below_count[a] < below_count[b];
  });
  dag.coordinates_ = std::move(coords);
  dag.multiplicity_ = std::move(multiplicity);
  dag.finish(std::move(topo));
  return result;
}

// ------------------------------------------------------------- isotonic check

bool is_isotonic(const Dag& dag, std::span<const double> theta, double tol) {
  if (theta.size() != dag.size()) throw ArgumentError("theta length does not match DAG size");
  for (const Edge& e : dag.cover_edges()) {
    if (theta[e.from] > theta[e.to] + tol) return false;
  }
  return true;
}

double max_violation(const Dag& dag, std::span<const double> theta) {
  if (theta.size() != dag.size()) throw ArgumentError("theta length does not match DAG size");
  double worst = dag.cover_edges().empty() ? 0.0 : -std::numeric_limits<double>::infinity();
  for (const Edge& e : dag.cover_edges()) worst = std::max(worst, theta[e.from] - theta[e.to]);
  return worst;
}

// ------------------------------------------------------------------ antichains

namespace {

constexpr std::size_t kUnmatched = std::numeric_limits<std::size_t>::max();

/// Hopcroft-Karp on left copy u -> right copy v whenever u ≺ v.
struct ClosureMatching {
  const Dag& dag;
  std::vector<std::vector<std::size_t>> adj;
  std::vector<std::size_t> match_left;
  std::vector<std::size_t> match_right;
  std::vector<std::size_t> layer;

  explicit ClosureMatching(const Dag& g)
      : dag(g), adj(g.size()), match_left(g.size(), kUnmatched),
        match_right(g.size(), kUnmatched), layer(g.size()) {
    for (std::size_t u = 0; u < g.size(); ++u) adj[u] = g.strict_successors(u);
  }

  bool bfs() {
    std::queue<std::size_t> q;
    bool found_free = false;
    for (std::size_t u = 0; u < adj.size(); ++u) {
      if (match_left[u] == kUnmatched) {
        layer[u] = 0;
        q.push(u);
      } else {
        layer[u] = kUnmatched;
      }
    }
    while (!q.empty()) {
      const std::size_t u = q.front();
      q.pop();
      for (std::size_t v : adj[u]) {
        const std::size_t w = match_right[v];
        if (w == kUnmatched) {
          found_free = true;
        } else if (layer[w] == kUnmatched) {
          layer[w] = layer[u] + 1;
          q.push(w);
        }
      }
    }
    return found_free;
  }

  bool dfs(std::size_t u) {
    for (std::size_t v : adj[u]) {
      const std::size_t w = match_right[v];
      if (w == kUnmatched || (layer[w] == layer[u] + 1 && dfs(w))) {
        match_left[u] = v;
        match_right[v] = u;
        return true;
      }
    }
    layer[u] = kUnmatched;
    return false;
  }

  void run() {
    while (bfs()) {
      for (std::size_t u = 0; u < adj.size(); ++u) {
        if (match_left[u] == kUnmatched) dfs(u);
      }
    }
  }
};

std::vector<std::uint64_t> mask_of(std::size_t n, std::span<const std::size_t> vertices) {
  std::vector<std::uint64_t> mask((n + 63) / 64, 0);
  for (std::size_t v : vertices) mask[v / 64] |= std::uint64_t{1} << (v % 64);
  return mask;
}

bool intersects(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b) {
  for (std::size_t w = 0; w < a.size(); ++w) {
    if (a[w] & b[w]) return true;
  }
  return false;
}

}  // namespace

bool is_antichain(const Dag& dag, std::span<const std::size_t> vertices) {
  for (std::size_t i = 0; i < vertices.size(); ++i) {
    for (std::size_t j = i + 1; j < vertices.size(); ++j) {
      if (dag.comparable(vertices[i], vertices[j])) return false;
    }
  }
  return true;
}

AntichainReport split_around(const Dag& dag, std::vector<std::size_t> antichain) {
  const std::size_t n = dag.size();
  for (std::size_t v : antichain) {
    if (v >= n) throw ArgumentError("antichain vertex out of range");
  }
  std::sort(antichain.begin(), antichain.end());
  if (std::adjacent_find(antichain.begin(), antichain.end()) != antichain.end()) {
    throw ValidationError("antichain lists a vertex twice");
  }
  if (!is_antichain(dag, antichain)) throw ValidationError("vertex set is not an antichain");

  const auto in_w = mask_of(n, antichain);
  std::vector<std::uint64_t> above(in_w.size(), 0);
  for (std::size_t w : antichain) {
    const auto row = dag.successor_bits(w);
    for (std::size_t k = 0; k < above.size(); ++k) above[k] |= row[k];
  }
  AntichainReport report;
  for (std::size_t v = 0; v < n; ++v) {
    if ((in_w[v / 64] >> (v % 64)) & 1U) continue;
    const bool is_above = (above[v / 64] >> (v % 64)) & 1U;
    const bool is_below = intersects(dag.successor_bits(v), in_w);
    if (is_above == is_below) {
      // Both is impossible for an antichain; neither means W is not maximal.
      throw ValidationError("antichain is not maximal: vertex " + std::to_string(v) +
                            " is incomparable to every element");
    }
    (is_above ? report.upper_split : report.lower_split).push_back(v);
  }
  report.antichain = std::move(antichain);
  return report;
}

AntichainReport maximum_antichain(const Dag& dag) {
  const std::size_t n = dag.size();
  ClosureMatching matching(dag);
  matching.run();

  // König: Z = vertices reachable from free left vertices along alternating
  // paths. Cover = (L \ Z) ∪ (R ∩ Z); the antichain is its complement in the
  // sense of vertices whose left copy is in Z and right copy is not.
  std::vector<char> z_left(n, 0), z_right(n, 0);
  std::queue<std::size_t> q;
  for (std::size_t u = 0; u < n; ++u) {
    if (matching.match_left[u] == kUnmatched) {
      z_left[u] = 1;
      q.push(u);
    }
  }
  while (!q.empty()) {
    const std::size_t u = q.front();
    q.pop();
    for (std::size_t v : matching.adj[u]) {
      if (z_right[v] || matching.match_left[u] == v) continue;
      z_right[v] = 1;
      const std::size_t w = matching.match_right[v];
      if (w != kUnmatched && !z_left[w]) {
        z_left[w] = 1;
        q.push(w);
      }
    }
  }
  std::vector<std::size_t> antichain;
  for (std::size_t v = 0; v < n; ++v) {
    if (z_left[v] && !z_right[v]) antichain.push_back(v);
  }

  AntichainReport report = split_around(dag, std::move(antichain));
  for (std::size_t v : dag.topological_order()) {
    if (matching.match_right[v] != kUnmatched) continue;
    std::vector<std::size_t> chain{v};
    for (std::size_t u = v; matching.match_left[u] != kUnmatched;) {
      u = matching.match_left[u];
      chain.push_back(u);
    }
    report.chain_cover.push_back(std::move(chain));
  }
  return report;
}

LevelAntichain level_antichain(const LatticeSpec& spec, std::optional<std::size_t> level) {
  spec.validate();
  const std::size_t d = spec.dimension();
  const std::size_t top =
      std::accumulate(spec.side_lengths.begin(), spec.side_lengths.end(), std::size_t{0});
  const std::size_t n = spec.size();
  std::vector<std::size_t> sums(n);
  std::vector<std::size_t> count(top + 1, 0);
  for (std::size_t v = 0; v < n; ++v) {
    const auto t = spec.tuple_of(v);
    sums[v] = std::accumulate(t.begin(), t.end(), std::size_t{0});
    ++count[sums[v]];
  }
  std::size_t chosen;
  if (level) {
    if (*level < d || *level > top) {
      throw ArgumentError("level " + std::to_string(*level) + " outside [" + std::to_string(d) +
                          ", " + std::to_string(top) + "]");
    }
    chosen = *level;
  } else {
    chosen = d;
    for (std::size_t s = d; s <= top; ++s) {
      if (count[s] > count[chosen]) chosen = s;
    }
  }
  LevelAntichain out{chosen, {}};
  for (std::size_t v = 0; v < n; ++v) {
    if (sums[v] == chosen) out.vertices.push_back(v);
  }
  return out;
}

AntichainReport level_antichain_report(const LatticeSpec& spec,
                                       std::optional<std::size_t> level) {
  const LevelAntichain lvl = level_antichain(spec, level);
  AntichainReport report;
  report.antichain = lvl.vertices;
  for (std::size_t v = 0; v < spec.size(); ++v) {
    const auto t = spec.tuple_of(v);
    const std::size_t s = std::accumulate(t.begin(), t.end(), std::size_t{0});
    if (s > lvl.level) report.upper_split.push_back(v);
    if (s < lvl.level) report.lower_split.push_back(v);
  }
  return report;
}

namespace {

double binomial(double top, double bottom) {
  if (bottom < 0 || bottom > top) return 0.0;
  return std::round(std::exp(std::lgamma(top + 1) - std::lgamma(bottom + 1) -
                             std::lgamma(top - bottom + 1)));
}

}  // namespace

double diagonal_count_stated(std::size_t d, std::size_t n1) {
  return binomial(static_cast<double>(d + n1 - 1), static_cast<double>(d) - 1);
}

double diagonal_count_exact(std::size_t d, std::size_t n1) {
  return binomial(static_cast<double>(n1) - 1, static_cast<double>(d) - 1);
}

// ---------------------------------------------------------------------- chains

std::vector<std::size_t> longest_chain(const Dag& dag) {
  const std::size_t n = dag.size();
  std::vector<std::vector<std::size_t>> preds(n);
  for (const Edge& e : dag.cover_edges()) preds[e.to].push_back(e.from);
  std::vector<std::size_t> length(n, 1), parent(n, kUnmatched);
  std::size_t best = dag.topological_order().front();
  for (std::size_t v : dag.topological_order()) {
    for (std::size_t u : preds[v]) {
      if (length[u] + 1 > length[v]) {
        length[v] = length[u] + 1;
        parent[v] = u;
      }
    }
    if (length[v] > length[best]) best = v;
  }
  std::vector<std::size_t> chain;
  for (std::size_t v = best; v != kUnmatched; v = parent[v]) chain.push_back(v);
  std::reverse(chain.begin(), chain.end());
  return chain;
}

UpperLowerSets enumerate_upper_lower_sets(const Dag& dag) {
  const std::size_t n = dag.size();
  if (n > UpperLowerSets::kMaxVertices) {
    throw SizeError("upper/lower set enumeration is capped at " +
                    std::to_string(UpperLowerSets::kMaxVertices) + " vertices; got " +
                    std::to_string(n));
  }
  std::vector<std::uint32_t> succ(n, 0), pred(n, 0);
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t v = 0; v < n; ++v) {
      if (dag.precedes(u, v)) {
        succ[u] |= std::uint32_t{1} << v;
        pred[v] |= std::uint32_t{1} << u;
      }
    }
  }
  UpperLowerSets sets;
  const std::uint32_t full = (std::uint32_t{1} << n) - 1;
  for (std::uint32_t mask = 0; mask <= full; ++mask) {
    bool up = true, low = true;
    for (std::size_t v = 0; v < n && (up || low); ++v) {
      if (!((mask >> v) & 1U)) continue;
      if ((succ[v] & mask) != succ[v]) up = false;
      if ((pred[v] & mask) != pred[v]) low = false;
    }
    if (up) sets.upper.push_back(mask);
    if (low) sets.lower.push_back(mask);
  }
  return sets;
}

// --------------------------------------------------------------- serialization

void write_dag(std::ostream& out, const Dag& dag) {
  const auto old_precision = out.precision(17);
  const std::size_t d = dag.coordinate_dimension();
  out << dag.size() << ' ' << d << '\n';
  for (std::size_t v = 0; v < dag.size(); ++v) {
    for (std::size_t j = 0; j < d; ++j) {
      if (j) out << ' ';
      out << dag.coordinates()[v][j];
    }
    out << '\n';
  }
  out << "edges\n";
  for (const Edge& e : dag.cover_edges()) out << e.from << ' ' << e.to << '\n';
  out.precision(old_precision);
}

Dag read_dag(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("DAG file: missing header line");
  std::istringstream header(line);
  std::size_t n = 0, d = 0;
  if (!(header >> n >> d)) throw ValidationError("DAG file: header must be `n d`");
  std::vector<Point> coords;
  if (d > 0) coords.resize(n);
  for (std::size_t v = 0; v < n; ++v) {
    if (!std::getline(in, line)) throw ValidationError("DAG file: truncated coordinate block");
    std::istringstream row(line);
    for (std::size_t j = 0; j < d; ++j) {
      double c;
      if (!(row >> c)) throw ValidationError("DAG file: bad coordinate on vertex line " +
                                             std::to_string(v));
      coords[v].push_back(c);
    }
  }
  if (!std::getline(in, line) || line != "edges") {
    throw ValidationError("DAG file: expected `edges` sentinel");
  }
  std::vector<Edge> edges;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    Edge e;
    if (!(row >> e.from >> e.to)) throw ValidationError("DAG file: bad edge line `" + line + "`");
    edges.push_back(e);
  }
  Dag dag = Dag::from_relation(n, edges, std::move(coords));
  std::vector<Edge> given = edges, covers = dag.cover_edges();
  std::sort(given.begin(), given.end());
  std::sort(covers.begin(), covers.end());
  if (given != covers) throw ValidationError("DAG file: edges are not a transitive reduction");
  return dag;
}

}  // namespace isoreg
