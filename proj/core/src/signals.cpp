#include "isoreg/signals.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <queue>
#include <sstream>

#include "isoreg/errors.hpp"
#include "isoreg/rng.hpp"

namespace isoreg {

namespace {

// Largest k with k / n <= x (as computed in double), clamped to [0, n].
std::size_t grid_floor(double x, std::size_t n) {
  const double nd = static_cast<double>(n);
  double k = std::floor(x * nd);
  if (k < 0.0) return 0;
  if (k > nd) return n;
  auto ki = static_cast<std::size_t>(k);
  if (ki < n && static_cast<double>(ki + 1) / nd <= x) ++ki;
  if (ki > 0 && static_cast<double>(ki) / nd > x) --ki;
  return ki;
}

// Smallest k with k / n >= x, clamped to [0, n].
std::size_t grid_ceil(double x, std::size_t n) {
  const double nd = static_cast<double>(n);
  double k = std::ceil(x * nd);
  if (k < 0.0) return 0;
  if (k > nd) return n;
  auto ki = static_cast<std::size_t>(k);
  if (ki > 0 && static_cast<double>(ki - 1) / nd >= x) --ki;
  if (ki < n && static_cast<double>(ki) / nd < x) ++ki;
  return ki;
}

std::vector<std::size_t> strides_of(const LatticeSpec& lattice) {
  const std::size_t d = lattice.dimension();
  std::vector<std::size_t> stride(d, 1);
  for (std::size_t j = d; j-- > 1;) stride[j - 1] = stride[j] * lattice.side_lengths[j];
  return stride;
}

// θ_x <= θ_{x + e_j} for every vertex and axis.
void require_lattice_isotonic(std::span<const double> theta, const LatticeSpec& lattice) {
  const auto stride = strides_of(lattice);
  const std::size_t n = theta.size();
  for (std::size_t v = 0; v < n; ++v) {
    for (std::size_t j = 0; j < lattice.dimension(); ++j) {
      const std::size_t coord = (v / stride[j]) % lattice.side_lengths[j];
      if (coord + 1 < lattice.side_lengths[j] && theta[v] > theta[v + stride[j]]) {
        std::ostringstream msg;
        msg << "signal is not isotonic: value at vertex " << v << " exceeds its successor along axis "
            << j + 1;
        throw ValidationError(msg.str());
      }
    }
  }
}

void require_nondecreasing(std::span<const double> values, const char* what) {
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] < values[i - 1]) throw ValidationError(std::string(what) + " must be nondecreasing");
  }
}

void validate_staircase(const SignalSpec& spec, const LatticeSpec& lattice) {
  const std::size_t d = lattice.dimension();
  if (spec.cuts.size() != d || spec.steps.size() != d) {
    throw ValidationError("staircase needs cuts and steps for every axis");
  }
  for (std::size_t j = 0; j < d; ++j) {
    const auto& cuts = spec.cuts[j];
    for (std::size_t i = 0; i < cuts.size(); ++i) {
      if (cuts[i] < 2 || cuts[i] > lattice.side_lengths[j] || (i > 0 && cuts[i] <= cuts[i - 1])) {
        throw ValidationError("staircase cut points must increase within (1, n_j]");
      }
    }
    if (spec.steps[j].size() != cuts.size() + 1) {
      throw ValidationError("staircase needs one height per block on every axis");
    }
    require_nondecreasing(spec.steps[j], "staircase heights");
  }
}

std::size_t block_of(const std::vector<std::size_t>& cuts, std::size_t coord) {
  return static_cast<std::size_t>(std::upper_bound(cuts.begin(), cuts.end(), coord) - cuts.begin());
}

}  // namespace

SignalSpec SignalSpec::constant_value(double c) {
  SignalSpec s;
  s.kind = SignalKind::constant;
  s.value = c;
  return s;
}

SignalSpec SignalSpec::linear_mean() {
  SignalSpec s;
  s.kind = SignalKind::linear_mean;
  return s;
}

SignalSpec SignalSpec::r_variable(std::vector<std::size_t> active, std::vector<double> levels) {
  SignalSpec s;
  s.kind = SignalKind::r_variable;
  s.active = std::move(active);
  s.levels = std::move(levels);
  return s;
}

SignalSpec SignalSpec::staircase(std::vector<std::vector<std::size_t>> cuts,
                                 std::vector<std::vector<double>> steps) {
  SignalSpec s;
  s.kind = SignalKind::staircase;
  s.cuts = std::move(cuts);
  s.steps = std::move(steps);
  return s;
}

SignalSpec SignalSpec::custom(std::vector<double> grid) {
  SignalSpec s;
  s.kind = SignalKind::custom_grid;
  s.grid = std::move(grid);
  return s;
}

std::vector<double> generate_signal(const SignalSpec& spec, const LatticeSpec& lattice) {
  lattice.validate();
  const std::size_t n = lattice.size();
  const std::size_t d = lattice.dimension();
  std::vector<double> theta(n);

  switch (spec.kind) {
    case SignalKind::constant:
      std::fill(theta.begin(), theta.end(), spec.value);
      break;
    case SignalKind::linear_mean: {
      std::size_t total_side = 0;
      for (auto m : lattice.side_lengths) total_side += m;
      const double mean_side = static_cast<double>(total_side) / static_cast<double>(d);
      for (std::size_t v = 0; v < n; ++v) {
        const auto x = lattice.tuple_of(v);
        double sum = 0.0;
        for (auto c : x) sum += static_cast<double>(c);
        theta[v] = 2.0 * sum / (static_cast<double>(d) * mean_side) - 1.0;
      }
      break;
    }
    case SignalKind::r_variable: {
      if (spec.levels.empty()) throw ValidationError("r_variable signal needs at least one level");
      require_nondecreasing(spec.levels, "r_variable levels");
      for (std::size_t j : spec.active) {
        if (j >= d) throw ValidationError("r_variable active coordinate out of range");
      }
      const std::size_t bins = spec.levels.size();
      for (std::size_t v = 0; v < n; ++v) {
        if (spec.active.empty()) {
          theta[v] = spec.levels.front();
          continue;
        }
        const auto x = lattice.tuple_of(v);
        double mean = 0.0;
        for (std::size_t j : spec.active) {
          mean += static_cast<double>(x[j] - 1) / static_cast<double>(lattice.side_lengths[j]);
        }
        mean /= static_cast<double>(spec.active.size());
        const auto bin = std::min(bins - 1, static_cast<std::size_t>(mean * static_cast<double>(bins)));
        theta[v] = spec.levels[bin];
      }
      break;
    }
    case SignalKind::staircase: {
      validate_staircase(spec, lattice);
      for (std::size_t v = 0; v < n; ++v) {
        const auto x = lattice.tuple_of(v);
        double value = 0.0;
        for (std::size_t j = 0; j < d; ++j) value += spec.steps[j][block_of(spec.cuts[j], x[j])];
        theta[v] = value;
      }
      break;
    }
    case SignalKind::custom_grid:
      if (spec.grid.size() != n) {
        throw ValidationError("custom grid has " + std::to_string(spec.grid.size()) +
                              " values for a lattice of " + std::to_string(n));
      }
      theta = spec.grid;
      require_lattice_isotonic(theta, lattice);
      break;
  }

  if (spec.bounded) {
    for (double t : theta) {
      if (!(std::abs(t) <= 1.0)) throw ValidationError("bounded signal leaves [-1, 1]");
    }
  }
  return theta;
}

std::size_t Box::size() const {
  std::size_t s = 1;
  for (std::size_t j = 0; j < lo.size(); ++j) s *= hi[j] - lo[j] + 1;
  return s;
}

std::size_t Box::degenerate_axes() const {
  std::size_t count = 0;
  for (std::size_t j = 0; j < lo.size(); ++j) count += lo[j] == hi[j];
  return count;
}

bool Box::contains(std::span<const std::size_t> tuple) const {
  if (tuple.size() != lo.size()) return false;
  for (std::size_t j = 0; j < lo.size(); ++j) {
    if (tuple[j] < lo[j] || tuple[j] > hi[j]) return false;
  }
  return true;
}

void HyperrectPartition::validate(const LatticeSpec& lattice) const {
  lattice.validate();
  const std::size_t d = lattice.dimension();
  std::vector<char> covered(lattice.size(), 0);
  std::size_t total = 0;
  for (const auto& box : blocks) {
    if (box.lo.size() != d || box.hi.size() != d) throw ValidationError("block has wrong dimension");
    for (std::size_t j = 0; j < d; ++j) {
      if (box.lo[j] < 1 || box.lo[j] > box.hi[j] || box.hi[j] > lattice.side_lengths[j]) {
        throw ValidationError("block is empty or leaves the lattice");
      }
    }
    std::vector<std::size_t> t = box.lo;
    bool more = true;
    while (more) {
      const std::size_t v = lattice.index_of(t);
      if (covered[v]) throw ValidationError("blocks overlap at vertex " + std::to_string(v));
      covered[v] = 1;
      ++total;
      more = false;
      for (std::size_t j = d; j-- > 0;) {
        if (t[j] < box.hi[j]) {
          ++t[j];
          more = true;
          break;
        }
        t[j] = box.lo[j];
      }
    }
  }
  if (total != lattice.size()) throw ValidationError("blocks do not cover the lattice");
}

HyperrectPartition staircase_partition(const SignalSpec& spec, const LatticeSpec& lattice) {
  if (spec.kind != SignalKind::staircase) throw ArgumentError("signal is not a staircase");
  validate_staircase(spec, lattice);
  const std::size_t d = lattice.dimension();
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> ranges(d);
  for (std::size_t j = 0; j < d; ++j) {
    std::size_t start = 1;
    for (std::size_t c : spec.cuts[j]) {
      ranges[j].emplace_back(start, c - 1);
      start = c;
    }
    ranges[j].emplace_back(start, lattice.side_lengths[j]);
  }
  HyperrectPartition partition;
  std::vector<std::size_t> pick(d, 0);
  for (;;) {
    Box box;
    for (std::size_t j = 0; j < d; ++j) {
      box.lo.push_back(ranges[j][pick[j]].first);
      box.hi.push_back(ranges[j][pick[j]].second);
    }
    partition.blocks.push_back(std::move(box));
    std::size_t j = d;
    bool done = true;
    while (j > 0) {
      --j;
      if (++pick[j] < ranges[j].size()) {
        done = false;
        break;
      }
      pick[j] = 0;
    }
    if (done) break;
  }
  return partition;
}

double default_rho_fixed(std::size_t n) {
  if (n == 0) throw ArgumentError("n must be positive");
  return 2.0 / (3.0 * std::sqrt(static_cast<double>(n)));
}

double default_rho_random(double m0, double M0) {
  if (!(m0 > 0.0) || !(M0 >= m0)) throw ArgumentError("need 0 < m0 <= M0");
  return std::pow(2.0, 1.5) * m0 / (3.0 * std::pow(M0, 1.5));
}

std::vector<double> assouad_fixed(const Dag& dag, const AntichainReport& report,
                                  const AssouadSpec& spec) {
  const std::size_t n = dag.size();
  if (spec.tau.size() != report.antichain.size()) {
    throw ValidationError("tau has " + std::to_string(spec.tau.size()) + " entries for an antichain of " +
                          std::to_string(report.antichain.size()));
  }
  if (!(spec.rho >= 0.0 && spec.rho <= 1.0)) throw ValidationError("rho must lie in [0, 1]");
  std::vector<int> role(n, -2);
  auto assign = [&](const std::vector<std::size_t>& set, int r) {
    for (std::size_t v : set) {
      if (v >= n || role[v] != -2) throw ValidationError("splits do not partition the vertices");
      role[v] = r;
    }
  };
  assign(report.lower_split, -1);
  assign(report.antichain, 0);
  assign(report.upper_split, 1);
  if (std::count(role.begin(), role.end(), -2) != 0) {
    throw ValidationError("splits do not cover every vertex");
  }
  std::vector<double> theta(n);
  for (std::size_t v = 0; v < n; ++v) theta[v] = static_cast<double>(role[v]);
  for (std::size_t i = 0; i < report.antichain.size(); ++i) {
    const int t = spec.tau[i];
    if (t != 0 && t != 1) throw ValidationError("tau must be binary");
    theta[report.antichain[i]] = spec.rho * (2.0 * t - 1.0);
  }
  return theta;
}

std::vector<std::vector<std::size_t>> diagonal_cells(std::size_t d, std::size_t n1) {
  if (d == 0 || n1 == 0) throw ArgumentError("d and n1 must be positive");
  std::vector<std::vector<std::size_t>> cells;
  if (n1 < d) return cells;
  std::vector<std::size_t> w(d, 1);
  // Compositions of n1 into d positive parts, lexicographic.
  auto rec = [&](auto&& self, std::size_t j, std::size_t remaining) -> void {
    if (j + 1 == d) {
      w[j] = remaining;
      cells.push_back(w);
      return;
    }
    const std::size_t parts_left = d - j - 1;
    for (std::size_t v = 1; v + parts_left <= remaining; ++v) {
      w[j] = v;
      self(self, j + 1, remaining - v);
    }
  };
  rec(rec, 0, n1);
  return cells;
}

Function assouad_random(std::size_t d, std::size_t n1, double rho, std::vector<int> tau) {
  const auto cells = diagonal_cells(d, n1);
  if (tau.size() != cells.size()) {
    throw ArgumentError("tau has " + std::to_string(tau.size()) + " entries for " +
                        std::to_string(cells.size()) + " diagonal cells");
  }
  if (!(rho >= 0.0 && rho <= 1.0)) throw ArgumentError("rho must lie in [0, 1]");
  for (int t : tau) {
    if (t != 0 && t != 1) throw ArgumentError("tau must be binary");
  }
  std::map<std::vector<std::size_t>, double> cell_value;
  for (std::size_t i = 0; i < cells.size(); ++i) cell_value[cells[i]] = rho * tau[i];

  Function f;
  f.dimension = d;
  f.evaluate = [d, n1, cell_value = std::move(cell_value)](std::span<const double> x) {
    if (x.size() != d) throw ArgumentError("point has wrong dimension");
    std::vector<std::size_t> c(d);
    std::size_t sum = 0;
    bool interior = true;
    for (std::size_t j = 0; j < d; ++j) {
      c[j] = grid_ceil(x[j], n1);
      sum += c[j];
      interior = interior && c[j] >= 1;
    }
    if (sum + 1 <= n1) return 0.0;
    if (sum >= n1 + 1) return 1.0;
    if (!interior) return 0.0;
    return cell_value.at(c);
  };
  return f;
}

SheetDecomposition sheet_decomposition(const Box& box) {
  const std::size_t d = box.lo.size();
  if (d == 0 || box.hi.size() != d) throw ArgumentError("box needs matching nonempty bounds");
  std::vector<std::size_t> side(d);
  for (std::size_t j = 0; j < d; ++j) {
    if (box.hi[j] < box.lo[j]) throw ArgumentError("box bounds are reversed");
    side[j] = box.hi[j] - box.lo[j] + 1;
  }
  std::vector<std::size_t> order(d);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return side[a] > side[b]; });

  SheetDecomposition out;
  out.free_axes.assign(order.begin(), order.begin() + std::min<std::size_t>(2, d));
  std::sort(out.free_axes.begin(), out.free_axes.end());
  std::vector<char> is_free(d, 0);
  for (auto j : out.free_axes) is_free[j] = 1;

  std::vector<std::size_t> t = box.lo;
  for (;;) {
    Box sheet;
    sheet.lo = t;
    sheet.hi = t;
    for (auto j : out.free_axes) {
      sheet.lo[j] = box.lo[j];
      sheet.hi[j] = box.hi[j];
    }
    out.sheets.push_back(std::move(sheet));
    bool done = true;
    for (std::size_t j = d; j-- > 0;) {
      if (is_free[j]) continue;
      if (t[j] < box.hi[j]) {
        ++t[j];
        done = false;
        break;
      }
      t[j] = box.lo[j];
    }
    if (done) break;
  }
  out.count = out.sheets.size();
  return out;
}

SheetDecomposition sheet_decomposition(std::span<const std::size_t> dims) {
  Box box;
  for (auto m : dims) {
    if (m == 0) throw ArgumentError("box dimensions must be positive");
    box.lo.push_back(1);
    box.hi.push_back(m);
  }
  return sheet_decomposition(box);
}

SheetBound k_sheet_bound(const HyperrectPartition& partition, std::size_t d) {
  if (d == 0) throw ArgumentError("d must be positive");
  if (partition.blocks.empty()) throw ArgumentError("partition has no blocks");
  const double exponent = 1.0 - 2.0 / static_cast<double>(d);
  SheetBound bound;
  double n = 0.0;
  for (const auto& box : partition.blocks) {
    if (box.lo.size() != d) throw ArgumentError("block dimension differs from d");
    const auto size = static_cast<double>(box.size());
    n += size;
    bound.block_sum += std::pow(size, exponent);
    bound.sheet_count += sheet_decomposition(box).count;
  }
  const auto k = static_cast<double>(partition.blocks.size());
  bound.jensen = k * std::pow(n / k, exponent);
  return bound;
}

namespace {

struct SheetSearch {
  std::vector<std::vector<std::uint32_t>> candidates_by_cell;
  std::size_t best = 0;

  void run(std::uint32_t uncovered, std::size_t used, std::size_t max_size) {
    if (uncovered == 0) {
      best = std::min(best, used);
      return;
    }
    const auto remaining = static_cast<std::size_t>(std::popcount(uncovered));
    if (used + (remaining + max_size - 1) / max_size >= best) return;
    const auto cell = static_cast<std::size_t>(std::countr_zero(uncovered));
    for (std::uint32_t mask : candidates_by_cell[cell]) {
      if ((mask & uncovered) != mask) continue;
      run(uncovered & ~mask, used + 1, max_size);
    }
  }
};

}  // namespace

std::size_t min_sheet_partition_bruteforce(std::span<const double> theta,
                                           const LatticeSpec& lattice) {
  lattice.validate();
  const std::size_t n = lattice.size();
  if (n > kMaxSheetSearchVertices) {
    throw SizeError("exact sheet partition search is capped at " +
                    std::to_string(kMaxSheetSearchVertices) + " vertices");
  }
  if (theta.size() != n) throw ArgumentError("theta length differs from lattice size");
  const std::size_t d = lattice.dimension();
  const auto stride = strides_of(lattice);

  // Connected constant regions.
  std::vector<std::size_t> region(n, n);
  std::size_t region_count = 0;
  for (std::size_t s = 0; s < n; ++s) {
    if (region[s] != n) continue;
    std::queue<std::size_t> queue;
    queue.push(s);
    region[s] = region_count;
    while (!queue.empty()) {
      const std::size_t v = queue.front();
      queue.pop();
      for (std::size_t j = 0; j < d; ++j) {
        const std::size_t coord = (v / stride[j]) % lattice.side_lengths[j];
        if (coord + 1 < lattice.side_lengths[j]) {
          const std::size_t u = v + stride[j];
          if (region[u] == n && theta[u] == theta[v]) {
            region[u] = region_count;
            queue.push(u);
          }
        }
        if (coord > 0) {
          const std::size_t u = v - stride[j];
          if (region[u] == n && theta[u] == theta[v]) {
            region[u] = region_count;
            queue.push(u);
          }
        }
      }
    }
    ++region_count;
  }

  // Constant boxes with at most two nondegenerate axes, grouped by region.
  std::vector<std::vector<std::uint32_t>> region_boxes(region_count);
  std::vector<std::uint32_t> region_mask(region_count, 0);
  for (std::size_t v = 0; v < n; ++v) region_mask[region[v]] |= std::uint32_t{1} << v;
  for (std::size_t lo_v = 0; lo_v < n; ++lo_v) {
    const auto lo = lattice.tuple_of(lo_v);
    for (std::size_t hi_v = lo_v; hi_v < n; ++hi_v) {
      const auto hi = lattice.tuple_of(hi_v);
      std::size_t free_axes = 0;
      bool valid = true;
      for (std::size_t j = 0; j < d && valid; ++j) {
        if (hi[j] < lo[j]) valid = false;
        free_axes += hi[j] > lo[j];
      }
      if (!valid || free_axes > 2) continue;
      Box box{lo, hi};
      std::uint32_t mask = 0;
      for (std::size_t v = 0; v < n; ++v) {
        if (box.contains(lattice.tuple_of(v))) mask |= std::uint32_t{1} << v;
      }
      const std::size_t r = region[lo_v];
      if ((mask & region_mask[r]) == mask) region_boxes[r].push_back(mask);
    }
  }

  std::size_t total = 0;
  for (std::size_t r = 0; r < region_count; ++r) {
    SheetSearch search;
    search.candidates_by_cell.assign(n, {});
    std::size_t max_size = 1;
    auto& boxes = region_boxes[r];
    std::sort(boxes.begin(), boxes.end(), [](std::uint32_t a, std::uint32_t b) {
      const int pa = std::popcount(a);
      const int pb = std::popcount(b);
      return pa != pb ? pa > pb : a < b;
    });
    for (std::uint32_t mask : boxes) {
      search.candidates_by_cell[static_cast<std::size_t>(std::countr_zero(mask))].push_back(mask);
      max_size = std::max<std::size_t>(max_size, static_cast<std::size_t>(std::popcount(mask)));
    }
    search.best = static_cast<std::size_t>(std::popcount(region_mask[r]));
    search.run(region_mask[r], 0, max_size);
    total += search.best;
  }
  return total;
}

RiemannEnvelopes riemann_envelopes(const Function& f, std::size_t n1) {
  if (n1 == 0) throw ArgumentError("n1 must be positive");
  const std::size_t d = f.dimension;
  if (d == 0 || !f.evaluate) throw ArgumentError("function needs a dimension and an evaluator");
  RiemannEnvelopes out;
  const auto nd = static_cast<double>(n1);

  out.lower.dimension = d;
  out.lower.evaluate = [f, n1, nd](std::span<const double> x) {
    std::vector<double> p(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) p[j] = static_cast<double>(grid_floor(x[j], n1)) / nd;
    return f(p);
  };
  out.upper.dimension = d;
  out.upper.evaluate = [f, n1, nd](std::span<const double> x) {
    std::vector<double> p(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) p[j] = static_cast<double>(grid_ceil(x[j], n1)) / nd;
    return f(p);
  };

  const LatticeSpec cube = LatticeSpec::cube(d, n1);
  const std::size_t n = cube.size();
  std::vector<double> upper_corner(d);
  std::vector<double> lower_corner(d);
  double sum = 0.0;
  for (std::size_t v = 0; v < n; ++v) {
    const auto t = cube.tuple_of(v);
    for (std::size_t j = 0; j < d; ++j) {
      upper_corner[j] = static_cast<double>(t[j]) / nd;
      lower_corner[j] = static_cast<double>(t[j] - 1) / nd;
    }
    const double gap = f(upper_corner) - f(lower_corner);
    sum += gap * gap;
  }
  out.integral = sum / static_cast<double>(n);

  const std::vector<double> zeros(d, 0.0);
  const std::vector<double> ones(d, 1.0);
  out.sup_norm = std::max(std::abs(f(zeros)), std::abs(f(ones)));
  out.bound = 4.0 * static_cast<double>(d) / nd * out.sup_norm * out.sup_norm;
  return out;
}

Function function_of_lattice(std::vector<double> theta, const LatticeSpec& lattice) {
  lattice.validate();
  if (theta.size() != lattice.size()) throw ArgumentError("theta length differs from lattice size");
  Function f;
  f.dimension = lattice.dimension();
  f.evaluate = [theta = std::move(theta), lattice](std::span<const double> x) {
    if (x.size() != lattice.dimension()) throw ArgumentError("point has wrong dimension");
    std::vector<std::size_t> t(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) {
      t[j] = std::clamp<std::size_t>(grid_floor(x[j], lattice.side_lengths[j]), 1,
                                     lattice.side_lengths[j]);
    }
    return theta[lattice.index_of(t)];
  };
  return f;
}

std::vector<double> lattice_of_function(const Function& f, const LatticeSpec& lattice) {
  lattice.validate();
  if (f.dimension != lattice.dimension()) throw ArgumentError("function and lattice dimensions differ");
  const std::size_t n = lattice.size();
  std::vector<double> theta(n);
  std::vector<double> x(lattice.dimension());
  for (std::size_t v = 0; v < n; ++v) {
    const auto t = lattice.tuple_of(v);
    for (std::size_t j = 0; j < t.size(); ++j) {
      x[j] = static_cast<double>(t[j]) / static_cast<double>(lattice.side_lengths[j]);
    }
    theta[v] = f(x);
  }
  return theta;
}

Function random_staircase_function(std::size_t d, std::size_t max_cuts, RandomStream& rng) {
  if (d == 0) throw ArgumentError("d must be positive");
  std::vector<std::vector<double>> thresholds(d);
  LatticeSpec cells;
  for (std::size_t j = 0; j < d; ++j) {
    const std::size_t m = rng.below(max_cuts + 1);
    for (std::size_t i = 0; i < m; ++i) thresholds[j].push_back(rng.uniform());
    std::sort(thresholds[j].begin(), thresholds[j].end());
    cells.side_lengths.push_back(m + 1);
  }
  const std::size_t count = cells.size();
  const auto stride = strides_of(cells);
  std::vector<double> table(count, 0.0);
  // Row-major order visits every lower neighbour first.
  for (std::size_t v = 0; v < count; ++v) {
    double base = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      if ((v / stride[j]) % cells.side_lengths[j] > 0) base = std::max(base, table[v - stride[j]]);
    }
    table[v] = base + rng.uniform();
  }
  const double lo = table.front();
  const double hi = table.back();
  for (double& t : table) t = hi > lo ? 2.0 * (t - lo) / (hi - lo) - 1.0 : 1.0;

  Function f;
  f.dimension = d;
  f.evaluate = [thresholds = std::move(thresholds), cells, table = std::move(table)](
                   std::span<const double> x) {
    std::vector<std::size_t> t(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) {
      const auto& th = thresholds[j];
      t[j] = 1 + static_cast<std::size_t>(std::lower_bound(th.begin(), th.end(), x[j]) - th.begin());
    }
    return table[cells.index_of(t)];
  };
  return f;
}

std::vector<double> packing_vector(std::size_t ell, std::span<const int> bits) {
  if (ell < 1 || ell > 30) throw ArgumentError("ell out of range");
  if (bits.size() != ell * ell) throw ArgumentError("packing codeword needs ell^2 bits");
  const std::size_t n1 = (std::size_t{1} << ell) - 1;
  const double log_n = std::log(static_cast<double>(n1 * n1));
  std::vector<double> theta(n1 * n1);
  for (std::size_t a = 1; a <= n1; ++a) {
    const auto r = static_cast<std::size_t>(std::bit_width(a));
    for (std::size_t b = 1; b <= n1; ++b) {
      const auto s = static_cast<std::size_t>(std::bit_width(b));
      const int bit = bits[(r - 1) * ell + (s - 1)];
      const double scale = std::pow(2.0, static_cast<double>(r + s + (bit ? 1 : 0)));
      theta[(a - 1) * n1 + (b - 1)] = -1.0 / (std::sqrt(scale) * log_n);
    }
  }
  return theta;
}

PackingSet packing_set_2d(std::size_t ell) {
  if (ell < 2) throw ArgumentError("packing needs ell >= 2");
  if (ell > 4) throw SizeError("packing search is capped at ell = 4 (16-bit codewords)");
  PackingSet out;
  out.ell = ell;
  out.n1 = (std::size_t{1} << ell) - 1;
  out.n = out.n1 * out.n1;
  const std::size_t bits = ell * ell;
  out.required_distance = (bits + 3) / 4;

  std::vector<std::uint32_t> code;
  for (std::uint32_t word = 0; word < (std::uint32_t{1} << bits); ++word) {
    bool ok = true;
    for (std::uint32_t c : code) {
      if (static_cast<std::size_t>(std::popcount(word ^ c)) < out.required_distance) {
        ok = false;
        break;
      }
    }
    if (ok) code.push_back(word);
  }

  out.min_hamming = bits;
  for (std::size_t i = 0; i < code.size(); ++i) {
    for (std::size_t k = i + 1; k < code.size(); ++k) {
      out.min_hamming =
          std::min(out.min_hamming, static_cast<std::size_t>(std::popcount(code[i] ^ code[k])));
    }
  }
  // Most significant bit first, so numeric order is lexicographic order.
  for (std::uint32_t c : code) {
    std::vector<int> word(bits);
    for (std::size_t i = 0; i < bits; ++i) word[i] = static_cast<int>((c >> (bits - 1 - i)) & 1U);
    out.vectors.push_back(packing_vector(ell, word));
    out.codewords.push_back(std::move(word));
  }
  const double log_n = std::log(static_cast<double>(out.n));
  const double gap = 1.0 - 1.0 / std::sqrt(2.0);
  out.squared_distance_per_bit = 0.25 * gap * gap / (log_n * log_n);
  out.min_squared_distance = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < out.vectors.size(); ++i) {
    for (std::size_t k = i + 1; k < out.vectors.size(); ++k) {
      double dist = 0.0;
      for (std::size_t v = 0; v < out.n; ++v) {
        const double diff = out.vectors[i][v] - out.vectors[k][v];
        dist += diff * diff;
      }
      out.min_squared_distance = std::min(out.min_squared_distance, dist);
    }
  }
  return out;
}

void write_signal_csv(std::ostream& out, std::span<const double> theta, const LatticeSpec& lattice) {
  lattice.validate();
  if (theta.size() != lattice.size()) throw ArgumentError("theta length differs from lattice size");
  out << "vertex_index";
  for (std::size_t j = 1; j <= lattice.dimension(); ++j) out << ",x_" << j;
  out << ",value\n";
  const auto old_precision = out.precision(17);
  for (std::size_t v = 0; v < theta.size(); ++v) {
    out << v;
    for (auto c : lattice.tuple_of(v)) out << ',' << c;
    out << ',' << theta[v] << '\n';
  }
  out.precision(old_precision);
}

namespace {

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::string part;
  std::istringstream in(text);
  while (std::getline(in, part, sep)) parts.push_back(part);
  if (!text.empty() && text.back() == sep) parts.emplace_back();
  return parts;
}

double parse_double(const std::string& s) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw ArgumentError("not a number: '" + s + "'");
  }
  if (used != s.size()) throw ArgumentError("not a number: '" + s + "'");
  return v;
}

std::size_t parse_count(const std::string& s) {
  const double v = parse_double(s);
  if (v < 0 || v != std::floor(v)) throw ArgumentError("not a count: '" + s + "'");
  return static_cast<std::size_t>(v);
}

}  // namespace

SignalSpec parse_signal(const std::string& text, const LatticeSpec& lattice) {
  lattice.validate();
  const std::size_t d = lattice.dimension();
  const auto parts = split(text, ':');
  if (parts.empty()) throw ArgumentError("empty signal name");
  const std::string& name = parts[0];
  if (name == "zero" && parts.size() == 1) return SignalSpec::constant_value(0.0);
  if (name == "constant" && parts.size() == 2) return SignalSpec::constant_value(parse_double(parts[1]));
  if (name == "linear" && parts.size() == 1) return SignalSpec::linear_mean();
  if (name == "rvar" && parts.size() == 3) {
    std::vector<std::size_t> active;
    for (const auto& s : split(parts[1], ',')) {
      const std::size_t j = parse_count(s);
      if (j < 1 || j > d) throw ArgumentError("rvar coordinates are 1-based and at most d");
      active.push_back(j - 1);
    }
    std::vector<double> levels;
    for (const auto& s : split(parts[2], ',')) levels.push_back(parse_double(s));
    return SignalSpec::r_variable(std::move(active), std::move(levels));
  }
  if (name == "staircase" && parts.size() == 2) {
    const std::size_t k = parse_count(parts[1]);
    if (k == 0) throw ArgumentError("staircase needs at least one block");
    std::vector<std::vector<std::size_t>> cuts(d);
    std::vector<std::vector<double>> steps(d);
    for (std::size_t j = 0; j < d; ++j) {
      const std::size_t m = lattice.side_lengths[j];
      for (std::size_t b = 1; b < k; ++b) {
        const std::size_t c = 1 + (b * m) / k;
        if (c >= 2 && c <= m && (cuts[j].empty() || c > cuts[j].back())) cuts[j].push_back(c);
      }
      const std::size_t blocks = cuts[j].size() + 1;
      for (std::size_t b = 0; b < blocks; ++b) {
        const double h = blocks == 1 ? 0.0 : 2.0 * static_cast<double>(b) / static_cast<double>(blocks - 1) - 1.0;
        steps[j].push_back(h / static_cast<double>(d));
      }
    }
    return SignalSpec::staircase(std::move(cuts), std::move(steps));
  }
  throw ArgumentError("unknown signal '" + text +
                      "' (expected zero, constant:<c>, linear, rvar:<j,..>:<l,..> or staircase:<k>)");
}

}  // namespace isoreg
