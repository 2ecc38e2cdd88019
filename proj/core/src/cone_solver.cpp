#include "isoreg/cone_solver.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

#include "isoreg/errors.hpp"

namespace isoreg {

void IsotonicProblem::validate() const {
  if (y.size() != dag.size()) throw ArgumentError("y length does not match DAG size");
  if (!weights.empty()) {
    if (weights.size() != dag.size()) throw ArgumentError("weights length does not match DAG size");
    for (double w : weights) {
      if (!(w > 0.0) || !std::isfinite(w)) throw ArgumentError("weights must be positive");
    }
  }
}

namespace {

double weighted_dot(const IsotonicProblem& p, std::span<const double> a,
                    std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += p.weight(i) * a[i] * b[i];
  return s;
}

}  // namespace

void fill_diagnostics(const IsotonicProblem& problem, ProjectionResult& result) {
  const std::size_t n = problem.y.size();
  result.residual.resize(n);
  for (std::size_t i = 0; i < n; ++i) result.residual[i] = problem.y[i] - result.theta_hat[i];
  result.max_violation = max_violation(problem.dag, result.theta_hat);
  result.inner_product_gap = std::abs(weighted_dot(problem, result.residual, result.theta_hat));
}

// ------------------------------------------------------------------------ PAVA

std::vector<double> pava_chain(std::span<const double> y, std::span<const double> weights) {
  if (y.empty()) throw ArgumentError("pava_chain: empty input");
  if (!weights.empty() && weights.size() != y.size()) {
    throw ArgumentError("pava_chain: weights length mismatch");
  }
  struct Block {
    double mean;
    double weight;
    std::size_t length;
  };
  std::vector<Block> stack;
  stack.reserve(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double w = weights.empty() ? 1.0 : weights[i];
    if (!(w > 0.0)) throw ArgumentError("pava_chain: weights must be positive");
    Block b{y[i], w, 1};
    while (!stack.empty() && stack.back().mean > b.mean) {
      const Block top = stack.back();
      stack.pop_back();
      const double total = top.weight + b.weight;
      b.mean = (top.mean * top.weight + b.mean * b.weight) / total;
      b.weight = total;
      b.length += top.length;
    }
    stack.push_back(b);
  }
  std::vector<double> fit;
  fit.reserve(y.size());
  for (const Block& b : stack) fit.insert(fit.end(), b.length, b.mean);
  return fit;
}

// --------------------------------------------------------------------- Dykstra

namespace {

struct DisjointSets {
  std::vector<std::size_t> parent;
  explicit DisjointSets(std::size_t n) : parent(n) {
    for (std::size_t i = 0; i < n; ++i) parent[i] = i;
  }
  std::size_t find(std::size_t v) {
    while (parent[v] != v) v = parent[v] = parent[parent[v]];
    return v;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

/// Dinic max-flow with real capacities; used to decide whether a vertex
/// imbalance can be routed along directed edges with nonnegative flows.
class FlowNetwork {
 public:
  explicit FlowNetwork(std::size_t nodes) : head_(nodes, kNone), level_(nodes), cursor_(nodes) {}

  std::size_t add_edge(std::size_t from, std::size_t to, double capacity) {
    arcs_.push_back({to, head_[from], capacity});
    head_[from] = arcs_.size() - 1;
    arcs_.push_back({from, head_[to], 0.0});
    head_[to] = arcs_.size() - 1;
    return arcs_.size() - 2;
  }

  double max_flow(std::size_t source, std::size_t sink, double eps) {
    double total = 0.0;
    while (build_levels(source, sink, eps)) {
      for (std::size_t v = 0; v < head_.size(); ++v) cursor_[v] = head_[v];
      for (;;) {
        const double pushed = augment(source, sink, std::numeric_limits<double>::infinity(), eps);
        if (pushed <= eps) break;
        total += pushed;
      }
    }
    return total;
  }

  /// Flow currently carried by the forward arc returned from add_edge.
  double flow_on(std::size_t arc) const { return arcs_[arc ^ 1].capacity; }

 private:
  static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  struct Arc {
    std::size_t to;
    std::size_t next;
    double capacity;
  };

  bool build_levels(std::size_t source, std::size_t sink, double eps) {
    std::fill(level_.begin(), level_.end(), kNone);
    std::vector<std::size_t> queue{source};
    level_[source] = 0;
    for (std::size_t i = 0; i < queue.size(); ++i) {
      const std::size_t v = queue[i];
      for (std::size_t a = head_[v]; a != kNone; a = arcs_[a].next) {
        if (arcs_[a].capacity > eps && level_[arcs_[a].to] == kNone) {
          level_[arcs_[a].to] = level_[v] + 1;
          queue.push_back(arcs_[a].to);
        }
      }
    }
    return level_[sink] != kNone;
  }

  double augment(std::size_t v, std::size_t sink, double limit, double eps) {
    if (v == sink) return limit;
    for (std::size_t& a = cursor_[v]; a != kNone; a = arcs_[a].next) {
      Arc& arc = arcs_[a];
      if (arc.capacity <= eps || level_[arc.to] != level_[v] + 1) continue;
      const double pushed = augment(arc.to, sink, std::min(limit, arc.capacity), eps);
      if (pushed > eps) {
        arc.capacity -= pushed;
        arcs_[a ^ 1].capacity += pushed;
        return pushed;
      }
    }
    return 0.0;
  }

  std::vector<std::size_t> head_;
  std::vector<std::size_t> level_;
  std::vector<std::size_t> cursor_;
  std::vector<Arc> arcs_;
};

/// Exact finish: pool the vertices joined by positive multipliers, set each
/// pool to its weighted mean and accept only if the result is feasible and
/// the weighted residual routes through within-pool edges with nonnegative
/// flow (the KKT conditions). On success writes θ and the flows into `out`.
bool polish_from_multipliers(const IsotonicProblem& problem, std::span<const double> lambda,
                             double tol, double y_norm, ProjectionResult& out) {
  const Dag& dag = problem.dag;
  const auto& edges = dag.cover_edges();
  const std::size_t n = dag.size();
  DisjointSets pools(n);
  for (std::size_t e = 0; e < edges.size(); ++e) {
    if (lambda[e] > 0.0) pools.unite(edges[e].from, edges[e].to);
  }
  const double feasibility_tol = std::min(tol, 1e-12 * std::max(1.0, y_norm));
  std::vector<double> sum_w(n), sum_wy(n), theta(n);
  // Pool means; merge pools across violated edges until the means are
  // feasible. Any pooling is safe here because acceptance is decided by the
  // flow test below.
  for (;;) {
    std::fill(sum_w.begin(), sum_w.end(), 0.0);
    std::fill(sum_wy.begin(), sum_wy.end(), 0.0);
    for (std::size_t v = 0; v < n; ++v) {
      const std::size_t root = pools.find(v);
      sum_w[root] += problem.weight(v);
      sum_wy[root] += problem.weight(v) * problem.y[v];
    }
    for (std::size_t v = 0; v < n; ++v) {
      const std::size_t root = pools.find(v);
      theta[v] = sum_wy[root] / sum_w[root];
    }
    bool merged = false;
    for (const Edge& e : edges) {
      if (theta[e.from] > theta[e.to] + feasibility_tol) {
        pools.unite(e.from, e.to);
        merged = true;
      }
    }
    if (!merged) break;
  }

  const std::size_t source = n, sink = n + 1;
  FlowNetwork network(n + 2);
  double supply = 0.0;
  for (std::size_t v = 0; v < n; ++v) {
    const double r = problem.weight(v) * (problem.y[v] - theta[v]);
    if (r > 0.0) {
      network.add_edge(source, v, r);
      supply += r;
    } else if (r < 0.0) {
      network.add_edge(v, sink, -r);
    }
  }
  std::vector<std::size_t> arc_of_edge(edges.size(), std::numeric_limits<std::size_t>::max());
  for (std::size_t e = 0; e < edges.size(); ++e) {
    if (pools.find(edges[e].from) == pools.find(edges[e].to)) {
      arc_of_edge[e] =
          network.add_edge(edges[e].from, edges[e].to, std::numeric_limits<double>::infinity());
    }
  }
  const double eps = 1e-15 * std::max(1.0, y_norm);
  const double routed = network.max_flow(source, sink, eps);
  if (supply - routed > tol * std::max(1.0, y_norm)) return false;

  out.theta_hat = std::move(theta);
  out.multipliers.assign(edges.size(), 0.0);
  for (std::size_t e = 0; e < edges.size(); ++e) {
    if (arc_of_edge[e] != std::numeric_limits<std::size_t>::max()) {
      out.multipliers[e] = network.flow_on(arc_of_edge[e]);
    }
  }
  return true;
}

}  // namespace

ProjectionResult project_dykstra(const IsotonicProblem& problem, DykstraOptions options) {
  problem.validate();
  if (!(options.tol > 0.0)) throw ArgumentError("project_dykstra: tol must be positive");
  const Dag& dag = problem.dag;
  const auto& edges = dag.cover_edges();
  const std::size_t n = dag.size();

  ProjectionResult result;
  result.theta_hat.assign(problem.y.begin(), problem.y.end());
  result.multipliers.assign(edges.size(), 0.0);
  if (max_violation(dag, result.theta_hat) <= 0.0) {
    fill_diagnostics(problem, result);
    return result;
  }

  std::vector<double> inv_w(n);
  for (std::size_t v = 0; v < n; ++v) inv_w[v] = 1.0 / problem.weight(v);
  std::vector<double> edge_scale(edges.size());
  for (std::size_t e = 0; e < edges.size(); ++e) {
    edge_scale[e] = 1.0 / (inv_w[edges[e].from] + inv_w[edges[e].to]);
  }
  const double y_norm2 = weighted_dot(problem, problem.y, problem.y);
  const double y_norm = std::sqrt(y_norm2);

  std::vector<double>& theta = result.theta_hat;
  std::vector<double>& lambda = result.multipliers;
  std::vector<double> previous(theta);
  std::size_t next_polish = options.polish_start;
  for (std::size_t sweep = 1; sweep <= options.max_sweeps; ++sweep) {
    for (std::size_t e = 0; e < edges.size(); ++e) {
      const std::size_t u = edges[e].from, v = edges[e].to;
      // Restoring the previous correction and projecting onto the half-space
      // collapses to a clipped update of the edge multiplier.
      const double updated = std::max(0.0, lambda[e] + (theta[u] - theta[v]) * edge_scale[e]);
      const double delta = updated - lambda[e];
      if (delta != 0.0) {
        theta[u] -= delta * inv_w[u];
        theta[v] += delta * inv_w[v];
        lambda[e] = updated;
      }
    }
    result.iterations = sweep;

    double change = 0.0;
    for (std::size_t v = 0; v < n; ++v) {
      change = std::max(change, std::abs(theta[v] - previous[v]));
    }
    previous = theta;

    if (options.polish_start > 0 && sweep >= next_polish) {
      next_polish = sweep + std::max<std::size_t>(options.polish_start, sweep / 4);
      ProjectionResult polished;
      if (polish_from_multipliers(problem, lambda, options.tol, y_norm, polished)) {
        polished.iterations = sweep;
        fill_diagnostics(problem, polished);
        if (polished.max_violation <= options.tol &&
            polished.inner_product_gap <= options.tol * y_norm2) {
          return polished;
        }
      }
    }

    if (change > options.tol) continue;
    fill_diagnostics(problem, result);
    if (result.max_violation <= options.tol &&
        result.inner_product_gap <= options.tol * y_norm2) {
      return result;
    }
  }
  fill_diagnostics(problem, result);
  throw ConvergenceError("project_dykstra: no convergence after " +
                             std::to_string(options.max_sweeps) + " sweeps (violation " +
                             std::to_string(result.max_violation) + ", gap " +
                             std::to_string(result.inner_product_gap) + ")",
                         result);
}

// --------------------------------------------------------------- min-max oracle

std::vector<double> minmax_project_oracle(const IsotonicProblem& problem) {
  problem.validate();
  const std::size_t n = problem.dag.size();
  const UpperLowerSets sets = enumerate_upper_lower_sets(problem.dag);

  // Weighted sums over every subset, built incrementally from the lowest bit.
  const std::size_t subsets = std::size_t{1} << n;
  std::vector<double> sum_wy(subsets, 0.0), sum_w(subsets, 0.0);
  for (std::size_t mask = 1; mask < subsets; ++mask) {
    const std::size_t low = static_cast<std::size_t>(std::countr_zero(mask));
    const std::size_t rest = mask & (mask - 1);
    sum_wy[mask] = sum_wy[rest] + problem.weight(low) * problem.y[low];
    sum_w[mask] = sum_w[rest] + problem.weight(low);
  }
  auto average = [&](std::uint32_t mask) {
    return mask == 0 ? 0.0 : sum_wy[mask] / sum_w[mask];
  };

  std::vector<double> theta(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint32_t bit = std::uint32_t{1} << i;
    double best = std::numeric_limits<double>::infinity();
    for (std::uint32_t lower : sets.lower) {
      if (!(lower & bit)) continue;
      double inner = -std::numeric_limits<double>::infinity();
      for (std::uint32_t upper : sets.upper) {
        if (upper & bit) inner = std::max(inner, average(lower & upper));
      }
      best = std::min(best, inner);
    }
    theta[i] = best;
  }
  return theta;
}

// ------------------------------------------------------------------ certificate

const char* to_string(CertificateCondition condition) {
  switch (condition) {
    case CertificateCondition::feasibility: return "feasibility";
    case CertificateCondition::orthogonality: return "orthogonality";
    case CertificateCondition::decomposition: return "decomposition";
    case CertificateCondition::slackness: return "complementary_slackness";
  }
  return "unknown";
}

namespace {

/// Lawson-Hanson active-set NNLS: min ||A x - b|| subject to x >= 0.
Eigen::VectorXd nnls_active_set(const Eigen::MatrixXd& a, const Eigen::VectorXd& b) {
  const Eigen::Index m = a.cols();
  Eigen::VectorXd x = Eigen::VectorXd::Zero(m);
  std::vector<char> passive(static_cast<std::size_t>(m), 0);
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff() * b.cwiseAbs().maxCoeff());
  const double gradient_tol = 1e-12 * scale * static_cast<double>(std::max<Eigen::Index>(m, 1));
  const Eigen::Index max_outer = 3 * m + 10;

  auto solve_passive = [&](Eigen::VectorXd& z) {
    std::vector<Eigen::Index> cols;
    for (Eigen::Index j = 0; j < m; ++j) {
      if (passive[static_cast<std::size_t>(j)]) cols.push_back(j);
    }
    z = Eigen::VectorXd::Zero(m);
    if (cols.empty()) return;
    Eigen::MatrixXd sub(a.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t k = 0; k < cols.size(); ++k) {
      sub.col(static_cast<Eigen::Index>(k)) = a.col(cols[k]);
    }
    const Eigen::VectorXd sol = sub.colPivHouseholderQr().solve(b);
    for (std::size_t k = 0; k < cols.size(); ++k) z[cols[k]] = sol[static_cast<Eigen::Index>(k)];
  };

  for (Eigen::Index outer = 0; outer < max_outer; ++outer) {
    const Eigen::VectorXd gradient = a.transpose() * (b - a * x);
    Eigen::Index entering = -1;
    double best = gradient_tol;
    for (Eigen::Index j = 0; j < m; ++j) {
      if (!passive[static_cast<std::size_t>(j)] && gradient[j] > best) {
        best = gradient[j];
        entering = j;
      }
    }
    if (entering < 0) break;
    passive[static_cast<std::size_t>(entering)] = 1;

    Eigen::VectorXd z;
    for (Eigen::Index inner = 0; inner <= m; ++inner) {
      solve_passive(z);
      bool feasible = true;
      for (Eigen::Index j = 0; j < m; ++j) {
        if (passive[static_cast<std::size_t>(j)] && z[j] <= 0.0) feasible = false;
      }
      if (feasible) break;
      double alpha = 1.0;
      for (Eigen::Index j = 0; j < m; ++j) {
        if (passive[static_cast<std::size_t>(j)] && z[j] <= 0.0) {
          alpha = std::min(alpha, x[j] / (x[j] - z[j]));
        }
      }
      x += alpha * (z - x);
      for (Eigen::Index j = 0; j < m; ++j) {
        if (passive[static_cast<std::size_t>(j)] && x[j] <= 1e-15) {
          passive[static_cast<std::size_t>(j)] = 0;
          x[j] = 0.0;
        }
      }
    }
    x = z.cwiseMax(0.0);
  }
  return x;
}

}  // namespace

CertificateOutcome verify_projection_certificate(const IsotonicProblem& problem,
                                                 std::span<const double> theta_hat,
                                                 double tol) {
  problem.validate();
  if (theta_hat.size() != problem.dag.size()) {
    throw ArgumentError("theta_hat length does not match DAG size");
  }
  const std::size_t n = problem.dag.size();
  const auto& edges = problem.dag.cover_edges();
  CertificateOutcome outcome;
  auto reject = [&](CertificateCondition c, double amount, std::string detail) {
    outcome.rejection = CertificateRejection{c, amount, std::move(detail)};
    return outcome;
  };

  const double violation = max_violation(problem.dag, theta_hat);
  if (violation > tol) {
    return reject(CertificateCondition::feasibility, violation,
                  "largest edge violation exceeds tolerance");
  }

  std::vector<double> residual(n);
  for (std::size_t i = 0; i < n; ++i) residual[i] = problem.y[i] - theta_hat[i];
  const double y_norm2 = weighted_dot(problem, problem.y, problem.y);
  const double gap = std::abs(weighted_dot(problem, residual, theta_hat));
  if (gap > tol * y_norm2) {
    return reject(CertificateCondition::orthogonality, gap,
                  "weighted residual is not orthogonal to theta_hat");
  }

  Eigen::MatrixXd generators = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n),
                                                     static_cast<Eigen::Index>(edges.size()));
  for (std::size_t e = 0; e < edges.size(); ++e) {
    generators(static_cast<Eigen::Index>(edges[e].from), static_cast<Eigen::Index>(e)) = 1.0;
    generators(static_cast<Eigen::Index>(edges[e].to), static_cast<Eigen::Index>(e)) = -1.0;
  }
  Eigen::VectorXd target(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    target[static_cast<Eigen::Index>(i)] = problem.weight(i) * residual[i];
  }
  const Eigen::VectorXd lambda =
      edges.empty() ? Eigen::VectorXd() : nnls_active_set(generators, target);
  const Eigen::VectorXd mismatch =
      edges.empty() ? Eigen::VectorXd(target) : Eigen::VectorXd(target - generators * lambda);
  // Weighted norm of W^{-1} mismatch, i.e. the mismatch measured in θ units.
  double err2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double m = mismatch[static_cast<Eigen::Index>(i)];
    err2 += m * m / problem.weight(i);
  }
  DualCertificate certificate;
  certificate.reconstruction_error = std::sqrt(err2);
  certificate.edge_multipliers.assign(lambda.data(), lambda.data() + lambda.size());
  if (certificate.reconstruction_error > tol * std::sqrt(y_norm2)) {
    return reject(CertificateCondition::decomposition, certificate.reconstruction_error,
                  "residual is not a nonnegative combination of edge generators");
  }

  for (std::size_t e = 0; e < edges.size(); ++e) {
    const double slack = std::abs(theta_hat[edges[e].from] - theta_hat[edges[e].to]);
    if (certificate.edge_multipliers[e] > tol && slack > tol) {
      return reject(CertificateCondition::slackness, slack,
                    "positive multiplier on edge " + std::to_string(e) + " with slack");
    }
  }
  outcome.certificate = std::move(certificate);
  return outcome;
}

// -------------------------------------------------------------------- dispatch

SolverChoice parse_solver_choice(const std::string& name) {
  if (name == "auto") return SolverChoice::automatic;
  if (name == "pava") return SolverChoice::pava;
  if (name == "dykstra") return SolverChoice::dykstra;
  if (name == "oracle") return SolverChoice::oracle;
  throw ArgumentError("unknown solver `" + name + "` (expected auto|pava|dykstra|oracle)");
}

const char* to_string(SolverChoice choice) {
  switch (choice) {
    case SolverChoice::automatic: return "auto";
    case SolverChoice::pava: return "pava";
    case SolverChoice::dykstra: return "dykstra";
    case SolverChoice::oracle: return "oracle";
  }
  return "unknown";
}

ProjectionResult lse_fit(const Dag& dag, std::span<const double> y, FitOptions options,
                         std::span<const double> weights) {
  const IsotonicProblem problem{dag, y, weights};
  problem.validate();
  SolverChoice solver = options.solver;
  if (solver == SolverChoice::automatic) {
    solver = dag.is_chain() ? SolverChoice::pava : SolverChoice::dykstra;
  }

  ProjectionResult result;
  switch (solver) {
    case SolverChoice::pava: {
      if (!dag.is_chain()) throw ArgumentError("pava solver requires a chain");
      const auto& order = dag.topological_order();
      std::vector<double> ys(y.size()), ws;
      for (std::size_t i = 0; i < order.size(); ++i) ys[i] = y[order[i]];
      if (!weights.empty()) {
        ws.resize(y.size());
        for (std::size_t i = 0; i < order.size(); ++i) ws[i] = weights[order[i]];
      }
      const auto fit = pava_chain(ys, ws);
      result.theta_hat.resize(y.size());
      for (std::size_t i = 0; i < order.size(); ++i) result.theta_hat[order[i]] = fit[i];
      fill_diagnostics(problem, result);
      break;
    }
    case SolverChoice::dykstra:
      result = project_dykstra(problem, {options.tol, options.max_sweeps, options.polish_start});
      break;
    case SolverChoice::oracle:
      result.theta_hat = minmax_project_oracle(problem);
      fill_diagnostics(problem, result);
      break;
    case SolverChoice::automatic:
      break;
  }

  if (options.certify) {
    const auto outcome = verify_projection_certificate(problem, result.theta_hat,
                                                       std::max(options.tol, 1e-12));
    if (!outcome.accepted()) {
      throw ValidationError(std::string("projection certificate rejected: ") +
                            to_string(outcome.rejection->condition) + " (" +
                            outcome.rejection->detail + ")");
    }
  }
  return result;
}

}  // namespace isoreg
