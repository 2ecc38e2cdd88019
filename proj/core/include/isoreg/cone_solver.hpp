#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "isoreg/order.hpp"

namespace isoreg {

/// Weighted isotonic least-squares problem: minimise sum_v w_v (y_v - θ_v)^2
/// over θ in the monotone cone of `dag`. Non-owning view.
struct IsotonicProblem {
  const Dag& dag;
  std::span<const double> y;
  /// Empty means unit weights.
  std::span<const double> weights = {};

  /// Throws ArgumentError on length mismatch or non-positive weights.
  void validate() const;
  double weight(std::size_t v) const { return weights.empty() ? 1.0 : weights[v]; }
};

struct ProjectionResult {
  std::vector<double> theta_hat;
  std::vector<double> residual;
  std::size_t iterations = 0;
  double max_violation = 0.0;
  double inner_product_gap = 0.0;
  /// Edge multipliers maintained by the Dykstra solver (empty for others).
  std::vector<double> multipliers;
};

/// Fills residual, max_violation and inner_product_gap from theta_hat.
void fill_diagnostics(const IsotonicProblem& problem, ProjectionResult& result);

class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, ProjectionResult best)
      : std::runtime_error(what), best_(std::move(best)) {}
  const ProjectionResult& best() const { return best_; }

 private:
  ProjectionResult best_;
};

/// Exact weighted isotonic fit on a total order (pool adjacent violators).
std::vector<double> pava_chain(std::span<const double> y, std::span<const double> weights = {});

struct DykstraOptions {
  double tol = 1e-8;
  std::size_t max_sweeps = 100000;
  /// First sweep at which an exact finish is attempted (0 disables it).
  /// Later attempts are spaced geometrically.
  std::size_t polish_start = 8;
};

/// Dykstra's cyclic projection onto the half-spaces {θ_u <= θ_v}, one per
/// cover edge, swept in topological order of the source vertex.
///
/// For half-spaces the correction terms are scalar multiples of e_u - e_v,
/// so the iteration is tracked through one multiplier per edge; at
/// convergence these are the optimal dual variables. Stops when feasibility
/// <= tol, |<y - θ, θ>_w| <= tol * ||y||_w^2 and the sweep-to-sweep change in
/// θ is <= tol. Throws ConvergenceError carrying the last iterate otherwise.
///
/// Cyclic projection identifies which vertices pool together long before the
/// iterates settle numerically, so every few sweeps the solver also tries an
/// exact finish: vertices joined by positive multipliers are pooled at their
/// weighted means, and the candidate is accepted only when it is feasible and
/// a max-flow routes the weighted residual through within-pool edges with
/// nonnegative flow. Those flows replace the multipliers in the result.
ProjectionResult project_dykstra(const IsotonicProblem& problem, DykstraOptions options = {});

/// θ_i = min over lower sets L ∋ i of max over upper sets U ∋ i of the
/// weighted mean of y on L ∩ U. Exponential; throws SizeError above
/// UpperLowerSets::kMaxVertices vertices.
std::vector<double> minmax_project_oracle(const IsotonicProblem& problem);

struct DualCertificate {
  std::vector<double> edge_multipliers;
  double reconstruction_error = 0.0;
};

enum class CertificateCondition { feasibility, orthogonality, decomposition, slackness };

const char* to_string(CertificateCondition condition);

struct CertificateRejection {
  CertificateCondition condition;
  /// Size of the failure in the units of the violated test.
  double amount = 0.0;
  std::string detail;
};

struct CertificateOutcome {
  std::optional<DualCertificate> certificate;
  std::optional<CertificateRejection> rejection;
  bool accepted() const { return certificate.has_value(); }
};

/// Checks that theta_hat is the projection of y: (i) isotonic within tol,
/// (ii) |<y - θ, θ>_w| <= tol * ||y||_w^2, (iii) w ⊙ (y - θ) = Σ_e λ_e (e_u -
/// e_v) with λ >= 0 up to tol * ||y||_w (λ from an active-set NNLS over the
/// edge generators), (iv) λ_e > tol implies |θ_u - θ_v| <= tol.
CertificateOutcome verify_projection_certificate(const IsotonicProblem& problem,
                                                 std::span<const double> theta_hat,
                                                 double tol);

enum class SolverChoice { automatic, pava, dykstra, oracle };

SolverChoice parse_solver_choice(const std::string& name);
const char* to_string(SolverChoice choice);

struct FitOptions {
  SolverChoice solver = SolverChoice::automatic;
  double tol = 1e-8;
  std::size_t max_sweeps = 100000;
  std::size_t polish_start = 8;
  /// Run verify_projection_certificate on the result and throw
  /// ValidationError if it is rejected.
  bool certify = false;
};

/// Least-squares isotonic fit. `automatic` uses PAVA on chains and Dykstra
/// otherwise; `pava` on a non-chain DAG is an ArgumentError.
ProjectionResult lse_fit(const Dag& dag, std::span<const double> y, FitOptions options = {},
                         std::span<const double> weights = {});

}  // namespace isoreg
