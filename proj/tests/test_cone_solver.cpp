#include <cmath>
#include <numeric>

#include "doctest.h"
#include "isoreg/cone_solver.hpp"
#include "isoreg/errors.hpp"
#include "isoreg/rng.hpp"
#include "oracles.hpp"

using namespace isoreg;

namespace {

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

Dag chain(std::size_t n) { return build_lattice(LatticeSpec::cube(1, n)); }

}  // namespace

TEST_SUITE("cone_solver") {
  TEST_CASE("worked chain examples") {
    CHECK(pava_chain(std::vector<double>{3, 1, 2}) == std::vector<double>{2, 2, 2});
    CHECK(pava_chain(std::vector<double>{1, 3, 2}) == std::vector<double>{1, 2.5, 2.5});
    CHECK(pava_chain(std::vector<double>{1, 2, 3}) == std::vector<double>{1, 2, 3});
    CHECK(pava_chain(std::vector<double>{2, 1}) == std::vector<double>{1.5, 1.5});
    const auto weighted = pava_chain(std::vector<double>{2, 0}, std::vector<double>{3, 1});
    CHECK(weighted[0] == doctest::Approx(1.5));
    CHECK(weighted[1] == doctest::Approx(1.5));
  }

  TEST_CASE("worked square examples") {
    const Dag square = build_lattice(LatticeSpec::cube(2, 2));
    const std::vector<double> y{0, 1, 1, 0.5};
    const auto fit = project_dykstra({square, y});
    const std::vector<double> expected{0, 5.0 / 6, 5.0 / 6, 5.0 / 6};
    CHECK(max_abs_diff(fit.theta_hat, expected) <= 1e-8);

    const std::vector<double> flat{1, 1, 1, 1};
    CHECK(max_abs_diff(project_dykstra({square, flat}).theta_hat, flat) <= 1e-12);
  }

  TEST_CASE("lse_fit dispatch") {
    const std::vector<double> y{3, 1, 2};
    CHECK(lse_fit(chain(3), y).theta_hat == std::vector<double>{2, 2, 2});
    const Dag square = build_lattice(LatticeSpec::cube(2, 2));
    const std::vector<double> y4{0, 1, 1, 0.5};
    CHECK_THROWS_AS(lse_fit(square, y4, FitOptions{.solver = SolverChoice::pava}), ArgumentError);
    const auto oracle_fit = lse_fit(square, y4, FitOptions{.solver = SolverChoice::oracle});
    CHECK(oracle_fit.theta_hat[1] == doctest::Approx(5.0 / 6));
    CHECK_THROWS_AS(lse_fit(square, std::vector<double>{1, 2}), ArgumentError);
    CHECK_THROWS_AS(lse_fit(square, y4, {}, std::vector<double>{1, 1, 0, 1}), ArgumentError);
    CHECK(parse_solver_choice("dykstra") == SolverChoice::dykstra);
    CHECK_THROWS_AS(parse_solver_choice("simplex"), ArgumentError);
  }

  TEST_CASE("PAVA agrees with enumeration on random chains") {
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
      RandomStream rng(seed, 1);
      const std::size_t n = 1 + seed % 10;
      auto y = rng.normals(n);
      std::vector<double> w(n);
      for (auto& x : w) x = 0.5 + rng.uniform();
      const Dag dag = chain(n);
      CHECK(max_abs_diff(pava_chain(y), oracle::enumerate_projection(dag, y)) <= 1e-10);
      CHECK(max_abs_diff(pava_chain(y, w), oracle::enumerate_projection(dag, y, w)) <= 1e-10);
    }
  }

  TEST_CASE("Dykstra and min-max agree with enumeration on random DAGs") {
    for (std::uint64_t seed = 1; seed <= 60; ++seed) {
      RandomStream rng(seed, 2);
      const std::size_t n = 2 + seed % 8;
      Dag dag = oracle::random_dag(n, 0.35, rng);
      while (dag.cover_edges().size() > 14) dag = oracle::random_dag(n, 0.2, rng);
      const auto y = rng.normals(n);
      std::vector<double> w(n);
      for (auto& x : w) x = 0.25 + 2.0 * rng.uniform();
      const auto truth = oracle::enumerate_projection(dag, y, w);
      const IsotonicProblem problem{dag, y, w};
      CHECK(max_abs_diff(project_dykstra(problem, {.tol = 1e-10}).theta_hat, truth) <= 1e-7);
      CHECK(max_abs_diff(minmax_project_oracle(problem), truth) <= 1e-10);
    }
  }

  TEST_CASE("Dykstra agrees with the min-max oracle on small lattices") {
    for (const auto& spec : {LatticeSpec{{2, 2}}, LatticeSpec{{2, 3}}, LatticeSpec{{3, 3}},
                             LatticeSpec{{2, 2, 2}}, LatticeSpec{{2, 2, 3}}}) {
      const Dag dag = build_lattice(spec);
      for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        RandomStream rng(seed, 3);
        const auto y = rng.normals(dag.size());
        const IsotonicProblem problem{dag, y};
        CHECK(max_abs_diff(project_dykstra(problem).theta_hat, minmax_project_oracle(problem)) <= 1e-7);
      }
    }
  }

  TEST_CASE("projection properties") {
    const Dag dag = build_lattice(LatticeSpec::cube(3, 4));
    for (std::uint64_t seed = 1; seed <= 8; ++seed) {
      RandomStream rng(seed, 4);
      const auto y = rng.normals(dag.size());
      const auto fit = lse_fit(dag, y);
      const auto& theta = fit.theta_hat;
      CHECK(is_isotonic(dag, theta, 1e-8));
      std::vector<double> r(y.size());
      for (std::size_t i = 0; i < y.size(); ++i) r[i] = y[i] - theta[i];
      CHECK(std::abs(dot(r, theta)) <= 1e-8 * dot(y, y) + 1e-12);

      // Idempotent.
      CHECK(max_abs_diff(lse_fit(dag, theta).theta_hat, theta) <= 1e-8);

      // Commutes with adding a constant and with positive scaling.
      std::vector<double> shifted(y), scaled(y);
      for (auto& v : shifted) v += 2.5;
      for (auto& v : scaled) v *= 3.0;
      const auto fs = lse_fit(dag, shifted).theta_hat;
      const auto fc = lse_fit(dag, scaled).theta_hat;
      for (std::size_t i = 0; i < y.size(); ++i) {
        CHECK(fs[i] == doctest::Approx(theta[i] + 2.5).epsilon(1e-7));
        CHECK(fc[i] == doctest::Approx(3.0 * theta[i]).epsilon(1e-7));
      }

      // Nonexpansive and obtuse-angle inequality against another fit.
      const auto z = rng.normals(dag.size());
      const auto tz = lse_fit(dag, z).theta_hat;
      std::vector<double> dy(y.size()), dt(y.size());
      for (std::size_t i = 0; i < y.size(); ++i) {
        dy[i] = y[i] - z[i];
        dt[i] = theta[i] - tz[i];
      }
      CHECK(dot(dt, dt) <= dot(dy, dy) + 1e-9);
      double obtuse = 0.0;
      for (std::size_t i = 0; i < y.size(); ++i) obtuse += (y[i] - theta[i]) * (tz[i] - theta[i]);
      CHECK(obtuse <= 1e-8);
    }
  }

  TEST_CASE("isotonic input is a fixed point and monotone in the data") {
    const Dag dag = build_lattice(LatticeSpec{{3, 4}});
    std::vector<double> iso(dag.size());
    for (std::size_t v = 0; v < dag.size(); ++v) {
      const auto& c = dag.coordinates()[v];
      iso[v] = c[0] + 0.5 * c[1];
    }
    CHECK(max_abs_diff(lse_fit(dag, iso).theta_hat, iso) <= 1e-10);

    RandomStream rng(9, 9);
    const auto y = rng.normals(dag.size());
    auto larger = y;
    for (auto& v : larger) v += rng.uniform();
    const auto a = lse_fit(dag, y).theta_hat;
    const auto b = lse_fit(dag, larger).theta_hat;
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] <= b[i] + 1e-8);
  }

  TEST_CASE("Dykstra multipliers reconstruct the residual") {
    const Dag dag = build_lattice(LatticeSpec{{4, 3}});
    RandomStream rng(5, 0);
    const auto y = rng.normals(dag.size());
    const auto fit = project_dykstra({dag, y});
    REQUIRE(fit.multipliers.size() == dag.cover_edges().size());
    std::vector<double> rebuilt(dag.size(), 0.0);
    for (std::size_t e = 0; e < dag.cover_edges().size(); ++e) {
      CHECK(fit.multipliers[e] >= -1e-12);
      rebuilt[dag.cover_edges()[e].from] += fit.multipliers[e];
      rebuilt[dag.cover_edges()[e].to] -= fit.multipliers[e];
    }
    for (std::size_t v = 0; v < dag.size(); ++v) CHECK(rebuilt[v] == doctest::Approx(y[v] - fit.theta_hat[v]).epsilon(1e-6));
  }

  TEST_CASE("convergence failure carries the last iterate") {
    const Dag dag = build_lattice(LatticeSpec::cube(2, 6));
    RandomStream rng(1, 0);
    const auto y = rng.normals(dag.size());
    try {
      (void)project_dykstra({dag, y}, {.tol = 1e-14, .max_sweeps = 2, .polish_start = 0});
      FAIL("expected ConvergenceError");
    } catch (const ConvergenceError& e) {
      CHECK(e.best().theta_hat.size() == dag.size());
      CHECK(e.best().iterations == 2);
    }
  }

  TEST_CASE("certificate accepts projections and rejects perturbations") {
    const Dag square = build_lattice(LatticeSpec::cube(2, 2));
    const std::vector<double> y{0, 1, 1, 0.5};
    const std::vector<double> theta{0, 5.0 / 6, 5.0 / 6, 5.0 / 6};
    const IsotonicProblem problem{square, y};
    const auto ok = verify_projection_certificate(problem, theta, 1e-9);
    REQUIRE(ok.accepted());
    CHECK(ok.certificate->reconstruction_error <= 1e-9);

    std::vector<double> lifted(theta);
    for (auto& v : lifted) v += 0.1;
    const auto shifted = verify_projection_certificate(problem, lifted, 1e-9);
    REQUIRE_FALSE(shifted.accepted());
    CHECK(shifted.rejection->condition == CertificateCondition::orthogonality);

    // The residual (0, 1/6, 1/6, -1/3) flows into the top vertex.
    double total = 0.0;
    for (double l : ok.certificate->edge_multipliers) total += l;
    CHECK(total == doctest::Approx(1.0 / 3));
    for (std::size_t e = 0; e < square.cover_edges().size(); ++e) {
      const double expected = square.cover_edges()[e].to == 3 ? 1.0 / 6 : 0.0;
      CHECK(ok.certificate->edge_multipliers[e] == doctest::Approx(expected));
    }

    const auto infeasible = verify_projection_certificate(problem, std::vector<double>{0, 1, 1, 0.5}, 1e-9);
    REQUIRE_FALSE(infeasible.accepted());
    CHECK(infeasible.rejection->condition == CertificateCondition::feasibility);

    // Feasible and orthogonal, but the residual is not in the polar cone.
    const std::vector<double> y2{1, 0};
    const auto bad = verify_projection_certificate({chain(2), y2}, std::vector<double>{0, 0}, 1e-9);
    REQUIRE_FALSE(bad.accepted());
    CHECK(bad.rejection->condition == CertificateCondition::decomposition);

    const std::vector<double> y3{0, 1};
    const auto off = verify_projection_certificate({chain(2), y3}, std::vector<double>{0.25, 0.75}, 1e-9);
    CHECK_FALSE(off.accepted());

    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      RandomStream rng(seed, 6);
      const Dag dag = build_lattice(LatticeSpec{{3, 3}});
      const auto yy = rng.normals(dag.size());
      const auto fit = lse_fit(dag, yy, {.tol = 1e-10});
      CHECK(verify_projection_certificate({dag, yy}, fit.theta_hat, 1e-7).accepted());
      auto perturbed = fit.theta_hat;
      for (auto& v : perturbed) v *= 1.05;
      if (std::abs(dot(perturbed, perturbed)) > 1e-6) {
        CHECK_FALSE(verify_projection_certificate({dag, yy}, perturbed, 1e-7).accepted());
      }
    }
  }

  TEST_CASE("certify option throws on rejection only") {
    const Dag dag = build_lattice(LatticeSpec{{3, 2}});
    RandomStream rng(3, 3);
    const auto y = rng.normals(dag.size());
    CHECK_NOTHROW(lse_fit(dag, y, {.certify = true}));
  }

  TEST_CASE("min-max oracle size cap") {
    const Dag big = chain(13);
    const std::vector<double> y(13, 0.0);
    CHECK_THROWS_AS(minmax_project_oracle({big, y}), SizeError);
  }
}
