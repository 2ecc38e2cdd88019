#include <algorithm>
#include <cmath>
#include <sstream>

#include <boost/math/distributions/chi_squared.hpp>

#include "doctest.h"
#include "isoreg/errors.hpp"
#include "isoreg/random_design.hpp"
#include "isoreg/rng.hpp"
#include "oracles.hpp"

using namespace isoreg;

namespace {

Point random_point(std::size_t d, RandomStream& rng) {
  Point p(d);
  for (auto& x : p) x = rng.uniform();
  return p;
}

}  // namespace

TEST_SUITE("random_design") {
  TEST_CASE("samplers validate") {
    const auto uni = DesignSampler::uniform(3);
    CHECK_NOTHROW(uni.validate());
    CHECK(uni.m0 == 1.0);
    CHECK(uni.M0 == 1.0);
    CHECK(uni.cell_count() == 1);

    const auto board = DesignSampler::checkerboard(2, 1, 0.5, 1.5);
    CHECK_NOTHROW(board.validate());
    CHECK(board.m0 == 0.5);
    CHECK(board.M0 == 1.5);
    CHECK(board.density_at(Point{0.1, 0.1}) == 0.5);
    CHECK(board.density_at(Point{0.6, 0.1}) == 1.5);
    CHECK(board.cell_mass(0) == doctest::Approx(0.125));

    CHECK_THROWS_AS(DesignSampler::checkerboard(2, 1, 0.5, 1.0), ValidationError);
    DesignSampler bad = DesignSampler::uniform(1);
    bad.density = {0.0};
    CHECK_THROWS_AS(bad.validate(), ValidationError);
    CHECK_THROWS_AS(sample_design(bad, 5, 1), ValidationError);
  }

  TEST_CASE("uniform design passes a chi-square test") {
    for (std::size_t d : {1U, 2U, 3U}) {
      const std::size_t n = 10000;
      const auto pts = sample_design(DesignSampler::uniform(d), n, 42 + d);
      const std::size_t cells = static_cast<std::size_t>(std::pow(4.0, static_cast<double>(d)));
      std::vector<double> counts(cells, 0.0);
      for (const auto& p : pts) {
        std::size_t c = 0;
        for (double x : p) {
          CHECK(x >= 0.0);
          CHECK(x < 1.0);
          c = c * 4 + static_cast<std::size_t>(std::floor(4.0 * x));
        }
        counts[c] += 1.0;
      }
      const double expected = static_cast<double>(n) / static_cast<double>(cells);
      double stat = 0.0;
      for (double c : counts) stat += (c - expected) * (c - expected) / expected;
      const boost::math::chi_squared dist(static_cast<double>(cells - 1));
      CHECK(stat <= boost::math::quantile(dist, 0.999));
    }
  }

  TEST_CASE("checkerboard cell frequencies") {
    const auto board = DesignSampler::checkerboard(2, 2, 0.5, 1.5);
    const std::size_t n = 20000;
    const auto pts = sample_design(board, n, 7);
    std::vector<double> counts(board.cell_count(), 0.0);
    for (const auto& p : pts) counts[board.cell_of(p)] += 1.0;
    for (std::size_t c = 0; c < board.cell_count(); ++c) {
      const double p = board.cell_mass(c);
      const double se = std::sqrt(p * (1.0 - p) / static_cast<double>(n));
      CHECK(std::abs(counts[c] / static_cast<double>(n) - p) <= 4.0 * se);
    }
  }

  TEST_CASE("sampling is deterministic per seed and stream") {
    const auto s = DesignSampler::checkerboard(3, 1, 0.25, 1.75);
    CHECK(sample_design(s, 50, 3, 1) == sample_design(s, 50, 3, 1));
    CHECK(sample_design(s, 50, 3, 1) != sample_design(s, 50, 3, 2));
    CHECK_THROWS_AS(sample_design(s, 0, 3), ArgumentError);
  }

  TEST_CASE("extension rule") {
    RandomStream rng(12, 0);
    for (std::size_t d : {1U, 2U, 3U}) {
      const auto pts = sample_design(DesignSampler::uniform(d), 60, 100 + d);
      const auto y = rng.normals(pts.size());
      const auto fit = fit_design(pts, y);
      const auto design = build_design_dag(pts);

      // Fitted values are isotonic on the design order.
      for (std::size_t i = 0; i < pts.size(); ++i) {
        for (std::size_t k = 0; k < pts.size(); ++k) {
          if (oracle::leq_point(pts[i], pts[k])) CHECK(fit.values[i] <= fit.values[k] + 1e-8);
        }
      }
      for (std::size_t i = 0; i < pts.size(); ++i) CHECK(extend_estimator(fit, pts[i]) == fit.values[i]);

      const double lowest = *std::min_element(fit.values.begin(), fit.values.end());
      CHECK(extend_estimator(fit, Point(d, 0.0)) == lowest);
      CHECK(extend_estimator(fit, Point(d, 1.0)) == fit.max_fitted);
      CHECK(fit.max_fitted == *std::max_element(fit.values.begin(), fit.values.end()));

      for (int t = 0; t < 10000; ++t) {
        const Point x = random_point(d, rng);
        Point z(x);
        for (auto& v : z) v += (1.0 - v) * rng.uniform();
        CHECK(extend_estimator(fit, x) <= extend_estimator(fit, z));
      }
    }
  }

  TEST_CASE("duplicate points are fitted with weights") {
    const std::vector<Point> pts{{0.5}, {0.2}, {0.5}};
    const std::vector<double> y{0.0, 3.0, 0.0};
    const auto fit = fit_design(pts, y);
    // One heavy vertex of weight 2 at value 0 above a unit vertex at 3: pooled mean 1.
    CHECK(fit.values[0] == doctest::Approx(1.0));
    CHECK(fit.values[1] == doctest::Approx(1.0));
    CHECK(fit.values[2] == doctest::Approx(1.0));
    CHECK_THROWS_AS(fit_design(pts, std::vector<double>{1.0}), ArgumentError);
  }

  TEST_CASE("empirical risks") {
    const std::vector<double> f0{0.1, -0.3, 0.7};
    CHECK(empirical_risk(f0, f0) == 0.0);
    std::vector<double> shifted(f0);
    for (auto& v : shifted) v += 0.5;
    CHECK(empirical_risk(shifted, f0) == doctest::Approx(0.25));
    CHECK(empirical_sse(shifted, f0) == doctest::Approx(0.75));
    CHECK_THROWS_AS(empirical_risk(f0, std::vector<double>{1.0}), ArgumentError);
  }

  TEST_CASE("population risk by Monte Carlo") {
    const auto uni = DesignSampler::uniform(2);
    const Function zero{2, [](std::span<const double>) { return 0.0; }};

    FittedFunction flat;
    flat.points = {Point{0.0, 0.0}};
    flat.values = {0.0};
    flat.max_fitted = 0.0;
    CHECK(l2p_risk_mc(flat, zero, uni, 100, 1).mean == 0.0);

    const Function minus{2, [](std::span<const double>) { return -0.4; }};
    const auto c = l2p_risk_mc(flat, minus, uni, 1000, 2);
    CHECK(c.mean == doctest::Approx(0.16));

    // Fitted values x_1 on a fine grid with f0 = 0: the extension is the
    // next grid value above x_1, so the risk tends to the integral 1/3.
    FittedFunction ramp;
    const std::size_t m = 400;
    for (std::size_t i = 1; i <= m; ++i) {
      const double x = static_cast<double>(i) / m;
      ramp.points.push_back(Point{x, 1.0});
      ramp.values.push_back(x);
    }
    ramp.max_fitted = 1.0;
    const auto r = l2p_risk_mc(ramp, zero, uni, 20000, 3);
    CHECK(std::abs(r.mean - 1.0 / 3.0) <= 3.0 * r.standard_error + 1.0 / m);

    // Piecewise constant on the sampler's cells: compare with the cellwise sum.
    const auto board = DesignSampler::checkerboard(2, 1, 0.5, 1.5);
    const Function step{2, [](std::span<const double> x) { return x[0] >= 0.5 ? 1.0 : 0.0; }};
    const auto s = l2p_risk_mc(flat, step, board, 20000, 4);
    const double exact = board.cell_mass(2) + board.cell_mass(3);
    CHECK(std::abs(s.mean - exact) <= 3.0 * s.standard_error);
    CHECK_THROWS_AS(l2p_risk_mc(flat, zero, uni, 1, 5), ArgumentError);
  }

  TEST_CASE("antichains of random designs") {
    const auto one = antichain_stats(1, DesignSampler::uniform(2), 3, 1);
    for (auto s : one.sizes) CHECK(s == 1);
    CHECK(one.fraction_meeting_bound == 1.0);

    const auto stats = antichain_stats(400, DesignSampler::uniform(2), 20, 9);
    CHECK(stats.bound == doctest::Approx(20.0 / (2.0 * std::exp(1.0))));
    CHECK(stats.fraction_meeting_bound == 1.0);
    CHECK(stats.mean > 20.0);
    CHECK(stats.mean < 60.0);

    std::vector<Point> diagonal;
    for (int i = 0; i < 10; ++i) diagonal.push_back(Point{i / 10.0, i / 10.0});
    CHECK(maximum_antichain(build_design_dag(diagonal).dag).antichain.size() == 1);
    CHECK(longest_chain_length(diagonal) == 10);

    CHECK(antichain_stats(50, DesignSampler::uniform(2), 4, 2, 1).sizes ==
          antichain_stats(50, DesignSampler::uniform(2), 4, 2, 3).sizes);
  }

  TEST_CASE("chain tail") {
    const auto uni = DesignSampler::uniform(2);
    const auto k1 = chain_tail_check(20, 1, uni, 10, 1);
    CHECK(k1.bound >= 1.0);
    CHECK(k1.frequency == 1.0);

    const auto tail = chain_tail_check(100, 30, uni, 200, 2);
    CHECK(tail.bound < 1e-6);
    CHECK(tail.frequency == 0.0);

    const auto full = chain_tail_check(10, 10, uni, 0, 3);
    // binom(n, n) = 1, so the bound is (n!)^{-d} M0^n.
    CHECK(full.log_bound == doctest::Approx(-2.0 * std::lgamma(11.0)));
    CHECK(full.reps == 0);
    CHECK_THROWS_AS(chain_tail_check(5, 6, uni, 0, 1), ArgumentError);

    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      const auto pts = sample_design(DesignSampler::uniform(3), 25, seed);
      CHECK(longest_chain_length(pts) == oracle::longest_chain_dp(build_design_dag(pts).dag));
    }
  }

  TEST_CASE("design CSV") {
    std::ostringstream out;
    write_design_csv(out, std::vector<Point>{{0.5, 0.25}}, std::vector<double>{-1.5});
    CHECK(out.str() == "index,x_1,x_2,y\n0,0.5,0.25,-1.5\n");
  }
}
