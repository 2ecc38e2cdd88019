// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "isoreg/complexity.hpp"
#include "isoreg/cone_solver.hpp"
#include "isoreg/experiments.hpp"
#include "isoreg/order.hpp"
#include "isoreg/random_design.hpp"
#include "isoreg/rng.hpp"
#include "isoreg/signals.hpp"
#include "oracles.hpp"

using namespace isoreg;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* format, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* format, ...) {
  char buf[512];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof buf, format, args);
  va_end(args);
  return buf;
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

MonteCarloOptions mc(std::size_t reps, std::uint64_t seed, std::uint64_t stream = 0) {
  MonteCarloOptions o;
  o.replicates = reps;
  o.seed = seed;
  o.stream_id = stream;
  return o;
}

Outcome solver_oracle_equivalence() {
  std::size_t dags = 0;
  std::size_t rejected = 0;
  double worst = 0.0;
  for (std::uint64_t seed = 1; dags < 250; ++seed) {
    RandomStream rng(seed, 101);
    const std::size_t n = 1 + rng.below(10);
    const Dag dag = oracle::random_dag(n, 0.1 + 0.5 * rng.uniform(), rng);
    const auto y = rng.normals(n);
    const IsotonicProblem problem{dag, y};
    const auto fit = project_dykstra(problem);
    worst = std::max(worst, max_abs_diff(fit.theta_hat, minmax_project_oracle(problem)));
    if (!verify_projection_certificate(problem, fit.theta_hat, 1e-6).accepted()) ++rejected;
    ++dags;
  }
  return {worst <= 1e-6 && rejected == 0,
          fmt("%zu DAGs, max |dykstra - minmax| = %.3g, certificate rejections = %zu", dags, worst,
              rejected)};
}

Outcome pava_dykstra_chains() {
  double worst = 0.0;
  for (std::size_t n : {10U, 100U, 1000U}) {
    const Dag dag = build_lattice(LatticeSpec::cube(1, n));
    for (std::uint64_t r = 0; r < 50; ++r) {
      RandomStream rng(n, r);
      const auto y = rng.normals(n);
      const auto dyk = project_dykstra({dag, y});
      worst = std::max(worst, max_abs_diff(pava_chain(y), dyk.theta_hat));
    }
  }
  return {worst <= 1e-7, fmt("150 draws, max |pava - dykstra| = %.3g (tol 1e-7)", worst)};
}

Outcome chain_statdim_harmonic() {
  bool ok = true;
  std::string detail;
  for (std::size_t n : {2U, 4U, 8U, 16U, 64U}) {
    const auto est = statdim_mc(build_lattice(LatticeSpec::cube(1, n)), mc(2000, 1000 + n));
    const double h = harmonic_sum(n);
    const double z = (est.mean - h) / est.standard_error;
    ok = ok && std::abs(z) <= 3.0;
    detail += fmt("n=%zu: %.4f vs H=%.4f (z=%+.2f); ", n, est.mean, h, z);
  }
  return {ok, detail};
}

Outcome zero_signal_identity() {
  bool ok = true;
  std::string detail;
  for (const auto& [d, n1] : {std::pair<std::size_t, std::size_t>{2, 4}, {3, 3}}) {
    ExperimentConfig c;
    c.d = d;
    c.n_grid = {n1};
    c.signal = "zero";
    c.replicates = 200;
    c.seed = 77;
    const auto row = run_fixed_sweep(c).rows.at(0);
    const auto sd = statdim_mc(build_lattice(LatticeSpec::cube(d, n1)), mc(200, 77));
    const bool same = row.scaled_risk_mean == sd.mean;
    ok = ok && same && row.failures == 0;
    detail += fmt("L_{%zu,%zu}: mean n*risk %.17g, statdim %.17g, %s; ", d, row.n, row.scaled_risk_mean,
                  sd.mean, same ? "identical" : "DIFFERENT");
  }
  return {ok, detail};
}

Outcome width_sandwich() {
  bool ok = true;
  std::size_t checks = 0;
  double worst_width_z = 1e300;
  double worst_add_z = 0.0;
  double worst_upper_z = -1e300;
  for (std::size_t d : {2U, 3U}) {
    for (std::size_t n1 = 2; n1 <= 6; ++n1) {
      const LatticeSpec spec = LatticeSpec::cube(d, n1);
      const Dag dag = build_lattice(spec);
      const std::uint64_t base = 100 * d + n1;

      const auto width = gaussian_width_mc(dag, mc(600, base, 0));
      const auto lower = width_lower_bound_mc(dag, maximum_antichain(dag), mc(600, base, 1000));
      const double wz = (width.mean - lower.target) / width.standard_error;
      worst_width_z = std::min(worst_width_z, wz);
      ok = ok && wz >= -3.0;

      // Disjoint union of sheets against per-sheet estimates on independent streams.
      const auto dec = sheet_decomposition(spec.side_lengths);
      const auto sheets = statdim_mc(sheet_union_dag(spec), mc(600, base, 2000));
      double sum = 0.0;
      double var = sheets.standard_error * sheets.standard_error;
      for (std::size_t s = 0; s < dec.count; ++s) {
        std::vector<std::size_t> dims;
        for (std::size_t j = 0; j < d; ++j) dims.push_back(dec.sheets[s].hi[j] - dec.sheets[s].lo[j] + 1);
        const auto piece = statdim_mc(build_lattice(LatticeSpec{dims}), mc(600, base, 3000 + 1000 * s));
        sum += piece.mean;
        var += piece.standard_error * piece.standard_error;
      }
      const double az = (sheets.mean - sum) / std::sqrt(var);
      worst_add_z = std::max(worst_add_z, std::abs(az));
      ok = ok && std::abs(az) <= 3.0;

      // Upper-bound direction: the full lattice has the smaller cone.
      const auto full = statdim_mc(dag, mc(600, base, 9000));
      const double uz = (full.mean - sum) / std::sqrt(var + full.standard_error * full.standard_error);
      worst_upper_z = std::max(worst_upper_z, uz);
      ok = ok && uz <= 3.0;
      ++checks;
    }
  }
  return {ok, fmt("%zu lattices; min z(width - target) = %+.2f, max |z(additivity)| = %.2f, "
                  "max z(full - sheet sum) = %+.2f",
                  checks, worst_width_z, worst_add_z, worst_upper_z)};
}

Outcome rate_shape_d3() {
  Table1Config c;
  c.d = 3;
  c.sizes = {3, 4, 5, 6, 7, 8};
  c.replicates = 200;
  c.seed = 3;
  const auto t = table1(c);
  std::string detail = fmt("slope %.4f +- %.4f (window [%.4f, %.4f]); statdim:", t.slope.slope,
                           t.slope.slope_stderr, 1.0 / 3 - 0.15, 1.0 / 3 + 0.35);
  for (const auto& row : t.rows) detail += fmt(" n=%zu:%.2f", row.n, row.estimate.mean);
  const bool ok = t.slope.slope >= 1.0 / 3 - 0.15 && t.slope.slope <= 1.0 / 3 + 0.35;
  return {ok, detail};
}

Outcome adaptation_ordering() {
  ExperimentConfig c;
  c.d = 3;
  c.n_grid = {9};
  c.replicates = 100;
  c.seed = 5;
  c.with_statdim = false;
  c.signal = "zero";
  const auto zero = run_fixed_sweep(c).rows.at(0);
  c.signal = "linear";
  const auto linear = run_fixed_sweep(c).rows.at(0);
  const double ratio = linear.risk_mean / zero.risk_mean;
  return {ratio >= 2.0 && zero.failures == 0 && linear.failures == 0,
          fmt("n=729: risk linear %.5f, zero %.5f, ratio %.2f (need >= 2)", linear.risk_mean,
              zero.risk_mean, ratio)};
}

Outcome random_antichain() {
  const std::size_t n = 400;
  const auto stats = antichain_stats(n, DesignSampler::uniform(2), 50, 8);
  const double root = std::sqrt(static_cast<double>(n));
  const std::size_t smallest = *std::min_element(stats.sizes.begin(), stats.sizes.end());
  const bool all = static_cast<double>(smallest) >= root / (2.0 * std::exp(1.0));
  const bool window = stats.mean >= 1.2 * root && stats.mean <= 2.5 * root;
  return {all && window, fmt("50 reps: min %zu (bound %.2f), mean %.2f (window [%.0f, %.0f])", smallest,
                             root / (2.0 * std::exp(1.0)), stats.mean, 1.2 * root, 2.5 * root)};
}

Outcome riemann_envelope_bound() {
  std::size_t trials = 0;
  std::size_t violations = 0;
  double worst_ratio = 0.0;
  for (std::size_t d : {2U, 3U}) {
    for (std::size_t n1 = 2; n1 <= 8; ++n1) {
      RandomStream rng(d * 100 + n1, 55);
      for (int t = 0; t < 100; ++t) {
        const auto f = random_staircase_function(d, 4, rng);
        const auto env = riemann_envelopes(f, n1);
        worst_ratio = std::max(worst_ratio, env.integral / env.bound);
        violations += env.integral > env.bound;
        ++trials;
      }
    }
  }
  return {violations == 0,
          fmt("%zu functions, violations %zu, max integral/bound %.4f", trials, violations, worst_ratio)};
}

Outcome assouad_validity() {
  std::vector<Dag> instances;
  for (const auto& spec : {LatticeSpec{{2, 2}}, LatticeSpec{{4, 4}}, LatticeSpec{{3, 3, 3}},
                           LatticeSpec{{8, 8}}, LatticeSpec{{2, 3, 4}}}) {
    instances.push_back(build_lattice(spec));
  }
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    instances.push_back(build_design_dag(sample_design(DesignSampler::uniform(2), 30, seed)).dag);
  }
  std::size_t families = 0;
  std::size_t pairs = 0;
  std::size_t bad = 0;
  for (const auto& dag : instances) {
    const auto report = maximum_antichain(dag);
    const std::size_t w = report.antichain.size();
    if (w > 8) continue;
    const double rho = default_rho_fixed(dag.size());
    std::vector<std::vector<double>> family;
    for (std::uint32_t mask = 0; mask < (1U << w); ++mask) {
      std::vector<int> tau(w);
      for (std::size_t i = 0; i < w; ++i) tau[i] = static_cast<int>(mask >> i & 1U);
      family.push_back(assouad_fixed(dag, report, {rho, tau}));
      const auto& theta = family.back();
      const bool bounded = std::all_of(theta.begin(), theta.end(), [](double v) { return std::abs(v) <= 1.0; });
      if (!is_isotonic(dag, theta) || !bounded) ++bad;
    }
    // ||θ^τ - θ^τ'||^2 = 4ρ^2 d_H: every coordinate differs by exactly 0 or
    // 2ρ and the differing coordinates are exactly the flipped bits.
    for (std::uint32_t a = 0; a < family.size(); ++a) {
      for (std::uint32_t b = a + 1; b < family.size(); ++b) {
        std::size_t differing = 0;
        double squared = 0.0;
        for (std::size_t v = 0; v < dag.size(); ++v) {
          const double diff = family[a][v] - family[b][v];
          if (diff != 0.0 && std::abs(diff) != 2.0 * rho) ++bad;
          differing += diff != 0.0;
          squared += diff * diff;
        }
        const auto hamming = static_cast<std::size_t>(__builtin_popcount(a ^ b));
        const double law = 4.0 * rho * rho * static_cast<double>(hamming);
        if (differing != hamming || std::abs(squared - law) > 1e-14 * std::max(1.0, law)) ++bad;
        ++pairs;
      }
    }
    ++families;
  }
  return {bad == 0 && families >= 10,
          fmt("%zu antichains (|W| <= 8), %zu pairs, failures %zu", families, pairs, bad)};
}

Outcome packing_sets() {
  bool ok = true;
  std::string detail;
  for (std::size_t ell : {3U, 4U}) {
    const auto pack = packing_set_2d(ell);
    const Dag dag = build_lattice(LatticeSpec::cube(2, pack.n1));
    bool members = true;
    for (const auto& v : pack.vectors) {
      double norm = 0.0;
      for (double x : v) norm += x * x;
      members = members && is_isotonic(dag, v) && norm <= 1.0;
    }
    double min_sq = 1e300;
    for (std::size_t a = 0; a < pack.vectors.size(); ++a) {
      for (std::size_t b = a + 1; b < pack.vectors.size(); ++b) {
        double s = 0.0;
        for (std::size_t i = 0; i < pack.vectors[a].size(); ++i) {
          s += (pack.vectors[a][i] - pack.vectors[b][i]) * (pack.vectors[a][i] - pack.vectors[b][i]);
        }
        min_sq = std::min(min_sq, s);
      }
    }
    const double logn = std::log(static_cast<double>(pack.n));
    const double c = 0.25 * std::pow(1.0 - 1.0 / std::sqrt(2.0), 2.0);
    const double required = (static_cast<double>(ell * ell) / 4.0) / (logn * logn) * c;
    const double size_floor = std::exp(static_cast<double>(ell * ell) / 8.0);
    const bool size_ok = static_cast<double>(pack.codewords.size()) >= size_floor;
    const bool dist_ok = min_sq >= required * (1.0 - 1e-12);
    ok = ok && members && size_ok && dist_ok;
    detail += fmt("ell=%zu: %zu codewords (>= %.2f), min sq dist %.3g (>= %.3g), members %s; ", ell,
                  pack.codewords.size(), size_floor, min_sq, required, members ? "yes" : "NO");
  }
  return {ok, detail};
}

Outcome sup_norm_tail() {
  const std::size_t n = 256;
  const std::size_t reps = 500;
  const double threshold = 4.0 * std::sqrt(std::log(static_cast<double>(n)));
  std::size_t mechanism_failures = 0;
  std::size_t exceed = 0;
  for (std::size_t r = 0; r < reps; ++r) {
    const auto pts = sample_design(DesignSampler::uniform(2), n, 2024, 3 * r);
    RandomStream noise(2024, 3 * r + 1);
    const auto y = noise.normals(n);
    const auto fit = fit_design(pts, y);
    const double max_y = *std::max_element(y.begin(), y.end());
    double max_abs_y = 0.0;
    for (double v : y) max_abs_y = std::max(max_abs_y, std::abs(v));
    if (fit.max_fitted > max_y) ++mechanism_failures;
    // Sup of the extension over a dense grid.
    double sup = 0.0;
    for (int i = 0; i <= 32; ++i) {
      for (int j = 0; j <= 32; ++j) {
        const double x[2] = {i / 32.0, j / 32.0};
        sup = std::max(sup, std::abs(extend_estimator(fit, x)));
      }
    }
    if (sup > max_abs_y) ++mechanism_failures;
    exceed += sup >= threshold;
  }
  const double freq = static_cast<double>(exceed) / reps;
  const double allowed = 2.0 * std::pow(static_cast<double>(n), -7.0) +
                         3.0 * std::sqrt(freq * (1.0 - freq) / static_cast<double>(reps));
  return {mechanism_failures == 0 && freq <= allowed,
          fmt("%zu reps: max fitted > max Y in %zu, exceedance of %.3f: %zu (freq %.4g <= %.3g)", reps,
              mechanism_failures, threshold, exceed, freq, allowed)};
}

Outcome determinism() {
  auto csv = [](const RiskReport& r) {
    std::ostringstream out;
    write_report_csv(out, r);
    return out.str();
  };
  ExperimentConfig fixed;
  fixed.d = 2;
  fixed.n_grid = {4, 6, 8};
  fixed.signal = "staircase:3";
  fixed.replicates = 20;
  fixed.seed = 99;
  ExperimentConfig random = fixed;
  random.design = DesignKind::random;
  random.n_grid = {50, 100};
  random.signal = "linear";
  random.sampler = "checkerboard:1:0.5:1.5";
  random.mc_points = 200;
  bool ok = true;
  std::string detail;
  for (auto* config : {&fixed, &random}) {
    config->threads = 1;
    const auto a = csv(run_sweep(*config));
    const auto b = csv(run_sweep(*config));
    config->threads = 4;
    const auto c = csv(run_sweep(*config));
    const bool same = a == b && b == c;
    ok = ok && same;
    detail += fmt("%s sweep: %zu bytes, %s; ", to_string(config->design), a.size(),
                  same ? "identical across runs and 1/4 threads" : "DIFFERENT");
  }
  return {ok, detail};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {"solver oracle equivalence", solver_oracle_equivalence},
      {"PAVA/Dykstra agreement on chains", pava_dykstra_chains},
      {"chain statistical dimension = harmonic sum", chain_statdim_harmonic},
      {"zero-signal risk identity", zero_signal_identity},
      {"width lower bound and sheet additivity", width_sandwich},
      {"d=3 statistical dimension slope", rate_shape_d3},
      {"adaptation ordering", adaptation_ordering},
      {"random-design antichain", random_antichain},
      {"Riemann envelope bound", riemann_envelope_bound},
      {"Assouad family validity", assouad_validity},
      {"dyadic packing set", packing_sets},
      {"sup-norm tail mechanism", sup_norm_tail},
      {"determinism", determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = criteria[i].run();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failures += !out.pass;
    std::printf("%s %2zu %s [%.1fs]: %s\n", out.pass ? "PASS" : "FAIL", i + 1, criteria[i].name, secs,
                out.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
