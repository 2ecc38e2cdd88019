#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "isoreg/complexity.hpp"
#include "isoreg/cone_solver.hpp"
#include "isoreg/random_design.hpp"
#include "isoreg/signals.hpp"

namespace isoreg {

enum class DesignKind { lattice, random };

const char* to_string(DesignKind kind);
DesignKind parse_design_kind(const std::string& name);

struct ExperimentConfig {
  std::string experiment = "sweep";
  std::size_t d = 2;
  /// Lattice designs: side lengths n_1 of the cubes L_{d, n_1^d}.
  /// Random designs: sample sizes n.
  std::vector<std::size_t> n_grid;
  /// Lattice: zero, constant:<c>, linear, rvar:<j,..>:<l,..>, staircase:<k>.
  /// Random: zero, constant:<c>, linear, assouad:<n1>:<bit> (all τ equal).
  std::string signal = "zero";
  DesignKind design = DesignKind::lattice;
  /// uniform or checkerboard:<level>:<low>:<high>.
  std::string sampler = "uniform";
  /// Perturbation size for assouad signals; <= 0 picks the default.
  double rho = 0.0;
  SolverChoice solver = SolverChoice::automatic;
  double tol = 1e-8;
  std::size_t replicates = 100;
  /// Random designs: Monte Carlo points for the L2(P) risk (0 skips it).
  std::size_t mc_points = 0;
  std::uint64_t seed = 1;
  /// Also estimate the statistical dimension of the design cone from the
  /// same noise draws (free when the signal is zero).
  bool with_statdim = true;
  /// 0 = hardware concurrency. Output does not depend on it.
  unsigned threads = 1;
  std::string output;

  /// Throws ValidationError for an empty or non-increasing grid, fewer than
  /// two replicates, or a non-positive tolerance.
  void validate() const;
};

struct RiskRow {
  std::string experiment;
  std::size_t d = 0;
  std::size_t n = 0;
  /// Successful replicates.
  std::size_t replicates = 0;
  std::uint64_t seed = 0;
  double risk_mean = 0.0;
  double risk_stderr = 0.0;
  double statdim_mean = 0.0;
  double bound_C1 = 0.0;
  /// Log-log slope of risk_mean over the whole sweep (nan if unavailable).
  double slope_fit = 0.0;
  /// Mean over replicates of n times the empirical risk, i.e. of the summed
  /// squared error.
  double scaled_risk_mean = 0.0;
  double l2p_mean = 0.0;
  double l2p_stderr = 0.0;
  std::size_t failures = 0;

  bool operator==(const RiskRow&) const;
};

struct RiskReport {
  ExperimentConfig config;
  std::vector<RiskRow> rows;
};

inline constexpr const char* kReportVersion = "0.1.0";

/// Replicate r draws ε from RandomStream(seed, r), so at zero signal
/// scaled_risk_mean equals statdim_mc with the same seed bit for bit.
RiskReport run_fixed_sweep(const ExperimentConfig& config);

/// Replicate r samples its design from stream 3r, noise from 3r+1 and the
/// L2(P) evaluation points from 3r+2.
RiskReport run_random_sweep(const ExperimentConfig& config);

/// Dispatches on config.design.
RiskReport run_sweep(const ExperimentConfig& config);

/// Random-design regression function parsed from config.signal.
Function parse_function_signal(const std::string& text, std::size_t d, double rho,
                               const DesignSampler& sampler);
DesignSampler parse_sampler(const std::string& text, std::size_t d);

struct RateFit {
  double slope = 0.0;
  double slope_stderr = 0.0;
  double intercept = 0.0;
};

/// OLS of log(risk) on log(n). Needs at least three distinct n and positive
/// risks; throws ArgumentError otherwise.
RateFit fit_rate_exponent(std::span<const double> n, std::span<const double> risk);

struct Table1Config {
  std::size_t d = 1;
  /// d = 1: chain lengths; d >= 2: side lengths n_1.
  std::vector<std::size_t> sizes;
  std::size_t replicates = 200;
  std::uint64_t seed = 1;
  unsigned threads = 1;
};

struct Table1Result {
  /// Metric `statdim`; bound_C1 holds the upper-bound formula at C = 1.
  std::vector<EstimateRow> rows;
  std::vector<double> lower_bound_C1;
  /// Slope of log δ against log n (nan with fewer than three sizes).
  RateFit slope;
};

Table1Result table1(const Table1Config& config);

enum class ReportFormat { csv, json };
ReportFormat parse_report_format(const std::string& name);

void write_report_csv(std::ostream& out, const RiskReport& report);
void write_report_json(std::ostream& out, const RiskReport& report);
RiskReport read_report_json(std::istream& in);

/// Writes the report to `path` (or stdout for "" and "-"). IoError names the
/// path on failure.
void emit_report(const RiskReport& report, ReportFormat format, const std::string& path);

}  // namespace isoreg
