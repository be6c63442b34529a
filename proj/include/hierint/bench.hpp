#pragma once

#include <cstdint>
#include <string>

#include "hierint/rng.hpp"
#include "hierint/solver.hpp"

namespace hierint {

// --- random designs -------------------------------------------------------

enum class DesignKind { Gaussian, Rademacher, UniformScaled };

struct CovarianceSpec {
  enum class Kind { Identity, AR1, Toeplitz };
  Kind kind = Kind::Identity;
  double rho = 0.0;                // AR1 parameter, |rho| < 1
  std::vector<double> first_row;   // Toeplitz: sigma_{jk} = first_row[|j-k|]

  Mat materialize(int p) const;
  // "identity", "ar1:0.5", "toeplitz:1,0.3,0.1" (entries pad with zeros).
  static CovarianceSpec parse(const std::string& text);
  std::string label() const;
};

struct DesignDistribution {
  DesignKind kind = DesignKind::Gaussian;
  CovarianceSpec cov;

  static DesignKind parse_kind(const std::string& text);
  std::string label() const;
};

// n x p matrix of iid unit-variance rows (Gaussian, +/-1, or uniform on
// [-sqrt(3), sqrt(3)]) colored by the covariance square root. Byte-stable for
// a fixed seed. Throws on an indefinite or malformed covariance.
Mat gen_design(int n, int p, const DesignDistribution& dist, std::uint64_t seed);

// --- synthetic truths ------------------------------------------------------

struct TruthDraw {
  Vec beta;            // length p1
  SupportSet support;  // hierarchical by construction
};

// s_main main effects drawn uniformly, s_int interactions drawn uniformly
// among pairs of chosen mains, entries +/- magnitude. magnitude == 0 yields
// the zero vector with empty support.
TruthDraw gen_truth(int p, int s_main, int s_int, double magnitude, std::uint64_t seed);

// --- spectrum of the expanded covariance ------------------------------------

struct EigRange {
  double min_eig = 0.0;
  double max_eig = 0.0;
  bool premise_ok = true;  // smallest eigenvalue of the raw covariance > 1e-10
};

// Eigenvalue range of the sample covariance of expanded rows (mains plus
// products, sample-centered) over n_mc Monte Carlo draws. Requires
// n_mc >= 10 * p1. A (near-)singular raw covariance flips premise_ok but the
// estimate is still returned.
EigRange expanded_cov_eigs(const DesignDistribution& dist, int p, int n_mc, std::uint64_t seed);

// --- the noise correlation event --------------------------------------------

enum class NoiseKind { Gaussian, Rademacher };

// Fraction of trials where |Z^T eps / n|_inf stays below lambda_theory, with a
// fresh design and fresh noise of sub-Gaussian scale noise_psi2 per trial.
double noise_event_rate(int n, int p, const DesignDistribution& dist, double noise_psi2,
                        NoiseKind noise, const TheoryConstants& tc, int trials,
                        std::uint64_t seed);

// Two-sided lower bound (1 - 2 exp(-ck (n delta)^{1/3} + log p1)) * (1 - p1^{-eta0})
// on the event probability, clamped to [0, 1]. The absolute constant ck is
// supplied by the caller; comparisons against Monte Carlo are qualitative.
double noise_event_probability_bound(int n, int p1, double delta, double eta0, double ck);

// --- restricted eigenvalue search -------------------------------------------

enum class REMethod { ExhaustiveSupports, RandomConeDescent };

struct REEstimate {
  double value = 0.0;  // smallest ratio found: an UPPER bound on the constant
  Vec minimizer;
  std::vector<int> support;
  double cone_factor = 0.0;
  int sparsity = 0;
  REMethod method = REMethod::ExhaustiveSupports;
  int descents = 0;  // projected-gradient runs performed
};

// Searches min over |J| <= s and the cone {|a_{J^c}|_1 <= k0 |a_J|_1} of
// |Z a|_2 / (sqrt(n) |a_J|_2) by projected gradient descent. Exhaustive
// enumerates every support (feasible for small p1 and s); the random method
// samples `budget` supports. The result is the smallest ratio found, hence an
// upper bound on the true constant.
REEstimate re_constant(const Mat& z, int s, double k0, REMethod method, int budget,
                       std::uint64_t seed);

// Sample size at which the restricted eigenvalue stays positive with the
// stated probability machinery: eps^{-1} * max of an absolute floor and two
// cubed log terms, with m1 = 16 s (1 + k0)^2. All constants caller-supplied.
double re_sample_bound(int s, double k0, int p1, double eps, double c1, double floor_c1,
                       double ck_tilde);

// l1 error factor D(s) = (upper + lower)^2 s / ((2 lower - 1) m^2); the
// cone-7 specialization 16 s / m^2 corresponds to lower = 1, upper = 3.
double re_rate_factor(int s, double m_hat);
double re_rate_factor_general(int s, double m_hat, const SandwichConstants& c);

// --- linear vs quadratic direction probe -------------------------------------

struct QuadraticProbe {
  Mat w;                 // symmetric, zero diagonal, from the interaction part of u
  double rho_hat = 0.0;  // correlation of x'u1 with x'Wx
  double psi1_hat = 0.0; // sub-exponential norm estimate of the standardized x'Wx
};

// Splits a unit direction u over the expanded columns into its linear and
// quadratic parts and estimates, by Monte Carlo, the correlation between them
// and the sub-exponential norm of the standardized quadratic form.
QuadraticProbe quadratic_form_probe(const Vec& u, const DesignDistribution& dist, int n_mc,
                                    std::uint64_t seed);

// --- Orlicz norm estimates ---------------------------------------------------

enum class PsiKind { Psi1, Psi2 };

// Moment-growth estimator: max over q = 1..qmax of q^{-1} (psi1) or q^{-1/2}
// (psi2) times the q-th absolute moment root. Requires >= 1e4 samples.
double psi_norm_estimate(const std::vector<double>& samples, PsiKind kind, int qmax);

// --- scalar samplers for tail experiments ------------------------------------

struct Sampler1D {
  enum class Kind { Gaussian, Rademacher, UniformScaled, ExpCentered, GaussProduct };
  Kind kind = Kind::Gaussian;
  double scale = 1.0;

  double sample(Rng& rng) const;
  double variance() const;
  // "gaussian", "gaussian:0.5", "rademacher", "uniform", "exp-centered",
  // "gauss-product" (product of two independent standard normals).
  static Sampler1D parse(const std::string& text);
  std::string label() const;
};

// --- concentration of averaged squares ---------------------------------------

struct ConcentrationRow {
  int n = 0;
  double freq = 0.0;   // fraction of trials with |mean of squares - var| > delta
  bool censored = false;  // no exceedances observed; 0.5/trials used for the fit
};

struct ConcentrationReport {
  std::vector<ConcentrationRow> rows;
  double slope = 0.0;  // log-frequency against (n delta)^{1/3}
  double delta = 0.0;
  int trials = 0;
};

ConcentrationReport concentration_squares_check(const Sampler1D& sampler,
                                                const std::vector<int>& n_list, double delta,
                                                int trials, std::uint64_t seed);

// --- rate experiment ----------------------------------------------------------

struct ExperimentConfig {
  DesignDistribution dist;
  std::vector<int> p_list = {10, 20, 40};
  std::vector<int> s_main_list = {2, 3};
  std::vector<int> s_int_list = {1, 2};
  std::vector<int> n_list = {200, 400, 800, 1600};
  std::vector<PenaltySpec> penalties = {PenaltySpec::parse("cap:q=2"),
                                        PenaltySpec::parse("lasso")};
  double lambda_multiplier = 2.0;       // times lambda_theory
  std::optional<double> lambda_fixed;   // overrides the rule when set
  int replications = 20;
  double magnitude = 10.0;
  double noise_sd = 1.0;
  NoiseKind noise = NoiseKind::Gaussian;
  TheoryConstants tc;
  std::uint64_t seed = 1;
  int threads = 0;  // 0: HIERINT_THREADS env, else hardware concurrency
  SolverConfig solver = bench_solver_defaults();

  static SolverConfig bench_solver_defaults();
  void validate() const;
};

struct RateRow {
  std::string penalty;
  int n = 0, p = 0, s = 0, rep = 0;
  double l1_error = 0.0;   // |theta_hat - beta|_1
  double pe_error = 0.0;   // Pe(theta_hat - beta)
  double predicted = 0.0;  // s * sqrt(log(p1)/n)
  std::uint64_t seed = 0;  // per-replication stream seed
  bool converged = true;
};

struct RateSummary {
  std::string penalty;
  double slope = 0.0;      // log mean l1 error against log predicted, across cells
  double slope_se = 0.0;
  double r2 = 0.0;
  int cells = 0;
  int nonconverged = 0;
};

struct RateResult {
  std::vector<RateRow> rows;  // fixed order: cells in grid order, then rep, then penalty
  std::vector<RateSummary> summaries;
};

// Runs the full grid. Replications are independent tasks with derived RNG
// streams; they may execute on a thread pool, and the output is identical
// regardless of scheduling.
RateResult rate_experiment(const ExperimentConfig& cfg);

// --- small shared helper -------------------------------------------------------

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_se = 0.0;
  double r2 = 0.0;
};

LineFit line_fit(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace hierint
