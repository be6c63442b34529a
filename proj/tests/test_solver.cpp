#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "hierint/bench.hpp"
#include "hierint/solver.hpp"
#include "oracles.hpp"

using namespace hierint;

namespace {

Mat random_design(int n, int p, Rng& rng) {
  Mat x(n, p);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < p; ++j) x(i, j) = rng.normal();
  return x;
}

SolverConfig tight() {
  SolverConfig cfg;
  cfg.primal_tol = 1e-10;
  cfg.dual_tol = 1e-10;
  cfg.max_iterations = 30000;
  cfg.trace_objective = false;
  return cfg;
}

}  // namespace

TEST_CASE("penalty level formula") {
  TheoryConstants tc;  // psi scales 1, delta 0.5, eta0 1, abs_const 1
  tc.delta = 0.0;
  // sqrt(2) * sqrt(log(10) / 100), frozen from independent arithmetic
  CHECK(lambda_theory(100, 10, tc) == doctest::Approx(0.21459660262893474).epsilon(1e-15));

  tc.eta0 = 0.0;
  CHECK(lambda_theory(100, 10, tc) ==
        doctest::Approx(std::sqrt(std::log(10.0) / 100.0)).epsilon(1e-15));
  // doubling n scales the level by 1/sqrt(2)
  CHECK(lambda_theory(200, 10, tc) * std::sqrt(2.0) ==
        doctest::Approx(lambda_theory(100, 10, tc)).epsilon(1e-12));
  // each scale constant enters multiplicatively
  tc.noise_psi2 = 2.0;
  CHECK(lambda_theory(100, 10, tc) ==
        doctest::Approx(2.0 * std::sqrt(std::log(10.0) / 100.0)).epsilon(1e-12));
}

TEST_CASE("theory constants are validated") {
  TheoryConstants tc;
  CHECK_NOTHROW(tc.validate());
  tc.delta = 1.5;
  CHECK_THROWS_AS(tc.validate(), DomainError);
  tc = TheoryConstants{};
  tc.delta = -0.1;
  CHECK_THROWS_AS(tc.validate(), DomainError);
  tc = TheoryConstants{};
  tc.eta0 = -1.0;
  CHECK_THROWS_AS(tc.validate(), DomainError);
  tc = TheoryConstants{};
  tc.abs_const = 0.0;
  CHECK_THROWS_AS(tc.validate(), DomainError);
  tc = TheoryConstants{};
  tc.noise_psi2 = -1.0;
  CHECK_THROWS_AS(tc.validate(), DomainError);
}

TEST_CASE("objective at hand-worked points") {
  InteractionIndex idx(2);
  Mat z = Mat::Identity(3, 3);
  Vec y(3);
  y << 1, 2, 3;
  Vec zero = Vec::Zero(3);
  auto lasso = PenaltySpec::parse("lasso");
  CHECK(objective_value(z, y, zero, 0.7, lasso, idx) ==
        doctest::Approx(14.0 / 6.0).epsilon(1e-15));

  Vec theta(3);
  theta << 1, 0, 0;
  CHECK(objective_value(z, y, theta, 0.5, lasso, idx) ==
        doctest::Approx(13.0 / 6.0 + 0.5).epsilon(1e-15));

  // the frozen group-penalty value rides on top of the quadratic part
  theta << 3, 4, 5;
  Vec y0 = Vec::Zero(3);
  auto cap = PenaltySpec::parse("cap:q=2");
  CHECK(objective_value(z, y0, theta, 1.0, cap, idx) ==
        doctest::Approx(50.0 / 6.0 + 17.234076132278147).epsilon(1e-14));
}

TEST_CASE("orthogonal design reduces to soft thresholding") {
  InteractionIndex idx(2);
  Mat z = std::sqrt(3.0) * Mat::Identity(3, 3);
  Vec y(3);
  y << 0.9, -0.3, 0.6;
  y *= std::sqrt(3.0);
  auto res = fit(z, y, idx, PenaltySpec::parse("lasso"), 0.5, tight());
  REQUIRE(res.converged);
  CHECK(res.theta[0] == doctest::Approx(0.4).epsilon(1e-7));
  CHECK(std::abs(res.theta[1]) <= 1e-7);
  CHECK(res.theta[2] == doctest::Approx(0.1).epsilon(1e-7));
  CHECK(res.lambda == 0.5);
}

TEST_CASE("penalty level above the gradient bound yields zero") {
  Rng rng(404);
  Mat x = random_design(40, 4, rng);
  auto design = expand_design(x, true);
  Vec y(40);
  for (int i = 0; i < 40; ++i) y[i] = rng.normal();
  double lmax = (design.values.transpose() * y / 40.0).cwiseAbs().maxCoeff();
  auto res = fit(design, y, PenaltySpec::parse("lasso"), 1.05 * lmax, tight());
  REQUIRE(res.converged);
  CHECK(res.theta.cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("noiseless problems are solved to the interpolant") {
  Rng rng(90210);
  Mat x = random_design(60, 5, rng);
  auto design = expand_design(x, true);
  InteractionIndex idx = design.index();
  Vec beta = Vec::Zero(idx.p1());
  beta[0] = 1.5;
  beta[2] = -2.0;
  beta[idx.pair_to_column(0, 2)] = 1.0;
  Vec y = design.values * beta;
  Vec ols = oracle::least_squares(design.values, y);
  for (const char* label : {"lasso", "cap:q=2"}) {
    auto res = fit(design, y, PenaltySpec::parse(label), 1e-8, tight());
    REQUIRE(res.converged);
    CHECK((res.theta - beta).cwiseAbs().maxCoeff() <= 1e-4);
    CHECK((res.theta - ols).cwiseAbs().maxCoeff() <= 1e-4);
  }
}

TEST_CASE("agrees with coordinate descent on the l1 path") {
  Rng rng(1234);
  const double lambdas[3] = {0.05, 0.1, 0.2};
  for (int trial = 0; trial < 20; ++trial) {
    Mat x = random_design(50, 5, rng);
    auto design = expand_design(x, true);
    InteractionIndex idx = design.index();
    Vec beta = Vec::Zero(idx.p1());
    beta[1] = 1.5;
    beta[3] = -1.5;
    beta[idx.pair_to_column(1, 3)] = 1.0;
    Vec y = design.values * beta;
    for (int i = 0; i < y.size(); ++i) y[i] += 0.5 * rng.normal();
    double lambda = lambdas[trial % 3];

    auto res = fit(design, y, PenaltySpec::parse("lasso"), lambda, tight());
    REQUIRE(res.converged);
    Vec cd = oracle::lasso_cd(design.values, y, lambda);
    double obj_cd = oracle::lasso_objective(design.values, y, cd, lambda);
    CHECK(res.objective <= obj_cd + 1e-6 * (1.0 + obj_cd));
    CHECK(res.objective >= obj_cd - 1e-6 * (1.0 + obj_cd));
    CHECK((res.theta - cd).cwiseAbs().maxCoeff() <= 1e-4);
  }
}

TEST_CASE("converged points beat random perturbations for every family") {
  Rng rng(777);
  for (const char* label :
       {"lasso", "cap:q=2", "bien", "pairwise:q=2", "block:q=2,d0=2", "nested:q=2"}) {
    auto spec = PenaltySpec::parse(label);
    Mat x = random_design(30, 4, rng);
    auto design = expand_design(x, true);
    InteractionIndex idx = design.index();
    Vec beta = Vec::Zero(idx.p1());
    beta[0] = 2.0;
    beta[1] = -1.0;
    beta[idx.pair_to_column(0, 1)] = 0.5;
    Vec y = design.values * beta;
    for (int i = 0; i < y.size(); ++i) y[i] += 0.3 * rng.normal();

    auto res = fit(design, y, spec, 0.1, tight());
    REQUIRE(res.converged);
    auto objective = [&](const Vec& t) {
      return objective_value(design.values, y, t, 0.1, spec, idx);
    };
    CHECK(oracle::perturbation_optimal(objective, res.theta, 2000, 0.05, 1e-7, rng));
  }
}

TEST_CASE("objective trace is finite and ends at the reported optimum") {
  Rng rng(31);
  Mat x = random_design(40, 4, rng);
  auto design = expand_design(x, true);
  Vec y(40);
  for (int i = 0; i < 40; ++i) y[i] = rng.normal() + x(i, 0);
  SolverConfig cfg = tight();
  cfg.trace_objective = true;
  auto res = fit(design, y, PenaltySpec::parse("cap:q=2"), 0.1, cfg);
  REQUIRE(res.converged);
  REQUIRE(static_cast<int>(res.objective_trace.size()) == res.iterations);
  for (double v : res.objective_trace) CHECK(std::isfinite(v));
  CHECK(res.objective_trace.back() ==
        doctest::Approx(res.objective).epsilon(1e-9));
  // every iterate is a feasible point of the true objective, so none may land
  // materially below the converged value
  double lo = *std::min_element(res.objective_trace.begin(), res.objective_trace.end());
  CHECK(lo >= res.objective - 1e-5 * (1.0 + std::abs(res.objective)));
  CHECK(res.objective_trace.front() >= res.objective_trace.back() - 1e-12);
}

TEST_CASE("solution scales with the problem") {
  Rng rng(55);
  Mat x = random_design(40, 4, rng);
  auto design = expand_design(x, true);
  Vec y(40);
  for (int i = 0; i < 40; ++i) y[i] = rng.normal() + 2.0 * x(i, 1);
  auto spec = PenaltySpec::parse("cap:q=2");
  auto base = fit(design, y, spec, 0.1, tight());
  auto scaled = fit(design, Vec(3.0 * y), spec, 0.3, tight());
  REQUIRE(base.converged);
  REQUIRE(scaled.converged);
  double rel = (scaled.theta - 3.0 * base.theta).cwiseAbs().maxCoeff() /
               (1.0 + scaled.theta.cwiseAbs().maxCoeff());
  CHECK(rel <= 1e-8);
}

TEST_CASE("rho adaptation changes the path, not the optimum") {
  Rng rng(56);
  Mat x = random_design(40, 3, rng);
  auto design = expand_design(x, true);
  Vec y(40);
  for (int i = 0; i < 40; ++i) y[i] = rng.normal() + x(i, 2);
  auto spec = PenaltySpec::parse("nested:q=2");
  SolverConfig fixed = tight();
  fixed.adapt_rho = false;
  fixed.max_iterations = 100000;
  auto a = fit(design, y, spec, 0.1, tight());
  auto b = fit(design, y, spec, 0.1, fixed);
  REQUIRE(a.converged);
  REQUIRE(b.converged);
  CHECK(std::abs(a.objective - b.objective) <= 1e-8 * (1.0 + std::abs(a.objective)));
  CHECK((a.theta - b.theta).cwiseAbs().maxCoeff() <= 1e-5);
}

TEST_CASE("support extraction recovers a strong planted signal") {
  Rng rng(606);
  Mat x = random_design(200, 5, rng);
  auto design = expand_design(x, true);
  InteractionIndex idx = design.index();
  Vec beta = Vec::Zero(idx.p1());
  beta[1] = 10.0;
  beta[3] = -10.0;
  beta[idx.pair_to_column(1, 3)] = 10.0;
  Vec y = design.values * beta;
  for (int i = 0; i < y.size(); ++i) y[i] += 0.5 * rng.normal();
  SolverConfig cfg = tight();
  cfg.support_threshold = 0.5;
  auto res = fit(design, y, PenaltySpec::parse("cap:q=2"), 0.2, cfg);
  REQUIRE(res.converged);
  SupportSet truth;
  truth.main = {1, 3};
  truth.pairs = {{1, 3}};
  CHECK(res.support == truth);
  CHECK(res.support_threshold_used == 0.5);
}

TEST_CASE("single-point path equals a cold fit") {
  Rng rng(57);
  Mat x = random_design(40, 4, rng);
  auto design = expand_design(x, true);
  InteractionIndex idx = design.index();
  Vec y(40);
  for (int i = 0; i < 40; ++i) y[i] = rng.normal() + x(i, 0);
  auto spec = PenaltySpec::parse("cap:q=2");
  auto direct = fit(design.values, y, idx, spec, 0.15, tight());
  auto path = lambda_path(design.values, y, idx, spec, {0.15}, tight());
  REQUIRE(path.size() == 1);
  CHECK((path[0].theta - direct.theta).cwiseAbs().maxCoeff() == 0.0);
  CHECK(path[0].objective == direct.objective);
}

TEST_CASE("path warm starts keep every point optimal") {
  Rng rng(58);
  Mat x = random_design(50, 4, rng);
  auto design = expand_design(x, true);
  InteractionIndex idx = design.index();
  Vec beta = Vec::Zero(idx.p1());
  beta[0] = 2.0;
  beta[2] = 1.0;
  Vec y = design.values * beta;
  for (int i = 0; i < y.size(); ++i) y[i] += 0.4 * rng.normal();
  auto spec = PenaltySpec::parse("lasso");
  std::vector<double> grid = {0.4, 0.2, 0.1, 0.05};
  auto path = lambda_path(design.values, y, idx, spec, grid, tight());
  REQUIRE(path.size() == grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    REQUIRE(path[i].converged);
    CHECK(path[i].lambda == grid[i]);
    Vec cd = oracle::lasso_cd(design.values, y, grid[i]);
    double obj_cd = oracle::lasso_objective(design.values, y, cd, grid[i]);
    CHECK(std::abs(path[i].objective - obj_cd) <= 1e-6 * (1.0 + obj_cd));
  }
}

TEST_CASE("default grid spans the gradient bound downward") {
  Rng rng(59);
  Mat x = random_design(30, 3, rng);
  auto design = expand_design(x, true);
  Vec y(30);
  for (int i = 0; i < 30; ++i) y[i] = rng.normal();
  auto grid = default_lambda_grid(design.values, y, 10, 1e-3);
  REQUIRE(grid.size() == 10);
  double lmax = (design.values.transpose() * y / 30.0).cwiseAbs().maxCoeff();
  CHECK(grid.front() == doctest::Approx(lmax).epsilon(1e-12));
  CHECK(grid.back() == doctest::Approx(1e-3 * lmax).epsilon(1e-12));
  for (std::size_t i = 1; i < grid.size(); ++i) {
    CHECK(grid[i] < grid[i - 1]);
    CHECK(grid[i] > 0.0);
  }
  // log-spacing: constant ratio
  double r = grid[1] / grid[0];
  for (std::size_t i = 2; i < grid.size(); ++i)
    CHECK(grid[i] / grid[i - 1] == doctest::Approx(r).epsilon(1e-10));
}

TEST_CASE("invalid penalty levels and grids are rejected") {
  InteractionIndex idx(2);
  Mat z = Mat::Identity(3, 3);
  Vec y(3);
  y << 1, 2, 3;
  auto spec = PenaltySpec::parse("lasso");
  CHECK_THROWS_AS(fit(z, y, idx, spec, 0.0), DomainError);
  CHECK_THROWS_AS(fit(z, y, idx, spec, -0.5), DomainError);
  CHECK_THROWS_AS(lambda_path(z, y, idx, spec, {0.1, 0.2}), DomainError);
  CHECK_THROWS_AS(lambda_path(z, y, idx, spec, {0.2, 0.2}), DomainError);
  CHECK_THROWS_AS(lambda_path(z, y, idx, spec, {}), DomainError);
  CHECK_THROWS_AS(lambda_path(z, y, idx, spec, {0.2, -0.1}), DomainError);
}

TEST_CASE("iteration cap reports non-convergence honestly") {
  Rng rng(61);
  Mat x = random_design(40, 4, rng);
  auto design = expand_design(x, true);
  Vec y(40);
  for (int i = 0; i < 40; ++i) y[i] = rng.normal() + x(i, 0);
  SolverConfig cfg = tight();
  cfg.max_iterations = 3;
  auto res = fit(design, y, PenaltySpec::parse("cap:q=2"), 0.1, cfg);
  CHECK_FALSE(res.converged);
  CHECK(res.iterations == 3);
}

TEST_CASE("matrix and design overloads agree exactly") {
  Rng rng(62);
  Mat x = random_design(35, 4, rng);
  auto design = expand_design(x, true);
  Vec y(35);
  for (int i = 0; i < 35; ++i) y[i] = rng.normal() + x(i, 1);
  auto spec = PenaltySpec::parse("pairwise:q=2");
  auto a = fit(design, y, spec, 0.1, tight());
  auto b = fit(design.values, y, design.index(), spec, 0.1, tight());
  CHECK((a.theta - b.theta).cwiseAbs().maxCoeff() == 0.0);
  CHECK(a.objective == b.objective);
  CHECK(a.iterations == b.iterations);
}

TEST_CASE("l1 error stays under the cone-constant budget") {
  // Planted-signal recovery at the theoretical penalty level: the l1 error of
  // the group fit should sit below lambda * 16 s / m^2 with m the measured
  // restricted eigenvalue, for most draws.
  const int n = 325, p = 5, s = 3;
  auto spec = PenaltySpec::parse("cap:q=2");
  TheoryConstants tc;  // delta 0.5, eta0 1
  int hits = 0;
  const int reps = 30;
  for (int rep = 0; rep < reps; ++rep) {
    Rng rng(derive_stream(24601, rep, 0));
    Mat x = random_design(n, p, rng);
    auto design = expand_design(x, true);
    InteractionIndex idx = design.index();
    Vec beta = Vec::Zero(idx.p1());
    beta[0] = 10.0;
    beta[2] = -10.0;
    beta[idx.pair_to_column(0, 2)] = 10.0;
    Vec y = design.values * beta;
    for (int i = 0; i < n; ++i) y[i] += rng.normal();

    double lambda = 2.0 * lambda_theory(n, idx.p1(), tc);
    SolverConfig cfg;
    cfg.primal_tol = 1e-8;
    cfg.dual_tol = 1e-8;
    cfg.max_iterations = 20000;
    cfg.trace_objective = false;
    auto res = fit(design, y, spec, lambda, cfg);
    if (!res.converged) continue;
    auto re = re_constant(design.values, s, 7.0, REMethod::ExhaustiveSupports, 0,
                          derive_stream(24601, rep, 1));
    if (re.value <= 0.0) continue;
    double budget = lambda * re_rate_factor(s, re.value);
    if ((res.theta - beta).cwiseAbs().sum() <= budget) ++hits;
  }
  CHECK(hits >= 27);
}
