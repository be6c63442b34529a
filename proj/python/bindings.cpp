// Python bindings for the core operations: design expansion, penalty
// evaluation, penalized fits, and the diagnostic estimators. Results cross the
// boundary as plain dicts so the python side stays free of wrapper classes.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>

#include "hierint/bench.hpp"
#include "hierint/penalty.hpp"
#include "hierint/solver.hpp"

namespace py = pybind11;
using namespace hierint;

namespace {

SolverConfig make_config(int max_iterations, double tol, bool trace) {
  SolverConfig cfg;
  cfg.max_iterations = max_iterations;
  cfg.primal_tol = tol;
  cfg.dual_tol = tol;
  cfg.trace_objective = trace;
  return cfg;
}

SupportSet support_from_lists(const std::vector<int>& main,
                              const std::vector<std::pair<int, int>>& pairs) {
  SupportSet s;
  s.main.insert(main.begin(), main.end());
  s.pairs.insert(pairs.begin(), pairs.end());
  return s;
}

py::dict fit_to_dict(const FitResult& r) {
  py::dict d;
  d["theta"] = r.theta;
  d["objective"] = r.objective;
  d["lambda"] = r.lambda;
  d["iterations"] = r.iterations;
  d["converged"] = r.converged;
  d["support_main"] = std::vector<int>(r.support.main.begin(), r.support.main.end());
  d["support_pairs"] =
      std::vector<std::pair<int, int>>(r.support.pairs.begin(), r.support.pairs.end());
  d["trace"] = r.objective_trace;
  return d;
}

TheoryConstants make_constants(double noise_psi2, double design_psi2, double max_col_sd,
                               double delta, double eta0, double abs_const) {
  TheoryConstants tc;
  tc.noise_psi2 = noise_psi2;
  tc.design_psi2 = design_psi2;
  tc.max_col_sd = max_col_sd;
  tc.delta = delta;
  tc.eta0 = eta0;
  tc.abs_const = abs_const;
  tc.validate();
  return tc;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Penalized regression over main effects and all pairwise products";

  m.def(
      "expand",
      [](const Mat& x, bool center, bool standardize) {
        DesignMatrix d = expand_design(x, center, standardize);
        py::dict out;
        out["values"] = d.values;
        out["offset"] = d.offset;
        out["scale"] = d.scale;
        out["p"] = d.p;
        out["p1"] = d.p1();
        return out;
      },
      py::arg("x"), py::arg("center") = true, py::arg("standardize") = false,
      "Expand an n x p matrix to mains plus all pairwise products (lexicographic "
      "pair order), optionally centering and standardizing the expanded columns.");

  m.def(
      "pair_column",
      [](int p, int j, int k) { return InteractionIndex(p).pair_to_column(j, k); },
      py::arg("p"), py::arg("j"), py::arg("k"),
      "Column index of the product of variables j and k in the expanded design.");

  m.def(
      "penalty_value",
      [](const std::string& penalty, const Vec& theta, int p) {
        return evaluate(PenaltySpec::parse(penalty), theta, InteractionIndex(p));
      },
      py::arg("penalty"), py::arg("theta"), py::arg("p"),
      "Evaluate a penalty ('lasso', 'cap:q=2', 'bien', 'pairwise:q=2', "
      "'block:q=2,d0=2', 'nested:q=2') at a coefficient vector of length "
      "p + p(p-1)/2.");

  m.def(
      "check_sandwich",
      [](const std::string& penalty, const Vec& theta, const std::vector<int>& main,
         const std::vector<std::pair<int, int>>& pairs, int p) {
        auto rep = check_sandwich(PenaltySpec::parse(penalty), theta,
                                  support_from_lists(main, pairs), InteractionIndex(p));
        py::dict d;
        d["subadditive"] = rep.subadditive;
        d["lower"] = rep.lower;
        d["upper"] = rep.upper;
        d["slack_subadditive"] = rep.slack_subadditive;
        d["slack_lower"] = rep.slack_lower;
        d["slack_upper"] = rep.slack_upper;
        return d;
      },
      py::arg("penalty"), py::arg("theta"), py::arg("support_main"),
      py::arg("support_pairs"), py::arg("p"),
      "Check the additive lower and upper envelopes of a penalty at one "
      "coefficient vector and hierarchical support split.");

  m.def(
      "lambda_theory",
      [](int n, int p1, double noise_psi2, double design_psi2, double max_col_sd,
         double delta, double eta0, double abs_const) {
        return lambda_theory(
            n, p1, make_constants(noise_psi2, design_psi2, max_col_sd, delta, eta0, abs_const));
      },
      py::arg("n"), py::arg("p1"), py::arg("noise_psi2") = 1.0, py::arg("design_psi2") = 1.0,
      py::arg("max_col_sd") = 1.0, py::arg("delta") = 0.5, py::arg("eta0") = 1.0,
      py::arg("abs_const") = 1.0,
      "Penalty level at which the noise correlation event holds with high "
      "probability: sqrt((1+eta0)/abs_const) * noise_psi2 * max_col_sd * (1+delta) "
      "* sqrt(log(p1)/n).");

  m.def(
      "fit",
      [](const Mat& x, const Vec& y, const std::string& penalty, double lam, bool center,
         bool standardize, int max_iterations, double tol, bool trace) {
        DesignMatrix d = expand_design(x, center, standardize);
        auto r = fit(d.values, y, d.index(), PenaltySpec::parse(penalty), lam,
                     make_config(max_iterations, tol, trace));
        return fit_to_dict(r);
      },
      py::arg("x"), py::arg("y"), py::arg("penalty"), py::arg("lam"), py::arg("center") = true,
      py::arg("standardize") = false, py::arg("max_iterations") = 5000, py::arg("tol") = 1e-8,
      py::arg("trace") = false,
      "Expand x, then minimize ||y - Z theta||^2 / (2n) + lam * Pe(theta). Returns "
      "a dict with theta over the expanded columns.");

  m.def(
      "path",
      [](const Mat& x, const Vec& y, const std::string& penalty,
         const std::vector<double>& lambdas, bool center, bool standardize, int max_iterations,
         double tol) {
        DesignMatrix d = expand_design(x, center, standardize);
        auto rs = lambda_path(d.values, y, d.index(), PenaltySpec::parse(penalty), lambdas,
                              make_config(max_iterations, tol, false));
        py::list out;
        for (const auto& r : rs) out.append(fit_to_dict(r));
        return out;
      },
      py::arg("x"), py::arg("y"), py::arg("penalty"), py::arg("lambdas"),
      py::arg("center") = true, py::arg("standardize") = false, py::arg("max_iterations") = 5000,
      py::arg("tol") = 1e-8,
      "Warm-started fits along a decreasing sequence of penalty levels.");

  m.def(
      "lambda_grid",
      [](const Mat& x, const Vec& y, int count, double ratio, bool center, bool standardize) {
        DesignMatrix d = expand_design(x, center, standardize);
        return default_lambda_grid(d.values, y, count, ratio);
      },
      py::arg("x"), py::arg("y"), py::arg("count") = 50, py::arg("ratio") = 1e-3,
      py::arg("center") = true, py::arg("standardize") = false,
      "Log-spaced penalty levels from the smallest value that zeroes the l1 fit "
      "down to ratio times it.");

  m.def(
      "re_constant",
      [](const Mat& z, int s, double k0, const std::string& method, int budget,
         std::uint64_t seed) {
        REMethod m_ = method == "random" ? REMethod::RandomConeDescent
                                         : REMethod::ExhaustiveSupports;
        if (method != "random" && method != "exhaustive")
          throw DomainError("re_constant: method must be 'exhaustive' or 'random'");
        auto est = re_constant(z, s, k0, m_, budget, seed);
        py::dict d;
        d["value"] = est.value;
        d["minimizer"] = est.minimizer;
        d["support"] = est.support;
        d["sparsity"] = est.sparsity;
        d["descents"] = est.descents;
        return d;
      },
      py::arg("z"), py::arg("s"), py::arg("k0") = 7.0, py::arg("method") = "exhaustive",
      py::arg("budget") = 0, py::arg("seed") = 1,
      "Upper bound on the restricted eigenvalue constant of z over supports of "
      "size s and the cone with l1 leverage k0.");

  m.def(
      "simulate",
      [](int n, int p, int s_main, int s_int, double magnitude, double noise_sd,
         std::uint64_t seed) {
        Mat x = gen_design(n, p, DesignDistribution{}, derive_stream(seed, 0, 1));
        TruthDraw truth = gen_truth(p, s_main, s_int, magnitude, derive_stream(seed, 0, 2));
        DesignMatrix d = expand_design(x, false, false);
        Vec y = d.values * truth.beta;
        Rng rng(derive_stream(seed, 0, 3));
        for (int i = 0; i < y.size(); ++i) y[i] += noise_sd * rng.normal();
        py::dict out;
        out["x"] = x;
        out["y"] = y;
        out["beta"] = truth.beta;
        out["support_main"] =
            std::vector<int>(truth.support.main.begin(), truth.support.main.end());
        out["support_pairs"] = std::vector<std::pair<int, int>>(truth.support.pairs.begin(),
                                                                truth.support.pairs.end());
        return out;
      },
      py::arg("n"), py::arg("p"), py::arg("s_main"), py::arg("s_int"),
      py::arg("magnitude") = 10.0, py::arg("noise_sd") = 1.0, py::arg("seed") = 1,
      "Gaussian design with a hierarchical sparse truth over the expanded "
      "columns; y is generated from the uncentered expansion.");
}
