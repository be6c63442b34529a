// hierint: fits two-way interaction models under hierarchy-respecting convex
// penalties and runs the statistical checks behind their error guarantees.
// Every command is deterministic for a fixed --seed; outputs are CSV/JSON.

#include <cstdint>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "hierint/bench.hpp"
#include "hierint/io.hpp"

using namespace hierint;

namespace {

// Solver non-convergence under --strict maps to its own exit code.
struct StrictNonConvergence : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DesignFlags {
  std::string kind = "gaussian";
  std::string cov = "identity";
  void attach(CLI::App* cmd) {
    cmd->add_option("--design", kind, "entry distribution: gaussian|rademacher|uniform")
        ->capture_default_str();
    cmd->add_option("--cov", cov, "row covariance: identity|ar1:<rho>|toeplitz:<c0,c1,...>")
        ->capture_default_str();
  }
  DesignDistribution build() const {
    DesignDistribution d;
    d.kind = DesignDistribution::parse_kind(kind);
    d.cov = CovarianceSpec::parse(cov);
    return d;
  }
};

struct TheoryFlags {
  TheoryConstants tc;
  void attach(CLI::App* cmd) {
    cmd->add_option("--noise-psi2", tc.noise_psi2, "sub-Gaussian scale of the noise")
        ->capture_default_str();
    cmd->add_option("--design-psi2", tc.design_psi2, "sub-Gaussian scale of the design entries")
        ->capture_default_str();
    cmd->add_option("--col-sd", tc.max_col_sd, "largest column standard deviation bound")
        ->capture_default_str();
    cmd->add_option("--delta", tc.delta, "concentration slack in [0,1]")->capture_default_str();
    cmd->add_option("--eta0", tc.eta0, "tail exponent for the union bound")
        ->capture_default_str();
    cmd->add_option("--abs-const", tc.abs_const, "absolute constant in the penalty level")
        ->capture_default_str();
  }
};

struct SolverFlags {
  SolverConfig cfg;
  bool no_adapt = false;
  bool trace = false;
  double support_threshold = -1.0;
  void attach(CLI::App* cmd) {
    cfg.trace_objective = false;
    cmd->add_option("--max-iter", cfg.max_iterations, "iteration cap")->capture_default_str();
    cmd->add_option("--tol", cfg.primal_tol, "primal and dual relative tolerance")
        ->capture_default_str();
    cmd->add_option("--rho", cfg.rho, "initial splitting weight")->capture_default_str();
    cmd->add_flag("--no-adapt", no_adapt, "freeze the splitting weight");
    cmd->add_flag("--trace", trace, "record the objective per iteration");
    cmd->add_option("--support-threshold", support_threshold,
                    "absolute magnitude cutoff for the reported support");
  }
  SolverConfig build() const {
    SolverConfig c = cfg;
    c.dual_tol = cfg.primal_tol;
    c.adapt_rho = !no_adapt;
    c.trace_objective = trace;
    if (support_threshold >= 0) c.support_threshold = support_threshold;
    return c;
  }
};

double resolve_lambda(const std::string& text, int n, int p1, const TheoryConstants& tc) {
  if (text == "theory") return lambda_theory(n, p1, tc);
  try {
    size_t pos = 0;
    double v = std::stod(text, &pos);
    if (pos != text.size()) throw std::invalid_argument(text);
    if (!(v > 0)) throw DomainError("--lambda must be positive");
    return v;
  } catch (const std::logic_error&) {
    throw DomainError("--lambda expects a positive number or 'theory'");
  }
}

void emit(const std::string& out_path, const nlohmann::json& j) {
  if (!out_path.empty()) write_text_file(out_path, j.dump(2) + "\n");
}

std::string flag_or(const std::string& out_path, const char* none = "(not written)") {
  return out_path.empty() ? none : out_path;
}

// ---- expand -----------------------------------------------------------------

int run_expand(const std::string& data, const std::string& response, bool no_center,
               bool standardize, const std::string& out) {
  Dataset ds = read_dataset(data, response);
  DesignMatrix design = expand_design(ds.x, !no_center, standardize);
  auto names = expanded_column_names(ds.names);
  nlohmann::json j;
  j["n"] = design.n();
  j["p"] = design.p;
  j["p1"] = design.p1();
  j["centered"] = design.centered;
  j["standardized"] = design.standardized;
  j["columns"] = names;
  j["offset"] = std::vector<double>(design.offset.data(), design.offset.data() + design.offset.size());
  j["scale"] = std::vector<double>(design.scale.data(), design.scale.data() + design.scale.size());
  emit(out, j);
  std::cout << "expand: n=" << design.n() << " p=" << design.p << " p1=" << design.p1()
            << " centered=" << (design.centered ? "true" : "false") << " -> " << flag_or(out)
            << "\n";
  return 0;
}

// ---- fit / path -------------------------------------------------------------

int run_fit(const std::string& data, const std::string& response, const std::string& penalty,
            const std::string& lambda_text, bool no_center, bool standardize, bool strict,
            const TheoryFlags& theory, const SolverFlags& solver, const std::string& out) {
  Dataset ds = read_dataset(data, response);
  PenaltySpec spec = PenaltySpec::parse(penalty);
  spec.validate(static_cast<int>(ds.x.cols()));
  DesignMatrix design = expand_design(ds.x, !no_center, standardize);
  InteractionIndex idx = design.index();
  double lambda = resolve_lambda(lambda_text, design.n(), design.p1(), theory.tc);
  SolverConfig cfg = solver.build();
  FitResult fr = fit(design.values, ds.y, idx, spec, lambda, cfg);
  nlohmann::json j = fit_to_json(fr, spec, idx);
  if (cfg.trace_objective) j["objective_trace"] = fr.objective_trace;
  emit(out, j);
  std::cout << "fit: penalty=" << spec.label() << " lambda=" << format_double(lambda)
            << " objective=" << format_double(fr.objective) << " iterations=" << fr.iterations
            << " converged=" << (fr.converged ? "true" : "false") << " support="
            << fr.support.main.size() << "+" << fr.support.pairs.size() << " -> "
            << flag_or(out) << "\n";
  if (strict && !fr.converged)
    throw StrictNonConvergence("fit did not converge within the iteration cap");
  return 0;
}

int run_path(const std::string& data, const std::string& response, const std::string& penalty,
             std::vector<double> lambdas, int grid, double ratio, bool no_center,
             bool standardize, bool strict, const SolverFlags& solver, const std::string& out) {
  Dataset ds = read_dataset(data, response);
  PenaltySpec spec = PenaltySpec::parse(penalty);
  spec.validate(static_cast<int>(ds.x.cols()));
  DesignMatrix design = expand_design(ds.x, !no_center, standardize);
  InteractionIndex idx = design.index();
  if (lambdas.empty()) {
    if (grid < 2) throw DomainError("path: give --lambdas or --grid >= 2");
    lambdas = default_lambda_grid(design.values, ds.y, grid, ratio);
  }
  auto fits = lambda_path(design.values, ds.y, idx, spec, lambdas, solver.build());
  int nonconverged = 0;
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& fr : fits) {
    arr.push_back(fit_to_json(fr, spec, idx));
    if (!fr.converged) ++nonconverged;
  }
  nlohmann::json j;
  j["penalty"] = penalty_to_json(spec);
  j["lambdas"] = lambdas;
  j["fits"] = arr;
  emit(out, j);
  std::cout << "path: penalty=" << spec.label() << " fits=" << fits.size() << " lambda=["
            << format_double(lambdas.back()) << ", " << format_double(lambdas.front())
            << "] nonconverged=" << nonconverged << " -> " << flag_or(out) << "\n";
  if (strict && nonconverged > 0)
    throw StrictNonConvergence("path had non-converged fits");
  return 0;
}

// ---- simulate -----------------------------------------------------------------

int run_simulate(int n, int p, int s_main, int s_int, double magnitude, double noise_sd,
                 const std::string& noise, const DesignFlags& design_flags, std::uint64_t seed,
                 const std::string& out, const std::string& truth_out) {
  DesignDistribution dist = design_flags.build();
  NoiseKind nk;
  if (noise == "gaussian") nk = NoiseKind::Gaussian;
  else if (noise == "rademacher") nk = NoiseKind::Rademacher;
  else throw DomainError("--noise must be gaussian or rademacher");

  Mat x = gen_design(n, p, dist, derive_stream(seed, 0, 1));
  TruthDraw truth = gen_truth(p, s_main, s_int, magnitude, derive_stream(seed, 0, 2));
  DesignMatrix design = expand_design(x, /*center=*/true);
  Rng rng(derive_stream(seed, 0, 3));
  Vec y = design.values * truth.beta;
  for (int i = 0; i < n; ++i)
    y[i] += nk == NoiseKind::Gaussian ? noise_sd * rng.normal()
                                      : noise_sd * static_cast<double>(rng.rademacher());

  std::vector<std::string> names(p);
  for (int j = 0; j < p; ++j) names[j] = "x" + std::to_string(j);
  std::ostringstream os;
  write_dataset_csv(os, x, names, &y, "y");
  write_text_file(out, os.str());

  if (!truth_out.empty()) {
    nlohmann::json j;
    j["beta"] = std::vector<double>(truth.beta.data(), truth.beta.data() + truth.beta.size());
    nlohmann::json support;
    support["main"] = std::vector<int>(truth.support.main.begin(), truth.support.main.end());
    auto pairs = nlohmann::json::array();
    for (const auto& [a, b] : truth.support.pairs) pairs.push_back({a, b});
    support["pairs"] = pairs;
    j["support"] = support;
    j["seed"] = seed;
    emit(truth_out, j);
  }
  std::cout << "simulate: n=" << n << " p=" << p << " support=" << truth.support.main.size()
            << "+" << truth.support.pairs.size() << " design=" << dist.label() << " -> " << out
            << "\n";
  return 0;
}

// ---- rate-bench -----------------------------------------------------------------

int run_rate_bench(const std::string& config_path, std::optional<std::uint64_t> seed,
                   std::optional<int> threads, bool strict, const std::string& out,
                   const std::string& summary_out) {
  ExperimentConfig cfg = experiment_config_from_json(load_config_file(config_path));
  if (seed) cfg.seed = *seed;
  if (threads) cfg.threads = *threads;
  RateResult result = rate_experiment(cfg);

  std::ostringstream os;
  write_rate_rows(os, result.rows);
  write_text_file(out, os.str());
  if (!summary_out.empty()) emit(summary_out, rate_summaries_to_json(result, cfg));

  int nonconverged = 0;
  std::ostringstream slopes;
  for (const auto& s : result.summaries) {
    slopes << " " << s.penalty << "=" << format_double(s.slope);
    nonconverged += s.nonconverged;
  }
  std::cout << "rate-bench: rows=" << result.rows.size() << " nonconverged=" << nonconverged
            << " slopes:" << slopes.str() << " -> " << out << "\n";
  if (strict && nonconverged > 0)
    throw StrictNonConvergence("rate-bench had non-converged fits");
  return 0;
}

// ---- re-check -----------------------------------------------------------------

int run_re_check(const std::string& data, const std::string& response, int n, int p,
                 const DesignFlags& design_flags, int s, double k0, const std::string& method,
                 int budget, std::uint64_t seed, const std::string& out) {
  Mat x;
  if (!data.empty()) {
    Dataset ds = read_dataset(data, response);
    x = ds.x;
  } else {
    if (n < 1 || p < 2) throw DomainError("re-check: give --data or both --n and --p");
    x = gen_design(n, p, design_flags.build(), derive_stream(seed, 1, 0));
  }
  DesignMatrix design = expand_design(x, /*center=*/true);
  REMethod m;
  if (method == "exhaustive") m = REMethod::ExhaustiveSupports;
  else if (method == "random") m = REMethod::RandomConeDescent;
  else throw DomainError("--method must be exhaustive or random");

  REEstimate est = re_constant(design.values, s, k0, m, budget, derive_stream(seed, 2, 0));
  nlohmann::json j;
  j["value"] = est.value;
  j["support"] = est.support;
  j["sparsity"] = est.sparsity;
  j["cone_factor"] = est.cone_factor;
  j["method"] = method;
  j["descents"] = est.descents;
  j["n"] = design.n();
  j["p"] = design.p;
  j["p1"] = design.p1();
  if (est.value > 0) j["rate_factor"] = re_rate_factor(s, est.value);
  emit(out, j);
  std::cout << "re-check: m_hat=" << format_double(est.value) << " s=" << s << " k0="
            << format_double(k0) << " descents=" << est.descents << " -> " << flag_or(out)
            << "\n";
  return 0;
}

// ---- a0-check -----------------------------------------------------------------

int run_a0_check(int n, int p, const DesignFlags& design_flags, const std::string& noise,
                 double noise_scale, int trials, double ck, const TheoryFlags& theory,
                 std::uint64_t seed, const std::string& out) {
  NoiseKind nk;
  if (noise == "gaussian") nk = NoiseKind::Gaussian;
  else if (noise == "rademacher") nk = NoiseKind::Rademacher;
  else throw DomainError("--noise must be gaussian or rademacher");
  DesignDistribution dist = design_flags.build();
  InteractionIndex idx(p);
  double rate = noise_event_rate(n, p, dist, noise_scale, nk, theory.tc, trials, seed);
  double bound = noise_event_probability_bound(n, idx.p1(), theory.tc.delta, theory.tc.eta0, ck);
  nlohmann::json j;
  j["rate"] = rate;
  j["bound"] = bound;
  j["threshold"] = lambda_theory(n, idx.p1(), theory.tc);
  j["n"] = n;
  j["p"] = p;
  j["p1"] = idx.p1();
  j["trials"] = trials;
  emit(out, j);
  std::cout << "a0-check: rate=" << format_double(rate) << " bound=" << format_double(bound)
            << " trials=" << trials << " -> " << flag_or(out) << "\n";
  return 0;
}

// ---- eigs-check -----------------------------------------------------------------

int run_eigs_check(int p, const DesignFlags& design_flags, int n_mc, std::uint64_t seed,
                   const std::string& out) {
  DesignDistribution dist = design_flags.build();
  EigRange r = expanded_cov_eigs(dist, p, n_mc, seed);
  InteractionIndex idx(p);
  nlohmann::json j;
  j["min_eig"] = r.min_eig;
  j["max_eig"] = r.max_eig;
  j["premise_ok"] = r.premise_ok;
  j["p"] = p;
  j["p1"] = idx.p1();
  j["n_mc"] = n_mc;
  emit(out, j);
  std::cout << "eigs-check: min=" << format_double(r.min_eig) << " max="
            << format_double(r.max_eig) << " premise_ok=" << (r.premise_ok ? "true" : "false")
            << " -> " << flag_or(out) << "\n";
  return 0;
}

// ---- psi-check -----------------------------------------------------------------

int run_psi_check(const std::string& sampler_text, const std::string& kind_text, int samples,
                  int qmax, bool probe, int p, const DesignFlags& design_flags, int n_mc,
                  std::uint64_t seed, const std::string& out) {
  if (probe) {
    InteractionIndex idx(p);
    Rng rng(derive_stream(seed, 7, 0));
    Vec u(idx.p1());
    for (int c = 0; c < idx.p1(); ++c) u[c] = rng.normal();
    u.normalize();
    QuadraticProbe q = quadratic_form_probe(u, design_flags.build(), n_mc,
                                            derive_stream(seed, 7, 1));
    nlohmann::json j;
    j["rho_hat"] = q.rho_hat;
    j["psi1_hat"] = q.psi1_hat;
    j["p"] = p;
    j["p1"] = idx.p1();
    j["n_mc"] = n_mc;
    emit(out, j);
    std::cout << "psi-check: probe rho_hat=" << format_double(q.rho_hat) << " psi1_hat="
              << format_double(q.psi1_hat) << " -> " << flag_or(out) << "\n";
    return 0;
  }
  Sampler1D sampler = Sampler1D::parse(sampler_text);
  PsiKind kind;
  if (kind_text == "psi1") kind = PsiKind::Psi1;
  else if (kind_text == "psi2") kind = PsiKind::Psi2;
  else throw DomainError("--kind must be psi1 or psi2");
  Rng rng(seed);
  std::vector<double> xs(samples);
  for (int i = 0; i < samples; ++i) xs[i] = sampler.sample(rng);
  double est = psi_norm_estimate(xs, kind, qmax);
  nlohmann::json j;
  j["estimate"] = est;
  j["sampler"] = sampler.label();
  j["kind"] = kind_text;
  j["samples"] = samples;
  j["qmax"] = qmax;
  emit(out, j);
  std::cout << "psi-check: " << kind_text << "(" << sampler.label() << ")="
            << format_double(est) << " samples=" << samples << " -> " << flag_or(out) << "\n";
  return 0;
}

// ---- conc-check -----------------------------------------------------------------

int run_conc_check(const std::string& sampler_text, std::vector<int> n_list, double delta,
                   int trials, std::uint64_t seed, const std::string& out) {
  Sampler1D sampler = Sampler1D::parse(sampler_text);
  ConcentrationReport report = concentration_squares_check(sampler, n_list, delta, trials, seed);
  nlohmann::json rows = nlohmann::json::array();
  std::ostringstream freqs;
  for (const auto& r : report.rows) {
    rows.push_back({{"n", r.n}, {"freq", r.freq}, {"censored", r.censored}});
    freqs << " " << format_double(r.freq);
  }
  nlohmann::json j;
  j["sampler"] = sampler.label();
  j["delta"] = delta;
  j["trials"] = trials;
  j["rows"] = rows;
  j["slope"] = report.slope;
  emit(out, j);
  std::cout << "conc-check: slope=" << format_double(report.slope) << " freqs:" << freqs.str()
            << " -> " << flag_or(out) << "\n";
  return 0;
}

// ---- penalty-check -----------------------------------------------------------------

int run_penalty_check(const std::string& family, const std::string& q_text, int d0, int p,
                      int trials, std::uint64_t seed, const std::string& out) {
  std::ostringstream text;
  text << family;
  if (family == "cap" || family == "pairwise" || family == "nested")
    text << ":q=" << q_text;
  else if (family == "block")
    text << ":q=" << q_text << ",d0=" << d0;
  PenaltySpec spec = PenaltySpec::parse(text.str());
  spec.validate(p);
  InteractionIndex idx(p);

  int pass_sub = 0, pass_lower = 0, pass_upper = 0;
  for (int t = 0; t < trials; ++t) {
    Rng rng(derive_stream(seed, 0, t));
    int s_main = static_cast<int>(rng.uniform01() * (p + 1));
    s_main = std::min(s_main, p);
    std::vector<int> all(p);
    std::iota(all.begin(), all.end(), 0);
    SupportSet s;
    for (int i = 0; i < s_main; ++i) {
      int j = i + static_cast<int>(rng.uniform01() * (p - i));
      j = std::min(j, p - 1);
      std::swap(all[i], all[j]);
      s.main.insert(all[i]);
    }
    std::vector<std::pair<int, int>> candidates;
    for (int a : s.main)
      for (int b : s.main)
        if (a < b) candidates.push_back({a, b});
    for (const auto& pr : candidates)
      if (rng.uniform01() < 0.5) s.pairs.insert(pr);

    Vec theta(idx.p1());
    for (int c = 0; c < idx.p1(); ++c) theta[c] = rng.normal();
    SandwichReport rep = check_sandwich(spec, theta, s, idx);
    pass_sub += rep.subadditive;
    pass_lower += rep.lower;
    pass_upper += rep.upper;
  }

  SandwichConstants sc = sandwich_constants(spec, p);
  nlohmann::json j;
  j["penalty"] = penalty_to_json(spec);
  j["p"] = p;
  j["trials"] = trials;
  j["pass_subadditive"] = pass_sub;
  j["pass_lower"] = pass_lower;
  j["pass_upper"] = pass_upper;
  j["constants"] = {{"lower", sc.lower}, {"upper", sc.upper}};
  emit(out, j);
  std::cout << "penalty-check: " << spec.label() << " p=" << p << " subadditive=" << pass_sub
            << "/" << trials << " lower=" << pass_lower << "/" << trials << " upper="
            << pass_upper << "/" << trials << " -> " << flag_or(out) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "hierint: penalized two-way interaction models and the desk-scale checks "
      "of their statistical guarantees"};
  app.require_subcommand(1);

  int exit_code = 0;

  // expand
  auto* expand_cmd = app.add_subcommand(
      "expand", "Describe the interaction expansion of a dataset: column layout, centering "
                "offsets, and scales; the expanded matrix itself is recomputed on demand.");
  struct {
    std::string data, response, out;
    bool no_center = false, standardize = false;
  } ex;
  expand_cmd->add_option("--data", ex.data, "input CSV with a header row")->required();
  expand_cmd->add_option("--response", ex.response, "response column to exclude");
  expand_cmd->add_flag("--no-center", ex.no_center, "skip column centering");
  expand_cmd->add_flag("--standardize", ex.standardize, "scale columns to unit variance");
  expand_cmd->add_option("--out", ex.out, "metadata JSON path");
  expand_cmd->callback([&] {
    exit_code = run_expand(ex.data, ex.response, ex.no_center, ex.standardize, ex.out);
  });

  // fit
  auto* fit_cmd = app.add_subcommand(
      "fit", "Fit one penalized interaction regression; the penalty level 'theory' uses the "
             "closed-form level that controls the noise correlation event.");
  struct {
    std::string data, response, penalty, lambda = "theory", out;
    bool no_center = false, standardize = false, strict = false;
    TheoryFlags theory;
    SolverFlags solver;
  } ft;
  fit_cmd->add_option("--data", ft.data, "input CSV with a header row")->required();
  fit_cmd->add_option("--response", ft.response, "response column name")->required();
  fit_cmd->add_option("--penalty", ft.penalty,
                      "lasso | cap:q=Q | bien | pairwise:q=Q | block:q=Q,d0=D | nested:q=Q")
      ->required();
  fit_cmd->add_option("--lambda", ft.lambda, "positive number or 'theory'")
      ->capture_default_str();
  fit_cmd->add_flag("--no-center", ft.no_center, "skip column centering");
  fit_cmd->add_flag("--standardize", ft.standardize, "scale columns to unit variance");
  fit_cmd->add_flag("--strict", ft.strict, "exit 4 when the solver does not converge");
  fit_cmd->add_option("--out", ft.out, "fit JSON path");
  ft.theory.attach(fit_cmd);
  ft.solver.attach(fit_cmd);
  fit_cmd->callback([&] {
    exit_code = run_fit(ft.data, ft.response, ft.penalty, ft.lambda, ft.no_center,
                        ft.standardize, ft.strict, ft.theory, ft.solver, ft.out);
  });

  // path
  auto* path_cmd = app.add_subcommand(
      "path", "Fit a decreasing penalty-level path with warm starts.");
  struct {
    std::string data, response, penalty, out;
    std::vector<double> lambdas;
    int grid = 0;
    double ratio = 1e-3;
    bool no_center = false, standardize = false, strict = false;
    SolverFlags solver;
  } pt;
  path_cmd->add_option("--data", pt.data, "input CSV with a header row")->required();
  path_cmd->add_option("--response", pt.response, "response column name")->required();
  path_cmd->add_option("--penalty", pt.penalty, "penalty spec, as for fit")->required();
  path_cmd->add_option("--lambdas", pt.lambdas, "explicit decreasing levels, comma separated")
      ->delimiter(',');
  path_cmd->add_option("--grid", pt.grid, "log-spaced grid size when --lambdas is absent");
  path_cmd->add_option("--ratio", pt.ratio, "smallest grid level / largest")
      ->capture_default_str();
  path_cmd->add_flag("--no-center", pt.no_center, "skip column centering");
  path_cmd->add_flag("--standardize", pt.standardize, "scale columns to unit variance");
  path_cmd->add_flag("--strict", pt.strict, "exit 4 when any fit does not converge");
  path_cmd->add_option("--out", pt.out, "path JSON");
  pt.solver.attach(path_cmd);
  path_cmd->callback([&] {
    exit_code = run_path(pt.data, pt.response, pt.penalty, pt.lambdas, pt.grid, pt.ratio,
                         pt.no_center, pt.standardize, pt.strict, pt.solver, pt.out);
  });

  // simulate
  auto* sim_cmd = app.add_subcommand(
      "simulate", "Generate a design, a hierarchical sparse truth, and responses; writes a CSV "
                  "dataset ready for fit/path.");
  struct {
    int n = 200, p = 10, s_main = 2, s_int = 1;
    double magnitude = 10.0, noise_sd = 1.0;
    std::string noise = "gaussian", out, truth_out;
    DesignFlags design;
    std::uint64_t seed = 1;
  } sm;
  sim_cmd->add_option("--n", sm.n, "rows")->capture_default_str();
  sim_cmd->add_option("--p", sm.p, "main effects")->capture_default_str();
  sim_cmd->add_option("--s-main", sm.s_main, "active mains")->capture_default_str();
  sim_cmd->add_option("--s-int", sm.s_int, "active interactions among those mains")
      ->capture_default_str();
  sim_cmd->add_option("--magnitude", sm.magnitude, "absolute size of active coefficients")
      ->capture_default_str();
  sim_cmd->add_option("--noise-sd", sm.noise_sd, "noise scale")->capture_default_str();
  sim_cmd->add_option("--noise", sm.noise, "gaussian|rademacher")->capture_default_str();
  sm.design.attach(sim_cmd);
  sim_cmd->add_option("--seed", sm.seed, "stream seed")->capture_default_str();
  sim_cmd->add_option("--out", sm.out, "dataset CSV path")->required();
  sim_cmd->add_option("--truth", sm.truth_out, "also write the truth as JSON");
  sim_cmd->callback([&] {
    exit_code = run_simulate(sm.n, sm.p, sm.s_main, sm.s_int, sm.magnitude, sm.noise_sd,
                             sm.noise, sm.design, sm.seed, sm.out, sm.truth_out);
  });

  // rate-bench
  auto* rate_cmd = app.add_subcommand(
      "rate-bench", "Replicated fits over an (n, p, sparsity) grid; checks that the l1 "
                    "estimation error scales like s*sqrt(log(p1)/n).");
  struct {
    std::string config, out, summary;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    bool strict = false;
  } rb;
  rate_cmd->add_option("--config", rb.config, "TOML or JSON experiment grid")->required();
  rate_cmd->add_option("--seed", rb.seed, "override the config seed");
  rate_cmd->add_option("--threads", rb.threads, "worker threads (default: HIERINT_THREADS or "
                                                "all cores)");
  rate_cmd->add_flag("--strict", rb.strict, "exit 4 when any fit does not converge");
  rate_cmd->add_option("--out", rb.out, "rows CSV path")->required();
  rate_cmd->add_option("--summary", rb.summary, "slope summary JSON path");
  rate_cmd->callback([&] {
    exit_code = run_rate_bench(rb.config, rb.seed, rb.threads, rb.strict, rb.out, rb.summary);
  });

  // re-check
  auto* re_cmd = app.add_subcommand(
      "re-check", "Estimate the smallest restricted eigenvalue of the expanded sample "
                  "covariance over cone-constrained sparse directions; this constant divides "
                  "the l1 error bound, so positivity is what makes the rate non-vacuous.");
  struct {
    std::string data, response, method = "exhaustive", out;
    int n = 0, p = 0, s = 1, budget = 2;
    double k0 = 3.0;
    DesignFlags design;
    std::uint64_t seed = 1;
  } re;
  re_cmd->add_option("--data", re.data, "measure a dataset instead of a generated design");
  re_cmd->add_option("--response", re.response, "response column to exclude");
  re_cmd->add_option("--n", re.n, "rows (generated mode)");
  re_cmd->add_option("--p", re.p, "main effects (generated mode)");
  re.design.attach(re_cmd);
  re_cmd->add_option("--s", re.s, "support size")->capture_default_str();
  re_cmd->add_option("--k0", re.k0, "cone factor")->capture_default_str();
  re_cmd->add_option("--method", re.method, "exhaustive|random")->capture_default_str();
  re_cmd->add_option("--budget", re.budget,
                     "random starts per support (exhaustive) or random supports (random)")
      ->capture_default_str();
  re_cmd->add_option("--seed", re.seed, "stream seed")->capture_default_str();
  re_cmd->add_option("--out", re.out, "estimate JSON path");
  re_cmd->callback([&] {
    exit_code = run_re_check(re.data, re.response, re.n, re.p, re.design, re.s, re.k0,
                             re.method, re.budget, re.seed, re.out);
  });

  // a0-check
  auto* a0_cmd = app.add_subcommand(
      "a0-check", "Measure how often the max correlation between expanded columns and fresh "
                  "noise stays below the theoretical penalty level, against its closed-form "
                  "probability bound.");
  struct {
    int n = 500, p = 10, trials = 200;
    std::string noise = "gaussian", out;
    double noise_scale = 1.0, ck = 1.0;
    DesignFlags design;
    TheoryFlags theory;
    std::uint64_t seed = 1;
  } a0;
  a0_cmd->add_option("--n", a0.n, "rows per trial")->capture_default_str();
  a0_cmd->add_option("--p", a0.p, "main effects")->capture_default_str();
  a0.design.attach(a0_cmd);
  a0_cmd->add_option("--noise", a0.noise, "gaussian|rademacher")->capture_default_str();
  a0_cmd->add_option("--noise-scale", a0.noise_scale, "noise scale used when sampling")
      ->capture_default_str();
  a0_cmd->add_option("--trials", a0.trials, "Monte Carlo trials")->capture_default_str();
  a0_cmd->add_option("--ck", a0.ck, "absolute constant inside the bound's exponent")
      ->capture_default_str();
  a0.theory.attach(a0_cmd);
  a0_cmd->add_option("--seed", a0.seed, "stream seed")->capture_default_str();
  a0_cmd->add_option("--out", a0.out, "report JSON path");
  a0_cmd->callback([&] {
    exit_code = run_a0_check(a0.n, a0.p, a0.design, a0.noise, a0.noise_scale, a0.trials, a0.ck,
                             a0.theory, a0.seed, a0.out);
  });

  // eigs-check
  auto* eig_cmd = app.add_subcommand(
      "eigs-check", "Monte Carlo spectrum of the expanded covariance: verifies the premise "
                    "that the base covariance is nondegenerate and reports the eigenvalue "
                    "range after expansion.");
  struct {
    int p = 4, n_mc = 100000;
    DesignFlags design;
    std::uint64_t seed = 1;
    std::string out;
  } eg;
  eig_cmd->add_option("--p", eg.p, "main effects")->capture_default_str();
  eg.design.attach(eig_cmd);
  eig_cmd->add_option("--n-mc", eg.n_mc, "Monte Carlo rows")->capture_default_str();
  eig_cmd->add_option("--seed", eg.seed, "stream seed")->capture_default_str();
  eig_cmd->add_option("--out", eg.out, "report JSON path");
  eig_cmd->callback([&] {
    exit_code = run_eigs_check(eg.p, eg.design, eg.n_mc, eg.seed, eg.out);
  });

  // psi-check
  auto* psi_cmd = app.add_subcommand(
      "psi-check", "Estimate moment-growth (psi) norms of scalar samplers; with --probe, "
                   "check that a quadratic form in design rows is subexponential, the fact "
                   "that lets expanded columns be treated like sub-Gaussian ones.");
  struct {
    std::string sampler = "gaussian", kind = "psi2", out;
    int samples = 1000000, qmax = 10, p = 4, n_mc = 100000;
    bool probe = false;
    DesignFlags design;
    std::uint64_t seed = 1;
  } ps;
  psi_cmd->add_option("--sampler", ps.sampler,
                      "gaussian|rademacher|uniform|exp-centered|gauss-product, optional :scale")
      ->capture_default_str();
  psi_cmd->add_option("--kind", ps.kind, "psi1|psi2")->capture_default_str();
  psi_cmd->add_option("--samples", ps.samples, "sample count")->capture_default_str();
  psi_cmd->add_option("--qmax", ps.qmax, "highest moment order used")->capture_default_str();
  psi_cmd->add_flag("--probe", ps.probe, "probe a random expanded direction instead");
  psi_cmd->add_option("--p", ps.p, "main effects (probe mode)")->capture_default_str();
  ps.design.attach(psi_cmd);
  psi_cmd->add_option("--n-mc", ps.n_mc, "Monte Carlo rows (probe mode)")->capture_default_str();
  psi_cmd->add_option("--seed", ps.seed, "stream seed")->capture_default_str();
  psi_cmd->add_option("--out", ps.out, "report JSON path");
  psi_cmd->callback([&] {
    exit_code = run_psi_check(ps.sampler, ps.kind, ps.samples, ps.qmax, ps.probe, ps.p,
                              ps.design, ps.n_mc, ps.seed, ps.out);
  });

  // conc-check
  auto* conc_cmd = app.add_subcommand(
      "conc-check", "Frequency that an averaged square deviates from its variance by more "
                    "than delta, across sample sizes; checks the cube-root exponential decay "
                    "assumed by the sample-size bounds.");
  struct {
    std::string sampler = "gaussian", out;
    std::vector<int> n_list = {100, 1000, 10000};
    double delta = 0.5;
    int trials = 2000;
    std::uint64_t seed = 1;
  } cc;
  conc_cmd->add_option("--sampler", cc.sampler, "scalar sampler, as for psi-check")
      ->capture_default_str();
  conc_cmd->add_option("--n", cc.n_list, "sample sizes, comma separated")
      ->delimiter(',')
      ->capture_default_str();
  conc_cmd->add_option("--delta", cc.delta, "deviation threshold")->capture_default_str();
  conc_cmd->add_option("--trials", cc.trials, "trials per sample size")->capture_default_str();
  conc_cmd->add_option("--seed", cc.seed, "stream seed")->capture_default_str();
  conc_cmd->add_option("--out", cc.out, "report JSON path");
  conc_cmd->callback([&] {
    exit_code = run_conc_check(cc.sampler, cc.n_list, cc.delta, cc.trials, cc.seed, cc.out);
  });

  // penalty-check
  auto* pen_cmd = app.add_subcommand(
      "penalty-check", "Random trials of the penalty sandwich property: on hierarchical "
                       "support splits the penalty must be subadditive, dominate the on-"
                       "support l1 norm, and stay below its declared group-norm multiple.");
  struct {
    std::string family, q = "2", out;
    int d0 = 1, p = 5, trials = 1000;
    std::uint64_t seed = 1;
  } pc;
  pen_cmd->add_option("--family", pc.family, "lasso|cap|bien|pairwise|block|nested")
      ->required();
  pen_cmd->add_option("--q", pc.q, "group norm order (number or 'inf')")->capture_default_str();
  pen_cmd->add_option("--d0", pc.d0, "window width parameter (block only)")
      ->capture_default_str();
  pen_cmd->add_option("--p", pc.p, "main effects")->capture_default_str();
  pen_cmd->add_option("--trials", pc.trials, "random (theta, support) trials")
      ->capture_default_str();
  pen_cmd->add_option("--seed", pc.seed, "stream seed")->capture_default_str();
  pen_cmd->add_option("--out", pc.out, "report JSON path");
  pen_cmd->callback([&] {
    exit_code = run_penalty_check(pc.family, pc.q, pc.d0, pc.p, pc.trials, pc.seed, pc.out);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const StrictNonConvergence& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return exit_code;
}
