#include "hierint/solver.hpp"

#include <Eigen/Cholesky>
#include <cmath>

namespace hierint {

void TheoryConstants::validate() const {
  if (noise_psi2 < 0 || design_psi2 < 0 || max_col_sd < 0 || eta0 < 0)
    throw DomainError("theory constants must be nonnegative");
  if (delta < 0 || delta > 1) throw DomainError("delta must lie in [0, 1]");
  if (!(abs_const > 0)) throw DomainError("abs_const must be positive");
}

double lambda_theory(int n, int p1, const TheoryConstants& tc) {
  if (n < 1 || p1 < 2) throw DomainError("lambda_theory: need n >= 1 and p1 >= 2");
  tc.validate();
  return std::sqrt((1.0 + tc.eta0) / tc.abs_const) * tc.noise_psi2 * tc.max_col_sd *
         (1.0 + tc.delta) * std::sqrt(std::log(static_cast<double>(p1)) / n);
}

double objective_value(const Mat& z, const Vec& y, const Vec& theta, double lambda,
                       const PenaltySpec& spec, const InteractionIndex& idx) {
  const double n = static_cast<double>(z.rows());
  double rss = (y - z * theta).squaredNorm();
  return rss / (2.0 * n) + lambda * evaluate(spec, theta, idx);
}

namespace {

struct Workspace {
  AtomList atoms;
  std::vector<Vec> zeta;  // local copies, one per atom
  std::vector<Vec> dual;  // scaled duals
  Vec multiplicity;       // per-column copy counts
};

}  // namespace

FitResult fit(const Mat& z, const Vec& y, const InteractionIndex& idx, const PenaltySpec& spec,
              double lambda, const SolverConfig& cfg, const Vec* warm_start) {
  const int n = static_cast<int>(z.rows());
  const int p1 = static_cast<int>(z.cols());
  if (p1 != idx.p1()) throw DomainError("fit: design has wrong column count");
  if (y.size() != n) throw DomainError("fit: response length mismatch");
  if (!(lambda > 0)) throw DomainError("fit: lambda must be > 0");
  if (!(cfg.primal_tol > 0) || !(cfg.dual_tol > 0)) throw DomainError("fit: tolerances must be > 0");
  if (!(cfg.rho > 0)) throw DomainError("fit: rho must be > 0");
  spec.validate(idx.p());

  Workspace w;
  w.atoms = atoms(spec, idx);
  const size_t na = w.atoms.atoms.size();
  w.multiplicity = Vec::Zero(p1);
  for (const auto& a : w.atoms.atoms)
    for (int c : a.cols) w.multiplicity[c] += 1.0;

  const Mat gram = (z.transpose() * z) / static_cast<double>(n);
  const Vec zty = (z.transpose() * y) / static_cast<double>(n);

  double rho = cfg.rho;
  Eigen::LLT<Mat> llt;
  auto refactor = [&] {
    Mat m = gram;
    m.diagonal() += rho * w.multiplicity;
    llt.compute(m);
    if (llt.info() != Eigen::Success) throw DomainError("fit: quadratic step factorization failed");
  };
  refactor();

  Vec theta = warm_start ? *warm_start : Vec::Zero(p1);
  if (warm_start && warm_start->size() != p1) throw DomainError("fit: warm start has wrong length");
  w.zeta.resize(na);
  w.dual.resize(na);
  size_t total_copies = 0;
  for (size_t a = 0; a < na; ++a) {
    const auto& cols = w.atoms.atoms[a].cols;
    Vec g(cols.size());
    for (size_t i = 0; i < cols.size(); ++i) g[static_cast<int>(i)] = theta[cols[i]];
    w.zeta[a] = g;
    w.dual[a] = Vec::Zero(static_cast<int>(cols.size()));
    total_copies += cols.size();
  }

  // Homogeneous reference scales: both are proportional to the data, so the
  // stopping rule commutes with rescaling (y, lambda) -> (c y, c lambda).
  const double grad_ref = zty.norm();
  Vec first = llt.solve(zty);
  const double theta_ref = std::max(first.norm(), 1e-300);

  FitResult res;
  res.lambda = lambda;
  if (cfg.trace_objective) res.objective_trace.reserve(cfg.max_iterations);

  int it = 0;
  for (; it < cfg.max_iterations; ++it) {
    // Quadratic step: (Gram + rho * diag(mult)) theta = Z'y/n + rho * scatter(zeta - dual).
    Vec rhs = zty;
    for (size_t a = 0; a < na; ++a) {
      const auto& cols = w.atoms.atoms[a].cols;
      for (size_t i = 0; i < cols.size(); ++i)
        rhs[cols[i]] += rho * (w.zeta[a][static_cast<int>(i)] - w.dual[a][static_cast<int>(i)]);
    }
    theta = llt.solve(rhs);

    // Atom steps and dual updates.
    double primal_sq = 0.0;
    Vec dual_shift = Vec::Zero(p1);  // scatter of the zeta change, for the dual residual
    double zeta_sq = 0.0, gtheta_sq = 0.0;
    for (size_t a = 0; a < na; ++a) {
      const auto& atom = w.atoms.atoms[a];
      Vec g(atom.cols.size());
      for (size_t i = 0; i < atom.cols.size(); ++i) g[static_cast<int>(i)] = theta[atom.cols[i]];
      Vec v = g + w.dual[a];
      Vec znew = prox_atom(atom.kind, v, lambda * atom.weight / rho, atom.q);
      for (size_t i = 0; i < atom.cols.size(); ++i)
        dual_shift[atom.cols[i]] += znew[static_cast<int>(i)] - w.zeta[a][static_cast<int>(i)];
      w.zeta[a] = znew;
      w.dual[a] = v - znew;
      primal_sq += (g - znew).squaredNorm();
      zeta_sq += znew.squaredNorm();
      gtheta_sq += g.squaredNorm();
    }

    double primal = std::sqrt(primal_sq);
    double dual = rho * dual_shift.norm();
    res.primal_residual = primal;
    res.dual_residual = dual;

    if (cfg.trace_objective)
      res.objective_trace.push_back(objective_value(z, y, theta, lambda, spec, idx));

    double eps_pri =
        cfg.primal_tol * std::max({std::sqrt(gtheta_sq), std::sqrt(zeta_sq), theta_ref});
    double eps_dual = cfg.dual_tol * std::max(grad_ref, rho * theta_ref);
    if (primal <= eps_pri && dual <= eps_dual) {
      res.converged = true;
      ++it;
      break;
    }

    if (cfg.adapt_rho && (it + 1) % 10 == 0) {
      double factor = 1.0;
      if (primal > 10.0 * dual)
        factor = 2.0;
      else if (dual > 10.0 * primal)
        factor = 0.5;
      if (factor != 1.0) {
        rho *= factor;
        for (auto& u : w.dual) {
          if (cfg.restart)
            u.setZero();
          else
            u /= factor;  // scaled duals carry 1/rho
        }
        refactor();
      }
    }
  }

  res.iterations = it;
  res.theta = theta;
  res.objective = objective_value(z, y, theta, lambda, spec, idx);
  double thr = cfg.support_threshold
                   ? *cfg.support_threshold
                   : 1e-6 * (theta.size() ? theta.cwiseAbs().maxCoeff() : 0.0);
  res.support_threshold_used = thr;
  res.support = support_from_vector(theta, thr, idx);
  return res;
}

FitResult fit(const DesignMatrix& design, const Vec& y, const PenaltySpec& spec, double lambda,
              const SolverConfig& cfg, const Vec* warm_start) {
  return fit(design.values, y, design.index(), spec, lambda, cfg, warm_start);
}

std::vector<FitResult> lambda_path(const Mat& z, const Vec& y, const InteractionIndex& idx,
                                   const PenaltySpec& spec, const std::vector<double>& lambdas,
                                   const SolverConfig& cfg) {
  if (lambdas.empty()) throw DomainError("lambda_path: empty grid");
  for (size_t i = 0; i < lambdas.size(); ++i) {
    if (!(lambdas[i] > 0)) throw DomainError("lambda_path: grid must be positive");
    if (i > 0 && !(lambdas[i] < lambdas[i - 1]))
      throw DomainError("lambda_path: grid must be strictly decreasing");
  }
  std::vector<FitResult> out;
  out.reserve(lambdas.size());
  const Vec* warm = nullptr;
  for (double lam : lambdas) {
    out.push_back(fit(z, y, idx, spec, lam, cfg, warm));
    warm = &out.back().theta;
  }
  return out;
}

std::vector<double> default_lambda_grid(const Mat& z, const Vec& y, int count, double ratio) {
  if (count < 1) throw DomainError("default_lambda_grid: count must be >= 1");
  if (!(ratio > 0) || !(ratio < 1)) throw DomainError("default_lambda_grid: ratio in (0,1)");
  double n = static_cast<double>(z.rows());
  double top = (z.transpose() * y).cwiseAbs().maxCoeff() / n;
  if (!(top > 0)) throw DomainError("default_lambda_grid: response is orthogonal to the design");
  std::vector<double> grid(count);
  if (count == 1) {
    grid[0] = top;
    return grid;
  }
  double step = std::log(ratio) / (count - 1);
  for (int i = 0; i < count; ++i) grid[i] = top * std::exp(step * i);
  return grid;
}

}  // namespace hierint
