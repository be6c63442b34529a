#include "hierint/bench.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <sstream>
#include <thread>

namespace hierint {

// --- covariance and design generation ---------------------------------------

Mat CovarianceSpec::materialize(int p) const {
  if (p < 1) throw DomainError("covariance: p must be >= 1");
  Mat sigma = Mat::Identity(p, p);
  switch (kind) {
    case Kind::Identity:
      break;
    case Kind::AR1: {
      if (!(std::abs(rho) < 1.0)) throw DomainError("ar1 covariance needs |rho| < 1");
      for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j) sigma(i, j) = std::pow(rho, std::abs(i - j));
      break;
    }
    case Kind::Toeplitz: {
      if (first_row.empty()) throw DomainError("toeplitz covariance needs a first row");
      if (static_cast<int>(first_row.size()) > p)
        throw DomainError("toeplitz first row longer than p");
      if (!(first_row[0] > 0)) throw DomainError("toeplitz diagonal must be positive");
      for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j) {
          int d = std::abs(i - j);
          sigma(i, j) = d < static_cast<int>(first_row.size()) ? first_row[d] : 0.0;
        }
      break;
    }
  }
  return sigma;
}

CovarianceSpec CovarianceSpec::parse(const std::string& text) {
  CovarianceSpec spec;
  if (text == "identity" || text.empty()) return spec;
  if (text.rfind("ar1:", 0) == 0) {
    spec.kind = Kind::AR1;
    try {
      spec.rho = std::stod(text.substr(4));
    } catch (const std::logic_error&) {
      throw DomainError("bad ar1 parameter in '" + text + "'");
    }
    return spec;
  }
  if (text.rfind("toeplitz:", 0) == 0) {
    spec.kind = Kind::Toeplitz;
    std::stringstream ss(text.substr(9));
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        spec.first_row.push_back(std::stod(item));
      } catch (const std::logic_error&) {
        throw DomainError("bad toeplitz entry '" + item + "'");
      }
    }
    if (spec.first_row.empty()) throw DomainError("toeplitz covariance needs entries");
    return spec;
  }
  throw DomainError("unknown covariance '" + text + "'");
}

std::string CovarianceSpec::label() const {
  switch (kind) {
    case Kind::Identity: return "identity";
    case Kind::AR1: {
      std::ostringstream os;
      os << "ar1:" << rho;
      return os.str();
    }
    case Kind::Toeplitz: {
      std::ostringstream os;
      os << "toeplitz:";
      for (size_t i = 0; i < first_row.size(); ++i) os << (i ? "," : "") << first_row[i];
      return os.str();
    }
  }
  return "?";
}

DesignKind DesignDistribution::parse_kind(const std::string& text) {
  if (text == "gaussian") return DesignKind::Gaussian;
  if (text == "rademacher") return DesignKind::Rademacher;
  if (text == "uniform") return DesignKind::UniformScaled;
  throw DomainError("unknown design kind '" + text + "'");
}

std::string DesignDistribution::label() const {
  std::string k = kind == DesignKind::Gaussian      ? "gaussian"
                  : kind == DesignKind::Rademacher ? "rademacher"
                                                   : "uniform";
  return k + "/" + cov.label();
}

namespace {

// Symmetric square root with tiny negative eigenvalues clamped to zero.
// Indefinite input (beyond rounding) is rejected.
Mat covariance_sqrt(const Mat& sigma) {
  Eigen::SelfAdjointEigenSolver<Mat> es(sigma);
  if (es.info() != Eigen::Success) throw DomainError("covariance eigendecomposition failed");
  Vec ev = es.eigenvalues();
  double top = std::max(1.0, ev.cwiseAbs().maxCoeff());
  if (ev.minCoeff() < -1e-8 * top) throw DomainError("covariance is not positive semidefinite");
  Vec root = ev.cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
}

double draw_base(Rng& rng, DesignKind kind) {
  switch (kind) {
    case DesignKind::Gaussian: return rng.normal();
    case DesignKind::Rademacher: return static_cast<double>(rng.rademacher());
    case DesignKind::UniformScaled: return rng.uniform_scaled();
  }
  return 0.0;
}

}  // namespace

Mat gen_design(int n, int p, const DesignDistribution& dist, std::uint64_t seed) {
  if (n < 1 || p < 1) throw DomainError("gen_design: need n >= 1, p >= 1");
  Rng rng(seed);
  Mat x(n, p);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < p; ++j) x(i, j) = draw_base(rng, dist.kind);
  if (dist.cov.kind != CovarianceSpec::Kind::Identity) {
    x = x * covariance_sqrt(dist.cov.materialize(p));
  }
  return x;
}

// --- synthetic truths ---------------------------------------------------------

namespace {

// First k entries of a seeded partial Fisher-Yates shuffle of `items`.
template <typename T>
std::vector<T> draw_without_replacement(std::vector<T> items, int k, Rng& rng) {
  const int m = static_cast<int>(items.size());
  for (int i = 0; i < k; ++i) {
    int j = i + static_cast<int>(rng.uniform01() * (m - i));
    j = std::min(j, m - 1);
    std::swap(items[i], items[j]);
  }
  items.resize(k);
  return items;
}

}  // namespace

TruthDraw gen_truth(int p, int s_main, int s_int, double magnitude, std::uint64_t seed) {
  if (p < 1) throw DomainError("gen_truth: p must be >= 1");
  if (s_main < 0 || s_main > p) throw DomainError("gen_truth: s_main out of range");
  int max_pairs = s_main * (s_main - 1) / 2;
  if (s_int < 0 || s_int > max_pairs)
    throw DomainError("gen_truth: s_int exceeds the pairs available among chosen mains");
  if (magnitude < 0) throw DomainError("gen_truth: magnitude must be >= 0");

  InteractionIndex idx(p);
  TruthDraw draw;
  draw.beta = Vec::Zero(idx.p1());
  if (magnitude == 0.0) return draw;

  Rng rng(seed);
  std::vector<int> all(p);
  std::iota(all.begin(), all.end(), 0);
  auto mains = draw_without_replacement(all, s_main, rng);
  std::sort(mains.begin(), mains.end());

  std::vector<std::pair<int, int>> candidates;
  for (size_t a = 0; a < mains.size(); ++a)
    for (size_t b = a + 1; b < mains.size(); ++b) candidates.push_back({mains[a], mains[b]});
  auto chosen = draw_without_replacement(candidates, s_int, rng);

  for (int j : mains) {
    draw.support.main.insert(j);
    draw.beta[j] = magnitude * rng.rademacher();
  }
  for (const auto& [j, k] : chosen) {
    draw.support.pairs.insert({j, k});
    draw.beta[idx.pair_to_column(j, k)] = magnitude * rng.rademacher();
  }
  return draw;
}

// --- expanded covariance spectrum ----------------------------------------------

EigRange expanded_cov_eigs(const DesignDistribution& dist, int p, int n_mc, std::uint64_t seed) {
  InteractionIndex idx(p);
  if (n_mc < 10 * idx.p1())
    throw DomainError("expanded_cov_eigs: need n_mc >= 10 * p1 for a usable estimate");

  EigRange out;
  {
    Eigen::SelfAdjointEigenSolver<Mat> es(dist.cov.materialize(p));
    out.premise_ok = es.eigenvalues().minCoeff() > 1e-10;
  }

  const int p1 = idx.p1();
  Mat gram = Mat::Zero(p1, p1);
  Vec total = Vec::Zero(p1);
  const int chunk = 8192;
  Rng rng(seed);
  Mat sqrt_sigma;
  if (dist.cov.kind != CovarianceSpec::Kind::Identity)
    sqrt_sigma = covariance_sqrt(dist.cov.materialize(p));

  int done = 0;
  while (done < n_mc) {
    int m = std::min(chunk, n_mc - done);
    Mat x(m, p);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < p; ++j) x(i, j) = draw_base(rng, dist.kind);
    if (sqrt_sigma.size()) x = x * sqrt_sigma;
    DesignMatrix z = expand_design(x, /*center=*/false);
    gram.noalias() += z.values.transpose() * z.values;
    total += z.values.colwise().sum();
    done += m;
  }

  Vec mean = total / static_cast<double>(n_mc);
  Mat cov = (gram - static_cast<double>(n_mc) * mean * mean.transpose()) /
            static_cast<double>(n_mc - 1);
  Eigen::SelfAdjointEigenSolver<Mat> es(cov);
  if (es.info() != Eigen::Success) throw DomainError("expanded_cov_eigs: eigensolver failed");
  out.min_eig = es.eigenvalues().minCoeff();
  out.max_eig = es.eigenvalues().maxCoeff();
  return out;
}

// --- noise correlation event -----------------------------------------------------

double noise_event_rate(int n, int p, const DesignDistribution& dist, double noise_psi2,
                        NoiseKind noise, const TheoryConstants& tc, int trials,
                        std::uint64_t seed) {
  if (trials < 1) throw DomainError("noise_event_rate: trials must be >= 1");
  if (noise_psi2 < 0) throw DomainError("noise_event_rate: noise scale must be >= 0");
  InteractionIndex idx(p);
  const double threshold = lambda_theory(n, idx.p1(), tc);

  int hits = 0;
  for (int t = 0; t < trials; ++t) {
    Mat x = gen_design(n, p, dist, derive_stream(seed, t, 1));
    DesignMatrix z = expand_design(x, /*center=*/true);
    Rng rng(derive_stream(seed, t, 2));
    Vec eps(n);
    for (int i = 0; i < n; ++i)
      eps[i] = noise == NoiseKind::Gaussian
                   ? noise_psi2 * rng.normal()
                   : noise_psi2 * static_cast<double>(rng.rademacher());
    double stat = (z.values.transpose() * eps).cwiseAbs().maxCoeff() / n;
    if (stat < threshold) ++hits;
  }
  return static_cast<double>(hits) / trials;
}

double noise_event_probability_bound(int n, int p1, double delta, double eta0, double ck) {
  if (n < 1 || p1 < 2) throw DomainError("noise_event_probability_bound: bad sizes");
  double q1 = 1.0 - 2.0 * std::exp(-ck * std::cbrt(static_cast<double>(n) * delta) +
                                   std::log(static_cast<double>(p1)));
  double q2 = 1.0 - std::pow(static_cast<double>(p1), -eta0);
  return std::clamp(q1, 0.0, 1.0) * std::clamp(q2, 0.0, 1.0);
}

// --- restricted eigenvalue search -------------------------------------------------

namespace {

struct ConeProblem {
  const Mat& gram;
  const std::vector<int>& support;
  double k0;
  double step;
};

// Scale freedom is spent on |a_J|_2 = 1; the l1 budget for the off-support
// part follows from the on-support part. Repair degenerate iterates by
// restarting the support on its first coordinate.
void project_cone(Vec& a, const ConeProblem& prob) {
  double on_l2 = 0.0;
  for (int c : prob.support) on_l2 += a[c] * a[c];
  on_l2 = std::sqrt(on_l2);
  if (on_l2 < 1e-12) {
    for (int c : prob.support) a[c] = 0.0;
    a[prob.support[0]] = 1.0;
    on_l2 = 1.0;
  } else {
    for (int c : prob.support) a[c] /= on_l2;
  }
  double on_l1 = 0.0;
  for (int c : prob.support) on_l1 += std::abs(a[c]);

  std::vector<bool> on(a.size(), false);
  for (int c : prob.support) on[c] = true;
  Vec off(a.size() - static_cast<int>(prob.support.size()));
  int m = 0;
  for (int c = 0; c < a.size(); ++c)
    if (!on[c]) off[m++] = a[c];
  off = project_l1_ball(off, prob.k0 * on_l1);
  m = 0;
  for (int c = 0; c < a.size(); ++c)
    if (!on[c]) a[c] = off[m++];
}

// Projected gradient descent on a' Ghat a over the cone; returns the best
// feasible value found and leaves the iterate in `a`.
double cone_descent(Vec& a, const ConeProblem& prob, int iters, Vec& best_a) {
  project_cone(a, prob);
  double best = a.dot(prob.gram * a);
  best_a = a;
  for (int it = 0; it < iters; ++it) {
    Vec grad = 2.0 * (prob.gram * a);
    a -= prob.step * grad;
    project_cone(a, prob);
    double val = a.dot(prob.gram * a);
    if (val < best) {
      best = val;
      best_a = a;
    }
  }
  return best;
}

void enumerate_supports(int p1, int s, std::vector<std::vector<int>>& out) {
  std::vector<int> cur(s);
  // Only size-s supports: for J within J', every J-cone vector is J'-cone
  // feasible with a no-smaller on-support norm, so supersets dominate the min.
  auto rec = [&](auto&& self, int start, int depth) -> void {
    if (depth == s) {
      out.push_back(cur);
      return;
    }
    for (int c = start; c <= p1 - (s - depth); ++c) {
      cur[depth] = c;
      self(self, c + 1, depth + 1);
    }
  };
  rec(rec, 0, 0);
}

}  // namespace

REEstimate re_constant(const Mat& z, int s, double k0, REMethod method, int budget,
                       std::uint64_t seed) {
  const int n = static_cast<int>(z.rows());
  const int p1 = static_cast<int>(z.cols());
  if (s < 1 || s > p1) throw DomainError("re_constant: sparsity out of range");
  if (k0 < 0) throw DomainError("re_constant: cone factor must be >= 0");
  if (budget < 0) throw DomainError("re_constant: budget must be >= 0");

  const Mat gram = (z.transpose() * z) / static_cast<double>(n);

  // Power iteration for the step size; deterministic start.
  Vec v = Vec::Ones(p1).normalized();
  for (int it = 0; it < 60; ++it) v = (gram * v).normalized();
  double top = v.dot(gram * v);
  double step = 0.45 / std::max(top, 1e-12);

  // The global bottom eigenvector is a cheap pointer at near-null directions.
  Vec bottom;
  if (p1 <= 512) {
    Eigen::SelfAdjointEigenSolver<Mat> es(gram);
    bottom = es.eigenvectors().col(0);
  }

  std::vector<std::vector<int>> supports;
  if (method == REMethod::ExhaustiveSupports) {
    double count = 1.0;
    for (int i = 0; i < s; ++i) count *= static_cast<double>(p1 - i) / (i + 1);
    if (count > 2e5)
      throw DomainError("re_constant: exhaustive enumeration too large; use random descent");
    enumerate_supports(p1, s, supports);
  } else {
    int m = std::max(budget, 1);
    std::vector<int> all(p1);
    std::iota(all.begin(), all.end(), 0);
    for (int t = 0; t < m; ++t) {
      Rng rng(derive_stream(seed, 0xC0DE, t));
      auto sup = draw_without_replacement(all, s, rng);
      std::sort(sup.begin(), sup.end());
      supports.push_back(sup);
    }
  }

  REEstimate est;
  est.cone_factor = k0;
  est.sparsity = s;
  est.method = method;
  est.value = std::numeric_limits<double>::infinity();

  const int iters = 120;
  const int random_starts = method == REMethod::ExhaustiveSupports ? budget : std::max(1, budget / 8);

  for (size_t jidx = 0; jidx < supports.size(); ++jidx) {
    const auto& sup = supports[jidx];
    ConeProblem prob{gram, sup, k0, step};

    std::vector<Vec> starts;
    {
      // On-support bottom eigenvector, off-support zero.
      Mat sub(sup.size(), sup.size());
      for (size_t a = 0; a < sup.size(); ++a)
        for (size_t b = 0; b < sup.size(); ++b)
          sub(static_cast<int>(a), static_cast<int>(b)) = gram(sup[a], sup[b]);
      Eigen::SelfAdjointEigenSolver<Mat> es(sub);
      Vec a0 = Vec::Zero(p1);
      for (size_t a = 0; a < sup.size(); ++a)
        a0[sup[a]] = es.eigenvectors().col(0)[static_cast<int>(a)];
      starts.push_back(a0);
    }
    if (bottom.size()) starts.push_back(bottom);
    for (int r = 0; r < random_starts; ++r) {
      Rng rng(derive_stream(seed, jidx + 1, r));
      Vec a(p1);
      for (int c = 0; c < p1; ++c) a[c] = rng.normal();
      starts.push_back(a);
    }

    for (auto& a : starts) {
      Vec best_a;
      double val = cone_descent(a, prob, iters, best_a);
      ++est.descents;
      if (val < est.value) {
        est.value = val;
        est.minimizer = best_a;
        est.support = sup;
      }
    }
  }

  // Report the ratio recomputed from the design itself.
  double on_l2 = 0.0;
  for (int c : est.support) on_l2 += est.minimizer[c] * est.minimizer[c];
  est.value = (z * est.minimizer).norm() / (std::sqrt(static_cast<double>(n)) * std::sqrt(on_l2));
  return est;
}

double re_sample_bound(int s, double k0, int p1, double eps, double c1, double floor_c1,
                       double ck_tilde) {
  if (s < 1 || p1 < 2) throw DomainError("re_sample_bound: bad sizes");
  if (!(eps > 0) || !(c1 > 0) || !(floor_c1 > 0) || !(ck_tilde > 0) || k0 < 0)
    throw DomainError("re_sample_bound: constants must be positive");
  double m1 = 16.0 * s * (1.0 + k0) * (1.0 + k0);
  double t2 = std::pow(c1 * m1 / ck_tilde * std::log(c1 * m1 * p1), 3.0);
  double t3 = std::pow(0.25 / ck_tilde * c1 * m1 * std::log(4.0 * c1 * m1 * p1), 3.0);
  return (1.0 / eps) * std::max({floor_c1, t2, t3});
}

double re_rate_factor(int s, double m_hat) {
  if (s < 1 || !(m_hat > 0)) throw DomainError("re_rate_factor: need s >= 1 and m > 0");
  return 16.0 * s / (m_hat * m_hat);
}

double re_rate_factor_general(int s, double m_hat, const SandwichConstants& c) {
  if (s < 1 || !(m_hat > 0)) throw DomainError("re_rate_factor_general: need s >= 1 and m > 0");
  if (!(2.0 * c.lower > 1.0)) throw DomainError("re_rate_factor_general: need lower > 1/2");
  double num = (c.upper + c.lower) * (c.upper + c.lower) * s;
  return num / ((2.0 * c.lower - 1.0) * m_hat * m_hat);
}

// --- linear vs quadratic probe ------------------------------------------------------

QuadraticProbe quadratic_form_probe(const Vec& u, const DesignDistribution& dist, int n_mc,
                                    std::uint64_t seed) {
  const int p1 = static_cast<int>(u.size());
  int p = static_cast<int>(std::round((-1.0 + std::sqrt(1.0 + 8.0 * p1)) / 2.0));
  if (p < 1 || p * (p + 1) / 2 != p1)
    throw DomainError("quadratic_form_probe: u length is not a valid expanded dimension");
  if (std::abs(u.norm() - 1.0) > 1e-9)
    throw DomainError("quadratic_form_probe: u must be a unit vector");
  if (n_mc < 10000) throw DomainError("quadratic_form_probe: need n_mc >= 1e4");

  InteractionIndex idx(p);
  QuadraticProbe probe;
  probe.w = Mat::Zero(p, p);
  for (int c = p; c < p1; ++c) {
    auto [j, k] = idx.column_to_pair(c);
    probe.w(j, k) = u[c];
    probe.w(k, j) = u[c];
  }
  if (probe.w.cwiseAbs().maxCoeff() == 0.0) return probe;  // purely linear direction

  Vec u1 = u.head(p);
  std::vector<double> lin(n_mc), quad(n_mc);
  Rng rng(seed);
  const int chunk = 8192;
  int done = 0;
  while (done < n_mc) {
    int m = std::min(chunk, n_mc - done);
    Mat x(m, p);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < p; ++j) x(i, j) = draw_base(rng, dist.kind);
    if (dist.cov.kind != CovarianceSpec::Kind::Identity)
      x = x * covariance_sqrt(dist.cov.materialize(p));
    Vec a = x * u1;
    Vec q = ((x * probe.w).cwiseProduct(x)).rowwise().sum();
    for (int i = 0; i < m; ++i) {
      lin[done + i] = a[i];
      quad[done + i] = q[i];
    }
    done += m;
  }

  auto mean_of = [&](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / v.size();
  };
  double ma = mean_of(lin), mq = mean_of(quad);
  double saa = 0.0, sqq = 0.0, saq = 0.0;
  for (int i = 0; i < n_mc; ++i) {
    saa += (lin[i] - ma) * (lin[i] - ma);
    sqq += (quad[i] - mq) * (quad[i] - mq);
    saq += (lin[i] - ma) * (quad[i] - mq);
  }
  bool linear_degenerate = u1.cwiseAbs().maxCoeff() == 0.0 || saa <= 0.0;
  probe.rho_hat = (linear_degenerate || sqq <= 0.0) ? 0.0 : saq / std::sqrt(saa * sqq);

  double sd = std::sqrt(sqq / (n_mc - 1));
  if (sd > 0) {
    std::vector<double> standardized(n_mc);
    for (int i = 0; i < n_mc; ++i) standardized[i] = (quad[i] - mq) / sd;
    probe.psi1_hat = psi_norm_estimate(standardized, PsiKind::Psi1, 10);
  }
  return probe;
}

// --- Orlicz norms ---------------------------------------------------------------------

double psi_norm_estimate(const std::vector<double>& samples, PsiKind kind, int qmax) {
  if (samples.size() < 10000)
    throw DomainError("psi_norm_estimate: need at least 1e4 samples");
  if (qmax < 1) throw DomainError("psi_norm_estimate: qmax must be >= 1");
  std::vector<double> sums(qmax, 0.0);
  for (double x : samples) {
    double a = std::abs(x);
    double acc = a;
    for (int q = 0; q < qmax; ++q) {
      sums[q] += acc;
      acc *= a;
    }
  }
  double best = 0.0;
  for (int q = 1; q <= qmax; ++q) {
    double root = std::pow(sums[q - 1] / samples.size(), 1.0 / q);
    double val = kind == PsiKind::Psi1 ? root / q : root / std::sqrt(static_cast<double>(q));
    best = std::max(best, val);
  }
  return best;
}

// --- scalar samplers ---------------------------------------------------------------------

double Sampler1D::sample(Rng& rng) const {
  switch (kind) {
    case Kind::Gaussian: return scale * rng.normal();
    case Kind::Rademacher: return scale * rng.rademacher();
    case Kind::UniformScaled: return scale * rng.uniform_scaled();
    case Kind::ExpCentered: return scale * (rng.exponential(1.0) - 1.0);
    case Kind::GaussProduct: {
      double a = rng.normal();
      double b = rng.normal();
      return scale * a * b;
    }
  }
  return 0.0;
}

double Sampler1D::variance() const { return scale * scale; }

Sampler1D Sampler1D::parse(const std::string& text) {
  std::string name = text;
  double scale = 1.0;
  if (auto pos = text.find(':'); pos != std::string::npos) {
    name = text.substr(0, pos);
    try {
      scale = std::stod(text.substr(pos + 1));
    } catch (const std::logic_error&) {
      throw DomainError("bad sampler scale in '" + text + "'");
    }
  }
  Sampler1D s;
  s.scale = scale;
  if (name == "gaussian") s.kind = Kind::Gaussian;
  else if (name == "rademacher") s.kind = Kind::Rademacher;
  else if (name == "uniform") s.kind = Kind::UniformScaled;
  else if (name == "exp-centered") s.kind = Kind::ExpCentered;
  else if (name == "gauss-product") s.kind = Kind::GaussProduct;
  else throw DomainError("unknown sampler '" + name + "'");
  if (!(s.scale > 0)) throw DomainError("sampler scale must be positive");
  return s;
}

std::string Sampler1D::label() const {
  std::string name;
  switch (kind) {
    case Kind::Gaussian: name = "gaussian"; break;
    case Kind::Rademacher: name = "rademacher"; break;
    case Kind::UniformScaled: name = "uniform"; break;
    case Kind::ExpCentered: name = "exp-centered"; break;
    case Kind::GaussProduct: name = "gauss-product"; break;
  }
  if (scale != 1.0) {
    std::ostringstream os;
    os << name << ":" << scale;
    return os.str();
  }
  return name;
}

// --- concentration of averaged squares -----------------------------------------------------

ConcentrationReport concentration_squares_check(const Sampler1D& sampler,
                                                const std::vector<int>& n_list, double delta,
                                                int trials, std::uint64_t seed) {
  if (n_list.empty()) throw DomainError("concentration_squares_check: empty n list");
  if (!(delta > 0)) throw DomainError("concentration_squares_check: delta must be > 0");
  if (trials < 1) throw DomainError("concentration_squares_check: trials must be >= 1");

  ConcentrationReport report;
  report.delta = delta;
  report.trials = trials;
  const double target = sampler.variance();

  std::vector<double> xs, ys;
  for (size_t i = 0; i < n_list.size(); ++i) {
    int n = n_list[i];
    if (n < 1) throw DomainError("concentration_squares_check: n must be >= 1");
    int exceed = 0;
    for (int t = 0; t < trials; ++t) {
      Rng rng(derive_stream(seed, i, t));
      double acc = 0.0;
      for (int k = 0; k < n; ++k) {
        double z = sampler.sample(rng);
        acc += z * z;
      }
      if (std::abs(acc / n - target) > delta) ++exceed;
    }
    ConcentrationRow row;
    row.n = n;
    row.freq = static_cast<double>(exceed) / trials;
    row.censored = exceed == 0;
    report.rows.push_back(row);
    // Zero counts are censored at half a count so the decay fit stays defined.
    double f = row.censored ? 0.5 / trials : row.freq;
    xs.push_back(std::cbrt(static_cast<double>(n) * delta));
    ys.push_back(std::log(f));
  }
  report.slope = n_list.size() >= 2 ? line_fit(xs, ys).slope : 0.0;
  return report;
}

// --- rate experiment ------------------------------------------------------------------------

SolverConfig ExperimentConfig::bench_solver_defaults() {
  SolverConfig cfg;
  cfg.max_iterations = 3000;
  cfg.primal_tol = 1e-7;
  cfg.dual_tol = 1e-7;
  cfg.trace_objective = false;
  return cfg;
}

void ExperimentConfig::validate() const {
  if (p_list.empty() || s_main_list.empty() || s_int_list.empty() || n_list.empty())
    throw DomainError("experiment config: empty grid dimension");
  if (penalties.empty()) throw DomainError("experiment config: no penalties");
  if (replications < 1) throw DomainError("experiment config: replications must be >= 1");
  if (!(magnitude >= 0) || !(noise_sd >= 0)) throw DomainError("experiment config: bad scales");
  if (lambda_fixed && !(*lambda_fixed > 0))
    throw DomainError("experiment config: fixed lambda must be > 0");
  if (!lambda_fixed && !(lambda_multiplier > 0))
    throw DomainError("experiment config: lambda multiplier must be > 0");
  tc.validate();
  for (int p : p_list) {
    InteractionIndex idx(p);
    for (const auto& pen : penalties) pen.validate(p);
    for (int sm : s_main_list)
      if (sm > p) throw DomainError("experiment config: s_main exceeds p");
  }
  bool any_cell = false;
  for (int sm : s_main_list)
    for (int si : s_int_list)
      if (si <= sm * (sm - 1) / 2) any_cell = true;
  if (!any_cell) throw DomainError("experiment config: no feasible (s_main, s_int) cell");
}

namespace {

struct Cell {
  int p, s_main, s_int, n;
  std::uint64_t full_index;  // position in the complete cross product, kept
                             // stable so streams survive grid edits
};

int resolve_threads(int requested, size_t tasks) {
  int t = requested;
  if (t <= 0) {
    if (const char* env = std::getenv("HIERINT_THREADS")) t = std::atoi(env);
  }
  if (t <= 0) t = static_cast<int>(std::thread::hardware_concurrency());
  if (t <= 0) t = 1;
  return static_cast<int>(std::min<size_t>(t, tasks));
}

}  // namespace

RateResult rate_experiment(const ExperimentConfig& cfg) {
  cfg.validate();

  std::vector<Cell> cells;
  std::uint64_t full = 0;
  for (int p : cfg.p_list)
    for (int sm : cfg.s_main_list)
      for (int si : cfg.s_int_list)
        for (int n : cfg.n_list) {
          // Cells whose interaction count cannot be hierarchical are skipped.
          if (si <= sm * (sm - 1) / 2) cells.push_back({p, sm, si, n, full});
          ++full;
        }

  const size_t reps = static_cast<size_t>(cfg.replications);
  const size_t tasks = cells.size() * reps;
  std::vector<std::vector<RateRow>> results(tasks);

  auto run_task = [&](size_t t) {
    const Cell& cell = cells[t / reps];
    const int rep = static_cast<int>(t % reps);
    std::uint64_t stream = derive_stream(cfg.seed, cell.full_index, rep);

    InteractionIndex idx(cell.p);
    Mat x = gen_design(cell.n, cell.p, cfg.dist, mix64(stream ^ 0x11));
    DesignMatrix design = expand_design(x, /*center=*/true);
    TruthDraw truth = gen_truth(cell.p, cell.s_main, cell.s_int, cfg.magnitude,
                                mix64(stream ^ 0x22));
    Rng noise_rng(mix64(stream ^ 0x33));
    Vec y = design.values * truth.beta;
    for (int i = 0; i < cell.n; ++i)
      y[i] += cfg.noise == NoiseKind::Gaussian
                  ? cfg.noise_sd * noise_rng.normal()
                  : cfg.noise_sd * static_cast<double>(noise_rng.rademacher());

    double lambda = cfg.lambda_fixed ? *cfg.lambda_fixed
                                     : cfg.lambda_multiplier * lambda_theory(cell.n, idx.p1(), cfg.tc);
    int s = cell.s_main + cell.s_int;
    double predicted = s * std::sqrt(std::log(static_cast<double>(idx.p1())) / cell.n);

    auto& rows = results[t];
    rows.reserve(cfg.penalties.size());
    for (const auto& pen : cfg.penalties) {
      FitResult fr = fit(design.values, y, idx, pen, lambda, cfg.solver);
      Vec v = fr.theta - truth.beta;
      RateRow row;
      row.penalty = pen.label();
      row.n = cell.n;
      row.p = cell.p;
      row.s = s;
      row.rep = rep;
      row.l1_error = v.cwiseAbs().sum();
      row.pe_error = evaluate(pen, v, idx);
      row.predicted = predicted;
      row.seed = stream;
      row.converged = fr.converged;
      rows.push_back(std::move(row));
    }
  };

  int nthreads = resolve_threads(cfg.threads, tasks);
  if (nthreads <= 1) {
    for (size_t t = 0; t < tasks; ++t) run_task(t);
  } else {
    std::atomic<size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(nthreads);
    for (int w = 0; w < nthreads; ++w)
      pool.emplace_back([&] {
        for (size_t t = next.fetch_add(1); t < tasks; t = next.fetch_add(1)) run_task(t);
      });
    for (auto& th : pool) th.join();
  }

  RateResult out;
  out.rows.reserve(tasks * cfg.penalties.size());
  for (auto& rows : results)
    for (auto& r : rows) out.rows.push_back(std::move(r));

  // Per-penalty cell means on the log-log scale.
  for (const auto& pen : cfg.penalties) {
    std::string label = pen.label();
    std::vector<double> xs, ys;
    int nonconverged = 0;
    // Rows for cell c occupy the flat block [c*reps*k, (c+1)*reps*k) with
    // k penalties per task.
    const size_t k = cfg.penalties.size();
    for (size_t c = 0; c < cells.size(); ++c) {
      double sum = 0.0;
      double predicted = 0.0;
      int count = 0;
      for (size_t t = c * reps; t < (c + 1) * reps; ++t) {
        for (size_t i = 0; i < k; ++i) {
          const RateRow& row = out.rows[t * k + i];
          if (row.penalty != label) continue;
          sum += row.l1_error;
          predicted = row.predicted;
          ++count;
          if (!row.converged) ++nonconverged;
        }
      }
      if (count > 0 && sum > 0) {
        xs.push_back(std::log(predicted));
        ys.push_back(std::log(sum / count));
      }
    }
    // A single usable cell leaves the slope undefined; report NaN rather than
    // aborting the whole experiment.
    LineFit lf;
    if (xs.size() >= 2) {
      lf = line_fit(xs, ys);
    } else {
      lf.slope = lf.slope_se = lf.r2 = std::numeric_limits<double>::quiet_NaN();
    }
    RateSummary s;
    s.penalty = label;
    s.slope = lf.slope;
    s.slope_se = lf.slope_se;
    s.r2 = lf.r2;
    s.cells = static_cast<int>(xs.size());
    s.nonconverged = nonconverged;
    out.summaries.push_back(s);
  }
  return out;
}

// --- least squares line ------------------------------------------------------------------------

LineFit line_fit(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw DomainError("line_fit: need >= 2 points");
  const size_t n = x.size();
  double mx = 0.0, my = 0.0;
  for (size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx <= 0) throw DomainError("line_fit: degenerate x values");
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double rss = 0.0;
  for (size_t i = 0; i < n; ++i) {
    double e = y[i] - (f.intercept + f.slope * x[i]);
    rss += e * e;
  }
  f.r2 = syy > 0 ? 1.0 - rss / syy : 1.0;
  f.slope_se = n > 2 ? std::sqrt(rss / (n - 2) / sxx) : 0.0;
  return f;
}

}  // namespace hierint
