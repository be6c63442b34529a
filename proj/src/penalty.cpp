#include "hierint/penalty.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace hierint {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double lq_norm(const Vec& x, double q) {
  if (x.size() == 0) return 0.0;
  double m = x.cwiseAbs().maxCoeff();
  if (m == 0.0) return 0.0;
  if (std::isinf(q)) return m;
  double acc = 0.0;
  for (int i = 0; i < x.size(); ++i) acc += std::pow(std::abs(x[i]) / m, q);
  return m * std::pow(acc, 1.0 / q);
}

// Interaction columns touching j, ascending in the other endpoint.
std::vector<int> interaction_cols_of(int j, const InteractionIndex& idx) {
  std::vector<int> cols;
  cols.reserve(idx.p() - 1);
  for (int k = 0; k < idx.p(); ++k) {
    if (k == j) continue;
    cols.push_back(idx.pair_to_column(std::min(j, k), std::max(j, k)));
  }
  return cols;
}

Vec gather(const Vec& theta, const std::vector<int>& cols) {
  Vec sub(cols.size());
  for (size_t i = 0; i < cols.size(); ++i) sub[static_cast<int>(i)] = theta[cols[i]];
  return sub;
}

double abs_sum(const Vec& theta, const std::vector<int>& cols) {
  double s = 0.0;
  for (int c : cols) s += std::abs(theta[c]);
  return s;
}

}  // namespace

PenaltySpec PenaltySpec::parse(const std::string& text) {
  std::string name = text;
  std::string params;
  if (auto pos = text.find(':'); pos != std::string::npos) {
    name = text.substr(0, pos);
    params = text.substr(pos + 1);
  }
  PenaltySpec spec;
  if (name == "lasso") spec.family = PenaltyFamily::Lasso;
  else if (name == "cap") spec.family = PenaltyFamily::Cap;
  else if (name == "bien") spec.family = PenaltyFamily::BienMaxL1;
  else if (name == "pairwise") spec.family = PenaltyFamily::PairwiseGroup;
  else if (name == "block") spec.family = PenaltyFamily::ContiguousBlock;
  else if (name == "nested") spec.family = PenaltyFamily::Nested;
  else throw DomainError("unknown penalty family '" + name + "'");

  std::stringstream ss(params);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    auto eq = item.find('=');
    if (eq == std::string::npos) throw DomainError("bad penalty parameter '" + item + "'");
    std::string key = item.substr(0, eq);
    std::string val = item.substr(eq + 1);
    try {
      if (key == "q") spec.q = (val == "inf") ? kInf : std::stod(val);
      else if (key == "d0") spec.d0 = std::stoi(val);
      else throw DomainError("unknown penalty parameter '" + key + "'");
    } catch (const std::logic_error&) {
      throw DomainError("bad value for penalty parameter '" + item + "'");
    }
  }
  spec.validate();
  return spec;
}

std::string PenaltySpec::label() const {
  auto fmt_q = [&] {
    if (std::isinf(q)) return std::string("inf");
    std::ostringstream os;
    os << q;
    return os.str();
  };
  switch (family) {
    case PenaltyFamily::Lasso: return "lasso";
    case PenaltyFamily::Cap: return "cap:q=" + fmt_q();
    case PenaltyFamily::BienMaxL1: return "bien";
    case PenaltyFamily::PairwiseGroup: return "pairwise:q=" + fmt_q();
    case PenaltyFamily::ContiguousBlock: return "block:q=" + fmt_q() + ",d0=" + std::to_string(d0);
    case PenaltyFamily::Nested: return "nested:q=" + fmt_q();
  }
  return "?";
}

void PenaltySpec::validate(std::optional<int> p) const {
  bool uses_q = family == PenaltyFamily::Cap || family == PenaltyFamily::PairwiseGroup ||
                family == PenaltyFamily::ContiguousBlock || family == PenaltyFamily::Nested;
  if (uses_q && !(q > 1.0)) throw DomainError("penalty exponent q must be > 1");
  if (family == PenaltyFamily::ContiguousBlock && d0 < 1)
    throw DomainError("block width d0 must be >= 1");
  if (p) {
    if (family == PenaltyFamily::PairwiseGroup && *p < 2)
      throw DomainError("pairwise penalty needs p >= 2");
    if (family == PenaltyFamily::ContiguousBlock && d0 > *p)
      throw DomainError("block width d0 exceeds p");
  }
}

double evaluate(const PenaltySpec& spec, const Vec& theta, const InteractionIndex& idx) {
  if (theta.size() != idx.p1()) throw DomainError("evaluate: theta has wrong length");
  spec.validate(idx.p());
  const int p = idx.p();

  double interaction_l1 = 0.0;
  for (int c = p; c < idx.p1(); ++c) interaction_l1 += std::abs(theta[c]);

  switch (spec.family) {
    case PenaltyFamily::Lasso:
      return theta.cwiseAbs().sum();

    case PenaltyFamily::Cap: {
      double total = interaction_l1;
      for (int j = 0; j < p; ++j) {
        auto cols = interaction_cols_of(j, idx);
        cols.insert(cols.begin(), j);
        total += lq_norm(gather(theta, cols), spec.q);
      }
      return total;
    }

    case PenaltyFamily::BienMaxL1: {
      double total = interaction_l1;
      for (int j = 0; j < p; ++j) {
        total += std::max(std::abs(theta[j]), abs_sum(theta, interaction_cols_of(j, idx)));
      }
      return total;
    }

    case PenaltyFamily::PairwiseGroup: {
      double w = 1.0 / (p - 1);
      double total = interaction_l1;
      for (int j = 0; j < p; ++j) {
        for (int k = j + 1; k < p; ++k) {
          int c = idx.pair_to_column(j, k);
          total += w * lq_norm(Vec{{theta[j], theta[c]}}, spec.q);
          total += w * lq_norm(Vec{{theta[k], theta[c]}}, spec.q);
        }
      }
      return total;
    }

    case PenaltyFamily::ContiguousBlock: {
      double total = 0.0;
      for (int end = spec.d0 - 1; end < p; ++end) {
        std::vector<int> group;
        std::vector<int> ints;
        for (int m = end - spec.d0 + 1; m <= end; ++m) group.push_back(m);
        for (int m = end - spec.d0 + 1; m <= end; ++m) {
          auto t = interaction_cols_of(m, idx);
          ints.insert(ints.end(), t.begin(), t.end());
        }
        group.insert(group.end(), ints.begin(), ints.end());
        total += lq_norm(gather(theta, group), spec.q) + 0.5 * abs_sum(theta, ints);
      }
      return total;
    }

    case PenaltyFamily::Nested: {
      double total = 0.0;
      for (int j = 0; j < p; ++j) {
        std::vector<int> owned;
        for (int k = 0; k < j; ++k) owned.push_back(idx.pair_to_column(k, j));
        std::vector<int> group = {j};
        group.insert(group.end(), owned.begin(), owned.end());
        total += lq_norm(gather(theta, group), spec.q) + abs_sum(theta, owned);
      }
      return total;
    }
  }
  throw DomainError("evaluate: unreachable");
}

AtomList atoms(const PenaltySpec& spec, const InteractionIndex& idx) {
  spec.validate(idx.p());
  const int p = idx.p();
  AtomList list;
  list.p1 = idx.p1();

  std::vector<int> all_interactions(idx.p1() - p);
  std::iota(all_interactions.begin(), all_interactions.end(), p);

  switch (spec.family) {
    case PenaltyFamily::Lasso: {
      std::vector<int> all(idx.p1());
      std::iota(all.begin(), all.end(), 0);
      list.atoms.push_back({all, 1.0, AtomNorm::L1, 0.0});
      break;
    }

    case PenaltyFamily::Cap: {
      for (int j = 0; j < p; ++j) {
        auto cols = interaction_cols_of(j, idx);
        cols.insert(cols.begin(), j);
        list.atoms.push_back({cols, 1.0, AtomNorm::Lq, spec.q});
      }
      if (!all_interactions.empty())
        list.atoms.push_back({all_interactions, 1.0, AtomNorm::L1, 0.0});
      break;
    }

    case PenaltyFamily::BienMaxL1: {
      for (int j = 0; j < p; ++j) {
        auto cols = interaction_cols_of(j, idx);
        cols.insert(cols.begin(), j);  // first column carries the |.| part
        list.atoms.push_back({cols, 1.0, AtomNorm::MaxAbsL1, 0.0});
      }
      if (!all_interactions.empty())
        list.atoms.push_back({all_interactions, 1.0, AtomNorm::L1, 0.0});
      break;
    }

    case PenaltyFamily::PairwiseGroup: {
      double w = 1.0 / (p - 1);
      for (int j = 0; j < p; ++j) {
        for (int k = j + 1; k < p; ++k) {
          int c = idx.pair_to_column(j, k);
          list.atoms.push_back({{j, c}, w, AtomNorm::Lq, spec.q});
          list.atoms.push_back({{k, c}, w, AtomNorm::Lq, spec.q});
        }
      }
      list.atoms.push_back({all_interactions, 1.0, AtomNorm::L1, 0.0});
      break;
    }

    case PenaltyFamily::ContiguousBlock: {
      for (int end = spec.d0 - 1; end < p; ++end) {
        std::vector<int> mains;
        std::vector<int> ints;
        for (int m = end - spec.d0 + 1; m <= end; ++m) mains.push_back(m);
        for (int m = end - spec.d0 + 1; m <= end; ++m) {
          auto t = interaction_cols_of(m, idx);
          ints.insert(ints.end(), t.begin(), t.end());
        }
        std::vector<int> group = mains;
        group.insert(group.end(), ints.begin(), ints.end());
        list.atoms.push_back({group, 1.0, AtomNorm::Lq, spec.q});
        if (!ints.empty()) list.atoms.push_back({ints, 0.5, AtomNorm::L1, 0.0});
      }
      break;
    }

    case PenaltyFamily::Nested: {
      for (int j = 0; j < p; ++j) {
        std::vector<int> owned;
        for (int k = 0; k < j; ++k) owned.push_back(idx.pair_to_column(k, j));
        std::vector<int> group = {j};
        group.insert(group.end(), owned.begin(), owned.end());
        list.atoms.push_back({group, 1.0, AtomNorm::Lq, spec.q});
        if (!owned.empty()) list.atoms.push_back({owned, 1.0, AtomNorm::L1, 0.0});
      }
      break;
    }
  }
  return list;
}

double atom_norm(const Atom& atom, const Vec& sub) {
  switch (atom.kind) {
    case AtomNorm::L1: return sub.cwiseAbs().sum();
    case AtomNorm::Lq: return lq_norm(sub, atom.q);
    case AtomNorm::MaxAbsL1: {
      double rest = sub.size() > 1 ? sub.tail(sub.size() - 1).cwiseAbs().sum() : 0.0;
      return std::max(std::abs(sub[0]), rest);
    }
  }
  throw DomainError("atom_norm: unreachable");
}

double atom_value(const Atom& atom, const Vec& theta) {
  return atom.weight * atom_norm(atom, gather(theta, atom.cols));
}

SandwichConstants sandwich_constants(const PenaltySpec& spec, int p) {
  spec.validate(p);
  switch (spec.family) {
    case PenaltyFamily::Lasso: return {1.0, 1.0};
    case PenaltyFamily::Cap: return {1.0, 3.0};
    case PenaltyFamily::BienMaxL1: return {1.0, 3.0};
    case PenaltyFamily::PairwiseGroup: return {1.0, 1.0 + 1.0 / (p - 1)};
    case PenaltyFamily::ContiguousBlock: return {1.0, 3.0 * spec.d0};
    case PenaltyFamily::Nested: return {1.0, 2.0};
  }
  throw DomainError("sandwich_constants: unreachable");
}

SandwichReport check_sandwich(const PenaltySpec& spec, const Vec& theta, const SupportSet& s,
                              const InteractionIndex& idx) {
  // The split below is only meaningful when S is closed under hierarchy.
  if (!hierarchy_check(s))
    throw DomainError("check_sandwich: support set is not hierarchical");
  auto mask = support_mask(s, idx);
  Vec on = Vec::Zero(idx.p1());
  Vec off = Vec::Zero(idx.p1());
  for (int c = 0; c < idx.p1(); ++c) (mask[c] ? on[c] : off[c]) = theta[c];

  auto consts = sandwich_constants(spec, idx.p());
  double pe = evaluate(spec, theta, idx);
  double pe_on = evaluate(spec, on, idx);
  double pe_off = evaluate(spec, off, idx);
  double tol = 1e-9 + 1e-10 * (1.0 + std::abs(pe));

  SandwichReport r;
  r.slack_subadditive = pe_on + pe_off - pe;
  r.slack_lower = pe - (pe_on + consts.lower * off.cwiseAbs().sum());
  r.slack_upper = consts.upper * on.cwiseAbs().sum() - pe_on;
  r.subadditive = r.slack_subadditive >= -tol;
  r.lower = r.slack_lower >= -tol;
  r.upper = r.slack_upper >= -tol;
  return r;
}

Vec project_l1_ball(const Vec& v, double radius) {
  if (radius < 0) throw DomainError("project_l1_ball: negative radius");
  if (v.cwiseAbs().sum() <= radius) return v;
  // The prefix scan below assumes a positive residual at the first element,
  // which fails only for a degenerate ball.
  if (radius == 0.0) return Vec::Zero(v.size());
  // Sort-based threshold search; the largest prefix with positive residual
  // fixes the shrinkage tau.
  std::vector<double> a(v.size());
  for (int i = 0; i < v.size(); ++i) a[i] = std::abs(v[i]);
  std::sort(a.begin(), a.end(), std::greater<>());
  double cum = 0.0, tau = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    cum += a[i];
    double cand = (cum - radius) / static_cast<double>(i + 1);
    if (a[i] - cand > 0)
      tau = cand;
    else
      break;
  }
  Vec out(v.size());
  for (int i = 0; i < v.size(); ++i) {
    double mag = std::max(std::abs(v[i]) - tau, 0.0);
    out[i] = std::copysign(mag, v[i]);
  }
  return out;
}

namespace {

// Solve x + c * x^(r-1) = a for x in [0, a]; strictly increasing in x.
double solve_scalar_power(double a, double c, double r) {
  if (a <= 0.0) return 0.0;
  double lo = 0.0, hi = a;
  for (int it = 0; it < 80; ++it) {
    double mid = 0.5 * (lo + hi);
    double f = mid + c * std::pow(mid, r - 1.0) - a;
    (f < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// Euclidean projection onto { y : |y|_r <= radius } for finite r > 1. On the
// boundary the stationarity condition reads y_i + c*y_i^(r-1) = |v_i| with
// c >= 0 (shrinkage scale absorbed), and |y(c)|_r decreases in c.
Vec project_lr_ball(const Vec& v, double radius, double r) {
  Vec mag = v.cwiseAbs();
  if (lq_norm(mag, r) <= radius) return v;
  auto y_of = [&](double c) {
    Vec y(v.size());
    for (int i = 0; i < v.size(); ++i) y[i] = solve_scalar_power(mag[i], c, r);
    return y;
  };
  double hi = 1.0;
  while (lq_norm(y_of(hi), r) > radius) hi *= 2.0;
  double lo = 0.0;
  for (int it = 0; it < 80; ++it) {
    double mid = 0.5 * (lo + hi);
    (lq_norm(y_of(mid), r) > radius ? lo : hi) = mid;
  }
  Vec y = y_of(0.5 * (lo + hi));
  for (int i = 0; i < v.size(); ++i) y[i] = std::copysign(y[i], v[i]);
  return y;
}

Vec soft_threshold(const Vec& v, double t) {
  Vec out(v.size());
  for (int i = 0; i < v.size(); ++i) {
    double mag = std::max(std::abs(v[i]) - t, 0.0);
    out[i] = std::copysign(mag, v[i]);
  }
  return out;
}

// Projection onto { (a, b) : |a| + |b|_inf <= t }, the dual ball of
// max{|a|, |b|_1}. For a fixed split r1 + r2 = t the projection clips a to
// [-r1, r1] and b to [-r2, r2]; the squared distance is convex in r1, so its
// subgradient is bisected.
Vec project_dual_max_ball(const Vec& v, double t) {
  double a0 = std::abs(v[0]);
  Vec rest = v.tail(v.size() - 1).cwiseAbs();
  if (a0 + (rest.size() ? rest.maxCoeff() : 0.0) <= t) return v;
  auto deriv = [&](double r1) {
    double d = -std::max(a0 - r1, 0.0);
    double r2 = t - r1;
    for (int i = 0; i < rest.size(); ++i) d += std::max(rest[i] - r2, 0.0);
    return d;
  };
  double lo = 0.0, hi = t;
  if (deriv(0.0) >= 0.0)
    hi = 0.0;
  else if (deriv(t) <= 0.0)
    lo = t;
  for (int it = 0; it < 80; ++it) {
    double mid = 0.5 * (lo + hi);
    (deriv(mid) < 0.0 ? lo : hi) = mid;
  }
  double r1 = 0.5 * (lo + hi), r2 = t - r1;
  Vec out(v.size());
  out[0] = std::clamp(v[0], -r1, r1);
  for (int i = 1; i < v.size(); ++i) out[i] = std::clamp(v[i], -r2, r2);
  return out;
}

}  // namespace

Vec prox_atom(AtomNorm kind, const Vec& v, double t, double q) {
  if (!(t > 0.0)) throw DomainError("prox_atom: step must be > 0");
  if (v.size() == 0) return v;
  switch (kind) {
    case AtomNorm::L1:
      return soft_threshold(v, t);

    case AtomNorm::Lq: {
      if (!(q > 1.0)) throw DomainError("prox_atom: q must be > 1");
      if (q == 2.0) {
        double n2 = v.norm();
        if (n2 <= t) return Vec::Zero(v.size());
        return v * (1.0 - t / n2);
      }
      // Moreau: prox of t*|.|_q is v minus the projection onto t times the
      // dual ball, with dual exponent q/(q-1).
      if (std::isinf(q)) return v - project_l1_ball(v, t);
      double r = q / (q - 1.0);
      return v - project_lr_ball(v, t, r);
    }

    case AtomNorm::MaxAbsL1:
      return v - project_dual_max_ball(v, t);
  }
  throw DomainError("prox_atom: unreachable");
}

}  // namespace hierint
