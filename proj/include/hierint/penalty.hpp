#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hierint/interaction.hpp"

namespace hierint {

// Convex penalties over an expanded coefficient vector theta in R^{p1}.
// Writing T_j for the vector of all interaction coefficients involving j:
//
//   Lasso            |theta|_1
//   Cap              sum_j |(theta_j, T_j)|_q            + sum_{j<k} |theta_jk|
//   BienMaxL1        sum_j max{|theta_j|, |T_j|_1}       + sum_{j<k} |theta_jk|
//   PairwiseGroup    (p-1)^{-1} sum_{j<k} { |(theta_j, theta_jk)|_q
//                                         + |(theta_k, theta_jk)|_q }
//                                                        + sum_{j<k} |theta_jk|
//   ContiguousBlock  sum_{j>=d0} { |G_j|_q + |H_j|_1 / 2 },
//                      H_j = (T_{j-d0+1}, ..., T_j) concatenated with repeats,
//                      G_j = (theta_{j-d0+1}, ..., theta_j, H_j)
//   Nested           sum_j { |(theta_j, N_j)|_q + |N_j|_1 },
//                      N_j = (theta_kj : k < j), each pair owned by its
//                      larger index
//
// ContiguousBlock with d0 = 1 coincides with Cap. Every family is positively
// homogeneous and subadditive with value 0 at 0.
enum class PenaltyFamily { Lasso, Cap, BienMaxL1, PairwiseGroup, ContiguousBlock, Nested };

struct PenaltySpec {
  PenaltyFamily family = PenaltyFamily::Lasso;
  double q = 2.0;  // group exponent, > 1 (may be +inf); ignored by Lasso/BienMaxL1
  int d0 = 1;      // block width, >= 1; ContiguousBlock only

  // Parses "lasso", "cap:q=2", "bien", "pairwise:q=3", "block:q=2,d0=3",
  // "nested:q=2".
  static PenaltySpec parse(const std::string& text);
  std::string label() const;

  // Throws DomainError if the parameters are invalid, or invalid for this p.
  void validate(std::optional<int> p = std::nullopt) const;
};

// One norm term of a penalty: weight * norm(theta[cols]). `cols` may repeat an
// index; a repeated column enters the norm once per occurrence. For MaxAbsL1
// the first column carries the |.| part and the rest the l1 part.
enum class AtomNorm { L1, Lq, MaxAbsL1 };

struct Atom {
  std::vector<int> cols;
  double weight = 1.0;
  AtomNorm kind = AtomNorm::L1;
  double q = 2.0;  // Lq only
};

struct AtomList {
  std::vector<Atom> atoms;
  int p1 = 0;
};

// Penalty value, computed from the family formula directly. The atom route is
// kept separate so the two can be cross-checked.
double evaluate(const PenaltySpec& spec, const Vec& theta, const InteractionIndex& idx);

// Decomposition into weighted norm atoms; summing atom values reproduces
// evaluate() exactly. Every column of the design appears in at least one atom.
AtomList atoms(const PenaltySpec& spec, const InteractionIndex& idx);

double atom_value(const Atom& atom, const Vec& theta);
double atom_norm(const Atom& atom, const Vec& sub);

// Constants (lower, upper) declared for the sandwich
//   Pe(theta) >= Pe(theta_S) + lower * |theta_{S^c}|_1   (hierarchical S)
//   Pe(theta_S) <= upper * |theta_S|_1
// These are the published values for each family; check_sandwich measures
// whether they actually hold. See the test suite for the two families where
// the declared values fail (PairwiseGroup upper, ContiguousBlock lower for
// d0 >= 2).
struct SandwichConstants {
  double lower = 1.0;
  double upper = 1.0;
};

SandwichConstants sandwich_constants(const PenaltySpec& spec, int p);

struct SandwichReport {
  bool subadditive = false;  // Pe(theta_S + theta_Sc) <= Pe(theta_S) + Pe(theta_Sc)
  bool lower = false;
  bool upper = false;
  double slack_subadditive = 0.0;  // rhs - lhs; negative means violated
  double slack_lower = 0.0;
  double slack_upper = 0.0;
};

// Checks the sandwich at one (theta, S) with the declared constants, splitting
// theta into (theta_S, theta_{S^c}) for the subadditivity check. Tolerance is
// 1e-9 absolute plus 1e-10 relative.
SandwichReport check_sandwich(const PenaltySpec& spec, const Vec& theta, const SupportSet& s,
                              const InteractionIndex& idx);

// Proximal map of t * norm for one atom kind: argmin_x 0.5|x-v|^2 + t*norm(x).
// Lq uses the Moreau identity with a bisection on the dual-ball projection;
// q = 2 and q = inf take closed forms. Requires t > 0.
Vec prox_atom(AtomNorm kind, const Vec& v, double t, double q = 2.0);

// Euclidean projection onto the l1 ball of the given radius.
Vec project_l1_ball(const Vec& v, double radius);

}  // namespace hierint
