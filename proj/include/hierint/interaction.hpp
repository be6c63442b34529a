#pragma once

#include <Eigen/Dense>
#include <set>
#include <utility>
#include <vector>

#include "hierint/errors.hpp"

namespace hierint {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Column layout of an expanded design with p main effects followed by all
// p(p-1)/2 pairwise products in lexicographic order (0,1), (0,2), ...,
// (p-2,p-1). Columns are 0-based everywhere, including serialized output.
class InteractionIndex {
 public:
  explicit InteractionIndex(int p);

  int p() const { return p_; }
  int p1() const { return p1_; }

  bool is_main(int col) const { return col >= 0 && col < p_; }

  // Column of the product x_j * x_k; requires 0 <= j < k < p.
  int pair_to_column(int j, int k) const;

  // Inverse of pair_to_column; requires p <= col < p1.
  std::pair<int, int> column_to_pair(int col) const;

 private:
  int p_;
  int p1_;
};

// Sparse support: main-effect indices plus interaction pairs (j < k).
struct SupportSet {
  std::set<int> main;
  std::set<std::pair<int, int>> pairs;

  int size() const { return static_cast<int>(main.size() + pairs.size()); }
  bool operator==(const SupportSet&) const = default;
};

// True when every pair (j,k) in S has both j and k among the main effects.
bool hierarchy_check(const SupportSet& s);

// Smallest hierarchical superset: adds the endpoints of every pair.
SupportSet hierarchy_closure(const SupportSet& s);

// Support as a dense indicator over the expanded columns.
std::vector<bool> support_mask(const SupportSet& s, const InteractionIndex& idx);

SupportSet support_from_vector(const Vec& theta, double threshold, const InteractionIndex& idx);

// Expanded design matrix together with the record needed to reproduce the
// transform on new rows. Expanded matrices are recomputed from X, never read
// from disk.
struct DesignMatrix {
  Mat values;      // n x p1
  Vec offset;      // per-column mean removed (zeros when centered == false)
  Vec scale;       // per-column divisor applied (ones when standardized == false)
  bool centered = false;
  bool standardized = false;
  int p = 0;

  int n() const { return static_cast<int>(values.rows()); }
  int p1() const { return static_cast<int>(values.cols()); }
  InteractionIndex index() const { return InteractionIndex(p); }
};

// Builds Z = (X, all pairwise products). Products are formed before any
// centering, so column means of Z are removed, not recomputed from centered X.
// `standardize` additionally rescales columns to unit sample deviation; it is
// an extra convenience and stays off in every shipped experiment.
DesignMatrix expand_design(const Mat& x, bool center, bool standardize = false);

}  // namespace hierint
