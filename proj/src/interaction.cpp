#include "hierint/interaction.hpp"

#include <cmath>
#include <string>

namespace hierint {

InteractionIndex::InteractionIndex(int p) : p_(p), p1_(p + p * (p - 1) / 2) {
  if (p < 1) throw DomainError("InteractionIndex: p must be >= 1, got " + std::to_string(p));
}

int InteractionIndex::pair_to_column(int j, int k) const {
  if (j < 0 || k <= j || k >= p_)
    throw DomainError("pair_to_column: need 0 <= j < k < p, got (" + std::to_string(j) + "," +
                      std::to_string(k) + ") with p=" + std::to_string(p_));
  // Pairs starting below j occupy sum_{i<j} (p-1-i) columns.
  int before = j * (2 * p_ - j - 1) / 2;
  return p_ + before + (k - j - 1);
}

std::pair<int, int> InteractionIndex::column_to_pair(int col) const {
  if (col < p_ || col >= p1_)
    throw DomainError("column_to_pair: column " + std::to_string(col) + " is not an interaction");
  int t = col - p_;
  int j = 0;
  while (t >= p_ - 1 - j) {
    t -= p_ - 1 - j;
    ++j;
  }
  return {j, j + 1 + t};
}

bool hierarchy_check(const SupportSet& s) {
  for (const auto& [j, k] : s.pairs) {
    if (!s.main.count(j) || !s.main.count(k)) return false;
  }
  return true;
}

SupportSet hierarchy_closure(const SupportSet& s) {
  SupportSet out = s;
  for (const auto& [j, k] : s.pairs) {
    out.main.insert(j);
    out.main.insert(k);
  }
  return out;
}

std::vector<bool> support_mask(const SupportSet& s, const InteractionIndex& idx) {
  std::vector<bool> mask(idx.p1(), false);
  for (int j : s.main) {
    if (j < 0 || j >= idx.p()) throw DomainError("support_mask: main index out of range");
    mask[j] = true;
  }
  for (const auto& [j, k] : s.pairs) mask[idx.pair_to_column(j, k)] = true;
  return mask;
}

SupportSet support_from_vector(const Vec& theta, double threshold, const InteractionIndex& idx) {
  if (theta.size() != idx.p1()) throw DomainError("support_from_vector: wrong length");
  if (threshold < 0) throw DomainError("support_from_vector: negative threshold");
  SupportSet s;
  for (int j = 0; j < idx.p(); ++j) {
    if (std::abs(theta[j]) > threshold) s.main.insert(j);
  }
  for (int c = idx.p(); c < idx.p1(); ++c) {
    if (std::abs(theta[c]) > threshold) s.pairs.insert(idx.column_to_pair(c));
  }
  return s;
}

DesignMatrix expand_design(const Mat& x, bool center, bool standardize) {
  const int n = static_cast<int>(x.rows());
  const int p = static_cast<int>(x.cols());
  if (n < 1 || p < 1) throw DomainError("expand_design: empty input");
  InteractionIndex idx(p);

  DesignMatrix d;
  d.p = p;
  d.values.resize(n, idx.p1());
  d.values.leftCols(p) = x;
  int c = p;
  for (int j = 0; j < p; ++j) {
    for (int k = j + 1; k < p; ++k) {
      d.values.col(c++) = x.col(j).cwiseProduct(x.col(k));
    }
  }

  d.offset = Vec::Zero(idx.p1());
  d.scale = Vec::Ones(idx.p1());
  if (center) {
    d.offset = d.values.colwise().mean();
    d.values.rowwise() -= d.offset.transpose();
    d.centered = true;
  }
  if (standardize) {
    for (int m = 0; m < idx.p1(); ++m) {
      double mean = center ? 0.0 : d.values.col(m).mean();
      double sd = std::sqrt((d.values.col(m).array() - mean).square().sum() / n);
      if (sd > 0) {
        d.scale[m] = sd;
        d.values.col(m) /= sd;
      }
    }
    d.standardized = true;
  }
  return d;
}

}  // namespace hierint
