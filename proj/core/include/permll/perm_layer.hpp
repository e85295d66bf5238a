#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "permll/numerics.hpp"

namespace permll {

// P(a, b): the identity with rows a and b exchanged. P(a, a) is the identity.
struct SwapMatrix {
  ClassIndex a = 0;
  ClassIndex b = 0;

  Matrix to_dense(std::size_t classes) const;
  Vec apply(std::span<const double> v) const;
};

struct PermApplyResult {
  Vec output;
  Vec mix;  // S(alpha)
};

// Per-sample permutation logits alpha^i, stored row-major, each row tied to
// the sample's noisy label.
class AlphaTable {
 public:
  AlphaTable() = default;
  AlphaTable(std::size_t classes, std::vector<ClassIndex> noisy_labels);

  std::size_t samples() const noexcept { return noisy_labels_.size(); }
  std::size_t classes() const noexcept { return classes_; }

  std::span<double> row(std::size_t i) { return {values_.data() + i * classes_, classes_}; }
  std::span<const double> row(std::size_t i) const {
    return {values_.data() + i * classes_, classes_};
  }
  ClassIndex noisy_label(std::size_t i) const { return noisy_labels_[i]; }
  const std::vector<ClassIndex>& noisy_labels() const noexcept { return noisy_labels_; }

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }

  bool operator==(const AlphaTable&) const = default;

 private:
  std::size_t classes_ = 0;
  std::vector<ClassIndex> noisy_labels_;
  std::vector<double> values_;
};

// Dense sum_i S(alpha)_i P(y, i). Reference path for tests only.
Matrix build_dense(std::span<const double> alpha, ClassIndex noisy_label);

// Closed-form P_alpha v for a mix s = S(alpha) and any vector v, O(c):
//   out[y] = s . v,  out[j] = (1 - s_j) v_j + s_j v_y  (j != y).
// P_alpha is symmetric, so this is also its transpose product.
Vec mix_apply(std::span<const double> mix, ClassIndex noisy_label, std::span<const double> v);

PermApplyResult apply_to_vec(std::span<const double> alpha, ClassIndex noisy_label,
                             std::span<const double> p);

// P_alpha e_y, which is S(alpha) exactly.
Vec apply_to_label(std::span<const double> alpha, ClassIndex noisy_label);

// Gradient over alpha of upstream . (P_alpha p).
Vec grad_alpha(std::span<const double> alpha, ClassIndex noisy_label, std::span<const double> p,
               std::span<const double> upstream);

// Same, with the mix already computed.
Vec grad_alpha_from_mix(std::span<const double> mix, ClassIndex noisy_label,
                        std::span<const double> p, std::span<const double> upstream);

// Canonical gauge: alpha_y = ln(I_alpha), alpha_j = ln((1 - I_alpha) / (c - 1)).
// Requires 1/c < I_alpha < 1.
AlphaTable init_alpha(std::span<const ClassIndex> noisy_labels, double init_weight,
                      std::size_t classes);

// True iff the unique argmax of alpha is clean_label. Ties are incorrect.
bool permutation_correct(std::span<const double> alpha, ClassIndex clean_label);

// Percentage of rows whose permutation is correct against the clean labels.
double permutation_accuracy(const AlphaTable& table, std::span<const ClassIndex> clean_labels);

}  // namespace permll
