#include "permll/perm_layer.hpp"

#include <cassert>
#include <cmath>
#include <string>

#include "permll/errors.hpp"

namespace permll {
namespace {

void require_label(ClassIndex y, std::size_t classes, const char* what) {
  if (y >= classes)
    throw DomainError(std::string(what) + ": class index " + std::to_string(y) +
                      " out of range for " + std::to_string(classes) + " classes");
}

}  // namespace

Matrix SwapMatrix::to_dense(std::size_t classes) const {
  require_label(a, classes, "SwapMatrix");
  require_label(b, classes, "SwapMatrix");
  Matrix m = Matrix::identity(classes);
  if (a != b) {
    m(a, a) = 0.0;
    m(b, b) = 0.0;
    m(a, b) = 1.0;
    m(b, a) = 1.0;
  }
  return m;
}

Vec SwapMatrix::apply(std::span<const double> v) const {
  require_label(a, v.size(), "SwapMatrix");
  require_label(b, v.size(), "SwapMatrix");
  Vec out(v.begin(), v.end());
  std::swap(out[a], out[b]);
  return out;
}

AlphaTable::AlphaTable(std::size_t classes, std::vector<ClassIndex> noisy_labels)
    : classes_(classes),
      noisy_labels_(std::move(noisy_labels)),
      values_(noisy_labels_.size() * classes, 0.0) {
  if (classes < 2) throw DomainError("AlphaTable: need at least 2 classes");
  if (noisy_labels_.empty()) throw DomainError("AlphaTable: need at least 1 sample");
  for (ClassIndex y : noisy_labels_) require_label(y, classes, "AlphaTable");
}

Matrix build_dense(std::span<const double> alpha, ClassIndex noisy_label) {
  const std::size_t c = alpha.size();
  require_label(noisy_label, c, "build_dense");
  const Vec s = softmax(alpha);
  Matrix out(c, c);
  for (std::size_t i = 0; i < c; ++i) {
    const Matrix swap = SwapMatrix{noisy_label, i}.to_dense(c);
    for (std::size_t r = 0; r < c; ++r)
      for (std::size_t k = 0; k < c; ++k) out(r, k) += s[i] * swap(r, k);
  }
  return out;
}

Vec mix_apply(std::span<const double> mix, ClassIndex noisy_label, std::span<const double> v) {
  const std::size_t c = mix.size();
  require_label(noisy_label, c, "mix_apply");
  if (v.size() != c) throw DomainError("mix_apply: dimension mismatch");
  const double vy = v[noisy_label];
  Vec out(c);
  for (std::size_t j = 0; j < c; ++j) out[j] = (1.0 - mix[j]) * v[j] + mix[j] * vy;
  out[noisy_label] = dot(mix, v);
  return out;
}

PermApplyResult apply_to_vec(std::span<const double> alpha, ClassIndex noisy_label,
                             std::span<const double> p) {
  require_prob_vec(p, "apply_to_vec");
  PermApplyResult result;
  result.mix = softmax(alpha);
  result.output = mix_apply(result.mix, noisy_label, p);
  return result;
}

Vec apply_to_label(std::span<const double> alpha, ClassIndex noisy_label) {
  require_label(noisy_label, alpha.size(), "apply_to_label");
  const Vec s = softmax(alpha);
  Vec e(alpha.size(), 0.0);
  e[noisy_label] = 1.0;
  Vec out = mix_apply(s, noisy_label, e);
  // Each off-label entry is (1 - s_j) * 0 + s_j * 1 and the label entry is
  // s . e_y, so the closed form reproduces S(alpha) bit for bit.
  assert(out == s);
  return out;
}

Vec grad_alpha_from_mix(std::span<const double> mix, ClassIndex noisy_label,
                        std::span<const double> p, std::span<const double> upstream) {
  const std::size_t c = mix.size();
  require_label(noisy_label, c, "grad_alpha");
  if (p.size() != c || upstream.size() != c) throw DomainError("grad_alpha: dimension mismatch");
  // upstream . P(y, i) p = upstream . p + (u_y - u_i)(p_i - p_y); the constant
  // term vanishes under the softmax Jacobian.
  const double uy = upstream[noisy_label];
  const double py = p[noisy_label];
  Vec per_swap(c);
  for (std::size_t i = 0; i < c; ++i) per_swap[i] = (uy - upstream[i]) * (p[i] - py);
  return softmax_jacobian_vec_from_probs(mix, per_swap);
}

Vec grad_alpha(std::span<const double> alpha, ClassIndex noisy_label, std::span<const double> p,
               std::span<const double> upstream) {
  require_finite(p, "grad_alpha");
  require_finite(upstream, "grad_alpha");
  const Vec s = softmax(alpha);
  return grad_alpha_from_mix(s, noisy_label, p, upstream);
}

AlphaTable init_alpha(std::span<const ClassIndex> noisy_labels, double init_weight,
                      std::size_t classes) {
  if (classes < 2) throw ConfigError("init_alpha: need at least 2 classes");
  const double lo = 1.0 / static_cast<double>(classes);
  if (!(init_weight > lo && init_weight < 1.0))
    throw ConfigError("init_alpha: I_alpha = " + std::to_string(init_weight) +
                      " must lie in (1/c, 1) = (" + std::to_string(lo) + ", 1)");
  AlphaTable table(classes, std::vector<ClassIndex>(noisy_labels.begin(), noisy_labels.end()));
  const double on = std::log(init_weight);
  const double off = std::log((1.0 - init_weight) / static_cast<double>(classes - 1));
  for (std::size_t i = 0; i < table.samples(); ++i) {
    auto row = table.row(i);
    for (std::size_t j = 0; j < classes; ++j) row[j] = (j == table.noisy_label(i)) ? on : off;
  }
  return table;
}

bool permutation_correct(std::span<const double> alpha, ClassIndex clean_label) {
  if (clean_label >= alpha.size()) return false;
  const double best = alpha[clean_label];
  for (std::size_t j = 0; j < alpha.size(); ++j)
    if (j != clean_label && alpha[j] >= best) return false;
  return true;
}

double permutation_accuracy(const AlphaTable& table, std::span<const ClassIndex> clean_labels) {
  if (clean_labels.size() != table.samples())
    throw DomainError("permutation_accuracy: label count mismatch");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < table.samples(); ++i)
    if (permutation_correct(table.row(i), clean_labels[i])) ++correct;
  return 100.0 * static_cast<double>(correct) / static_cast<double>(table.samples());
}

}  // namespace permll
