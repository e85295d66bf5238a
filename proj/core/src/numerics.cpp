#include "permll/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "permll/errors.hpp"

namespace permll {

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Vec Matrix::multiply(std::span<const double> v) const {
  if (v.size() != cols_) throw DomainError("Matrix::multiply: dimension mismatch");
  Vec out(rows_, 0.0);
  for (std::size_t r = 0; r < rows_; ++r) out[r] = dot(row(r), v);
  return out;
}

Matrix Matrix::multiply(const Matrix& other) const {
  if (other.rows_ != cols_) throw DomainError("Matrix::multiply: dimension mismatch");
  Matrix out(rows_, other.cols_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t k = 0; k < cols_; ++k) {
      const double a = (*this)(r, k);
      for (std::size_t c = 0; c < other.cols_; ++c) out(r, c) += a * other(k, c);
    }
  return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double l1_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += std::abs(x);
  return s;
}

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

void require_finite(std::span<const double> v, const char* what) {
  if (!all_finite(v)) throw DomainError(std::string(what) + ": non-finite input");
}

bool is_prob_vec(std::span<const double> v, double tol) {
  if (v.empty() || !all_finite(v)) return false;
  double sum = 0.0;
  for (double x : v) {
    if (x < -tol) return false;
    sum += x;
  }
  return std::abs(sum - 1.0) <= tol;
}

void require_prob_vec(std::span<const double> v, const char* what, double tol) {
  if (!is_prob_vec(v, tol)) throw DomainError(std::string(what) + ": not a probability vector");
}

Vec softmax(std::span<const double> z) {
  require_finite(z, "softmax");
  if (z.empty()) throw DomainError("softmax: empty input");
  const double shift = *std::max_element(z.begin(), z.end());
  Vec out(z.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    out[i] = std::exp(z[i] - shift);
    sum += out[i];
  }
  for (double& x : out) x /= sum;
  return out;
}

Vec softmax_jacobian_vec_from_probs(std::span<const double> s, std::span<const double> v) {
  if (s.size() != v.size()) throw DomainError("softmax_jacobian_vec: dimension mismatch");
  const double sv = dot(s, v);
  Vec out(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) out[i] = s[i] * (v[i] - sv);
  return out;
}

Vec softmax_jacobian_vec(std::span<const double> z, std::span<const double> v) {
  require_finite(v, "softmax_jacobian_vec");
  const Vec s = softmax(z);
  return softmax_jacobian_vec_from_probs(s, v);
}

double confidence(std::span<const double> p) {
  const auto [lo, hi] = std::minmax_element(p.begin(), p.end());
  return *hi - *lo;
}

std::size_t argmax(std::span<const double> v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

Vec finite_difference_grad(const ScalarFn& f, std::span<const double> z, double h) {
  if (!(h > 0.0)) throw OracleError("finite_difference_grad: step must be positive");
  Vec probe(z.begin(), z.end());
  Vec grad(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + h;
    const double up = f(probe);
    probe[i] = orig - h;
    const double down = f(probe);
    probe[i] = orig;
    if (!std::isfinite(up) || !std::isfinite(down))
      throw OracleError("finite_difference_grad: non-finite evaluation at coordinate " +
                        std::to_string(i));
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

double gradient_mismatch(std::span<const double> analytic, std::span<const double> reference) {
  if (analytic.size() != reference.size()) throw DomainError("gradient_mismatch: size mismatch");
  const double scale = std::max(1.0, max_abs(reference));
  double worst = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i)
    worst = std::max(worst, std::abs(analytic[i] - reference[i]));
  return worst / scale;
}

}  // namespace permll
