#include "permll/losses.hpp"

#include <algorithm>
#include <cmath>

#include "permll/errors.hpp"

namespace permll {
namespace {

void check_args(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw DomainError("loss: dimension mismatch");
  require_prob_vec(p, "loss prediction");
  require_prob_vec(q, "loss target");
}

double clamped_log(double x) { return std::log(std::max(x, kProbClamp)); }

Vec random_interior(std::size_t classes, Rng& rng) {
  Vec z(classes);
  for (double& v : z) v = rng.normal();
  return softmax(z);
}

}  // namespace

std::string_view to_string(LossKind kind) {
  switch (kind) {
    case LossKind::cross_entropy: return "cross_entropy";
    case LossKind::kl_divergence: return "kl_divergence";
    case LossKind::squared_l2: return "squared_l2";
  }
  return "unknown";
}

LossKind parse_loss_kind(std::string_view name) {
  if (name == "cross_entropy" || name == "ce") return LossKind::cross_entropy;
  if (name == "kl_divergence" || name == "kl") return LossKind::kl_divergence;
  if (name == "squared_l2" || name == "l2") return LossKind::squared_l2;
  throw ConfigError("unknown loss '" + std::string(name) +
                    "' (expected cross_entropy, kl_divergence or squared_l2)");
}

LossFn make_loss(LossKind kind) {
  LossFn fn;
  fn.kind = kind;
  fn.satisfies_assumption2 = true;
  switch (kind) {
    case LossKind::cross_entropy:
      fn.satisfies_assumption1 = false;
      break;
    case LossKind::kl_divergence:
      fn.satisfies_assumption1 = true;
      break;
    case LossKind::squared_l2:
      fn.satisfies_assumption1 = true;
      fn.grad_bound_M = 4.0;  // |2(p - q)|_1 <= 2 (|p|_1 + |q|_1)
      break;
  }
  return fn;
}

double loss(const LossFn& fn, std::span<const double> p, std::span<const double> q) {
  check_args(p, q);
  double total = 0.0;
  switch (fn.kind) {
    case LossKind::cross_entropy:
      for (std::size_t i = 0; i < p.size(); ++i)
        if (q[i] > 0.0) total -= q[i] * clamped_log(p[i]);
      break;
    case LossKind::kl_divergence:
      for (std::size_t i = 0; i < p.size(); ++i)
        if (q[i] > 0.0) total += q[i] * (clamped_log(q[i]) - clamped_log(p[i]));
      // Rounding can leave KL(p || p) a hair below zero.
      total = std::max(total, 0.0);
      break;
    case LossKind::squared_l2:
      for (std::size_t i = 0; i < p.size(); ++i) total += (p[i] - q[i]) * (p[i] - q[i]);
      break;
  }
  return total;
}

Vec grad_p(const LossFn& fn, std::span<const double> p, std::span<const double> q) {
  check_args(p, q);
  Vec g(p.size(), 0.0);
  switch (fn.kind) {
    case LossKind::cross_entropy:
    case LossKind::kl_divergence:
      for (std::size_t i = 0; i < p.size(); ++i)
        if (q[i] > 0.0 && p[i] >= kProbClamp) g[i] = -q[i] / p[i];
      break;
    case LossKind::squared_l2:
      for (std::size_t i = 0; i < p.size(); ++i) g[i] = 2.0 * (p[i] - q[i]);
      break;
  }
  return g;
}

Vec grad_q(const LossFn& fn, std::span<const double> p, std::span<const double> q) {
  check_args(p, q);
  Vec g(p.size(), 0.0);
  switch (fn.kind) {
    case LossKind::cross_entropy:
      for (std::size_t i = 0; i < p.size(); ++i) g[i] = -clamped_log(p[i]);
      break;
    case LossKind::kl_divergence:
      for (std::size_t i = 0; i < p.size(); ++i)
        g[i] = clamped_log(q[i]) + 1.0 - clamped_log(p[i]);
      break;
    case LossKind::squared_l2:
      for (std::size_t i = 0; i < p.size(); ++i) g[i] = -2.0 * (p[i] - q[i]);
      break;
  }
  return g;
}

bool assumption1_holds(const LossFn& fn, std::size_t trials, Rng& rng, std::size_t classes) {
  bool ok = true;
  for (std::size_t t = 0; t < trials; ++t) {
    const Vec p = random_interior(classes, rng);
    const Vec q = random_interior(classes, rng);
    if (p != q && !(loss(fn, p, q) > 0.0)) ok = false;
    if (loss(fn, p, p) > 1e-12) ok = false;
  }
  return ok;
}

Vec sample_low_confidence(std::size_t classes, Rng& rng) {
  const double c = static_cast<double>(classes);
  const double width = (1.0 / c) * rng.uniform01();  // target p_max - p_min, < 1/c
  Vec d(classes);
  if (rng.bernoulli(0.25)) {
    // One coordinate at the bottom, the rest at the top: the smallest p_min
    // the region allows for this width.
    std::fill(d.begin(), d.end(), 1.0);
    d[rng.uniform_index(classes)] = 0.0;
  } else {
    for (double& v : d) v = rng.uniform01();
  }
  const auto [lo_it, hi_it] = std::minmax_element(d.begin(), d.end());
  const double lo = *lo_it;
  const double range = *hi_it - lo;
  Vec p(classes);
  if (range <= 0.0) {
    std::fill(p.begin(), p.end(), 1.0 / c);
    return p;
  }
  for (std::size_t i = 0; i < classes; ++i) p[i] = (d[i] - lo) / range * width;
  double shift = 0.0;
  for (double v : p) shift += v;
  shift = (1.0 - shift) / c;
  for (double& v : p) v += shift;
  return p;
}

double measure_grad_bound(const LossFn& fn, std::size_t classes, std::size_t samples, Rng& rng) {
  double worst = 0.0;
  for (std::size_t t = 0; t < samples; ++t) {
    const Vec p = sample_low_confidence(classes, rng);
    Vec q;
    if (rng.bernoulli(0.5)) {
      q.assign(classes, 0.0);
      // The largest |grad|_1 for log losses comes from the smallest p entry.
      const auto target = rng.bernoulli(0.5)
                              ? static_cast<std::size_t>(rng.uniform_index(classes))
                              : static_cast<std::size_t>(std::min_element(p.begin(), p.end()) -
                                                         p.begin());
      q[target] = 1.0;
    } else {
      q = random_interior(classes, rng);
    }
    worst = std::max(worst, l1_norm(grad_p(fn, p, q)));
  }
  return worst;
}

LossFn calibrate_grad_bound(LossFn fn, std::size_t classes, std::size_t samples, Rng& rng) {
  if (fn.kind == LossKind::squared_l2) {
    fn.grad_bound_M = 4.0;
    fn.grad_bound_empirical = false;
    fn.grad_bound_classes = 0;
    return fn;
  }
  fn.grad_bound_M = measure_grad_bound(fn, classes, samples, rng);
  fn.grad_bound_empirical = true;
  fn.grad_bound_classes = classes;
  return fn;
}

}  // namespace permll
