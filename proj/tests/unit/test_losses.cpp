#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "permll/errors.hpp"
#include "permll/losses.hpp"
#include "permll/rng.hpp"

namespace permll {
namespace {

using testing::draw_classes;
using testing::draw_simplex;

const LossKind kAll[] = {LossKind::cross_entropy, LossKind::kl_divergence, LossKind::squared_l2};

Vec one_hot(std::size_t c, std::size_t k) {
  Vec v(c, 0.0);
  v[k] = 1.0;
  return v;
}

// Independent scalar definitions in long double.
double loss_ref(LossKind kind, std::span<const double> p, std::span<const double> q) {
  long double acc = 0.0L;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const long double pi = std::max<long double>(p[i], 1e-12L);
    switch (kind) {
      case LossKind::cross_entropy: acc -= q[i] * std::log(pi); break;
      case LossKind::kl_divergence:
        if (q[i] > 0) acc += q[i] * (std::log(static_cast<long double>(q[i])) - std::log(pi));
        break;
      case LossKind::squared_l2: acc += (static_cast<long double>(p[i]) - q[i]) * (p[i] - q[i]); break;
    }
  }
  return static_cast<double>(acc);
}

TEST(Loss, Examples) {
  const LossFn l2 = make_loss(LossKind::squared_l2);
  const LossFn ce = make_loss(LossKind::cross_entropy);
  const LossFn kl = make_loss(LossKind::kl_divergence);
  const Vec p{0.2, 0.3, 0.5};
  EXPECT_EQ(loss(l2, p, p), 0.0);
  EXPECT_NEAR(loss(ce, Vec{0.5, 0.5}, Vec{1.0, 0.0}), std::log(2.0), 1e-15);
  EXPECT_NEAR(loss(ce, Vec{0.5, 0.5}, Vec{1.0, 0.0}), 0.6931, 1e-4);
  EXPECT_EQ(loss(kl, Vec{0.5, 0.5}, Vec{0.5, 0.5}), 0.0);
}

TEST(Loss, Flags) {
  EXPECT_TRUE(make_loss(LossKind::squared_l2).satisfies_assumption1);
  EXPECT_TRUE(make_loss(LossKind::kl_divergence).satisfies_assumption1);
  EXPECT_FALSE(make_loss(LossKind::cross_entropy).satisfies_assumption1);
  EXPECT_EQ(make_loss(LossKind::squared_l2).grad_bound_M, 4.0);
  EXPECT_EQ(parse_loss_kind("kl_divergence"), LossKind::kl_divergence);
  EXPECT_THROW(parse_loss_kind("hinge"), ConfigError);
}

TEST(Loss, RejectsBadInput) {
  const LossFn l2 = make_loss(LossKind::squared_l2);
  EXPECT_THROW(loss(l2, Vec{0.5, 0.5}, Vec{1.0}), DomainError);
  EXPECT_THROW(loss(l2, Vec{0.9, 0.5}, Vec{1.0, 0.0}), DomainError);
  EXPECT_THROW(loss(l2, Vec{0.5, NAN}, Vec{1.0, 0.0}), DomainError);
}

TEST(Loss, PropertyNonnegativeAndMatchesReference) {
  Rng rng(31);
  for (LossKind kind : kAll) {
    const LossFn fn = make_loss(kind);
    for (int t = 0; t < 1000; ++t) {
      const std::size_t c = draw_classes(rng, 2, 10);
      const Vec p = draw_simplex(rng, c, rng.uniform(0.3, 3.0));
      const Vec q = rng.bernoulli(0.5) ? one_hot(c, rng.uniform_index(c)) : draw_simplex(rng, c);
      const double v = loss(fn, p, q);
      EXPECT_GE(v, 0.0 - (kind == LossKind::kl_divergence ? 1e-15 : 0.0));
      EXPECT_NEAR(v, loss_ref(kind, p, q), 1e-12 * std::max(1.0, std::abs(v)));
    }
  }
}

TEST(GradP, Examples) {
  const LossFn l2 = make_loss(LossKind::squared_l2);
  const Vec p{0.2, 0.3, 0.5};
  const Vec q{0.1, 0.1, 0.8};
  const Vec g = grad_p(l2, p, q);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(g[i], 2.0 * (p[i] - q[i]), 1e-15);
  for (double v : grad_p(l2, p, p)) EXPECT_EQ(v, 0.0);

  const LossFn ce = make_loss(LossKind::cross_entropy);
  const Vec gc = grad_p(ce, p, one_hot(3, 1));
  EXPECT_EQ(gc[0], 0.0);
  EXPECT_NEAR(gc[1], -1.0 / 0.3, 1e-12);
  EXPECT_EQ(gc[2], 0.0);
}

TEST(GradP, PropertyMatchesFiniteDifferences) {
  Rng rng(32);
  for (LossKind kind : kAll) {
    const LossFn fn = make_loss(kind);
    for (int t = 0; t < 1000; ++t) {
      const std::size_t c = draw_classes(rng, 2, 8);
      const Vec p = draw_simplex(rng, c, 0.8);
      const Vec q = rng.bernoulli(0.5) ? one_hot(c, rng.uniform_index(c)) : draw_simplex(rng, c);
      // Free-coordinate derivative: perturb p off the simplex.
      const Vec fd = testing::fd_ref([&](std::span<const double> x) { return loss_ref(kind, x, q); }, p,
                                     1e-5 * *std::min_element(p.begin(), p.end()));
      EXPECT_LE(testing::rel_error(grad_p(fn, p, q), fd), 1e-5) << to_string(kind);
    }
  }
}

TEST(GradQ, PropertyMatchesFiniteDifferences) {
  Rng rng(33);
  for (LossKind kind : kAll) {
    const LossFn fn = make_loss(kind);
    for (int t = 0; t < 500; ++t) {
      const std::size_t c = draw_classes(rng, 2, 8);
      const Vec p = draw_simplex(rng, c, 0.8);
      const Vec q = draw_simplex(rng, c, 0.8);
      const Vec fd = testing::fd_ref([&](std::span<const double> x) { return loss_ref(kind, p, x); }, q,
                                     1e-5 * *std::min_element(q.begin(), q.end()));
      EXPECT_LE(testing::rel_error(grad_q(fn, p, q), fd), 1e-5) << to_string(kind);
    }
  }
}

TEST(ZeroIffEqual, Examples) {
  Rng rng(34);
  EXPECT_TRUE(assumption1_holds(make_loss(LossKind::squared_l2), 1000, rng));
  EXPECT_TRUE(assumption1_holds(make_loss(LossKind::kl_divergence), 1000, rng));
  EXPECT_FALSE(assumption1_holds(make_loss(LossKind::cross_entropy), 1000, rng));
}

TEST(ZeroIffEqual, CrossEntropyOneHotTarget) {
  const LossFn ce = make_loss(LossKind::cross_entropy);
  Rng rng(35);
  for (int t = 0; t < 1000; ++t) {
    const std::size_t c = draw_classes(rng, 2, 10);
    const std::size_t k = rng.uniform_index(c);
    const Vec q = one_hot(c, k);
    EXPECT_EQ(loss(ce, q, q), 0.0);
    EXPECT_GT(loss(ce, draw_simplex(rng, c), q), 0.0);
  }
}

TEST(GradBound, SquaredL2BoundHolds) {
  const LossFn l2 = make_loss(LossKind::squared_l2);
  Rng rng(36);
  for (std::size_t c : {2u, 3u, 5u, 10u}) EXPECT_LE(measure_grad_bound(l2, c, 20000, rng), 4.0 + 1e-12);
}

TEST(GradBound, LowConfidenceSamplerStaysInRegion) {
  Rng rng(37);
  for (std::size_t c : {2u, 3u, 5u, 10u})
    for (int t = 0; t < 2000; ++t) {
      const Vec p = sample_low_confidence(c, rng);
      ASSERT_TRUE(is_prob_vec(p));
      ASSERT_LT(confidence(p), 1.0 / static_cast<double>(c));
    }
}

TEST(GradBound, CalibrationRecordsProvenance) {
  Rng rng(38);
  const LossFn l2 = calibrate_grad_bound(make_loss(LossKind::squared_l2), 5, 100, rng);
  EXPECT_EQ(l2.grad_bound_M, 4.0);
  EXPECT_FALSE(l2.grad_bound_empirical);

  const LossFn kl = calibrate_grad_bound(make_loss(LossKind::kl_divergence), 5, 20000, rng);
  ASSERT_TRUE(kl.grad_bound_M.has_value());
  EXPECT_TRUE(kl.grad_bound_empirical);
  EXPECT_EQ(kl.grad_bound_classes, 5u);
  // Target e_y and p_y near its smallest low-confidence value give |grad|_1 close to c^2.
  EXPECT_GT(*kl.grad_bound_M, 20.0);
  EXPECT_LE(*kl.grad_bound_M, 25.0 + 1e-9);
}

}  // namespace
}  // namespace permll
