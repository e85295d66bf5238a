#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "permll/numerics.hpp"
#include "permll/rng.hpp"

namespace permll {

enum class LossKind { cross_entropy, kl_divergence, squared_l2 };

std::string_view to_string(LossKind kind);
LossKind parse_loss_kind(std::string_view name);  // throws ConfigError

// A loss l(p, q) on the simplex: p is the prediction, q the target.
//
// satisfies_assumption1: l(p, q) = 0 iff p = q. Cross-entropy fails it for
// non-degenerate targets because CE(p, p) is the entropy of p.
// satisfies_assumption2: |grad_p l|_1 <= M on the low-confidence region
// p_max - p_min < 1/c.
// M is exact for squared_l2. For the log losses it depends on c and is
// measured by calibrate_grad_bound; grad_bound_classes records the c it was
// measured at.
struct LossFn {
  LossKind kind = LossKind::cross_entropy;
  bool satisfies_assumption1 = false;
  bool satisfies_assumption2 = true;
  std::optional<double> grad_bound_M;
  bool grad_bound_empirical = false;
  std::size_t grad_bound_classes = 0;  // 0: valid for every c
};

LossFn make_loss(LossKind kind);

// Clamp applied to probabilities inside log terms.
inline constexpr double kProbClamp = 1e-12;

// kl_divergence is KL(q || p) = sum_i q_i log(q_i / p_i), finite for one-hot
// targets.
double loss(const LossFn& fn, std::span<const double> p, std::span<const double> q);
Vec grad_p(const LossFn& fn, std::span<const double> p, std::span<const double> q);
// Gradient over the target. Needed when the permutation acts on the label.
Vec grad_q(const LossFn& fn, std::span<const double> p, std::span<const double> q);

// Samples random interior p != q pairs and checks l(p, q) > 0 and l(p, p) <= 1e-12.
bool assumption1_holds(const LossFn& fn, std::size_t trials, Rng& rng, std::size_t classes = 3);

// Random point of the region p_max - p_min < 1/c. Mixes uniform draws with
// extreme configurations that push against the region boundary.
Vec sample_low_confidence(std::size_t classes, Rng& rng);

// Largest |grad_p l(p, q)|_1 seen over `samples` draws of p from the
// low-confidence region and q from one-hot and interior targets.
double measure_grad_bound(const LossFn& fn, std::size_t classes, std::size_t samples, Rng& rng);

// Returns fn with a gradient bound M attached: the analytic M = 4 for
// squared_l2, otherwise the measured bound at this class count.
LossFn calibrate_grad_bound(LossFn fn, std::size_t classes, std::size_t samples, Rng& rng);

}  // namespace permll
