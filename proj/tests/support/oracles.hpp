#pragma once

// Reference implementations for tests. Nothing here calls the library code it
// is used to check; arithmetic is done in long double where it matters.

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "permll/rng.hpp"

namespace permll::testing {

using LVec = std::vector<long double>;
using Dense = std::vector<std::vector<double>>;

std::vector<double> softmax_ref(std::span<const double> z);

// Explicit identity-with-rows-swapped matrices, summed with weights s.
Dense swap_matrix_ref(std::size_t c, std::size_t a, std::size_t b);
Dense perm_layer_ref(std::span<const double> s, std::size_t y);
std::vector<double> matvec_ref(const Dense& m, std::span<const double> v);

// Richardson-extrapolated central differences, O(h^4).
std::vector<double> fd_ref(const std::function<double(std::span<const double>)>& f,
                           std::span<const double> x, double h = 1e-4);

// max |a - b| / max(1, |b|_inf)
double rel_error(std::span<const double> a, std::span<const double> b);
double max_abs_diff(std::span<const double> a, std::span<const double> b);

// Generators.
std::size_t draw_classes(Rng& rng, std::size_t lo, std::size_t hi);
std::vector<double> draw_logits(Rng& rng, std::size_t c, double scale);
// Interior point of the simplex: normalised exponentials of N(0, spread^2).
std::vector<double> draw_simplex(Rng& rng, std::size_t c, double spread = 1.0);
std::vector<double> draw_vec(Rng& rng, std::size_t c, double scale = 1.0);

}  // namespace permll::testing
