#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "permll/data.hpp"
#include "permll/rng.hpp"

namespace permll {

enum class NoiseKind { none, symmetric, asymmetric_map, asymmetric_cyclic };

std::string_view to_string(NoiseKind kind);
NoiseKind parse_noise_kind(std::string_view name);

struct NoiseSpec {
  NoiseKind kind = NoiseKind::none;
  double rate = 0.0;
  std::vector<std::pair<ClassIndex, ClassIndex>> class_map;  // 0-based from -> to
  std::size_t group_size = 0;
  bool exclude_self = false;  // symmetric only: redraw among the other c - 1 classes
  std::uint64_t seed = 0;
};

struct NoiseResult {
  std::vector<ClassIndex> noisy_labels;
  std::vector<bool> flip_mask;  // noisy != clean
};

// Features with noisy training labels. clean_labels is for metrics only and
// never reaches the training loss.
struct NoisyDataset {
  Matrix features;
  std::vector<ClassIndex> noisy_labels;
  std::vector<ClassIndex> clean_labels;
  std::vector<bool> flip_mask;
  std::size_t classes = 0;
  bool clean_known = true;
  std::string name;

  std::size_t size() const noexcept { return noisy_labels.size(); }
  std::size_t dims() const noexcept { return features.cols(); }
  double clean_fraction() const;
  NoisyDataset subset(std::span<const std::size_t> indices) const;
  Dataset noisy_view() const;
};

// Selects exactly round(rate * N) indices without replacement and redraws
// each label uniformly over all c classes (or the other c - 1 with exclude_self).
NoiseResult inject_symmetric(std::span<const ClassIndex> labels, double rate, std::size_t classes,
                             Rng& rng, bool exclude_self = false);

// Per-sample Bernoulli(rate) flip for classes that appear as a map source.
NoiseResult inject_asymmetric_map(std::span<const ClassIndex> labels, double rate,
                                  std::span<const std::pair<ClassIndex, ClassIndex>> class_map,
                                  Rng& rng);

// Contiguous groups of group_size classes; a flipped label moves to the next
// class of its group, wrapping around.
NoiseResult inject_asymmetric_cyclic(std::span<const ClassIndex> labels, double rate,
                                     std::size_t group_size, std::size_t classes, Rng& rng);

NoisyDataset apply_noise(const Dataset& clean, const NoiseSpec& spec);

// Wraps labels that are already noisy. Clean labels are unknown unless given.
NoisyDataset as_noisy(const Dataset& data, const std::vector<ClassIndex>* clean_labels = nullptr);

// Uniform disjoint split; the validation part keeps its noisy labels.
std::pair<NoisyDataset, NoisyDataset> holdout_split(const NoisyDataset& data, double fraction,
                                                    Rng& rng);

}  // namespace permll
