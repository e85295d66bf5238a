#include "permll/noise.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>

#include "permll/errors.hpp"

namespace permll {
namespace {

void require_rate(double rate) {
  if (!(rate >= 0.0 && rate <= 1.0))
    throw ConfigError("noise rate " + std::to_string(rate) + " outside [0, 1]");
}

NoiseResult finish(std::span<const ClassIndex> clean, std::vector<ClassIndex> noisy) {
  NoiseResult r;
  r.flip_mask.resize(clean.size());
  for (std::size_t i = 0; i < clean.size(); ++i) r.flip_mask[i] = noisy[i] != clean[i];
  r.noisy_labels = std::move(noisy);
  return r;
}

}  // namespace

std::string_view to_string(NoiseKind kind) {
  switch (kind) {
    case NoiseKind::none: return "none";
    case NoiseKind::symmetric: return "symmetric";
    case NoiseKind::asymmetric_map: return "asymmetric_map";
    case NoiseKind::asymmetric_cyclic: return "asymmetric_cyclic";
  }
  return "unknown";
}

NoiseKind parse_noise_kind(std::string_view name) {
  if (name == "none") return NoiseKind::none;
  if (name == "symmetric") return NoiseKind::symmetric;
  if (name == "asymmetric_map") return NoiseKind::asymmetric_map;
  if (name == "asymmetric_cyclic") return NoiseKind::asymmetric_cyclic;
  throw ConfigError("unknown noise kind '" + std::string(name) +
                    "' (expected none, symmetric, asymmetric_map or asymmetric_cyclic)");
}

double NoisyDataset::clean_fraction() const {
  if (noisy_labels.empty()) return 0.0;
  const auto flipped = std::count(flip_mask.begin(), flip_mask.end(), true);
  return 1.0 - static_cast<double>(flipped) / static_cast<double>(noisy_labels.size());
}

NoisyDataset NoisyDataset::subset(std::span<const std::size_t> indices) const {
  NoisyDataset out;
  out.features = Matrix(indices.size(), dims());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const std::size_t i = indices[r];
    const auto src = features.row(i);
    std::copy(src.begin(), src.end(), out.features.row(r).begin());
    out.noisy_labels.push_back(noisy_labels[i]);
    out.clean_labels.push_back(clean_labels[i]);
    out.flip_mask.push_back(flip_mask[i]);
  }
  out.classes = classes;
  out.clean_known = clean_known;
  out.name = name;
  return out;
}

Dataset NoisyDataset::noisy_view() const {
  Dataset d;
  d.features = features;
  d.labels = noisy_labels;
  d.classes = classes;
  d.name = name;
  return d;
}

NoiseResult inject_symmetric(std::span<const ClassIndex> labels, double rate, std::size_t classes,
                             Rng& rng, bool exclude_self) {
  require_rate(rate);
  if (classes < 2) throw ConfigError("symmetric noise: need at least 2 classes");
  const std::size_t n = labels.size();
  const auto count = static_cast<std::size_t>(std::llround(rate * static_cast<double>(n)));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  // Partial Fisher-Yates: the first `count` slots are a uniform sample
  // without replacement.
  for (std::size_t i = 0; i < count; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.uniform_index(n - i));
    std::swap(order[i], order[j]);
  }
  std::vector<ClassIndex> noisy(labels.begin(), labels.end());
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t i = order[k];
    if (exclude_self) {
      const auto draw = static_cast<ClassIndex>(rng.uniform_index(classes - 1));
      noisy[i] = draw >= labels[i] ? draw + 1 : draw;
    } else {
      noisy[i] = static_cast<ClassIndex>(rng.uniform_index(classes));
    }
  }
  return finish(labels, std::move(noisy));
}

NoiseResult inject_asymmetric_map(std::span<const ClassIndex> labels, double rate,
                                  std::span<const std::pair<ClassIndex, ClassIndex>> class_map,
                                  Rng& rng) {
  require_rate(rate);
  std::map<ClassIndex, ClassIndex> lookup;
  for (const auto& [from, to] : class_map) {
    if (from == to)
      throw ConfigError("asymmetric noise: class " + std::to_string(from + 1) + " maps to itself");
    auto [it, inserted] = lookup.emplace(from, to);
    if (!inserted && it->second != to)
      throw ConfigError("asymmetric noise: class " + std::to_string(from + 1) +
                        " has two targets");
  }
  std::vector<ClassIndex> noisy(labels.begin(), labels.end());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto it = lookup.find(labels[i]);
    if (it == lookup.end()) continue;
    if (rng.bernoulli(rate)) noisy[i] = it->second;
  }
  return finish(labels, std::move(noisy));
}

NoiseResult inject_asymmetric_cyclic(std::span<const ClassIndex> labels, double rate,
                                     std::size_t group_size, std::size_t classes, Rng& rng) {
  require_rate(rate);
  if (group_size == 0 || classes % group_size != 0)
    throw ConfigError("cyclic noise: group_size " + std::to_string(group_size) +
                      " does not divide " + std::to_string(classes) + " classes");
  std::vector<ClassIndex> noisy(labels.begin(), labels.end());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!rng.bernoulli(rate)) continue;
    const ClassIndex base = labels[i] - labels[i] % group_size;
    noisy[i] = base + (labels[i] - base + 1) % group_size;
  }
  return finish(labels, std::move(noisy));
}

NoisyDataset apply_noise(const Dataset& clean, const NoiseSpec& spec) {
  clean.validate();
  Rng rng(spec.seed);
  NoiseResult r;
  switch (spec.kind) {
    case NoiseKind::none:
      r = finish(clean.labels, clean.labels);
      break;
    case NoiseKind::symmetric:
      r = inject_symmetric(clean.labels, spec.rate, clean.classes, rng, spec.exclude_self);
      break;
    case NoiseKind::asymmetric_map:
      if (spec.class_map.empty()) throw ConfigError("asymmetric_map noise requires class_map");
      for (const auto& [from, to] : spec.class_map)
        if (from >= clean.classes || to >= clean.classes)
          throw ConfigError("class_map entry out of range");
      r = inject_asymmetric_map(clean.labels, spec.rate, spec.class_map, rng);
      break;
    case NoiseKind::asymmetric_cyclic:
      r = inject_asymmetric_cyclic(clean.labels, spec.rate, spec.group_size, clean.classes, rng);
      break;
  }
  NoisyDataset out;
  out.features = clean.features;
  out.noisy_labels = std::move(r.noisy_labels);
  out.clean_labels = clean.labels;
  out.flip_mask = std::move(r.flip_mask);
  out.classes = clean.classes;
  out.name = clean.name;
  return out;
}

NoisyDataset as_noisy(const Dataset& data, const std::vector<ClassIndex>* clean_labels) {
  data.validate();
  NoisyDataset out;
  out.features = data.features;
  out.noisy_labels = data.labels;
  out.classes = data.classes;
  out.name = data.name;
  out.clean_known = clean_labels != nullptr;
  out.clean_labels = clean_labels ? *clean_labels : data.labels;
  if (out.clean_labels.size() != out.noisy_labels.size())
    throw DomainError("as_noisy: clean label count mismatch");
  out.flip_mask.resize(out.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out.flip_mask[i] = out.noisy_labels[i] != out.clean_labels[i];
  return out;
}

std::pair<NoisyDataset, NoisyDataset> holdout_split(const NoisyDataset& data, double fraction,
                                                    Rng& rng) {
  if (!(fraction > 0.0 && fraction < 1.0))
    throw ConfigError("holdout fraction must lie in (0, 1)");
  const std::size_t n = data.size();
  const auto n_val = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  if (n_val == 0 || n_val >= n)
    throw ConfigError("holdout split of " + std::to_string(n) + " samples at fraction " +
                      std::to_string(fraction) + " leaves an empty side");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);
  std::vector<std::size_t> val(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
  std::vector<std::size_t> train(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
  std::sort(val.begin(), val.end());
  std::sort(train.begin(), train.end());
  return {data.subset(train), data.subset(val)};
}

}  // namespace permll
