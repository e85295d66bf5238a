#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "permll/numerics.hpp"

namespace permll {

struct Dataset {
  Matrix features;                 // N x m
  std::vector<ClassIndex> labels;  // 0-based
  std::size_t classes = 0;
  std::string name;
  std::vector<std::size_t> sample_shape;  // e.g. {28, 28}; empty means {m}

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t dims() const noexcept { return features.cols(); }

  // Throws DomainError on empty data, bad labels or non-finite features.
  void validate() const;
  Dataset subset(std::span<const std::size_t> indices) const;
};

struct BlobSpec {
  std::size_t classes = 3;
  std::size_t per_class = 1000;
  std::size_t dims = 2;
  double separation = 4.0;
  double stddev = 1.0;
  std::uint64_t seed = 0;
};

// Gaussian clusters. Centers sit on a sphere of radius `separation`:
// separation * e_k when dims >= classes, evenly spaced on a circle in the
// first two coordinates when 2 <= dims < classes, and evenly spaced on
// [-separation, separation] when dims == 1. Samples are interleaved by class.
Dataset make_blobs(const BlobSpec& spec);
Matrix blob_centers(const BlobSpec& spec);

// CSV schema: header "f1,...,fm,label" with an optional trailing
// "clean_label" column; labels are 1-based integers.
struct CsvTable {
  Dataset data;
  std::optional<std::vector<ClassIndex>> clean_labels;
};

// `classes` bounds the labels when given; otherwise c is the largest label seen.
CsvTable read_csv_table(const std::filesystem::path& path,
                        std::optional<std::size_t> classes = std::nullopt);
Dataset read_csv_dataset(const std::filesystem::path& path,
                         std::optional<std::size_t> classes = std::nullopt);

// Features are written with 17 significant digits so reading them back is exact.
void write_csv_dataset(const std::filesystem::path& path, const Dataset& data,
                       const std::vector<ClassIndex>* clean_labels = nullptr);

// IDX images (magic 0x00000803) and labels (0x00000801). Pixels are scaled by
// 1/255. IDX labels are already 0-based.
Dataset read_idx_pair(const std::filesystem::path& images, const std::filesystem::path& labels,
                      bool flatten = true, std::optional<std::size_t> classes = std::nullopt);

// Per-dimension zero-mean, unit-variance scaling fitted on one dataset and
// applied to others. Constant dimensions are only centered.
struct Standardizer {
  Vec mean;
  Vec scale;

  static Standardizer fit(const Dataset& data);
  void apply(Dataset& data) const;
};

}  // namespace permll
