#pragma once

#include <filesystem>

#include "config.hpp"
#include "permll/trainer.hpp"

namespace permll::cli {

// The labelled pool before noise, plus the clean test set when one exists.
struct LoadedData {
  Dataset pool;
  std::optional<std::vector<ClassIndex>> pool_clean;  // csv with a clean_label column
  std::optional<Dataset> test;
};

// Missing files raise ConfigError naming the path.
LoadedData load_dataset(const DatasetConfig& config);

// Injects noise into the pool (or adopts the labels of an already-noisy CSV),
// holds out the validation part, then standardizes on the training split.
NoisyDataset noisy_pool(const RunConfig& config, const LoadedData& data);
TrainData build_train_data(const RunConfig& config);

// <root>/<UTC timestamp>-<tag>, made unique with a numeric suffix.
// root: config.output.dir, else $PERMLL_OUTPUT_ROOT, else ./runs.
std::filesystem::path make_run_directory(const OutputConfig& output, const std::string& tag);

}  // namespace permll::cli
