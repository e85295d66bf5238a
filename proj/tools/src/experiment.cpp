#include "experiment.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>

#include "permll/errors.hpp"

namespace permll::cli {
namespace {

// Holdout draws come from their own stream of the noise seed.
constexpr std::uint64_t kHoldoutStream = 1;

void require_file(const std::string& path, const char* what) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec))
    throw ConfigError(std::string(what) + " not found: " + path);
}

void standardize_features(const Standardizer& s, Matrix& features, std::size_t classes) {
  if (features.rows() == 0) return;
  Dataset tmp;
  tmp.features = std::move(features);
  tmp.labels.assign(tmp.features.rows(), 0);
  tmp.classes = classes;
  s.apply(tmp);
  features = std::move(tmp.features);
}

}  // namespace

LoadedData load_dataset(const DatasetConfig& config) {
  LoadedData out;
  switch (config.kind) {
    case DatasetKind::blobs: {
      out.pool = make_blobs(config.blobs);
      BlobSpec test = config.blobs;
      test.seed = config.blobs.seed + 1;
      if (config.test_per_class) test.per_class = *config.test_per_class;
      if (test.per_class > 0) {
        out.test = make_blobs(test);
        out.test->name = "blobs-test";
      }
      break;
    }
    case DatasetKind::csv: {
      require_file(config.path, "dataset file");
      CsvTable table = read_csv_table(config.path, config.classes);
      out.pool = std::move(table.data);
      out.pool_clean = std::move(table.clean_labels);
      if (!config.test_path.empty()) {
        require_file(config.test_path, "test dataset file");
        out.test = read_csv_dataset(config.test_path, out.pool.classes);
      }
      break;
    }
    case DatasetKind::idx: {
      require_file(config.images, "image file");
      require_file(config.labels, "label file");
      out.pool = read_idx_pair(config.images, config.labels, config.flatten, config.classes);
      if (!config.test_images.empty() || !config.test_labels.empty()) {
        require_file(config.test_images, "test image file");
        require_file(config.test_labels, "test label file");
        out.test = read_idx_pair(config.test_images, config.test_labels, config.flatten,
                                 out.pool.classes);
      }
      break;
    }
  }
  if (out.test && out.test->dims() != out.pool.dims())
    throw ConfigError("test set has " + std::to_string(out.test->dims()) + " features, training has " +
                      std::to_string(out.pool.dims()));
  return out;
}

NoisyDataset noisy_pool(const RunConfig& config, const LoadedData& data) {
  if (data.pool_clean) {
    if (config.noise.kind != NoiseKind::none)
      throw ConfigError("dataset already carries noisy labels (clean_label column); set noise.kind = \"none\"");
    return as_noisy(data.pool, &*data.pool_clean);
  }
  return apply_noise(data.pool, config.noise);
}

TrainData build_train_data(const RunConfig& config) {
  LoadedData data = load_dataset(config.dataset);
  NoisyDataset pool = noisy_pool(config, data);
  TrainData td;
  if (config.holdout > 0.0) {
    Rng rng(Rng::derive_seed(config.noise.seed, kHoldoutStream));
    auto [train, validation] = holdout_split(pool, config.holdout, rng);
    td.train = std::move(train);
    td.validation = std::move(validation);
  } else {
    td.train = std::move(pool);
    td.validation.classes = td.train.classes;
    td.validation.features = Matrix(0, td.train.dims());
  }
  td.test = std::move(data.test);

  const bool standardize = config.dataset.standardize.value_or(config.dataset.kind == DatasetKind::idx);
  if (standardize) {
    const Standardizer s = Standardizer::fit(td.train.noisy_view());
    standardize_features(s, td.train.features, td.train.classes);
    standardize_features(s, td.validation.features, td.train.classes);
    if (td.test) s.apply(*td.test);
  }
  return td;
}

std::filesystem::path make_run_directory(const OutputConfig& output, const std::string& tag) {
  std::filesystem::path root = output.dir;
  if (root.empty()) {
    const char* env = std::getenv("PERMLL_OUTPUT_ROOT");
    root = env && *env ? env : "runs";
  }
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y%m%dT%H%M%SZ", &tm);
  std::filesystem::create_directories(root);
  const std::string base = std::string(stamp) + "-" + tag;
  for (int k = 0;; ++k) {
    std::filesystem::path dir = root / (k == 0 ? base : base + "-" + std::to_string(k));
    if (std::filesystem::create_directory(dir)) return dir;
  }
}

}  // namespace permll::cli
