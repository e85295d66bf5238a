#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "permll/checkpoint.hpp"
#include "permll/noise.hpp"
#include "permll/trainer.hpp"

namespace permll::cli {

// A small TOML subset: [table] headers, `key = value` lines, # comments.
// Values are strings ("..."), integers, reals, booleans and (nested) arrays.
struct Value {
  enum class Kind { boolean, integer, real, string, array };
  Kind kind = Kind::string;
  bool b = false;
  std::int64_t i = 0;
  double d = 0.0;
  std::string s;
  std::vector<Value> items;
  std::size_t line = 0;

  double as_real() const;  // integers widen
};

// Flat map from dotted key ("train.eta_alpha") to value.
using Document = std::map<std::string, Value>;

Document parse_document(std::string_view text);
Value parse_value(std::string_view text, std::size_t line = 0);
// `dotted.key=value`; a bare word that is not a number or boolean is a string.
void apply_override(Document& doc, std::string_view assignment);

enum class DatasetKind { blobs, csv, idx };

struct DatasetConfig {
  DatasetKind kind = DatasetKind::blobs;
  BlobSpec blobs;
  std::optional<std::size_t> test_per_class;  // blobs; defaults to per_class
  std::string path;                            // csv
  std::string test_path;                       // csv, optional
  std::optional<std::size_t> classes;          // csv/idx; inferred when absent
  std::string images, labels;                  // idx
  std::string test_images, test_labels;        // idx, optional
  bool flatten = true;
  std::optional<bool> standardize;  // default: on for idx, off otherwise
};

struct OutputConfig {
  std::string dir;  // empty: $PERMLL_OUTPUT_ROOT or ./runs
  CheckpointFormat checkpoint_format = CheckpointFormat::json;
};

struct RunConfig {
  DatasetConfig dataset;
  NoiseSpec noise;
  double holdout = 0.1;  // 0 disables the validation split
  TrainConfig train;
  OutputConfig output;
};

// Throws ConfigError on unknown keys, wrong types or invalid values.
RunConfig resolve(const Document& doc);
RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides);
// Canonical document that resolves back to the same RunConfig.
std::string render(const RunConfig& config);

std::string_view to_string(DatasetKind kind);

}  // namespace permll::cli
