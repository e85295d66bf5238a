#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace permll::cli {

enum ExitCode : int { kOk = 0, kRuntimeError = 1, kConfigError = 2 };

struct TrainOptions {
  std::string config;
  std::vector<std::string> overrides;
  std::string run_dir;  // exact output directory; default is a fresh timestamped one
  std::string resume;   // checkpoint to continue from
};

struct SweepOptions {
  std::string config;
  std::vector<std::string> overrides;
  std::vector<double> eta_alpha;
  std::vector<double> i_alpha;
  std::size_t jobs = 1;
  std::string run_dir;
};

struct InjectOptions {
  std::string config;
  std::vector<std::string> overrides;
  std::string out;
};

struct CheckOptionsCli {
  std::vector<std::string> props{"1", "2", "3", "4", "fig2"};
  std::size_t trials = 500;
  std::uint64_t seed = 0;
  std::string json_path;  // "-" prints the JSON to stdout instead of the summary
  std::string fig2_csv = "fig2.csv";
  double gradient_fault = 0.0;
};

struct Fig2Options {
  std::string out = "fig2.csv";
  std::size_t alphas = 8;
  std::uint64_t seed = 0;
};

int cmd_train(const TrainOptions& opts, std::ostream& out, std::ostream& err);
int cmd_sweep(const SweepOptions& opts, std::ostream& out, std::ostream& err);
int cmd_inject(const InjectOptions& opts, std::ostream& out, std::ostream& err);
int cmd_check(const CheckOptionsCli& opts, std::ostream& out, std::ostream& err);
int cmd_export_fig2(const Fig2Options& opts, std::ostream& out, std::ostream& err);

}  // namespace permll::cli
