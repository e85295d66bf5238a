#pragma once

#include <filesystem>
#include <span>
#include <string>

#include "permll/trainer.hpp"

namespace permll {

// report.json: run metadata plus one object per epoch. Optional metrics are null.
std::string report_to_json(const RunReport& report, int indent = 2);
RunReport report_from_json(const std::string& text);

// epochs.csv header:
// epoch,lr,eta_alpha,train_loss,val_accuracy,test_accuracy,perm_accuracy,
// mean_confidence,mean_alpha_grad_l1,low_conf_samples,prop4_violations,prop4_max_ratio
// Missing metrics are empty cells; reals use 17 significant digits.
std::string epochs_csv(const RunReport& report);

// eta_alpha,I_alpha,perm_accuracy,test_accuracy; failed cells have empty metrics.
std::string sweep_csv(std::span<const SweepCell> cells);

void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

std::string format_real(double v);

}  // namespace permll
