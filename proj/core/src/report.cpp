#include "permll/report.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "json_io.hpp"
#include "permll/errors.hpp"

namespace permll {
namespace detail {

json epoch_to_json(const EpochRecord& r) {
  return json{{"epoch", r.epoch},
              {"lr", r.lr},
              {"eta_alpha", r.eta_alpha},
              {"train_loss", r.train_loss},
              {"val_accuracy", optional_to_json(r.val_accuracy)},
              {"test_accuracy", optional_to_json(r.test_accuracy)},
              {"perm_accuracy", optional_to_json(r.perm_accuracy)},
              {"mean_confidence", r.mean_confidence},
              {"mean_alpha_grad_l1", r.mean_alpha_grad_l1},
              {"low_conf_samples", r.low_conf_samples},
              {"prop4_violations", r.prop4_violations},
              {"prop4_max_ratio", r.prop4_max_ratio}};
}

EpochRecord epoch_from_json(const json& j) {
  EpochRecord r;
  r.epoch = j.at("epoch").get<std::size_t>();
  r.lr = j.at("lr").get<double>();
  r.eta_alpha = j.at("eta_alpha").get<double>();
  r.train_loss = j.at("train_loss").get<double>();
  r.val_accuracy = optional_from_json(j.at("val_accuracy"));
  r.test_accuracy = optional_from_json(j.at("test_accuracy"));
  r.perm_accuracy = optional_from_json(j.at("perm_accuracy"));
  r.mean_confidence = j.at("mean_confidence").get<double>();
  r.mean_alpha_grad_l1 = j.at("mean_alpha_grad_l1").get<double>();
  r.low_conf_samples = j.at("low_conf_samples").get<std::size_t>();
  r.prop4_violations = j.at("prop4_violations").get<std::size_t>();
  r.prop4_max_ratio = j.at("prop4_max_ratio").get<double>();
  return r;
}

json report_to_json_value(const RunReport& r) {
  json epochs = json::array();
  for (const auto& e : r.epochs) epochs.push_back(epoch_to_json(e));
  json final_metrics = nullptr;
  if (const EpochRecord* last = r.final_epoch()) final_metrics = epoch_to_json(*last);
  return json{{"status", r.status},
              {"error", r.error},
              {"variant", r.variant},
              {"loss", r.loss},
              {"config_hash", r.config_hash},
              {"classes", r.classes},
              {"train_samples", r.train_samples},
              {"initial_perm_accuracy", optional_to_json(r.initial_perm_accuracy)},
              {"grad_bound_M", optional_to_json(r.grad_bound_M)},
              {"grad_bound_empirical", r.grad_bound_empirical},
              {"checkpoint", r.checkpoint_path},
              {"final", final_metrics},
              {"epochs", epochs}};
}

RunReport report_from_json_value(const json& j) {
  RunReport r;
  r.status = j.at("status").get<std::string>();
  r.error = j.at("error").get<std::string>();
  r.variant = j.at("variant").get<std::string>();
  r.loss = j.at("loss").get<std::string>();
  r.config_hash = j.at("config_hash").get<std::string>();
  r.classes = j.at("classes").get<std::size_t>();
  r.train_samples = j.at("train_samples").get<std::size_t>();
  r.initial_perm_accuracy = optional_from_json(j.at("initial_perm_accuracy"));
  r.grad_bound_M = optional_from_json(j.at("grad_bound_M"));
  r.grad_bound_empirical = j.at("grad_bound_empirical").get<bool>();
  r.checkpoint_path = j.at("checkpoint").get<std::string>();
  for (const auto& e : j.at("epochs")) r.epochs.push_back(epoch_from_json(e));
  return r;
}

}  // namespace detail

std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

std::string cell(const std::optional<double>& v) { return v ? format_real(*v) : std::string(); }

}  // namespace

std::string report_to_json(const RunReport& report, int indent) {
  return detail::report_to_json_value(report).dump(indent) + "\n";
}

RunReport report_from_json(const std::string& text) {
  try {
    return detail::report_from_json_value(detail::json::parse(text));
  } catch (const detail::json::exception& e) {
    throw ParseError(std::string("bad report JSON: ") + e.what());
  }
}

std::string epochs_csv(const RunReport& report) {
  std::ostringstream out;
  out << "epoch,lr,eta_alpha,train_loss,val_accuracy,test_accuracy,perm_accuracy,"
         "mean_confidence,mean_alpha_grad_l1,low_conf_samples,prop4_violations,prop4_max_ratio\n";
  for (const auto& r : report.epochs) {
    out << r.epoch << ',' << format_real(r.lr) << ',' << format_real(r.eta_alpha) << ','
        << format_real(r.train_loss) << ',' << cell(r.val_accuracy) << ','
        << cell(r.test_accuracy) << ',' << cell(r.perm_accuracy) << ','
        << format_real(r.mean_confidence) << ',' << format_real(r.mean_alpha_grad_l1) << ','
        << r.low_conf_samples << ',' << r.prop4_violations << ','
        << format_real(r.prop4_max_ratio) << '\n';
  }
  return out.str();
}

std::string sweep_csv(std::span<const SweepCell> cells) {
  std::ostringstream out;
  out << "eta_alpha,I_alpha,perm_accuracy,test_accuracy\n";
  for (const auto& c : cells)
    out << format_real(c.eta_alpha) << ',' << format_real(c.i_alpha) << ','
        << cell(c.perm_accuracy) << ',' << cell(c.test_accuracy) << '\n';
  return out.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write " + path.string());
  out << text;
  if (!out) throw ParseError("write failed for " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace permll
