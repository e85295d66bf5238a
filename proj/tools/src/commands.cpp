#include "commands.hpp"

#include <algorithm>
#include <filesystem>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "config.hpp"
#include "experiment.hpp"
#include "permll/checkpoint.hpp"
#include "permll/errors.hpp"
#include "permll/propcheck.hpp"
#include "permll/report.hpp"
#include "json.hpp"

namespace permll::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Maps library exceptions onto exit codes.
template <class F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const ParseError& e) {
    err << "input error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
}

fs::path prepare_dir(const std::string& explicit_dir, const OutputConfig& output, const std::string& tag) {
  if (explicit_dir.empty()) return make_run_directory(output, tag);
  fs::create_directories(explicit_dir);
  return explicit_dir;
}

std::string percent(const std::optional<double>& v) {
  if (!v) return "n/a";
  std::ostringstream s;
  s << std::fixed << std::setprecision(2) << *v << '%';
  return s.str();
}

json report_json(const PropReport& r) {
  json metrics = json::object();
  for (const auto& [k, v] : r.metrics) metrics[k] = v;
  return json{{"name", r.name},       {"loss", r.loss},         {"verdict", r.verdict},
              {"note", r.note},       {"trials", r.trials},     {"violations", r.violations},
              {"witness", r.witness}, {"metrics", metrics}};
}

}  // namespace

int cmd_train(const TrainOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const RunConfig config = load_config(opts.config, opts.overrides);
    const TrainData data = build_train_data(config);
    Trainer trainer(config.train, data);
    if (!opts.resume.empty()) {
      if (!fs::is_regular_file(opts.resume)) throw ConfigError("checkpoint not found: " + opts.resume);
      trainer.restore(load_checkpoint(opts.resume));
      out << "resumed from epoch " << trainer.epoch() << '\n';
    }
    const fs::path dir = prepare_dir(opts.run_dir, config.output, "train");
    write_text_file(dir / "config.resolved", render(config));

    RunReport report = trainer.run();
    const fs::path ckpt = dir / "ckpt";
    save_checkpoint(ckpt, trainer.checkpoint(), config.output.checkpoint_format);
    report.checkpoint_path = ckpt.string();
    write_text_file(dir / "report.json", report_to_json(report));
    write_text_file(dir / "epochs.csv", epochs_csv(report));

    out << "run directory: " << dir.string() << '\n';
    if (const EpochRecord* last = report.final_epoch()) {
      out << "epochs: " << last->epoch << "  train loss: " << format_real(last->train_loss) << '\n';
      out << "test accuracy: " << percent(last->test_accuracy)
          << "  validation accuracy (noisy labels): " << percent(last->val_accuracy) << '\n';
      if (last->perm_accuracy)
        out << "permutation accuracy: " << percent(last->perm_accuracy) << " (initial "
            << percent(report.initial_perm_accuracy) << ")\n";
    }
    if (!report.ok()) {
      err << "training diverged: " << report.error << '\n';
      return static_cast<int>(kRuntimeError);
    }
    return static_cast<int>(kOk);
  });
}

int cmd_sweep(const SweepOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (opts.eta_alpha.empty() || opts.i_alpha.empty())
      throw ConfigError("sweep needs non-empty --eta-alpha and --i-alpha lists");
    const RunConfig config = load_config(opts.config, opts.overrides);
    const TrainData data = build_train_data(config);
    const fs::path dir = prepare_dir(opts.run_dir, config.output, "sweep");
    write_text_file(dir / "config.resolved", render(config));

    const std::vector<SweepCell> cells =
        sweep(config.train, data, opts.eta_alpha, opts.i_alpha, std::max<std::size_t>(1, opts.jobs));
    write_text_file(dir / "sweep.csv", sweep_csv(cells));

    const SweepCell* best = nullptr;
    std::size_t failed = 0;
    for (const auto& c : cells) {
      if (!c.ok) {
        ++failed;
        err << "cell eta_alpha=" << format_real(c.eta_alpha) << " I_alpha=" << format_real(c.i_alpha)
            << " failed: " << c.error << '\n';
        continue;
      }
      if (c.perm_accuracy && (!best || *c.perm_accuracy > *best->perm_accuracy)) best = &c;
    }
    out << "run directory: " << dir.string() << '\n';
    out << "cells: " << cells.size() << "  failed: " << failed << '\n';
    if (best)
      out << "best cell: eta_alpha=" << format_real(best->eta_alpha)
          << " I_alpha=" << format_real(best->i_alpha)
          << " permutation accuracy " << percent(best->perm_accuracy)
          << " test accuracy " << percent(best->test_accuracy) << '\n';
    return static_cast<int>(failed < cells.size() ? kOk : kRuntimeError);
  });
}

int cmd_inject(const InjectOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (opts.out.empty()) throw ConfigError("inject needs an output path");
    const RunConfig config = load_config(opts.config, opts.overrides);
    const LoadedData data = load_dataset(config.dataset);
    const NoisyDataset noisy = noisy_pool(config, data);
    const Dataset view = noisy.noisy_view();
    write_csv_dataset(opts.out, view, &noisy.clean_labels);
    const auto flipped = std::count(noisy.flip_mask.begin(), noisy.flip_mask.end(), true);
    out << "wrote " << noisy.size() << " samples to " << opts.out << " (" << flipped
        << " labels differ from clean)\n";
    return static_cast<int>(kOk);
  });
}

int cmd_check(const CheckOptionsCli& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    CheckOptions co;
    co.trials = opts.trials;
    co.seed = opts.seed;
    co.gradient_fault = opts.gradient_fault;
    if (co.trials == 0) throw ConfigError("--trials must be positive");

    std::vector<PropReport> reports;
    std::vector<CurvePoint> curves;
    const std::vector<LossKind> kinds{LossKind::squared_l2, LossKind::kl_divergence,
                                      LossKind::cross_entropy};
    const std::vector<std::size_t> prop4_classes{3, 5, 10};
    for (const std::string& p : opts.props) {
      if (p == "1") {
        reports.push_back(check_prop1(co));
      } else if (p == "2") {
        for (LossKind k : kinds) reports.push_back(check_prop2(make_loss(k), co));
      } else if (p == "3") {
        for (LossKind k : kinds) reports.push_back(check_prop3(make_loss(k), co));
      } else if (p == "4") {
        for (LossKind k : kinds) reports.push_back(check_prop4_bound(make_loss(k), co, prop4_classes));
      } else if (p == "fig2") {
        Figure2Result f = check_figure2(co);
        reports.push_back(std::move(f.report));
        curves = std::move(f.points);
        write_text_file(opts.fig2_csv, figure2_csv(curves));
      } else {
        throw ConfigError("unknown property '" + p + "' (expected 1, 2, 3, 4 or fig2)");
      }
    }

    bool all_passed = true;
    json doc = json::array();
    for (const auto& r : reports) {
      all_passed = all_passed && r.passed();
      doc.push_back(report_json(r));
    }
    const json verdict{{"passed", all_passed}, {"seed", opts.seed}, {"checks", doc}};
    if (opts.json_path == "-") {
      out << verdict.dump(2) << '\n';
    } else {
      for (const auto& r : reports) {
        out << std::left << std::setw(6) << r.name << ' ' << std::setw(28) << r.loss << ' '
            << std::setw(8) << r.verdict << " trials=" << r.trials << " violations=" << r.violations;
        if (!r.note.empty()) out << "  [" << r.note << ']';
        out << '\n';
        for (const auto& [k, v] : r.metrics) out << "         " << k << " = " << format_real(v) << '\n';
        if (!r.witness.empty()) out << "         witness: " << r.witness << '\n';
      }
      if (!curves.empty()) out << "figure-2 curves written to " << opts.fig2_csv << '\n';
      if (!opts.json_path.empty()) write_text_file(opts.json_path, verdict.dump(2) + "\n");
      out << (all_passed ? "all checks passed" : "CHECK FAILURES") << '\n';
    }
    return static_cast<int>(all_passed ? kOk : kRuntimeError);
  });
}

int cmd_export_fig2(const Fig2Options& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (opts.alphas == 0) throw ConfigError("--alphas must be positive");
    Rng rng(opts.seed);
    const std::vector<Vec> alphas = sample_figure2_alphas(opts.alphas, rng);
    const std::vector<double> grid = default_p1_grid();
    std::vector<CurvePoint> points;
    for (LossKind kind : {LossKind::squared_l2, LossKind::kl_divergence})
      for (Variant v : {Variant::permute_label, Variant::permute_prediction}) {
        auto part = figure2_curves(make_loss(kind), v, alphas, grid);
        points.insert(points.end(), part.begin(), part.end());
      }
    write_text_file(opts.out, figure2_csv(points));
    out << "wrote " << points.size() << " points to " << opts.out << '\n';
    return static_cast<int>(kOk);
  });
}

}  // namespace permll::cli
