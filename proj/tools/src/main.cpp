#include <iostream>

#include "CLI11.hpp"
#include "commands.hpp"

using namespace permll::cli;

int main(int argc, char** argv) {
  CLI::App app{"permll: permutation layers for learning with noisy labels"};
  app.require_subcommand(1);

  TrainOptions train;
  auto* t = app.add_subcommand("train", "train a classifier (with or without permutation layers)");
  t->add_option("-c,--config", train.config, "run config file")->required();
  t->add_option("--set", train.overrides, "override a config value: table.key=value");
  t->add_option("--run-dir", train.run_dir, "write outputs here instead of a timestamped directory");
  t->add_option("--resume", train.resume, "continue from a checkpoint written by a previous run");

  SweepOptions sweep;
  auto* s = app.add_subcommand("sweep", "grid over eta_alpha x I_alpha, final permutation accuracy per cell");
  s->add_option("-c,--config", sweep.config, "run config file")->required();
  s->add_option("--set", sweep.overrides, "override a config value: table.key=value");
  s->add_option("--eta-alpha", sweep.eta_alpha, "comma separated eta_alpha values")
      ->delimiter(',')
      ->required();
  s->add_option("--i-alpha", sweep.i_alpha, "comma separated I_alpha values")->delimiter(',')->required();
  s->add_option("-j,--jobs", sweep.jobs, "cells trained concurrently")->check(CLI::PositiveNumber);
  s->add_option("--run-dir", sweep.run_dir, "write outputs here instead of a timestamped directory");

  InjectOptions inject;
  auto* in = app.add_subcommand("inject", "apply the configured label noise and export a CSV dataset");
  in->add_option("-c,--config", inject.config, "config with [dataset] and [noise] tables")->required();
  in->add_option("--set", inject.overrides, "override a config value: table.key=value");
  in->add_option("-o,--out", inject.out, "output CSV (f1..fm,label,clean_label)")->required();

  CheckOptionsCli check;
  auto* ch = app.add_subcommand("check", "numerical checks of the permutation-layer properties");
  ch->add_option("--props", check.props, "comma separated subset of 1,2,3,4,fig2")->delimiter(',');
  ch->add_option("--trials", check.trials, "random draws per check (per class count for 4)");
  ch->add_option("--seed", check.seed, "seed of the random draws");
  ch->add_option("--json", check.json_path, "write JSON verdicts to this file; '-' prints them instead");
  ch->add_option("--fig2-csv", check.fig2_csv, "where the fig2 check writes its curves");
  // Test hook: perturbs every analytic alpha-gradient so the checks must fail.
  ch->add_option("--inject-gradient-fault", check.gradient_fault)->group("");

  Fig2Options fig2;
  auto* f = app.add_subcommand("export-fig2", "write gradient-norm curves at c = 2 as CSV");
  f->add_option("-o,--out", fig2.out, "output CSV (variant,loss,alpha_id,p1,grad_l1)");
  f->add_option("--alphas", fig2.alphas, "number of sampled alpha vectors");
  f->add_option("--seed", fig2.seed, "seed for the sampled alphas");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }

  if (t->parsed()) return cmd_train(train, std::cout, std::cerr);
  if (s->parsed()) return cmd_sweep(sweep, std::cout, std::cerr);
  if (in->parsed()) return cmd_inject(inject, std::cout, std::cerr);
  if (ch->parsed()) return cmd_check(check, std::cout, std::cerr);
  return cmd_export_fig2(fig2, std::cout, std::cerr);
}
