#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "wrep/cli.hpp"
#include "wrep/ensemble.hpp"
#include "wrep/errors.hpp"
#include "wrep/evaluation.hpp"
#include "wrep/model.hpp"
#include "wrep/run_config.hpp"
#include "wrep/training.hpp"

namespace wrep::cli {

namespace fs = std::filesystem;

namespace {

struct CommonOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
};

RunConfig resolve_config(const CommonOptions& opts) {
  RunConfig cfg = load_run_config(opts.config);
  if (opts.seed) cfg.seed = *opts.seed;
  if (opts.out) cfg.output_dir = *opts.out;
  return cfg;
}

// Files are rendered in memory first and only written once every output is
// ready; each one goes to a temporary name and is renamed into place.
class OutputSet {
 public:
  void add(std::string name, std::string contents) { files_.emplace_back(std::move(name), std::move(contents)); }

  void commit(const fs::path& dir, std::ostream& log) const {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());
    for (const auto& [name, contents] : files_) write_text_file(dir / (name + ".tmp"), contents);
    for (const auto& [name, contents] : files_) {
      fs::rename(dir / (name + ".tmp"), dir / name, ec);
      if (ec) throw IoError("cannot finalize '" + (dir / name).string() + "': " + ec.message());
      log << "wrote " << (dir / name).string() << '\n';
    }
  }

 private:
  std::vector<std::pair<std::string, std::string>> files_;
};

template <class Fn>
std::string render(Fn&& fn) {
  std::ostringstream s;
  fn(s);
  return s.str();
}

void cmd_synth(const CommonOptions& opts, std::ostream& out) {
  const RunConfig cfg = resolve_config(opts);
  if (!cfg.synthetic) throw DataError("synth: config has no dataset.synthetic section");
  const Dataset d = generate_synthetic(*cfg.synthetic, cfg.synth_seed());
  OutputSet files;
  files.add("dataset.csv", render([&](std::ostream& s) { write_csv(d, s); }));
  files.commit(cfg.output_dir, out);
}

void cmd_train(const CommonOptions& opts, std::ostream& out) {
  const RunConfig cfg = resolve_config(opts);
  const Dataset d = load_configured_dataset(cfg);
  const ExperimentSplits s = make_splits(cfg, d);
  const auto specs = cfg.attack_specs();
  const PipelineResult r =
      train_robust_pipeline(s.train, s.val, specs, cfg.train_config(), cfg.kan_config(d.n_features()));

  OutputSet files;
  files.add("base_model.json", dump_json(to_json(r.base.model)));
  files.add("robust_model.json", dump_json(to_json(r.robust.model)));
  files.add("base_history.csv", render([&](std::ostream& o) { write_history_csv(r.base.history, o); }));
  files.add("robust_history.csv", render([&](std::ostream& o) { write_history_csv(r.robust.history, o); }));
  files.commit(cfg.output_dir, out);
  out << "base: best epoch " << r.base.history.best_epoch << ", val loss "
      << r.base.history.val_loss[r.base.history.best_epoch - 1] << '\n';
  out << "robust: best epoch " << r.robust.history.best_epoch << ", val loss "
      << r.robust.history.val_loss[r.robust.history.best_epoch - 1] << " (" << r.robust_train_size
      << " training samples)\n";
}

void cmd_tune(const CommonOptions& opts, const std::string& base_path, const std::string& robust_path,
              std::ostream& out) {
  const RunConfig cfg = resolve_config(opts);
  EnsembleModel e;
  e.base = load_model(base_path);
  e.robust = load_model(robust_path);
  const Dataset d = load_configured_dataset(cfg);
  if (d.n_features() != e.base.network.config.n_inputs || d.n_features() != e.robust.network.config.n_inputs) {
    throw DataError("tune: model input width does not match the dataset");
  }
  const ExperimentSplits s = make_splits(cfg, d);
  const auto objective = cfg.tune_specs();
  const LambdaTuning t = tune_lambda(e.base, e.robust, s.val, objective, cfg.lambda_grid);
  e.lambda = t.best_lambda;

  OutputSet files;
  files.add("ensemble_model.json", dump_json(to_json(e)));
  files.add("lambda_table.csv", render([&](std::ostream& o) { write_lambda_table_csv(t, o); }));
  files.commit(cfg.output_dir, out);
  out << "lambda* = " << t.best_lambda << '\n';
}

void cmd_sweep(const CommonOptions& opts, const std::string& ensemble_path, std::ostream& out) {
  const RunConfig cfg = resolve_config(opts);
  const EnsembleModel e = load_ensemble(ensemble_path);
  const Dataset d = load_configured_dataset(cfg);
  if (d.n_features() != e.base.network.config.n_inputs) {
    throw DataError("sweep: model input width does not match the dataset");
  }
  const ExperimentSplits s = make_splits(cfg, d);

  EvalReport report;
  for (const auto& [kind, strengths] : cfg.sweep_strengths) {
    if (strengths.empty()) continue;
    EvalReport part = attack_sweep(e, s.test, kind, strengths, cfg.sweep_seed(), cfg.sweep_repeats);
    report.cells.insert(report.cells.end(), part.cells.begin(), part.cells.end());
  }
  const auto summary = comparison_summary(report, cfg.reference_strengths);

  std::vector<ScatterRecord> scatter = scatter_export(e.base, s.test, ModelId::Base);
  const auto robust = scatter_export(e.robust, s.test, ModelId::Robust);
  const auto blended = scatter_export(e, s.test);
  scatter.insert(scatter.end(), robust.begin(), robust.end());
  scatter.insert(scatter.end(), blended.begin(), blended.end());

  OutputSet files;
  files.add("report.csv", render([&](std::ostream& o) { write_report_csv(report, o); }));
  files.add("scatter.csv", render([&](std::ostream& o) { write_scatter_csv(scatter, o); }));
  files.add("summary.csv", render([&](std::ostream& o) { write_summary_csv(summary, o); }));
  files.commit(cfg.output_dir, out);
  for (const auto& row : summary) {
    out << to_string(row.model) << " @ " << to_string(row.attack) << ' ' << row.strength << ": rmse " << row.rmse
        << " m\n";
  }
}

void add_common(CLI::App* sub, CommonOptions& opts) {
  sub->add_option("--config", opts.config, "Experiment config (JSON)")->required();
  sub->add_option("--seed", opts.seed, "Master seed (overrides config)");
  sub->add_option("--out", opts.out, "Output directory (overrides config)");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Adversarially robust KAN ensemble for RSSI indoor positioning", "wrep"};
  app.require_subcommand(1);

  CommonOptions opts;
  std::string base_path, robust_path, ensemble_path;

  auto* synth = app.add_subcommand("synth", "Generate a synthetic fingerprint dataset");
  add_common(synth, opts);
  auto* train = app.add_subcommand("train", "Train the base and robust models");
  add_common(train, opts);
  auto* tune = app.add_subcommand("tune", "Grid-search the ensemble blending coefficient");
  add_common(tune, opts);
  tune->add_option("--base", base_path, "Base model file")->required();
  tune->add_option("--robust", robust_path, "Robust model file")->required();
  auto* sweep = app.add_subcommand("sweep", "Evaluate all models across attack strengths");
  add_common(sweep, opts);
  sweep->add_option("--ensemble", ensemble_path, "Ensemble model file")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kSuccess;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kSuccess;
  } catch (const CLI::ParseError& e) {
    err << "wrep: " << e.what() << '\n' << "run 'wrep --help' for usage\n";
    return kUsage;
  }

  try {
    if (synth->parsed()) cmd_synth(opts, out);
    if (train->parsed()) cmd_train(opts, out);
    if (tune->parsed()) cmd_tune(opts, base_path, robust_path, out);
    if (sweep->parsed()) cmd_sweep(opts, ensemble_path, out);
  } catch (const IoError& e) {
    err << "wrep: " << e.what() << '\n';
    return kInputOutput;
  } catch (const NumericalError& e) {
    err << "wrep: numerical failure: " << e.what() << '\n';
    return kNumerical;
  } catch (const DataError& e) {
    err << "wrep: " << e.what() << '\n';
    return kDataSchema;
  } catch (const std::invalid_argument& e) {
    err << "wrep: invalid configuration or data: " << e.what() << '\n';
    return kDataSchema;
  } catch (const std::exception& e) {
    err << "wrep: " << e.what() << '\n';
    return kDataSchema;
  }
  return kSuccess;
}

}  // namespace wrep::cli
