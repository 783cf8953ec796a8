#include "commands.hpp"

#include <fstream>
#include <iomanip>
#include <ostream>

#include <json.hpp>

#include "uss/error.hpp"
#include "uss/eval.hpp"
#include "uss/serialization.hpp"

namespace uss::cli {
namespace {

namespace fs = std::filesystem;

std::ofstream open_output(const fs::path& dir, const char* name) {
  fs::create_directories(dir);
  std::ofstream out(dir / name, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + (dir / name).string());
  return out;
}

IdentityDataset load_csv(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot read " + path.string());
  return read_embeddings_csv(in);
}

DatasetSplit dataset_for(const ExperimentConfig& config, const TrainConfig& tc) {
  const IdentityDataset full =
      config.data_csv.empty() ? generate_synthetic(tc.data) : load_csv(config.data_csv);
  return split_holdout(full, tc.holdout_per_identity);
}

EvalReport evaluate_model(const EmbeddingNet& net, const ThresholdParams& thresholds,
                          const ObjectiveConfig& objective, const IdentityDataset& ds,
                          const ExperimentConfig& config) {
  if (ds.dim() != net.input_dim()) {
    throw Error(ErrorCode::kShapeMismatch, "dataset dimension " + std::to_string(ds.dim()) +
                                               " differs from network input " +
                                               std::to_string(net.input_dim()));
  }
  EvalOptions options;
  options.folds = config.eval_folds;
  options.seed = derive_seed(config.seed, 5);
  if (objective.threshold_use() == ThresholdUse::kUnified) {
    options.learned_t = thresholds.t(objective.gamma);
  }
  const Matrix embeddings = net.forward(ds.features).outputs;
  return evaluate(embeddings, ds.labels, ds.num_identities, options);
}

void print_summary(std::ostream& log, const EvalReport& r) {
  log << "unified_ok=" << (r.unified_ok ? "true" : "false")
      << " feasibility_margin=" << r.feasibility_margin;
  if (r.learned_t) log << " learned_t=" << *r.learned_t;
  if (r.accuracy_at_learned_t) log << " accuracy_at_learned_t=" << *r.accuracy_at_learned_t;
  log << " kfold=" << r.kfold.mean << " eer=" << r.eer << '\n';
}

struct LoadedModel {
  Checkpoint checkpoint;
  ExperimentConfig config;
  TrainConfig train_config;
};

LoadedModel load_model(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot read " + path.string());
  LoadedModel m{load_checkpoint(in), {}, {}};
  for (const auto& [k, v] : m.checkpoint.config) m.config.set(k, v);
  m.train_config = m.config.to_train_config();
  return m;
}

IdentityDataset eval_dataset(const LoadedModel& m, const EvalInput& input) {
  const IdentityDataset full = input.data_csv ? load_csv(*input.data_csv)
                               : m.config.data_csv.empty()
                                   ? generate_synthetic(m.train_config.data)
                                   : load_csv(m.config.data_csv);
  if (input.split == EvalSplit::kAll) return full;
  DatasetSplit split = split_holdout(full, m.train_config.holdout_per_identity);
  return input.split == EvalSplit::kTrain ? split.train : split.holdout;
}

}  // namespace

int cmd_train(const ExperimentConfig& config, const fs::path& out_dir, std::ostream& log) {
  const TrainConfig tc = config.to_train_config();
  const DatasetSplit split = dataset_for(config, tc);
  const TrainResult result = train(tc, split.train, split.holdout);
  const Provenance provenance = config.resolved();

  auto ckpt = open_output(out_dir, "checkpoint.json");
  save_checkpoint(ckpt, make_checkpoint(result.state, tc, provenance));
  auto log_csv = open_output(out_dir, "train_log.csv");
  write_training_log_csv(log_csv, result.log);

  const EvalReport report =
      evaluate_model(result.state.net, result.state.thresholds, tc.objective, split.holdout, config);
  auto json = open_output(out_dir, "eval_report.json");
  write_eval_report_json(json, report, provenance);

  log << "trained " << config.preset << " for " << tc.epochs << " epochs; held-out ";
  print_summary(log, report);
  return kExitOk;
}

int cmd_eval(const EvalInput& input, const fs::path& out_dir, std::ostream& log) {
  const LoadedModel m = load_model(input.checkpoint);
  const IdentityDataset ds = eval_dataset(m, input);
  const EvalReport report = evaluate_model(m.checkpoint.net, m.checkpoint.thresholds,
                                           m.train_config.objective, ds, m.config);
  auto json = open_output(out_dir, "eval_report.json");
  write_eval_report_json(json, report, m.config.resolved());
  auto csv = open_output(out_dir, "thresholds.csv");
  write_thresholds_csv(csv, report.thresholds);
  print_summary(log, report);
  return kExitOk;
}

int cmd_export_thresholds(const EvalInput& input, const fs::path& out_dir, std::ostream& log) {
  const LoadedModel m = load_model(input.checkpoint);
  const IdentityDataset ds = eval_dataset(m, input);
  if (ds.dim() != m.checkpoint.net.input_dim()) {
    throw Error(ErrorCode::kShapeMismatch, "dataset dimension differs from network input");
  }
  const Matrix embeddings = m.checkpoint.net.forward(ds.features).outputs;
  const ThresholdDistribution dist = per_identity_thresholds(
      embeddings, ds.labels, ds.num_identities, derive_seed(m.config.seed, 5));
  auto csv = open_output(out_dir, "thresholds.csv");
  write_thresholds_csv(csv, dist);
  log << "wrote " << dist.per_identity.size() << " thresholds; median=" << dist.median
      << " iqr=" << dist.iqr() << '\n';
  return kExitOk;
}

int cmd_gen_data(const ExperimentConfig& config, const fs::path& out_dir, std::ostream& log) {
  const TrainConfig tc = config.to_train_config();
  const IdentityDataset ds = generate_synthetic(tc.data);
  auto csv = open_output(out_dir, "dataset.csv");
  write_embeddings_csv(csv, ds.features, ds.labels);
  nlohmann::ordered_json j;
  for (const auto& [k, v] : config.resolved()) j[k] = v;
  auto meta = open_output(out_dir, "dataset_config.json");
  meta << j.dump(2) << '\n';
  log << "wrote " << ds.size() << " samples of dimension " << ds.dim() << '\n';
  return kExitOk;
}

int cmd_theory_check(const TheoryCheckOptions& options, std::ostream& log) {
  if (options.trials < 1) throw Error(ErrorCode::kInvalidConfig, "trials must be >= 1");
  const TheoryReport report = run_theory_check(options);
  log << std::setprecision(6);
  for (const auto& s : report.inequalities) {
    const bool ok = s.evaluated > 0 && s.min_slack >= -report.tolerance;
    log << (ok ? "ok   " : "FAIL ") << std::left << std::setw(48) << s.name
        << " evaluated=" << s.evaluated << " min_slack=" << s.min_slack << '\n';
    if (!ok) log << "     worst: " << s.worst << '\n';
  }
  for (const auto& c : report.stationarity) {
    log << (c.passed() ? "ok   " : "FAIL ") << "stationary b N=" << c.identities
        << " gamma=" << c.gamma << " b=" << c.b << " t=" << c.t << " d_b=" << c.d_b
        << " in_range=" << c.in_range << " condition=" << c.condition << '\n';
  }
  log << (report.descent_passed() ? "ok   " : "FAIL ") << "descent on b: reached "
      << std::setprecision(12) << report.descent.b << " target " << report.descent.target
      << " after " << report.descent.iterations << " steps\n";
  return report.passed() ? kExitOk : kExitCheckFailed;
}

int cmd_gradcheck(const GradcheckOptions& options, std::ostream& log) {
  const GradcheckReport report = run_gradcheck(options);
  log << std::setprecision(3);
  for (const auto& c : report.components) {
    log << (c.passed() ? "ok   " : "FAIL ") << std::left << std::setw(28) << c.name
        << " max_rel_error=" << c.max_rel_error << " tol=" << c.tolerance
        << " partials=" << c.partials << '\n';
    if (!c.passed()) log << "     worst: " << c.worst << '\n';
  }
  return report.passed() ? kExitOk : kExitCheckFailed;
}

}  // namespace uss::cli
