#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "commands.hpp"
#include "uss/error.hpp"

namespace {

using uss::cli::ExperimentConfig;

struct CommonFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
  std::optional<std::string> preset;
  std::optional<double> gamma;
  std::optional<double> margin;
  std::optional<double> cos_margin;
  std::optional<double> arc_margin;
  std::optional<double> scale;
  std::optional<int> epochs;
  std::optional<int> batch_identities;
  std::optional<double> lr;
  std::optional<std::string> layers;
  std::optional<int> identities;
  std::optional<int> samples_per_identity;
  std::optional<int> dim;
  std::optional<double> spread;
  std::optional<std::string> data_csv;
  std::vector<std::string> overrides;
};

void add_experiment_flags(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config_path, "key = value config file");
  cmd->add_option("--preset", f.preset, "loss preset");
  cmd->add_option("--gamma", f.gamma, "sample-to-sample scale");
  cmd->add_option("--margin", f.margin, "sample-to-sample margin");
  cmd->add_option("--cos-margin", f.cos_margin, "cosine margin of the s2c loss");
  cmd->add_option("--arc-margin", f.arc_margin, "angular margin of the s2c loss");
  cmd->add_option("--scale", f.scale, "s2c scale");
  cmd->add_option("--epochs", f.epochs, "training epochs");
  cmd->add_option("--batch-identities", f.batch_identities, "identities per batch");
  cmd->add_option("--lr", f.lr, "base learning rate");
  cmd->add_option("--layers", f.layers, "layer sizes, comma separated");
  cmd->add_option("--identities", f.identities, "synthetic identities");
  cmd->add_option("--samples-per-identity", f.samples_per_identity, "synthetic samples per identity");
  cmd->add_option("--dim", f.dim, "synthetic feature dimension");
  cmd->add_option("--spread", f.spread, "synthetic noise level");
  cmd->add_option("--data", f.data_csv, "dataset CSV instead of synthetic data");
  cmd->add_option("--set", f.overrides, "KEY=VALUE override, repeatable");
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

ExperimentConfig resolve(const CommonFlags& f) {
  ExperimentConfig c;
  if (!f.config_path.empty()) c.apply_file(f.config_path);
  auto put = [&c](const char* key, const auto& value, auto to_text) {
    if (value) c.set(key, to_text(*value));
  };
  auto str = [](const std::string& s) { return s; };
  auto num = [](double v) { return fmt(v); };
  auto integer = [](long long v) { return std::to_string(v); };
  put("preset", f.preset, str);
  put("gamma", f.gamma, num);
  put("margin", f.margin, num);
  put("cos_margin", f.cos_margin, num);
  put("arc_margin", f.arc_margin, num);
  put("s2c_scale", f.scale, num);
  put("epochs", f.epochs, integer);
  put("batch_identities", f.batch_identities, integer);
  put("lr", f.lr, num);
  put("layer_sizes", f.layers, str);
  put("data.identities", f.identities, integer);
  put("data.samples_per_identity", f.samples_per_identity, integer);
  put("data.dim", f.dim, integer);
  put("data.spread", f.spread, num);
  put("data.csv", f.data_csv, str);
  if (f.seed) c.set("seed", std::to_string(*f.seed));
  for (const auto& kv : f.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      throw uss::Error(uss::ErrorCode::kInvalidConfig, "--set expects KEY=VALUE, got " + kv);
    }
    c.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Unified-threshold metric learning experiments"};
  app.require_subcommand(1);

  CommonFlags flags;
  std::uint64_t seed = 0;
  auto add_seed = [&](CLI::App* cmd) {
    cmd->add_option_function<std::uint64_t>("--seed", [&](const std::uint64_t& s) {
      flags.seed = s;
      seed = s;
    }, "run seed");
  };
  auto add_out = [&](CLI::App* cmd) { cmd->add_option("--out", flags.out, "output directory"); };

  auto* train = app.add_subcommand("train", "train a model and evaluate it on held-out data");
  add_experiment_flags(train, flags);
  add_seed(train);
  add_out(train);

  auto* gen = app.add_subcommand("gen-data", "write the synthetic dataset as CSV");
  add_experiment_flags(gen, flags);
  add_seed(gen);
  add_out(gen);

  uss::cli::EvalInput eval_input;
  std::string split = "holdout";
  std::optional<std::string> eval_data;
  auto add_eval = [&](CLI::App* cmd) {
    cmd->add_option("--checkpoint", eval_input.checkpoint, "checkpoint.json")->required();
    cmd->add_option("--data", eval_data, "dataset CSV (default: regenerate from checkpoint)");
    cmd->add_option("--split", split, "holdout | train | all")
        ->check(CLI::IsMember({"holdout", "train", "all"}));
    add_out(cmd);
  };
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  add_eval(eval);
  auto* export_thr = app.add_subcommand("export-thresholds", "per-identity optimal thresholds");
  add_eval(export_thr);

  uss::TheoryCheckOptions theory;
  auto* theory_cmd = app.add_subcommand("theory-check", "randomized inequality and stationarity checks");
  theory_cmd->add_option("--trials", theory.trials, "configurations per inequality");
  theory_cmd->add_option("--rhs-offset", theory.rhs_offset, "test hook: shift every slack");
  add_seed(theory_cmd);

  uss::GradcheckOptions grad;
  auto* grad_cmd = app.add_subcommand("gradcheck", "finite-difference gradient checks");
  grad_cmd->add_option("--configs", grad.configs_per_loss, "random configurations per loss");
  grad_cmd->add_option("--network-seeds", grad.network_seeds, "random networks per preset");
  grad_cmd->add_flag("--break-sign", grad.break_sign, "test hook: negate analytic gradients");
  add_seed(grad_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : uss::cli::kExitUsage;
  }

  try {
    if (eval_data) eval_input.data_csv = *eval_data;
    eval_input.split = split == "train" ? uss::cli::EvalSplit::kTrain
                       : split == "all" ? uss::cli::EvalSplit::kAll
                                        : uss::cli::EvalSplit::kHoldout;
    if (*train) return uss::cli::cmd_train(resolve(flags), flags.out, std::cout);
    if (*gen) return uss::cli::cmd_gen_data(resolve(flags), flags.out, std::cout);
    if (*eval) return uss::cli::cmd_eval(eval_input, flags.out, std::cout);
    if (*export_thr) return uss::cli::cmd_export_thresholds(eval_input, flags.out, std::cout);
    if (*theory_cmd) {
      theory.seed = seed;
      return uss::cli::cmd_theory_check(theory, std::cout);
    }
    if (*grad_cmd) {
      grad.seed = seed;
      return uss::cli::cmd_gradcheck(grad, std::cout);
    }
  } catch (const uss::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return uss::cli::kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return uss::cli::kExitUsage;
  }
  return uss::cli::kExitUsage;
}
