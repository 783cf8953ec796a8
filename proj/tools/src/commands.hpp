#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "experiment_config.hpp"
#include "uss/verification.hpp"

namespace uss::cli {

enum ExitCode : int { kExitOk = 0, kExitCheckFailed = 1, kExitUsage = 2 };

// Each command writes its artifacts under `out_dir` and a short summary to `log`.
// Errors surface as uss::Error; main() maps them to kExitUsage.

/// checkpoint.json, train_log.csv and eval_report.json (held-out split).
int cmd_train(const ExperimentConfig& config, const std::filesystem::path& out_dir,
              std::ostream& log);

enum class EvalSplit { kHoldout, kTrain, kAll };

struct EvalInput {
  std::filesystem::path checkpoint;
  std::optional<std::filesystem::path> data_csv;  // else regenerate from the checkpoint config
  EvalSplit split = EvalSplit::kHoldout;
};

/// eval_report.json and thresholds.csv.
int cmd_eval(const EvalInput& input, const std::filesystem::path& out_dir, std::ostream& log);

/// thresholds.csv only.
int cmd_export_thresholds(const EvalInput& input, const std::filesystem::path& out_dir,
                          std::ostream& log);

/// dataset.csv plus dataset_config.json with the resolved config.
int cmd_gen_data(const ExperimentConfig& config, const std::filesystem::path& out_dir,
                 std::ostream& log);

int cmd_theory_check(const TheoryCheckOptions& options, std::ostream& log);

int cmd_gradcheck(const GradcheckOptions& options, std::ostream& log);

}  // namespace uss::cli
