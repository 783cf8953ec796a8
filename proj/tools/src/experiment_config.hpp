#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "uss/serialization.hpp"
#include "uss/trainer.hpp"

namespace uss::cli {

// Everything a run needs. The textual form is a flat `key = value` file;
// `#` starts a comment. See README for the list of keys.
struct ExperimentConfig {
  std::string data_csv;  // empty = synthetic data below
  SyntheticConfig data;
  int holdout_per_identity = 4;
  std::string preset = "uss";
  double gamma = 64.0;
  double margin = 0.1;
  double s2c_scale = 64.0;
  double cos_margin = 0.35;
  double arc_margin = 0.5;
  std::vector<int> layer_sizes{32, 64, 16};
  std::string schedule = "warmup-poly";  // step | poly | warmup-poly
  double lr = 0.003;
  std::vector<double> lr_milestones{16.0, 24.0};
  double lr_factor = 10.0;
  double lr_power = 2.0;
  double warmup_epochs = 5.0;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  int epochs = 28;
  int batch_identities = 32;
  int steps_per_epoch = 30;
  double threshold_lr_scale = 10.0;
  std::string proxy_init = "class-mean";  // class-mean | random
  std::uint64_t seed = 0;
  int eval_folds = 10;

  /// Sets one key from its textual value. Throws InvalidConfig for unknown
  /// keys and unparsable values.
  void set(std::string_view key, std::string_view value);

  /// Applies every `key = value` line of `text`.
  void apply_text(std::string_view text);
  void apply_file(const std::filesystem::path& path);

  /// Every key with its resolved value, in a fixed order.
  Provenance resolved() const;

  /// Checks the whole config and converts it to a trainer configuration.
  TrainConfig to_train_config() const;

  static const std::vector<std::string>& keys();
};

}  // namespace uss::cli
