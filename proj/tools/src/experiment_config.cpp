#include "experiment_config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "uss/error.hpp"

namespace uss::cli {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value) {
  throw Error(ErrorCode::kInvalidConfig,
              "invalid value '" + std::string(value) + "' for key '" + std::string(key) + "'");
}

template <typename T>
T parse_number(std::string_view key, std::string_view value) {
  T out{};
  const auto* end = value.data() + value.size();
  const auto r = std::from_chars(value.data(), end, out);
  if (r.ec != std::errc() || r.ptr != end) bad_value(key, value);
  return out;
}

template <typename T>
std::vector<T> parse_list(std::string_view key, std::string_view value) {
  std::vector<T> out;
  while (!value.empty()) {
    const auto comma = value.find(',');
    out.push_back(parse_number<T>(key, trim(value.substr(0, comma))));
    if (comma == std::string_view::npos) break;
    value.remove_prefix(comma + 1);
  }
  return out;
}

std::string format(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

template <typename T>
std::string format_list(const std::vector<T>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i > 0) out += ',';
    if constexpr (std::is_floating_point_v<T>) {
      out += format(values[i]);
    } else {
      out += std::to_string(values[i]);
    }
  }
  return out;
}

struct Field {
  std::string key;
  std::function<void(ExperimentConfig&, std::string_view)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

template <typename T>
Field number_field(std::string key, T ExperimentConfig::*member) {
  return {key,
          [member, key](ExperimentConfig& c, std::string_view v) {
            c.*member = parse_number<T>(key, v);
          },
          [member](const ExperimentConfig& c) {
            if constexpr (std::is_floating_point_v<T>) {
              return format(c.*member);
            } else {
              return std::to_string(c.*member);
            }
          }};
}

template <typename T>
Field data_field(std::string key, T SyntheticConfig::*member) {
  return {key,
          [member, key](ExperimentConfig& c, std::string_view v) {
            c.data.*member = parse_number<T>(key, v);
          },
          [member](const ExperimentConfig& c) {
            if constexpr (std::is_floating_point_v<T>) {
              return format(c.data.*member);
            } else {
              return std::to_string(c.data.*member);
            }
          }};
}

Field string_field(std::string key, std::string ExperimentConfig::*member) {
  return {key, [member](ExperimentConfig& c, std::string_view v) { c.*member = std::string(v); },
          [member](const ExperimentConfig& c) { return c.*member; }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      string_field("data.csv", &ExperimentConfig::data_csv),
      data_field("data.identities", &SyntheticConfig::identities),
      data_field("data.samples_per_identity", &SyntheticConfig::samples_per_identity),
      data_field("data.dim", &SyntheticConfig::dim),
      data_field("data.spread", &SyntheticConfig::spread),
      number_field("holdout_per_identity", &ExperimentConfig::holdout_per_identity),
      string_field("preset", &ExperimentConfig::preset),
      number_field("gamma", &ExperimentConfig::gamma),
      number_field("margin", &ExperimentConfig::margin),
      number_field("s2c_scale", &ExperimentConfig::s2c_scale),
      number_field("cos_margin", &ExperimentConfig::cos_margin),
      number_field("arc_margin", &ExperimentConfig::arc_margin),
      {"layer_sizes",
       [](ExperimentConfig& c, std::string_view v) {
         c.layer_sizes = parse_list<int>("layer_sizes", v);
       },
       [](const ExperimentConfig& c) { return format_list(c.layer_sizes); }},
      string_field("schedule", &ExperimentConfig::schedule),
      number_field("lr", &ExperimentConfig::lr),
      {"lr_milestones",
       [](ExperimentConfig& c, std::string_view v) {
         c.lr_milestones = parse_list<double>("lr_milestones", v);
       },
       [](const ExperimentConfig& c) { return format_list(c.lr_milestones); }},
      number_field("lr_factor", &ExperimentConfig::lr_factor),
      number_field("lr_power", &ExperimentConfig::lr_power),
      number_field("warmup_epochs", &ExperimentConfig::warmup_epochs),
      number_field("momentum", &ExperimentConfig::momentum),
      number_field("weight_decay", &ExperimentConfig::weight_decay),
      number_field("epochs", &ExperimentConfig::epochs),
      number_field("batch_identities", &ExperimentConfig::batch_identities),
      number_field("steps_per_epoch", &ExperimentConfig::steps_per_epoch),
      number_field("threshold_lr_scale", &ExperimentConfig::threshold_lr_scale),
      string_field("proxy_init", &ExperimentConfig::proxy_init),
      number_field("seed", &ExperimentConfig::seed),
      number_field("eval_folds", &ExperimentConfig::eval_folds),
  };
  return table;
}

}  // namespace

const std::vector<std::string>& ExperimentConfig::keys() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& f : fields()) out.push_back(f.key);
    return out;
  }();
  return names;
}

void ExperimentConfig::set(std::string_view key, std::string_view value) {
  for (const auto& f : fields()) {
    if (f.key == key) {
      f.set(*this, trim(value));
      return;
    }
  }
  throw Error(ErrorCode::kInvalidConfig, "unknown config key '" + std::string(key) + "'");
}

void ExperimentConfig::apply_text(std::string_view text) {
  int line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view() : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::kInvalidConfig,
                  "line " + std::to_string(line_no) + ": expected key = value");
    }
    set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

void ExperimentConfig::apply_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot read config " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  apply_text(text.str());
}

Provenance ExperimentConfig::resolved() const {
  Provenance out;
  for (const auto& f : fields()) out.emplace_back(f.key, f.get(*this));
  return out;
}

TrainConfig ExperimentConfig::to_train_config() const {
  TrainConfig tc;
  tc.data = data;
  tc.data.seed = seed;
  tc.holdout_per_identity = holdout_per_identity;
  const auto p = parse_preset(preset);
  if (!p) throw Error(ErrorCode::kInvalidConfig, "unknown preset '" + preset + "'");
  tc.objective.preset = *p;
  tc.objective.gamma = gamma;
  tc.objective.margin = margin;
  tc.objective.s2c_scale = s2c_scale;
  tc.objective.cos_margin = cos_margin;
  tc.objective.arc_margin = arc_margin;
  tc.layer_sizes = layer_sizes;
  if (schedule == "step") {
    tc.schedule = StepDecay{lr, lr_milestones, lr_factor};
  } else if (schedule == "poly") {
    tc.schedule = PolyDecay{lr, lr_power};
  } else if (schedule == "warmup-poly") {
    tc.schedule = WarmupPoly{lr, warmup_epochs, lr_power};
  } else {
    throw Error(ErrorCode::kInvalidConfig, "unknown schedule '" + schedule + "'");
  }
  tc.sgd = SgdConfig{momentum, weight_decay};
  tc.epochs = epochs;
  tc.batch_identities = batch_identities;
  tc.steps_per_epoch = steps_per_epoch;
  tc.threshold_lr_scale = threshold_lr_scale;
  if (proxy_init == "class-mean") {
    tc.proxy_init = ProxyInit::kClassMean;
  } else if (proxy_init == "random") {
    tc.proxy_init = ProxyInit::kRandom;
  } else {
    throw Error(ErrorCode::kInvalidConfig, "unknown proxy_init '" + proxy_init + "'");
  }
  tc.seed = seed;
  if (eval_folds < 2) throw Error(ErrorCode::kInvalidConfig, "eval_folds must be >= 2");
  tc.validate();
  return tc;
}

}  // namespace uss::cli
