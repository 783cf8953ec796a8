#include "uss/serialization.hpp"

#include <algorithm>
#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "uss/error.hpp"

namespace uss {
namespace {

using ordered_json = nlohmann::ordered_json;

ordered_json matrix_to_json(const Matrix& m) {
  return ordered_json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", m.values()}};
}

Matrix matrix_from_json(const ordered_json& j) {
  const auto rows = j.at("rows").get<std::size_t>();
  const auto cols = j.at("cols").get<std::size_t>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (data.size() != rows * cols) throw Error(ErrorCode::kShapeMismatch, "matrix data size");
  Matrix m(rows, cols);
  std::copy(data.begin(), data.end(), m.values().begin());
  return m;
}

std::string format_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

ordered_json provenance_json(const Provenance& config) {
  ordered_json j = ordered_json::object();
  for (const auto& [k, v] : config) j[k] = v;
  return j;
}

}  // namespace

Checkpoint make_checkpoint(const TrainState& state, const TrainConfig& cfg, Provenance config) {
  Checkpoint c;
  c.config = std::move(config);
  c.preset = std::string(preset_name(cfg.objective.preset));
  c.gamma = cfg.objective.gamma;
  c.margin = cfg.objective.s2s_config().margin;
  c.net = state.net;
  c.thresholds = state.thresholds;
  c.proxies = state.proxies;
  c.optimizer = state.optimizer;
  std::ostringstream rng;
  rng << state.rng;
  c.rng_state = rng.str();
  c.epochs_completed = state.epochs_completed;
  return c;
}

void save_checkpoint(std::ostream& out, const Checkpoint& c) {
  ordered_json j;
  j["format"] = "uss-checkpoint";
  j["version"] = c.version;
  j["config"] = provenance_json(c.config);
  j["preset"] = c.preset;
  j["gamma"] = c.gamma;
  j["margin"] = c.margin;
  j["layer_sizes"] = c.net.sizes();
  ordered_json layers = ordered_json::array();
  for (const auto& layer : c.net.layers()) {
    layers.push_back({{"weights", matrix_to_json(layer.weights)}, {"bias", layer.bias}});
  }
  j["layers"] = std::move(layers);
  const bool unified = c.thresholds.mode() == ThresholdParams::Mode::kUnified;
  j["thresholds"] = {{"mode", unified ? "unified" : "per_identity"},
                     {"b", c.thresholds.b()},
                     {"b_vec", c.thresholds.b_vec()}};
  j["proxies"] = matrix_to_json(c.proxies.weights());
  j["optimizer"] = c.optimizer.buffers();
  j["rng_state"] = c.rng_state;
  j["epochs_completed"] = c.epochs_completed;
  out << j.dump(1) << '\n';
}

Checkpoint load_checkpoint(std::istream& in) {
  ordered_json j;
  try {
    j = ordered_json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParseError, std::string("checkpoint is not valid JSON: ") + e.what());
  }
  try {
    if (j.value("format", std::string()) != "uss-checkpoint") {
      throw Error(ErrorCode::kParseError, "not a checkpoint file");
    }
    Checkpoint c;
    c.version = j.at("version").get<int>();
    if (c.version != kCheckpointVersion) {
      throw Error(ErrorCode::kVersionMismatch,
                  "checkpoint version " + std::to_string(c.version) + ", expected " +
                      std::to_string(kCheckpointVersion));
    }
    for (const auto& [k, v] : j.at("config").items()) c.config.emplace_back(k, v.get<std::string>());
    c.preset = j.at("preset").get<std::string>();
    c.gamma = j.at("gamma").get<double>();
    c.margin = j.at("margin").get<double>();
    std::vector<DenseLayer> layers;
    for (const auto& l : j.at("layers")) {
      layers.push_back({matrix_from_json(l.at("weights")), l.at("bias").get<Vector>()});
    }
    c.net = EmbeddingNet(std::move(layers));
    if (c.net.sizes() != j.at("layer_sizes").get<std::vector<int>>()) {
      throw Error(ErrorCode::kShapeMismatch, "layer_sizes disagree with stored layers");
    }
    const auto& thr = j.at("thresholds");
    if (thr.at("mode").get<std::string>() == "unified") {
      c.thresholds = ThresholdParams::unified(thr.at("b").get<double>());
    } else {
      c.thresholds = ThresholdParams::per_identity(thr.at("b_vec").get<std::vector<double>>());
    }
    const Matrix proxies = matrix_from_json(j.at("proxies"));
    if (!proxies.empty()) {
      // Stored proxies are already unit norm; keep the exact bits.
      c.proxies = ClassProxyMatrix();
      c.proxies.weights() = proxies;
    }
    c.optimizer.buffers() = j.at("optimizer").get<std::vector<Vector>>();
    c.rng_state = j.at("rng_state").get<std::string>();
    c.epochs_completed = j.at("epochs_completed").get<int>();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParseError, std::string("malformed checkpoint: ") + e.what());
  }
}

void write_eval_report_json(std::ostream& out, const EvalReport& r, const Provenance& config) {
  ordered_json j;
  j["config"] = provenance_json(config);
  j["samples"] = r.samples;
  j["positive_pairs"] = r.positive_pairs;
  j["negative_pairs"] = r.negative_pairs;
  j["unified_ok"] = r.unified_ok;
  j["feasibility_margin"] = r.feasibility_margin;
  if (r.feasible_interval) {
    j["feasible_interval"] = {{"lower_exclusive", r.feasible_interval->lower},
                              {"upper_inclusive", r.feasible_interval->upper}};
  } else {
    j["feasible_interval"] = nullptr;
  }
  j["learned_t"] = r.learned_t ? ordered_json(*r.learned_t) : ordered_json(nullptr);
  j["accuracy_at_learned_t"] =
      r.accuracy_at_learned_t ? ordered_json(*r.accuracy_at_learned_t) : ordered_json(nullptr);
  j["per_identity_thresholds"] = {{"count", r.thresholds.per_identity.size()},
                                  {"min", r.thresholds.min},
                                  {"q1", r.thresholds.q1},
                                  {"median", r.thresholds.median},
                                  {"q3", r.thresholds.q3},
                                  {"max", r.thresholds.max},
                                  {"iqr", r.thresholds.iqr()}};
  ordered_json tar = ordered_json::array();
  for (const auto& row : r.tar_at_far) {
    tar.push_back({{"far", row.far}, {"threshold", row.threshold}, {"tar", row.tar}});
  }
  j["tar_at_far"] = std::move(tar);
  j["kfold_accuracy"] = {{"mean", r.kfold.mean},
                         {"folds", r.kfold.folds},
                         {"thresholds", r.kfold.thresholds}};
  j["eer"] = r.eer;
  out << j.dump(2) << '\n';
}

void write_thresholds_csv(std::ostream& out, const ThresholdDistribution& thresholds) {
  out << "identity,optimal_threshold\n";
  for (const auto& row : thresholds.per_identity) {
    out << row.identity << ',' << format_double(row.threshold) << '\n';
  }
}

void write_training_log_csv(std::ostream& out, const std::vector<EpochLog>& log) {
  out << "epoch,loss,lr,t,feasibility_margin\n";
  for (const auto& row : log) {
    out << row.epoch << ',' << format_double(row.loss) << ',' << format_double(row.lr) << ','
        << (row.t ? format_double(*row.t) : std::string()) << ','
        << format_double(row.feasibility_margin) << '\n';
  }
}

}  // namespace uss
