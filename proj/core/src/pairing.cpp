#include "uss/pairing.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <string>

#include "uss/error.hpp"

namespace uss {

std::vector<std::vector<std::size_t>> IdentityDataset::indices_by_identity() const {
  std::vector<std::vector<std::size_t>> groups(static_cast<std::size_t>(num_identities));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    groups[static_cast<std::size_t>(labels[i])].push_back(i);
  }
  return groups;
}

void IdentityDataset::validate() const {
  if (features.rows() != labels.size()) {
    throw Error(ErrorCode::kInvalidConfig, "feature rows and labels differ in count");
  }
  if (num_identities < 1) throw Error(ErrorCode::kInvalidConfig, "no identities");
  std::vector<int> counts(static_cast<std::size_t>(num_identities), 0);
  for (int label : labels) {
    if (label < 0 || label >= num_identities) {
      throw Error(ErrorCode::kInvalidConfig, "label " + std::to_string(label) + " out of range");
    }
    ++counts[static_cast<std::size_t>(label)];
  }
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] < 2) {
      throw Error(ErrorCode::kInsufficientData,
                  "identity " + std::to_string(i) + " has fewer than two samples");
    }
  }
  if (!all_finite(features.values())) {
    throw Error(ErrorCode::kInvalidConfig, "non-finite feature value");
  }
}

IdentityDataset generate_synthetic(const SyntheticConfig& config) {
  if (config.identities < 2 || config.dim < 2 || config.samples_per_identity < 2 ||
      !(config.spread >= 0.0) || !std::isfinite(config.spread)) {
    throw Error(ErrorCode::kInvalidConfig,
                "synthetic data needs identities >= 2, dim >= 2, samples_per_identity >= 2, "
                "spread >= 0");
  }
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto dim = static_cast<std::size_t>(config.dim);

  IdentityDataset ds;
  ds.num_identities = config.identities;
  ds.seed = config.seed;
  ds.features = Matrix(0, dim);

  Vector prototype(dim);
  Vector sample(dim);
  for (int id = 0; id < config.identities; ++id) {
    // Rejection of the (measure-zero) all-zero draw keeps normalization safe.
    do {
      for (double& x : prototype) x = normal(rng);
    } while (l2_norm(prototype) < 1e-12);
    prototype = l2_normalize(prototype);
    for (int s = 0; s < config.samples_per_identity; ++s) {
      for (std::size_t k = 0; k < dim; ++k) {
        sample[k] = prototype[k] + config.spread * normal(rng);
      }
      ds.features.append_row(l2_normalize(sample));
      ds.labels.push_back(id);
    }
  }
  return ds;
}

DatasetSplit split_holdout(const IdentityDataset& ds, int holdout_per_identity) {
  ds.validate();
  DatasetSplit split;
  for (IdentityDataset* part : {&split.train, &split.holdout}) {
    part->num_identities = ds.num_identities;
    part->seed = ds.seed;
    part->features = Matrix(0, ds.features.cols());
  }
  for (const auto& members : ds.indices_by_identity()) {
    const auto held = static_cast<std::size_t>(std::max(holdout_per_identity, 0));
    if (members.size() < held + 2 || held < 2) {
      throw Error(ErrorCode::kInsufficientData,
                  "holdout split needs >= 2 samples per identity on both sides");
    }
    const std::size_t cut = members.size() - held;
    for (std::size_t k = 0; k < members.size(); ++k) {
      IdentityDataset& part = k < cut ? split.train : split.holdout;
      part.features.append_row(ds.features.row(members[k]));
      part.labels.push_back(ds.labels[members[k]]);
    }
  }
  return split;
}

PairBatch make_pair_batch(const IdentityDataset& ds, int identities_per_batch,
                          std::mt19937_64& rng) {
  if (identities_per_batch < 2) {
    throw Error(ErrorCode::kInsufficientData, "a pair batch needs at least two identities");
  }
  const auto groups = ds.indices_by_identity();
  std::vector<int> eligible;
  for (std::size_t id = 0; id < groups.size(); ++id) {
    if (groups[id].size() >= 2) eligible.push_back(static_cast<int>(id));
  }
  const auto count = static_cast<std::size_t>(identities_per_batch);
  if (eligible.size() < count) {
    throw Error(ErrorCode::kInsufficientData,
                "requested " + std::to_string(count) + " identities but only " +
                    std::to_string(eligible.size()) + " have two samples");
  }

  // Partial Fisher-Yates: the first `count` slots become the chosen identities.
  for (std::size_t k = 0; k < count; ++k) {
    std::uniform_int_distribution<std::size_t> pick(k, eligible.size() - 1);
    std::swap(eligible[k], eligible[pick(rng)]);
  }

  PairBatch batch;
  batch.anchors = Matrix(0, ds.features.cols());
  batch.galleries = Matrix(0, ds.features.cols());
  for (std::size_t k = 0; k < count; ++k) {
    const int id = eligible[k];
    const auto& members = groups[static_cast<std::size_t>(id)];
    std::uniform_int_distribution<std::size_t> first(0, members.size() - 1);
    std::uniform_int_distribution<std::size_t> second(0, members.size() - 2);
    const std::size_t a = first(rng);
    std::size_t g = second(rng);
    if (g >= a) ++g;
    batch.identities.push_back(id);
    batch.anchor_index.push_back(members[a]);
    batch.gallery_index.push_back(members[g]);
    batch.anchors.append_row(ds.features.row(members[a]));
    batch.galleries.append_row(ds.features.row(members[g]));
  }
  return batch;
}

PairBatch make_pair_batch(const IdentityDataset& ds, int identities_per_batch,
                          std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return make_pair_batch(ds, identities_per_batch, rng);
}

SimilarityPartition partition_similarities(std::span<const double> anchor, int anchor_label,
                                           const IdentityDataset& ds,
                                           std::optional<std::size_t> self_index) {
  SimilarityPartition out;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (self_index && *self_index == i) continue;
    const double s = cosine_similarity(anchor, ds.features.row(i)).value();
    (ds.labels[i] == anchor_label ? out.positives : out.negatives).push_back(s);
  }
  return out;
}

namespace {

void append_double(std::string& line, double value) {
  char buf[64];
  const auto result = std::to_chars(buf, buf + sizeof(buf), value);
  line.append(buf, result.ptr);
}

double parse_double(std::string_view field, std::size_t line_no) {
  double value = 0.0;
  const auto* begin = field.data();
  const auto* end = field.data() + field.size();
  const auto result = std::from_chars(begin, end, value);
  if (result.ec != std::errc() || result.ptr != end) {
    throw Error(ErrorCode::kParseError, "line " + std::to_string(line_no) +
                                            ": cannot parse number '" + std::string(field) + "'");
  }
  return value;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    fields.push_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

}  // namespace

void write_embeddings_csv(std::ostream& out, const Matrix& features,
                          std::span<const int> labels) {
  if (features.rows() != labels.size()) {
    throw Error(ErrorCode::kShapeMismatch, "feature rows and labels differ in count");
  }
  std::string line = "label";
  for (std::size_t k = 0; k < features.cols(); ++k) line += ",f" + std::to_string(k);
  out << line << '\n';
  for (std::size_t i = 0; i < features.rows(); ++i) {
    line = std::to_string(labels[i]);
    for (double v : features.row(i)) {
      line += ',';
      append_double(line, v);
    }
    out << line << '\n';
  }
}

IdentityDataset read_embeddings_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::kParseError, "empty CSV");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_fields(line);
  if (header.size() < 2 || header[0] != "label") {
    throw Error(ErrorCode::kParseError, "CSV header must be label,f0,...");
  }
  for (std::size_t k = 1; k < header.size(); ++k) {
    if (header[k] != "f" + std::to_string(k - 1)) {
      throw Error(ErrorCode::kParseError, "unexpected header column '" +
                                              std::string(header[k]) + "'");
    }
  }
  const std::size_t dim = header.size() - 1;

  IdentityDataset ds;
  ds.features = Matrix(0, dim);
  int max_label = -1;
  std::size_t line_no = 1;
  Vector row(dim);
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != dim + 1) {
      throw Error(ErrorCode::kShapeMismatch, "line " + std::to_string(line_no) + " has " +
                                                 std::to_string(fields.size()) + " fields");
    }
    int label = 0;
    const auto lr = std::from_chars(fields[0].data(), fields[0].data() + fields[0].size(), label);
    if (lr.ec != std::errc() || lr.ptr != fields[0].data() + fields[0].size() || label < 0) {
      throw Error(ErrorCode::kParseError, "line " + std::to_string(line_no) + ": bad label");
    }
    for (std::size_t k = 0; k < dim; ++k) row[k] = parse_double(fields[k + 1], line_no);
    ds.features.append_row(row);
    ds.labels.push_back(label);
    max_label = std::max(max_label, label);
  }
  ds.num_identities = max_label + 1;
  return ds;
}

}  // namespace uss
