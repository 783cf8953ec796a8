#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "uss/numerics.hpp"

namespace uss {

struct SyntheticConfig {
  int identities = 50;
  int samples_per_identity = 20;
  int dim = 32;
  double spread = 0.25;
  std::uint64_t seed = 0;
};

// Labeled feature vectors. Labels are identity indices in [0, num_identities).
struct IdentityDataset {
  Matrix features;
  std::vector<int> labels;
  int num_identities = 0;
  std::uint64_t seed = 0;

  std::size_t size() const noexcept { return labels.size(); }
  int dim() const noexcept { return static_cast<int>(features.cols()); }

  // Sample indices grouped by identity, in dataset order.
  std::vector<std::vector<std::size_t>> indices_by_identity() const;

  // Checks shape consistency, label range and that every identity has at
  // least two samples. Throws InvalidConfig / InsufficientData.
  void validate() const;

  bool operator==(const IdentityDataset&) const = default;
};

/// Each identity gets a prototype drawn uniformly on the unit sphere; every
/// sample is normalize(prototype + spread * standard normal noise).
IdentityDataset generate_synthetic(const SyntheticConfig& config);

struct DatasetSplit {
  IdentityDataset train;
  IdentityDataset holdout;
};

/// Moves the last `holdout_per_identity` samples of every identity into the
/// holdout set. Both halves keep at least two samples per identity.
DatasetSplit split_holdout(const IdentityDataset& ds, int holdout_per_identity);

// P identities, one anchor and one gallery sample each. Gallery k is the
// positive for anchor k and a negative for every other anchor.
struct PairBatch {
  std::vector<int> identities;
  std::vector<std::size_t> anchor_index;
  std::vector<std::size_t> gallery_index;
  Matrix anchors;
  Matrix galleries;

  std::size_t size() const noexcept { return identities.size(); }
};

PairBatch make_pair_batch(const IdentityDataset& ds, int identities_per_batch,
                          std::mt19937_64& rng);
PairBatch make_pair_batch(const IdentityDataset& ds, int identities_per_batch,
                          std::uint64_t seed);

struct SimilarityPartition {
  std::vector<double> positives;
  std::vector<double> negatives;
};

/// Similarities of `anchor` to every same-label feature (positives) and every
/// other feature (negatives). `self_index` names the anchor's own row in `ds`,
/// which is left out of both sets.
SimilarityPartition partition_similarities(std::span<const double> anchor, int anchor_label,
                                           const IdentityDataset& ds,
                                           std::optional<std::size_t> self_index = std::nullopt);

/// CSV with header `label,f0,...,f{d-1}`; floats in shortest round-trip form.
void write_embeddings_csv(std::ostream& out, const Matrix& features,
                          std::span<const int> labels);
IdentityDataset read_embeddings_csv(std::istream& in);

}  // namespace uss
