#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dqmor/dmkdc.hpp"
#include "dqmor/qmr.hpp"
#include "dqmor/rff.hpp"

namespace dqmor {

enum class ModelKind { kQmr, kDmkdc };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& name);

/// One patch of one bag (whole-slide image): a precomputed feature vector
/// with a grade label.  label == kUnlabeled marks records loaded from files
/// without labels (prediction-only datasets).
struct PatchRecord {
  std::string bag_id;
  std::string patch_id;
  int label = 0;
  Eigen::VectorXd features;
};

inline constexpr int kUnlabeled = -1;

struct FeatureDataset {
  int feature_dim = 0;
  int num_grades = 0;
  std::vector<PatchRecord> records;

  int size() const { return static_cast<int>(records.size()); }
  bool labeled() const;
};

/// Patches of one bag, in file order.  label is the common label of the
/// bag's patches, or kUnlabeled when they disagree or are unlabeled.
struct BagGroup {
  std::string bag_id;
  std::vector<int> record_indices;
  int label = kUnlabeled;
};

/// Groups records by bag_id, bags ordered by first appearance.
std::vector<BagGroup> group_by_bag(const FeatureDataset& dataset);

/// Loads the dataset CSV: header `bag_id,patch_id,label,f0,...,f{n-1}`,
/// UTF-8, LF line endings, `.` decimal separator, ids matching
/// [A-Za-z0-9_-]+.  Labels must lie in [0, num_grades); with allow_unlabeled
/// an empty label field yields kUnlabeled.  Throws ParseError naming the
/// offending line (and, for duplicate (bag_id, patch_id) pairs, both lines).
FeatureDataset load_csv(const std::filesystem::path& path, int num_grades,
                        bool allow_unlabeled = false);

/// Writes the same schema; floats use the shortest round-trip form.
void save_csv(const FeatureDataset& dataset,
              const std::filesystem::path& path);

/// Synthetic ordinal dataset.  Every bag draws a latent severity t uniform
/// in [0, N); its label is floor(t) and its patches are noisy copies of a
/// point on a fixed half-circle curve:
///
///   mu(t) = (R cos(pi t / N), R sin(pi t / N), 0, ..., 0),  R = 2
///
/// with i.i.d. N(0, noise_sigma^2) added to every coordinate.  Adjacent
/// grades sit on adjacent arcs, so errors concentrate on neighboring grades
/// as noise grows.  Deterministic in seed; per bag, t is drawn first and
/// then each patch's noise coordinate-by-coordinate.
FeatureDataset synth_generate(int num_bags, int patches_per_bag,
                              int feature_dim, int num_grades,
                              double noise_sigma, std::uint64_t seed);

inline constexpr int kCheckpointVersion = 1;

/// A trained model plus everything needed to reproduce its inference:
/// the materialized encoder (valid even if the PRNG ever changes) and an
/// echo of the training configuration.  Exactly one of qmr/dmkdc is
/// populated, matching kind.
struct Checkpoint {
  int version = kCheckpointVersion;
  ModelKind kind = ModelKind::kQmr;
  RffEncoder encoder;
  std::optional<FactoredJointDensity> qmr;
  std::optional<ClassDensityEnsemble> dmkdc;
  QmrConfig config;
};

/// JSON document with top-level keys `version`, `kind`,
/// `encoder{input_dim,rff_dim,gamma,seed,W,b}`, `model{...}`, `config{...}`.
/// All arrays serialize at full round-trip precision, so a saved model
/// reproduces every inference output bit for bit after loading.
void save_checkpoint(const Checkpoint& checkpoint,
                     const std::filesystem::path& path);

/// Throws CheckpointError on unknown version, inconsistent dimensions or
/// malformed JSON.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace dqmor
