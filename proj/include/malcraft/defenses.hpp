#pragma once

#include "malcraft/crafting.hpp"
#include "malcraft/feature_space.hpp"
#include "malcraft/mlp.hpp"

#include <string>
#include <vector>

namespace malcraft {

// ---------------------------------------------------------------------------
// Simple feature restrictions
// ---------------------------------------------------------------------------

struct Restriction {
  enum class Kind {
    manifest_only,  // keep only manifest-class features
    only_small,     // drop features in the r largest feature classes
    only_freq,      // keep features present in at least r samples
  };
  Kind kind = Kind::manifest_only;
  int r = 1;

  std::string name() const;
  std::string param_string() const;
};

struct RestrictedDataset {
  Dataset dataset;                      // fresh contiguous vocabulary
  std::vector<FeatureIndex> old_to_new;  // -1 for dropped features
  IndexSet kept;                        // surviving old indices
};

// Old indices surviving the restriction (frequency counts for only_freq are
// taken over `dataset`, so pass the training split to avoid test leakage).
IndexSet restriction_survivors(const Dataset& dataset, const Restriction& restriction);

// Re-indexes a dataset onto the surviving features. Samples keep their ids
// and labels; active indices outside `kept` are dropped.
RestrictedDataset apply_feature_subset(const Dataset& dataset, const IndexSet& kept);

RestrictedDataset restrict_features(const Dataset& dataset, const Restriction& restriction);

// ---------------------------------------------------------------------------
// Mutual-information feature selection
// ---------------------------------------------------------------------------

// Empirical mutual information (nats) between each binary feature and the
// class label; raw frequencies, 0*log0 := 0, no smoothing.
struct MIScores {
  std::vector<double> scores;
  double malware_prior = 0.0;
};

MIScores rank_mutual_information(const Dataset& dataset);

enum class MIDirection { top, bottom };

struct MISelection {
  MIDirection direction = MIDirection::top;
  FeatureIndex requested = 0;
  IndexSet selected;  // may exceed `requested` through tie inclusion
};

// Picks the n highest- (or lowest-) scoring features. Every feature tied
// with the score at the cutoff is included, so the selection can be larger
// than n. n larger than M clamps to M with a warning.
MISelection select_by_mi(const MIScores& scores, FeatureIndex n, MIDirection direction);

// ---------------------------------------------------------------------------
// Defensive distillation
// ---------------------------------------------------------------------------

// Three steps: label the training set with the teacher's temperature-T
// output distributions, initialize a fresh model with the teacher's
// architecture, and train it at temperature T against those soft labels.
// The returned student is reset to temperature 1 for deployment.
MlpModel distill(const MlpModel& teacher, const Dataset& train, double temperature,
                 const TrainConfig& config);

// Teacher output distributions at the given temperature, one per sample.
std::vector<Vector2> soft_labels(const MlpModel& teacher, const Dataset& dataset,
                                 double temperature);

// ---------------------------------------------------------------------------
// Adversarial retraining
// ---------------------------------------------------------------------------

struct RetrainConfig {
  int n_adv = 100;       // adversarial samples to add
  int extra_epochs = 1;  // gradient steps on the constructed batch
  TrainConfig train;     // ratio / learning rate / dropout of the base model
};

struct RetrainResult {
  MlpModel model;
  std::vector<SampleVector> adversarial;  // the crafted samples actually used
  int requested = 0;                       // shortfall = requested - used
};

// Crafts adversarial samples from the model's correctly classified malware,
// labels them malicious, mixes them with benign training samples at the
// model's malware ratio into one batch, and iterates extra training epochs
// on it.
RetrainResult adversarial_retrain(const MlpModel& model, const Dataset& train,
                                  const RetrainConfig& config, const CraftingConfig& crafting);

}  // namespace malcraft
