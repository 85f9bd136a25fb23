#pragma once

#include "malcraft/feature_space.hpp"
#include "malcraft/jacobian.hpp"
#include "malcraft/mlp.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace malcraft {

// Iterative add-only evasion under an L1 budget: in each round the inactive
// feature from `index_set` with the largest positive derivative toward the
// target class is switched on, until the prediction flips or the budget or
// gradient runs out.
struct CraftingConfig {
  int max_distortion = 20;  // L1 bound k
  IndexSet index_set;       // features that may be added
  int target = kBenign;     // only benign targets are supported
};

enum class CraftOutcome {
  success,
  budget_exhausted,
  no_positive_gradient,
  already_target,
};

const char* to_string(CraftOutcome outcome);

struct CraftStep {
  FeatureIndex feature;
  double saliency;
  double benign_prob;  // F_0 after the feature was added
};

struct CraftResult {
  std::string sample_id;
  CraftOutcome outcome = CraftOutcome::already_target;
  std::vector<FeatureIndex> added;  // perturbation, in addition order
  std::vector<CraftStep> steps;
  Vector2 final_probs = Vector2::Zero();
};

CraftResult craft_sample(const MlpModel& model, const SampleVector& sample,
                         const CraftingConfig& config);

// Corpus-level crafting. Only malware the model currently classifies
// correctly is attacked; the rest is counted as skipped and excluded from
// the misclassification-rate denominator.
struct CraftingReport {
  std::vector<CraftResult> results;           // one per attacked sample, input order
  std::size_t attacked = 0;                   // MR denominator
  std::size_t skipped_pre_misclassified = 0;  // malware already predicted benign
  std::size_t success_count = 0;
};

CraftingReport craft_corpus(const MlpModel& model, const std::vector<SampleVector>& malware,
                            const CraftingConfig& config, int jobs = 1);

// The perturbed sample (original indices plus the crafted additions).
SampleVector apply_perturbation(const SampleVector& sample, const CraftResult& result);

// One JSON object per attacked sample: id, outcome, added feature names,
// and the per-step F_0 trace.
void write_craft_traces_jsonl(const std::filesystem::path& path, const CraftingReport& report,
                              const FeatureVocabulary& vocab);

}  // namespace malcraft
