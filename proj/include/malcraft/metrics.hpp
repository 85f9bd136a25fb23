#pragma once

#include "malcraft/crafting.hpp"
#include "malcraft/feature_space.hpp"
#include "malcraft/mlp.hpp"

#include <cstdint>
#include <optional>

namespace malcraft {

// Confusion-matrix statistics with malicious as the positive class. Ratios
// whose denominator is zero are left unset rather than fabricated.
struct ClassifierMetrics {
  std::int64_t tp = 0, tn = 0, fp = 0, fn = 0;
  std::optional<double> accuracy;
  std::optional<double> fnr;  // fn / (fn + tp)
  std::optional<double> fpr;  // fp / (fp + tn)
};

ClassifierMetrics evaluate_classifier(const MlpModel& model, const Dataset& test);
ClassifierMetrics metrics_from_confusion(std::int64_t tp, std::int64_t tn, std::int64_t fp,
                                         std::int64_t fn);

// Attack statistics over a crafting report. The misclassification rate is
// taken over malware the model classified correctly before the attack;
// distortion is reported both conditioned on success and over all attacked
// samples.
struct CraftingMetrics {
  std::optional<double> mr;
  std::optional<double> avg_distortion_success;
  std::optional<double> avg_distortion_all;
  std::int64_t denominator = 0;
  std::int64_t success_count = 0;
};

CraftingMetrics crafting_metrics(const CraftingReport& report);

}  // namespace malcraft
