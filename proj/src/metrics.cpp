#include "malcraft/metrics.hpp"

#include <stdexcept>

namespace malcraft {

ClassifierMetrics metrics_from_confusion(std::int64_t tp, std::int64_t tn, std::int64_t fp,
                                         std::int64_t fn) {
  ClassifierMetrics m;
  m.tp = tp;
  m.tn = tn;
  m.fp = fp;
  m.fn = fn;
  const std::int64_t total = tp + tn + fp + fn;
  if (total > 0) {
    m.accuracy = static_cast<double>(tp + tn) / static_cast<double>(total);
  }
  if (fn + tp > 0) {
    m.fnr = static_cast<double>(fn) / static_cast<double>(fn + tp);
  }
  if (fp + tn > 0) {
    m.fpr = static_cast<double>(fp) / static_cast<double>(fp + tn);
  }
  return m;
}

ClassifierMetrics evaluate_classifier(const MlpModel& model, const Dataset& test) {
  if (test.samples.empty()) {
    throw std::invalid_argument("test set must be non-empty");
  }
  std::int64_t tp = 0, tn = 0, fp = 0, fn = 0;
  for (const SampleVector& s : test.samples) {
    const int predicted = predict(model, s);
    if (s.label == kMalicious) {
      predicted == kMalicious ? ++tp : ++fn;
    } else {
      predicted == kBenign ? ++tn : ++fp;
    }
  }
  return metrics_from_confusion(tp, tn, fp, fn);
}

CraftingMetrics crafting_metrics(const CraftingReport& report) {
  CraftingMetrics m;
  m.denominator = static_cast<std::int64_t>(report.attacked);
  m.success_count = static_cast<std::int64_t>(report.success_count);
  if (m.denominator > 0) {
    m.mr = static_cast<double>(m.success_count) / static_cast<double>(m.denominator);
    double added_all = 0.0;
    double added_success = 0.0;
    for (const CraftResult& r : report.results) {
      added_all += static_cast<double>(r.added.size());
      if (r.outcome == CraftOutcome::success) {
        added_success += static_cast<double>(r.added.size());
      }
    }
    m.avg_distortion_all = added_all / static_cast<double>(m.denominator);
    if (m.success_count > 0) {
      m.avg_distortion_success = added_success / static_cast<double>(m.success_count);
    }
  }
  return m;
}

}  // namespace malcraft
