#include "malcraft/crafting.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <fstream>
#include <stdexcept>
#include <thread>

namespace malcraft {

const char* to_string(CraftOutcome outcome) {
  switch (outcome) {
    case CraftOutcome::success: return "success";
    case CraftOutcome::budget_exhausted: return "budget_exhausted";
    case CraftOutcome::no_positive_gradient: return "no_positive_gradient";
    case CraftOutcome::already_target: return "already_target";
  }
  return "unknown";
}

CraftResult craft_sample(const MlpModel& model, const SampleVector& sample,
                         const CraftingConfig& config) {
  if (config.target != kBenign) {
    throw std::invalid_argument("only the benign target class is supported");
  }
  if (config.max_distortion < 0) {
    throw std::invalid_argument("max_distortion must be non-negative");
  }

  CraftResult result;
  result.sample_id = sample.id;

  Vector x = to_dense(sample, model.input_dim);
  auto current_prediction = [&] {
    // Working copy stays dense; argmax is temperature-invariant so this
    // matches predict() on the equivalent sparse sample.
    Vector2 probs = forward_dense(model, x).probs;
    return probs(1) > probs(0) ? kMalicious : kBenign;
  };

  if (current_prediction() == config.target) {
    result.outcome = CraftOutcome::already_target;
    result.final_probs = forward_dense(model, x).probs;
    return result;
  }

  while (current_prediction() != config.target &&
         static_cast<int>(result.added.size()) < config.max_distortion) {
    JacobianMatrix jac = forward_derivative_dense(model, x, sample.id);

    // Highest derivative toward the target among inactive candidate
    // features; ties break toward the lowest index.
    FeatureIndex best = -1;
    double best_saliency = 0.0;
    for (FeatureIndex j : config.index_set.members()) {
      if (x(j) != 0.0) continue;
      double saliency = jac.rows(config.target, j);
      if (best == -1 || saliency > best_saliency) {
        best = j;
        best_saliency = saliency;
      }
    }
    if (best == -1 || best_saliency <= 0.0) {
      result.outcome = CraftOutcome::no_positive_gradient;
      result.final_probs = forward_dense(model, x).probs;
      return result;
    }

    x(best) = 1.0;
    result.added.push_back(best);
    result.steps.push_back({best, best_saliency, forward_dense(model, x).probs(0)});
  }

  result.final_probs = forward_dense(model, x).probs;
  result.outcome = current_prediction() == config.target ? CraftOutcome::success
                                                         : CraftOutcome::budget_exhausted;
  return result;
}

CraftingReport craft_corpus(const MlpModel& model, const std::vector<SampleVector>& malware,
                            const CraftingConfig& config, int jobs) {
  if (malware.empty()) {
    throw std::invalid_argument("malware list must be non-empty");
  }

  // Partition up front so results can be merged back in input order.
  std::vector<const SampleVector*> attackable;
  CraftingReport report;
  for (const SampleVector& s : malware) {
    if (predict(model, s) == kMalicious) {
      attackable.push_back(&s);
    } else {
      ++report.skipped_pre_misclassified;
    }
  }
  report.attacked = attackable.size();
  report.results.resize(attackable.size());

  const int workers = std::max(1, jobs);
  if (workers == 1 || attackable.size() < 2) {
    for (std::size_t i = 0; i < attackable.size(); ++i) {
      report.results[i] = craft_sample(model, *attackable[i], config);
    }
  } else {
    std::vector<std::thread> pool;
    std::atomic<std::size_t> next{0};
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < attackable.size(); i = next.fetch_add(1)) {
          report.results[i] = craft_sample(model, *attackable[i], config);
        }
      });
    }
    for (std::thread& t : pool) t.join();
  }

  for (const CraftResult& r : report.results) {
    if (r.outcome == CraftOutcome::success) ++report.success_count;
  }
  return report;
}

SampleVector apply_perturbation(const SampleVector& sample, const CraftResult& result) {
  SampleVector out = sample;
  out.id = sample.id + "+adv";
  out.indices.insert(out.indices.end(), result.added.begin(), result.added.end());
  std::sort(out.indices.begin(), out.indices.end());
  out.indices.erase(std::unique(out.indices.begin(), out.indices.end()), out.indices.end());
  return out;
}

void write_craft_traces_jsonl(const std::filesystem::path& path, const CraftingReport& report,
                              const FeatureVocabulary& vocab) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot write trace file: " + path.string());
  }
  for (const CraftResult& r : report.results) {
    nlohmann::json line;
    line["id"] = r.sample_id;
    line["outcome"] = to_string(r.outcome);
    auto added = nlohmann::json::array();
    auto trace = nlohmann::json::array();
    for (const CraftStep& step : r.steps) {
      added.push_back(vocab.entry(step.feature).name);
      trace.push_back(step.benign_prob);
    }
    line["added_features"] = std::move(added);
    line["benign_prob_trace"] = std::move(trace);
    line["final_benign_prob"] = r.final_probs(0);
    out << line.dump() << '\n';
  }
}

}  // namespace malcraft
