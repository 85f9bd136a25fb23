#include "malcraft/defenses.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>
#include <random>
#include <stdexcept>

namespace malcraft {

std::string Restriction::name() const {
  switch (kind) {
    case Kind::manifest_only: return "manifestonly";
    case Kind::only_small: return "onlysmall";
    case Kind::only_freq: return "onlyfreq";
  }
  return "unknown";
}

std::string Restriction::param_string() const {
  return kind == Kind::manifest_only ? std::string() : std::to_string(r);
}

IndexSet restriction_survivors(const Dataset& dataset, const Restriction& restriction) {
  const FeatureVocabulary& vocab = dataset.vocabulary;
  std::vector<FeatureIndex> members;

  switch (restriction.kind) {
    case Restriction::Kind::manifest_only:
      return manifest_index_set(vocab);

    case Restriction::Kind::only_small: {
      if (restriction.r < 1) throw std::invalid_argument("only_small requires r >= 1");
      auto counts = vocab.class_counts();
      // Rank classes by cardinality, largest first; ties resolve by class id
      // so the outcome is deterministic.
      std::vector<int> order(kFeatureClassCount);
      std::iota(order.begin(), order.end(), 0);
      std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (counts[static_cast<std::size_t>(a)] != counts[static_cast<std::size_t>(b)])
          return counts[static_cast<std::size_t>(a)] > counts[static_cast<std::size_t>(b)];
        return a < b;
      });
      std::array<bool, kFeatureClassCount> dropped{};
      int to_drop = restriction.r;
      for (int cls : order) {
        if (to_drop == 0) break;
        if (counts[static_cast<std::size_t>(cls)] == 0) continue;
        dropped[static_cast<std::size_t>(cls)] = true;
        --to_drop;
      }
      for (FeatureIndex i = 0; i < vocab.size(); ++i) {
        if (!dropped[static_cast<std::size_t>(vocab.entry(i).cls)]) members.push_back(i);
      }
      break;
    }

    case Restriction::Kind::only_freq: {
      if (restriction.r < 1) throw std::invalid_argument("only_freq requires r >= 1");
      std::vector<std::size_t> freq(static_cast<std::size_t>(vocab.size()), 0);
      for (const SampleVector& s : dataset.samples) {
        for (FeatureIndex i : s.indices) ++freq[static_cast<std::size_t>(i)];
      }
      for (FeatureIndex i = 0; i < vocab.size(); ++i) {
        if (freq[static_cast<std::size_t>(i)] >= static_cast<std::size_t>(restriction.r)) {
          members.push_back(i);
        }
      }
      break;
    }
  }
  return IndexSet(std::move(members));
}

RestrictedDataset apply_feature_subset(const Dataset& dataset, const IndexSet& kept) {
  if (kept.empty()) {
    throw std::invalid_argument("restriction eliminates every feature");
  }
  RestrictedDataset out;
  out.kept = kept;
  out.old_to_new.assign(static_cast<std::size_t>(dataset.vocabulary.size()), -1);

  std::vector<VocabEntry> entries;
  entries.reserve(kept.size());
  for (FeatureIndex old : kept.members()) {
    entries.push_back(dataset.vocabulary.entry(old));
  }
  // Surviving entries are already in vocabulary order, so indices stay
  // sorted by (class, name) after re-indexing.
  out.dataset.vocabulary = FeatureVocabulary::build(std::move(entries));
  out.dataset.provenance = Provenance::restricted;
  for (FeatureIndex old : kept.members()) {
    out.old_to_new[static_cast<std::size_t>(old)] =
        *out.dataset.vocabulary.index_of(dataset.vocabulary.entry(old).name);
  }

  out.dataset.samples.reserve(dataset.samples.size());
  for (const SampleVector& s : dataset.samples) {
    SampleVector ns;
    ns.id = s.id;
    ns.label = s.label;
    for (FeatureIndex i : s.indices) {
      FeatureIndex mapped = out.old_to_new[static_cast<std::size_t>(i)];
      if (mapped >= 0) ns.indices.push_back(mapped);
    }
    std::sort(ns.indices.begin(), ns.indices.end());
    out.dataset.samples.push_back(std::move(ns));
  }
  return out;
}

RestrictedDataset restrict_features(const Dataset& dataset, const Restriction& restriction) {
  return apply_feature_subset(dataset, restriction_survivors(dataset, restriction));
}

// ---------------------------------------------------------------------------
// Mutual information
// ---------------------------------------------------------------------------

MIScores rank_mutual_information(const Dataset& dataset) {
  const std::size_t total = dataset.samples.size();
  const std::size_t malicious = dataset.count_label(kMalicious);
  if (malicious == 0 || malicious == total) {
    throw std::invalid_argument("mutual information needs both classes present");
  }

  const auto m = static_cast<std::size_t>(dataset.vocabulary.size());
  std::vector<std::size_t> present_mal(m, 0), present_ben(m, 0);
  for (const SampleVector& s : dataset.samples) {
    auto& present = s.label == kMalicious ? present_mal : present_ben;
    for (FeatureIndex i : s.indices) ++present[static_cast<std::size_t>(i)];
  }

  const double n = static_cast<double>(total);
  const double py1 = static_cast<double>(malicious) / n;
  const double py0 = 1.0 - py1;

  MIScores result;
  result.malware_prior = py1;
  result.scores.resize(m);
  for (std::size_t f = 0; f < m; ++f) {
    const double c11 = static_cast<double>(present_mal[f]);
    const double c10 = static_cast<double>(present_ben[f]);
    const double c01 = static_cast<double>(malicious) - c11;
    const double c00 = static_cast<double>(total - malicious) - c10;
    const double px1 = (c11 + c10) / n;
    const double px0 = 1.0 - px1;

    auto term = [n](double count, double px, double py) {
      if (count == 0.0) return 0.0;  // 0 * log(0/q) contributes 0
      double pxy = count / n;
      return pxy * std::log(pxy / (px * py));
    };
    double mi = term(c11, px1, py1) + term(c10, px1, py0) + term(c01, px0, py1) +
                term(c00, px0, py0);
    // Exact MI is non-negative; clip the rounding residue of cancelling terms.
    result.scores[f] = std::max(mi, 0.0);
  }
  return result;
}

MISelection select_by_mi(const MIScores& scores, FeatureIndex n, MIDirection direction) {
  if (n < 1) {
    throw std::invalid_argument("selection size must be at least 1");
  }
  const auto m = static_cast<FeatureIndex>(scores.scores.size());
  if (n > m) {
    std::cerr << "warning: requested " << n << " features but only " << m
              << " exist; clamping\n";
    n = m;
  }

  std::vector<FeatureIndex> order(static_cast<std::size_t>(m));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](FeatureIndex a, FeatureIndex b) {
    double sa = scores.scores[static_cast<std::size_t>(a)];
    double sb = scores.scores[static_cast<std::size_t>(b)];
    if (sa != sb) return direction == MIDirection::top ? sa > sb : sa < sb;
    return a < b;
  });

  const double cutoff = scores.scores[static_cast<std::size_t>(order[static_cast<std::size_t>(n - 1)])];
  std::vector<FeatureIndex> selected;
  for (FeatureIndex rank = 0; rank < m; ++rank) {
    FeatureIndex f = order[static_cast<std::size_t>(rank)];
    if (rank < n || scores.scores[static_cast<std::size_t>(f)] == cutoff) {
      selected.push_back(f);
    }
  }

  MISelection result;
  result.direction = direction;
  result.requested = n;
  result.selected = IndexSet(std::move(selected));
  return result;
}

// ---------------------------------------------------------------------------
// Distillation
// ---------------------------------------------------------------------------

std::vector<Vector2> soft_labels(const MlpModel& teacher, const Dataset& dataset,
                                 double temperature) {
  if (!(temperature > 0.0)) {
    throw std::invalid_argument("temperature must be positive");
  }
  std::vector<Vector2> labels;
  labels.reserve(dataset.samples.size());
  for (const SampleVector& s : dataset.samples) {
    OutputDistribution out = forward(teacher, s);
    labels.push_back(softmax_with_temperature(out.logits, temperature));
  }
  return labels;
}

MlpModel distill(const MlpModel& teacher, const Dataset& train, double temperature,
                 const TrainConfig& config) {
  std::vector<Vector2> labels = soft_labels(teacher, train, temperature);

  MlpModel student = init_model(teacher.input_dim, teacher.hidden_sizes(),
                                mix_seed(config.seed, 0xd157));
  student.temperature = temperature;

  // The temperature softmax attenuates output gradients by 1/T; scaling the
  // step size by T keeps the effective step comparable across temperatures
  // (and is the identity at T = 1).
  TrainConfig student_config = config;
  student_config.learning_rate = config.learning_rate * temperature;

  BatchStream stream =
      make_batches(train, config.batch_size, config.malware_ratio, config.seed);
  train_sgd(student, train, stream, student_config, &labels);

  student.temperature = 1.0;  // deployment condition
  return student;
}

// ---------------------------------------------------------------------------
// Adversarial retraining
// ---------------------------------------------------------------------------

RetrainResult adversarial_retrain(const MlpModel& model, const Dataset& train,
                                  const RetrainConfig& config, const CraftingConfig& crafting) {
  if (config.n_adv < 1) {
    throw std::invalid_argument("n_adv must be at least 1");
  }
  if (config.extra_epochs < 0) {
    throw std::invalid_argument("extra_epochs must be non-negative");
  }

  std::vector<std::size_t> malware_rows, benign_rows;
  for (std::size_t i = 0; i < train.samples.size(); ++i) {
    (train.samples[i].label == kMalicious ? malware_rows : benign_rows).push_back(i);
  }
  if (benign_rows.empty()) {
    throw std::invalid_argument("training set has no benign samples to mix with");
  }

  std::mt19937_64 rng(mix_seed(config.train.seed, 0xad7e));
  std::shuffle(malware_rows.begin(), malware_rows.end(), rng);

  RetrainResult result;
  result.requested = config.n_adv;
  for (std::size_t row : malware_rows) {
    if (static_cast<int>(result.adversarial.size()) >= config.n_adv) break;
    const SampleVector& s = train.samples[row];
    if (predict(model, s) != kMalicious) continue;
    CraftResult crafted = craft_sample(model, s, crafting);
    if (crafted.outcome != CraftOutcome::success) continue;
    SampleVector adv = apply_perturbation(s, crafted);
    adv.label = kMalicious;
    result.adversarial.push_back(std::move(adv));
  }
  if (result.adversarial.empty()) {
    std::cerr << "warning: no craftable malware samples; model returned unchanged\n";
    result.model = model;
    return result;
  }
  if (static_cast<int>(result.adversarial.size()) < config.n_adv) {
    std::cerr << "warning: only " << result.adversarial.size() << " of " << config.n_adv
              << " adversarial samples could be crafted\n";
  }

  // One batch: the adversarial samples are the malicious portion, padded
  // with benign training samples to the model's malware ratio.
  const double ratio = config.train.malware_ratio;
  const auto n_adv_used = result.adversarial.size();
  auto n_benign = static_cast<std::size_t>(
      std::llround(static_cast<double>(n_adv_used) * (1.0 - ratio) / ratio));
  n_benign = std::min(n_benign, benign_rows.size());
  std::shuffle(benign_rows.begin(), benign_rows.end(), rng);

  Dataset batch_set;
  batch_set.vocabulary = train.vocabulary;
  batch_set.provenance = train.provenance;
  batch_set.samples = result.adversarial;
  for (std::size_t i = 0; i < n_benign; ++i) {
    batch_set.samples.push_back(train.samples[benign_rows[i]]);
  }

  BatchStream stream;
  stream.batch_size = batch_set.samples.size();
  stream.malware_per_batch = n_adv_used;
  Batch batch;
  batch.sample_rows.resize(batch_set.samples.size());
  std::iota(batch.sample_rows.begin(), batch.sample_rows.end(), 0);
  stream.batches.push_back(std::move(batch));

  TrainConfig step = config.train;
  step.epochs_per_batch = config.extra_epochs;

  result.model = model;
  train_sgd(result.model, batch_set, stream, step);
  return result;
}

}  // namespace malcraft
