// Acceptance suite. Each criterion prints one [PASS]/[FAIL]/[SKIP] line;
// the exit code is non-zero when an executed criterion fails. Run a single
// criterion with --only <n>.

#include "malcraft/checkpoint.hpp"
#include "malcraft/crafting.hpp"
#include "malcraft/defenses.hpp"
#include "malcraft/experiment.hpp"
#include "malcraft/feature_space.hpp"
#include "malcraft/jacobian.hpp"
#include "malcraft/metrics.hpp"
#include "malcraft/mlp.hpp"

#include "oracles.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace malcraft;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

constexpr int kSkipExitCode = 77;

struct Check {
  std::string label;
  bool ok;
};

class Criterion {
 public:
  explicit Criterion(std::string name) : name_(std::move(name)), start_(Clock::now()) {}

  void expect(bool ok, const std::string& label) {
    checks_.push_back({label, ok});
    if (!ok) failed_ = true;
  }

  template <typename T>
  void expect_eq(const T& got, const T& want, const std::string& label) {
    std::ostringstream os;
    os << label << " (got " << got << ", want " << want << ")";
    expect(got == want, os.str());
  }

  bool finish(int index) {
    double elapsed = std::chrono::duration<double>(Clock::now() - start_).count();
    std::printf("[%s] criterion %d: %s (%.1f s)\n", failed_ ? "FAIL" : "PASS", index,
                name_.c_str(), elapsed);
    for (const Check& c : checks_) {
      std::printf("    %s %s\n", c.ok ? "ok  " : "FAIL", c.label.c_str());
    }
    return !failed_;
  }

 private:
  std::string name_;
  Clock::time_point start_;
  std::vector<Check> checks_;
  bool failed_ = false;
};

// ---------------------------------------------------------------------------
// Shared fixtures
// ---------------------------------------------------------------------------

// The pinned corpus and training protocol behind criteria 3, 5 and 7.
// Golden values below were recorded from this exact configuration and are
// regression-checked for equality.
SyntheticConfig pinned_corpus_config() {
  SyntheticConfig cfg;
  cfg.n_features = 1000;
  cfg.n_samples = 10000;
  cfg.malware_fraction = 0.15;
  cfg.n_signal_features = 100;
  cfg.signal_strength = 0.32;
  cfg.density = 60.0;
  cfg.seed = 427;
  return cfg;
}

TrainConfig pinned_train_config() {
  TrainConfig tc;
  tc.batch_size = 1000;
  tc.malware_ratio = 0.4;
  tc.epochs_per_batch = 40;
  tc.learning_rate = 0.05;
  tc.dropout_rate = 0.5;
  tc.seed = 29;
  return tc;
}

constexpr std::uint64_t kPinnedSplitSeed = 101;

struct PinnedSetup {
  Dataset corpus;
  SplitResult split;
  MlpModel model;
  CraftingConfig craft;
};

PinnedSetup build_pinned_setup() {
  PinnedSetup s;
  s.corpus = generate_synthetic_corpus(pinned_corpus_config());
  s.split = split_dataset(s.corpus, 1.0 / 3.0, kPinnedSplitSeed);
  TrainConfig tc = pinned_train_config();
  s.model = init_model(s.corpus.vocabulary.size(), {200, 200}, tc.seed);
  BatchStream stream =
      make_batches(s.split.train, tc.batch_size, tc.malware_ratio, tc.seed);
  train_sgd(s.model, s.split.train, stream, tc);
  s.craft.max_distortion = 20;
  s.craft.index_set = manifest_index_set(s.corpus.vocabulary);
  return s;
}

std::vector<SampleVector> malware_of(const Dataset& d) {
  std::vector<SampleVector> out;
  for (const SampleVector& s : d.samples) {
    if (s.label == kMalicious) out.push_back(s);
  }
  return out;
}

MlpModel random_small_model(FeatureIndex dim, std::uint64_t seed) {
  MlpModel model = init_model(dim, {8, 8}, seed);
  std::mt19937_64 rng(seed * 37 + 11);
  std::normal_distribution<double> dist(0.0, 0.3);
  for (Vector& b : model.biases) {
    for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = dist(rng);
  }
  return model;
}

Vector random_binary_input(FeatureIndex dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Vector x(dim);
  for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = unit(rng) < 0.3 ? 1.0 : 0.0;
  return x;
}

bool near_kink(const MlpModel& model, const Vector& x, double margin) {
  ForwardTrace t = forward_trace(model, x);
  for (std::size_t l = 0; l + 1 < t.pre_activations.size(); ++l) {
    if ((t.pre_activations[l].array().abs() < margin).any()) return true;
  }
  return false;
}

double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8});
}

// ---------------------------------------------------------------------------
// Criterion 1: gradient correctness
// ---------------------------------------------------------------------------

bool criterion_gradients() {
  Criterion c("backprop and input Jacobian match central finite differences");
  const double h = 1e-4;
  double worst_param = 0.0, worst_jac = 0.0;
  int models_checked = 0;
  std::uint64_t seed = 0;
  while (models_checked < 100) {
    ++seed;
    FeatureIndex dim = 5 + static_cast<FeatureIndex>(seed % 46);  // M <= 50
    MlpModel model = random_small_model(dim, seed);

    Dataset data;
    data.vocabulary = FeatureVocabulary::build({{FeatureClass::permission, "permission::p"}});
    std::vector<std::size_t> rows;
    std::vector<Vector2> targets;
    std::vector<Vector> inputs;
    bool kink = false;
    for (int i = 0; i < 3; ++i) {
      Vector x = random_binary_input(dim, seed * 97 + static_cast<std::uint64_t>(i));
      if (near_kink(model, x, 10.0 * h)) kink = true;
      SampleVector s;
      s.id = "a" + std::to_string(i);
      s.label = i % 2;
      for (Eigen::Index j = 0; j < x.size(); ++j) {
        if (x(j) != 0.0) s.indices.push_back(static_cast<FeatureIndex>(j));
      }
      data.samples.push_back(s);
      rows.push_back(static_cast<std::size_t>(i));
      targets.push_back(one_hot_label(s.label));
      inputs.push_back(x);
    }
    if (kink) continue;
    ++models_checked;

    Gradients grads = batch_gradients(model, data, rows, targets);
    for (std::size_t l = 0; l < model.weights.size(); ++l) {
      for (Eigen::Index col = 0; col < model.weights[l].cols(); ++col) {
        for (Eigen::Index row = 0; row < model.weights[l].rows(); ++row) {
          MlpModel probe = model;
          probe.weights[l](row, col) += h;
          double up = batch_gradients(probe, data, rows, targets).loss;
          probe.weights[l](row, col) -= 2.0 * h;
          double down = batch_gradients(probe, data, rows, targets).loss;
          worst_param =
              std::max(worst_param, rel_err((up - down) / (2.0 * h), grads.weights[l](row, col)));
        }
      }
      for (Eigen::Index row = 0; row < model.biases[l].size(); ++row) {
        MlpModel probe = model;
        probe.biases[l](row) += h;
        double up = batch_gradients(probe, data, rows, targets).loss;
        probe.biases[l](row) -= 2.0 * h;
        double down = batch_gradients(probe, data, rows, targets).loss;
        worst_param =
            std::max(worst_param, rel_err((up - down) / (2.0 * h), grads.biases[l](row)));
      }
    }

    JacobianMatrix analytic = forward_derivative_dense(model, inputs[0]);
    JacobianMatrix fd = finite_difference_jacobian(model, inputs[0], h);
    for (Eigen::Index col = 0; col < analytic.rows.cols(); ++col) {
      for (int row = 0; row < 2; ++row) {
        worst_jac = std::max(worst_jac, rel_err(analytic.rows(row, col), fd.rows(row, col)));
      }
    }
  }
  char buf[160];
  std::snprintf(buf, sizeof(buf), "parameter gradients: max rel err %.3g <= 1e-4", worst_param);
  c.expect(worst_param <= 1e-4, buf);
  std::snprintf(buf, sizeof(buf), "input Jacobians: max rel err %.3g <= 1e-4", worst_jac);
  c.expect(worst_jac <= 1e-4, buf);
  return c.finish(1);
}

// ---------------------------------------------------------------------------
// Criterion 2: softmax and temperature identities
// ---------------------------------------------------------------------------

bool criterion_softmax_identities() {
  Criterion c("softmax normalization, temperature scaling, Jacobian antisymmetry");
  std::mt19937_64 rng(20231u);
  std::uniform_real_distribution<double> logit(-40.0, 40.0);
  std::uniform_real_distribution<double> temp(0.05, 100.0);

  double worst_norm = 0.0, worst_scale = 0.0;
  for (int i = 0; i < 10000; ++i) {
    Vector2 z(logit(rng), logit(rng));
    double t = temp(rng);
    Vector2 p = softmax_with_temperature(z, t);
    worst_norm = std::max(worst_norm, std::abs(p(0) + p(1) - 1.0));
    Vector2 q = softmax_with_temperature(z / t, 1.0);
    worst_scale = std::max({worst_scale, std::abs(p(0) - q(0)), std::abs(p(1) - q(1))});
  }
  char buf[160];
  std::snprintf(buf, sizeof(buf), "F0+F1=1 within 1e-9 over 10000 inputs (worst %.3g)", worst_norm);
  c.expect(worst_norm < 1e-9, buf);
  std::snprintf(buf, sizeof(buf), "softmax(z,T)=softmax(z/T,1) within 1e-12 (worst %.3g)",
                worst_scale);
  c.expect(worst_scale < 1e-12, buf);

  double worst_anti = 0.0;
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    FeatureIndex dim = 5 + static_cast<FeatureIndex>(seed % 30);
    MlpModel model = random_small_model(dim, seed);
    model.temperature = (seed % 3 == 0) ? 10.0 : 1.0;
    Vector x = random_binary_input(dim, seed + 9000);
    JacobianMatrix jac = forward_derivative_dense(model, x);
    worst_anti =
        std::max(worst_anti, (jac.rows.row(0) + jac.rows.row(1)).cwiseAbs().maxCoeff());
  }
  std::snprintf(buf, sizeof(buf), "Jacobian row antisymmetry within 1e-9 (worst %.3g)", worst_anti);
  c.expect(worst_anti < 1e-9, buf);
  return c.finish(2);
}

// ---------------------------------------------------------------------------
// Criterion 3: crafting invariants at corpus scale
// ---------------------------------------------------------------------------

bool criterion_crafting_invariants() {
  Criterion c("crafting invariants over >= 1000 samples on the pinned corpus");
  PinnedSetup setup = build_pinned_setup();
  std::vector<SampleVector> malware = malware_of(setup.corpus);
  CraftingReport report = craft_corpus(setup.model, malware, setup.craft, 2);

  c.expect(report.attacked >= 1000,
           "at least 1000 samples crafted (attacked " + std::to_string(report.attacked) + ")");
  c.expect_eq<std::size_t>(report.attacked, 1500, "golden: attacked count");
  c.expect_eq<std::size_t>(report.success_count, 1185, "golden: success count");

  bool add_only = true, in_index_set = true, within_budget = true, sound = true,
       no_repeats = true;
  for (std::size_t i = 0; i < report.results.size(); ++i) {
    const CraftResult& r = report.results[i];
    const SampleVector* original = nullptr;
    for (const SampleVector& s : malware) {
      if (s.id == r.sample_id) {
        original = &s;
        break;
      }
    }
    if (original == nullptr) {
      sound = false;
      continue;
    }
    std::set<FeatureIndex> unique(r.added.begin(), r.added.end());
    if (unique.size() != r.added.size()) no_repeats = false;
    if (static_cast<int>(r.added.size()) > setup.craft.max_distortion) within_budget = false;
    for (FeatureIndex f : r.added) {
      if (!setup.craft.index_set.contains(f)) in_index_set = false;
      if (original->has_feature(f)) add_only = false;
    }
    bool flipped = predict(setup.model, apply_perturbation(*original, r)) == kBenign;
    if ((r.outcome == CraftOutcome::success) != flipped) sound = false;
  }
  c.expect(add_only, "add-only: no added feature was already active");
  c.expect(in_index_set, "every added feature lies in the index set");
  c.expect(within_budget, "perturbation size <= k = 20 everywhere");
  c.expect(no_repeats, "no feature added twice");
  c.expect(sound, "outcome == success exactly when the prediction flipped");

  bool deterministic = true;
  std::vector<SampleVector> subset(malware.begin(), malware.begin() + 100);
  CraftingReport again = craft_corpus(setup.model, subset, setup.craft, 1);
  for (std::size_t i = 0, j = 0; i < again.results.size(); ++i, ++j) {
    if (again.results[i].added != report.results[j].added ||
        again.results[i].outcome != report.results[j].outcome) {
      deterministic = false;
    }
  }
  c.expect(deterministic, "re-running the first 100 samples reproduces the traces");
  return c.finish(3);
}

// ---------------------------------------------------------------------------
// Criterion 4: mutual-information oracle equivalence
// ---------------------------------------------------------------------------

bool criterion_mi_oracle() {
  Criterion c("MI matches direct summation; tie inclusion is exact");
  std::mt19937_64 rng(777u);
  std::uniform_int_distribution<int> count(0, 50);
  double worst = 0.0;
  int done = 0;
  while (done < 1000) {
    int c00 = count(rng), c01 = count(rng), c10 = count(rng), c11 = count(rng);
    if (c01 + c11 == 0 || c00 + c10 == 0) continue;
    ++done;
    Dataset d = testing::dataset_from_joint(c00, c01, c10, c11);
    double got = rank_mutual_information(d).scores[0];
    double want = std::max(testing::mi_from_joint(c00, c01, c10, c11), 0.0);
    worst = std::max(worst, std::abs(got - want));
  }
  char buf[160];
  std::snprintf(buf, sizeof(buf), "1000 random 4-cell joints within 1e-12 (worst %.3g)", worst);
  c.expect(worst < 1e-12, buf);

  MIScores tie_top;
  tie_top.scores = {0.5, 0.5, 0.1};
  c.expect(select_by_mi(tie_top, 1, MIDirection::top).selected.members() ==
               std::vector<FeatureIndex>{0, 1},
           "top-1 over {0.5, 0.5, 0.1} includes both tied features");
  MIScores tie_bottom;
  tie_bottom.scores = {0.0, 0.0, 0.9};
  c.expect(select_by_mi(tie_bottom, 1, MIDirection::bottom).selected.members() ==
               std::vector<FeatureIndex>{0, 1},
           "bottom-1 over {0.0, 0.0, 0.9} includes both tied features");
  MIScores plain;
  plain.scores = {0.5, 0.3, 0.1};
  c.expect(select_by_mi(plain, 2, MIDirection::top).selected.members() ==
               std::vector<FeatureIndex>{0, 1},
           "untied top-2 stays at exactly n features");
  return c.finish(4);
}

// ---------------------------------------------------------------------------
// Criterion 5: desk-scale end-to-end on the pinned corpus
// ---------------------------------------------------------------------------

bool criterion_end_to_end() {
  Criterion c("desk-scale end-to-end on the pinned synthetic corpus");
  PinnedSetup setup = build_pinned_setup();
  TrainConfig tc = pinned_train_config();

  testing::LogisticOracle oracle(setup.corpus.vocabulary.size());
  oracle.fit(setup.split.train);
  double oracle_acc = oracle.accuracy(setup.split.test);
  c.expect(oracle_acc >= 0.95, "logistic-regression oracle reaches 0.95 on the corpus (got " +
                                   std::to_string(oracle_acc) + ")");

  ClassifierMetrics cm = evaluate_classifier(setup.model, setup.split.test);
  c.expect(*cm.accuracy >= 0.95,
           "trained [200,200] accuracy >= 0.95 (got " + std::to_string(*cm.accuracy) + ")");
  c.expect_eq(*cm.accuracy, 1.0, "golden: baseline test accuracy");

  std::vector<SampleVector> test_malware = malware_of(setup.split.test);
  CraftingReport report = craft_corpus(setup.model, test_malware, setup.craft, 2);
  CraftingMetrics km = crafting_metrics(report);
  c.expect(km.mr.has_value() && *km.mr >= 0.5,
           "baseline MR >= 0.5 at k = 20 (got " + std::to_string(km.mr ? *km.mr : -1.0) + ")");
  c.expect_eq<std::int64_t>(km.denominator, 500, "golden: attack denominator");
  c.expect_eq<std::int64_t>(km.success_count, 394, "golden: attack success count");
  c.expect_eq(*km.avg_distortion_success, 15.129441624365482,
              "golden: average successful distortion");

  MlpModel student = distill(setup.model, setup.split.train, 10.0, tc);
  CraftingMetrics dkm = crafting_metrics(craft_corpus(student, test_malware, setup.craft, 2));
  c.expect(dkm.mr.has_value() && *dkm.mr < *km.mr,
           "distilled (T=10) MR strictly below baseline (distilled " +
               std::to_string(dkm.mr ? *dkm.mr : -1.0) + " vs baseline " + std::to_string(*km.mr) +
               ")");

  RetrainConfig rc;
  rc.n_adv = 100;
  rc.extra_epochs = 1;
  rc.train = tc;
  RetrainResult rr = adversarial_retrain(setup.model, setup.split.train, rc, setup.craft);
  std::size_t caught = 0;
  for (const SampleVector& adv : rr.adversarial) {
    if (predict(rr.model, adv) == kMalicious) ++caught;
  }
  c.expect_eq<std::size_t>(rr.adversarial.size(), 100, "golden: adversarial samples used");
  double retained = static_cast<double>(caught) / static_cast<double>(rr.adversarial.size());
  c.expect(retained >= 0.9, "retrained model catches >= 90% of its own adversarial samples (got " +
                                std::to_string(retained) + ")");
  c.expect_eq<std::size_t>(caught, 100, "golden: retained adversarial count");
  return c.finish(5);
}

// ---------------------------------------------------------------------------
// Criterion 6: full-corpus reference values (data-gated)
// ---------------------------------------------------------------------------

bool criterion_drebin(bool* skipped) {
  const char* feature_dir = std::getenv("MALCRAFT_DREBIN_FEATURES");
  const char* labels = std::getenv("MALCRAFT_DREBIN_LABELS");
  if (feature_dir == nullptr || labels == nullptr) {
    std::printf(
        "[SKIP] criterion 6: full-corpus reproduction (set MALCRAFT_DREBIN_FEATURES and "
        "MALCRAFT_DREBIN_LABELS to run)\n");
    *skipped = true;
    return true;
  }
  *skipped = false;
  Criterion c("full-corpus runs land on the reference values");

  IngestResult ingest = parse_drebin_corpus(feature_dir, labels);
  c.expect_eq<FeatureIndex>(ingest.report.feature_count, 545333, "feature count");
  c.expect_eq<std::size_t>(ingest.report.samples_kept, 129013, "sample count");
  c.expect_eq<std::size_t>(ingest.report.malicious, 5560, "malicious count");

  const Dataset& corpus = ingest.dataset;
  SplitResult split = split_dataset(corpus, 1.0 / 3.0, kPinnedSplitSeed);

  c.expect_eq<std::size_t>(
      restriction_survivors(split.train, {Restriction::Kind::manifest_only, 1}).size(), 233727,
      "manifestonly survivor count");
  c.expect_eq<std::size_t>(
      restriction_survivors(split.train, {Restriction::Kind::only_small, 1}).size(), 234845,
      "onlysmall r=1 survivor count");
  c.expect_eq<std::size_t>(
      restriction_survivors(split.train, {Restriction::Kind::only_small, 2}).size(), 49116,
      "onlysmall r=2 survivor count");
  const std::size_t only_freq_expected[4] = {177438, 95871, 60052, 44942};
  for (int r = 1; r <= 4; ++r) {
    c.expect_eq<std::size_t>(
        restriction_survivors(split.train, {Restriction::Kind::only_freq, r}).size(),
        only_freq_expected[r - 1], "onlyfreq r=" + std::to_string(r) + " survivor count");
  }

  TrainConfig tc = pinned_train_config();
  MlpModel model = init_model(corpus.vocabulary.size(), {200, 200}, tc.seed);
  BatchStream stream = make_batches(split.train, tc.batch_size, tc.malware_ratio, tc.seed);
  train_sgd(model, split.train, stream, tc);

  ClassifierMetrics cm = evaluate_classifier(model, split.test);
  c.expect(std::abs(*cm.accuracy * 100.0 - 96.6) <= 1.5,
           "accuracy 96.6 +- 1.5 (got " + std::to_string(*cm.accuracy * 100.0) + ")");
  c.expect(std::abs(*cm.fnr * 100.0 - 8.13) <= 3.0,
           "FNR 8.13 +- 3.0 (got " + std::to_string(*cm.fnr * 100.0) + ")");
  c.expect(std::abs(*cm.fpr * 100.0 - 3.19) <= 1.5,
           "FPR 3.19 +- 1.5 (got " + std::to_string(*cm.fpr * 100.0) + ")");

  CraftingConfig craft;
  craft.max_distortion = 20;
  craft.index_set = manifest_index_set(corpus.vocabulary);
  CraftingMetrics km =
      crafting_metrics(craft_corpus(model, malware_of(split.test), craft, 2));
  c.expect(km.mr && std::abs(*km.mr * 100.0 - 64.01) <= 10.0,
           "MR 64.01 +- 10 (got " + std::to_string(km.mr ? *km.mr * 100.0 : -1.0) + ")");
  c.expect(km.avg_distortion_success && std::abs(*km.avg_distortion_success - 14.84) <= 3.0,
           "avg distortion 14.84 +- 3 (got " +
               std::to_string(km.avg_distortion_success ? *km.avg_distortion_success : -1.0) +
               ")");

  MlpModel student = distill(model, split.train, 10.0, tc);
  CraftingMetrics dkm =
      crafting_metrics(craft_corpus(student, malware_of(split.test), craft, 2));
  c.expect(dkm.mr && *dkm.mr < *km.mr,
           "distilled MR below baseline (distilled " + std::to_string(dkm.mr ? *dkm.mr : -1.0) +
               " vs " + std::to_string(*km.mr) + ")");
  return c.finish(6);
}

// ---------------------------------------------------------------------------
// Criterion 7: quick-start determinism
// ---------------------------------------------------------------------------

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool criterion_determinism() {
  Criterion c("quick-start config run twice gives byte-identical reports");
  fs::path config_path = fs::path(MALCRAFT_SOURCE_DIR) / "configs" / "quickstart.json";
  ExperimentConfig config = load_experiment_config(config_path);

  fs::path base = fs::temp_directory_path() / "malcraft_acceptance_determinism";
  fs::remove_all(base);
  RunOptions a;
  a.output_dir = base / "run_a";
  a.jobs = 2;
  std::vector<ReportRow> rows_a = run_experiment(config, a);
  RunOptions b;
  b.output_dir = base / "run_b";
  b.jobs = 2;
  run_experiment(config, b);

  c.expect(rows_a.size() >= 6,
           "quick-start emits at least 6 rows (got " + std::to_string(rows_a.size()) + ")");
  std::string csv_a = read_file(a.output_dir / "report.csv");
  std::string csv_b = read_file(b.output_dir / "report.csv");
  c.expect(!csv_a.empty(), "report.csv was written");
  c.expect(csv_a == csv_b, "report.csv is byte-identical across runs");
  return c.finish(7);
}

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    if (std::string(argv[i]) == "--only" && i + 1 < argc) {
      only = std::atoi(argv[i + 1]);
    }
  }

  bool all_ok = true;
  bool skipped6 = false;
  auto run = [&](int index, const std::function<bool()>& fn) {
    if (only != 0 && only != index) return;
    if (!fn()) all_ok = false;
  };

  run(1, criterion_gradients);
  run(2, criterion_softmax_identities);
  run(3, criterion_crafting_invariants);
  run(4, criterion_mi_oracle);
  run(5, criterion_end_to_end);
  run(6, [&] { return criterion_drebin(&skipped6); });
  run(7, criterion_determinism);

  if (only == 6 && skipped6) return kSkipExitCode;
  return all_ok ? 0 : 1;
}
