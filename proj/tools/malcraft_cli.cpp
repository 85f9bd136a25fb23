// Experiment driver: train malware classifiers on sparse binary feature
// vectors, craft add-only evasion samples against them, and evaluate
// hardening mechanisms. See README.md for the config format.

#include "malcraft/checkpoint.hpp"
#include "malcraft/crafting.hpp"
#include "malcraft/defenses.hpp"
#include "malcraft/experiment.hpp"
#include "malcraft/feature_space.hpp"
#include "malcraft/metrics.hpp"
#include "malcraft/mlp.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

namespace fs = std::filesystem;
using namespace malcraft;

namespace {

std::vector<FeatureIndex> parse_arch(const std::string& text) {
  std::vector<FeatureIndex> layers;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    layers.push_back(static_cast<FeatureIndex>(std::stol(item)));
  }
  return layers;
}

Dataset load_dataset_dir(const fs::path& dir) {
  return load_dataset(dir / "vocabulary.txt", dir / "samples.txt");
}

void save_dataset_dir(const Dataset& dataset, const fs::path& dir) {
  fs::create_directories(dir);
  save_dataset(dataset, dir / "vocabulary.txt", dir / "samples.txt");
}

void print_classifier_metrics(const ClassifierMetrics& m) {
  auto pct = [](const std::optional<double>& v) {
    return v ? std::to_string(*v * 100.0) + "%" : std::string("undefined");
  };
  std::cout << "accuracy: " << pct(m.accuracy) << "\n"
            << "fnr:      " << pct(m.fnr) << "\n"
            << "fpr:      " << pct(m.fpr) << "\n"
            << "confusion tp=" << m.tp << " tn=" << m.tn << " fp=" << m.fp << " fn=" << m.fn
            << "\n";
}

void print_crafting_metrics(const CraftingMetrics& m) {
  std::cout << "attacked (denominator): " << m.denominator << "\n"
            << "successes:              " << m.success_count << "\n";
  if (m.mr) {
    std::cout << "misclassification rate: " << *m.mr * 100.0 << "%\n";
  } else {
    std::cout << "misclassification rate: undefined (0/0)\n";
  }
  if (m.avg_distortion_success) {
    std::cout << "avg distortion (success): " << *m.avg_distortion_success << "\n";
  }
  if (m.avg_distortion_all) {
    std::cout << "avg distortion (all):     " << *m.avg_distortion_all << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"malcraft: adversarial crafting and hardening for malware classifiers"};
  app.require_subcommand(1);

  // --- synth -----------------------------------------------------------
  auto* synth = app.add_subcommand("synth", "Generate a deterministic synthetic corpus");
  SyntheticConfig synth_cfg;
  std::string synth_out = "synth_data";
  synth->add_option("--features", synth_cfg.n_features, "Feature count");
  synth->add_option("--samples", synth_cfg.n_samples, "Sample count");
  synth->add_option("--malware-fraction", synth_cfg.malware_fraction, "Malicious fraction");
  synth->add_option("--signal-features", synth_cfg.n_signal_features, "Informative features");
  synth->add_option("--signal-strength", synth_cfg.signal_strength, "Signal probability delta");
  synth->add_option("--density", synth_cfg.density, "Mean active features per sample");
  synth->add_option("--seed", synth_cfg.seed, "Generator seed");
  synth->add_option("--out", synth_out, "Output directory")->required();

  // --- ingest ----------------------------------------------------------
  auto* ingest = app.add_subcommand("ingest", "Parse a DREBIN-format corpus");
  std::string ingest_dir, ingest_labels, ingest_out, ingest_prefix_map;
  ingest->add_option("--feature-dir", ingest_dir, "Directory of per-app feature files")->required();
  ingest->add_option("--labels", ingest_labels, "CSV manifest of malicious hashes")->required();
  ingest->add_option("--out", ingest_out, "Output dataset directory")->required();
  ingest->add_option("--prefix-map", ingest_prefix_map, "Optional prefix=class override file");

  // --- train -----------------------------------------------------------
  auto* train_cmd = app.add_subcommand("train", "Train a classifier");
  std::string train_data, train_arch = "200,200", train_model_out = "model.ckpt";
  TrainConfig train_cfg;
  double train_test_fraction = 0.0;
  std::uint64_t train_split_seed = 1;
  train_cmd->add_option("--data", train_data, "Dataset directory")->required();
  train_cmd->add_option("--arch", train_arch, "Hidden layer sizes, e.g. 200,200");
  train_cmd->add_option("--ratio", train_cfg.malware_ratio, "Malware ratio per batch");
  train_cmd->add_option("--batch-size", train_cfg.batch_size, "Batch size");
  train_cmd->add_option("--epochs-per-batch", train_cfg.epochs_per_batch, "Epochs per batch");
  train_cmd->add_option("--learning-rate", train_cfg.learning_rate, "Learning rate");
  train_cmd->add_option("--dropout", train_cfg.dropout_rate, "Hidden dropout rate");
  train_cmd->add_option("--seed", train_cfg.seed, "Training seed");
  train_cmd->add_option("--test-fraction", train_test_fraction,
                        "Hold out this fraction (stratified) and report test metrics");
  train_cmd->add_option("--split-seed", train_split_seed, "Split seed");
  train_cmd->add_option("--out", train_model_out, "Checkpoint output path");

  // --- eval ------------------------------------------------------------
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset");
  std::string eval_model, eval_data;
  eval_cmd->add_option("--model", eval_model, "Model checkpoint")->required();
  eval_cmd->add_option("--data", eval_data, "Dataset directory")->required();

  // --- craft -----------------------------------------------------------
  auto* craft_cmd = app.add_subcommand("craft", "Craft adversarial samples against a model");
  std::string craft_model, craft_data, craft_traces;
  int craft_k = 20;
  int craft_jobs = 1;
  craft_cmd->add_option("--model", craft_model, "Model checkpoint")->required();
  craft_cmd->add_option("--data", craft_data, "Dataset directory (malware samples attacked)")
      ->required();
  craft_cmd->add_option("--k", craft_k, "Maximum number of added features");
  craft_cmd->add_option("--jobs", craft_jobs, "Worker threads");
  craft_cmd->add_option("--traces", craft_traces, "Write per-sample JSONL traces here");

  // --- defend ----------------------------------------------------------
  auto* defend = app.add_subcommand("defend", "Apply a hardening mechanism");
  defend->require_subcommand(1);

  auto* d_restrict = defend->add_subcommand("restrict", "Restrict the feature space");
  std::string dr_data, dr_kind = "manifestonly", dr_out;
  int dr_r = 1;
  d_restrict->add_option("--data", dr_data, "Dataset directory")->required();
  d_restrict->add_option("--kind", dr_kind, "manifestonly | onlysmall | onlyfreq");
  d_restrict->add_option("--r", dr_r, "Restriction parameter");
  d_restrict->add_option("--out", dr_out, "Output dataset directory")->required();

  auto* d_mi = defend->add_subcommand("mi", "Select features by mutual information");
  std::string dmi_data, dmi_direction = "top", dmi_out;
  FeatureIndex dmi_n = 100;
  d_mi->add_option("--data", dmi_data, "Dataset directory")->required();
  d_mi->add_option("--n", dmi_n, "Number of features to keep");
  d_mi->add_option("--direction", dmi_direction, "top | bottom");
  d_mi->add_option("--out", dmi_out, "Output dataset directory")->required();

  auto* d_distill = defend->add_subcommand("distill", "Distill a trained model");
  std::string dd_model, dd_data, dd_out = "student.ckpt";
  double dd_temperature = 10.0;
  TrainConfig dd_train;
  d_distill->add_option("--model", dd_model, "Teacher checkpoint")->required();
  d_distill->add_option("--data", dd_data, "Training dataset directory")->required();
  d_distill->add_option("--temperature", dd_temperature, "Distillation temperature");
  d_distill->add_option("--ratio", dd_train.malware_ratio, "Malware ratio per batch");
  d_distill->add_option("--batch-size", dd_train.batch_size, "Batch size");
  d_distill->add_option("--learning-rate", dd_train.learning_rate, "Learning rate");
  d_distill->add_option("--seed", dd_train.seed, "Training seed");
  d_distill->add_option("--out", dd_out, "Student checkpoint output");

  auto* d_retrain = defend->add_subcommand("retrain", "Retrain on crafted samples");
  std::string dt_model, dt_data, dt_out = "retrained.ckpt";
  RetrainConfig dt_cfg;
  int dt_k = 20;
  d_retrain->add_option("--model", dt_model, "Model checkpoint")->required();
  d_retrain->add_option("--data", dt_data, "Training dataset directory")->required();
  d_retrain->add_option("--n-adv", dt_cfg.n_adv, "Adversarial samples to add");
  d_retrain->add_option("--extra-epochs", dt_cfg.extra_epochs, "Extra epochs on the batch");
  d_retrain->add_option("--k", dt_k, "Crafting distortion bound");
  d_retrain->add_option("--ratio", dt_cfg.train.malware_ratio, "Malware ratio for the batch");
  d_retrain->add_option("--learning-rate", dt_cfg.train.learning_rate, "Learning rate");
  d_retrain->add_option("--seed", dt_cfg.train.seed, "Seed");
  d_retrain->add_option("--out", dt_out, "Retrained checkpoint output");

  // --- report ----------------------------------------------------------
  auto* report_cmd = app.add_subcommand("report", "Render and verify a sweep report");
  std::string report_dir;
  report_cmd->add_option("--out", report_dir, "Sweep output directory")->required();

  // --- run -------------------------------------------------------------
  auto* run_cmd = app.add_subcommand("run", "Run a full experiment sweep");
  std::string run_config, run_out = "out";
  RunOptions run_opts;
  std::uint64_t run_seed = 0;
  bool run_seed_set = false;
  run_cmd->add_option("--config", run_config, "Experiment config (JSON)")->required();
  run_cmd->add_option("--out", run_out, "Output directory");
  run_cmd->add_option("--seed", run_seed, "Override the training seed")
      ->each([&](const std::string&) { run_seed_set = true; });
  run_cmd->add_option("--jobs", run_opts.jobs, "Worker threads for crafting");
  run_cmd->add_flag("--resume", run_opts.resume, "Skip rows already in report.csv");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth) {
      Dataset dataset = generate_synthetic_corpus(synth_cfg);
      save_dataset_dir(dataset, synth_out);
      std::cout << "wrote " << dataset.samples.size() << " samples over "
                << dataset.vocabulary.size() << " features to " << synth_out << "\n";
    } else if (*ingest) {
      PrefixMap prefixes = ingest_prefix_map.empty() ? PrefixMap::drebin_default()
                                                     : PrefixMap::load(ingest_prefix_map);
      IngestResult result = parse_drebin_corpus(ingest_dir, ingest_labels, prefixes);
      std::cout << result.report;
      save_dataset_dir(result.dataset, ingest_out);
      std::cout << "dataset written to " << ingest_out << "\n";
    } else if (*train_cmd) {
      Dataset dataset = load_dataset_dir(train_data);
      Dataset train_set = dataset;
      std::optional<Dataset> test_set;
      if (train_test_fraction > 0.0) {
        SplitResult split = split_dataset(dataset, train_test_fraction, train_split_seed);
        train_set = std::move(split.train);
        test_set = std::move(split.test);
      }
      train_cfg.batch_size = std::min(train_cfg.batch_size, train_set.samples.size());
      MlpModel model =
          init_model(train_set.vocabulary.size(), parse_arch(train_arch), train_cfg.seed);
      BatchStream stream = make_batches(train_set, train_cfg.batch_size,
                                        train_cfg.malware_ratio, train_cfg.seed);
      TrainTrace trace = train_sgd(model, train_set, stream, train_cfg);
      std::cout << "trained " << stream.batches.size() << " batches, " << trace.losses.size()
                << " steps; final loss " << trace.losses.back() << "\n";
      if (test_set) {
        print_classifier_metrics(evaluate_classifier(model, *test_set));
      }
      save_model(model, train_model_out);
      std::cout << "checkpoint written to " << train_model_out << "\n";
    } else if (*eval_cmd) {
      MlpModel model = load_model(eval_model);
      Dataset dataset = load_dataset_dir(eval_data);
      print_classifier_metrics(evaluate_classifier(model, dataset));
    } else if (*craft_cmd) {
      MlpModel model = load_model(craft_model);
      Dataset dataset = load_dataset_dir(craft_data);
      CraftingConfig cfg;
      cfg.max_distortion = craft_k;
      cfg.index_set = manifest_index_set(dataset.vocabulary);
      std::vector<SampleVector> malware;
      for (const SampleVector& s : dataset.samples) {
        if (s.label == kMalicious) malware.push_back(s);
      }
      CraftingReport report = craft_corpus(model, malware, cfg, craft_jobs);
      print_crafting_metrics(crafting_metrics(report));
      if (!craft_traces.empty()) {
        write_craft_traces_jsonl(craft_traces, report, dataset.vocabulary);
        std::cout << "traces written to " << craft_traces << "\n";
      }
    } else if (*d_restrict) {
      Dataset dataset = load_dataset_dir(dr_data);
      Restriction restriction;
      if (dr_kind == "manifestonly") {
        restriction.kind = Restriction::Kind::manifest_only;
      } else if (dr_kind == "onlysmall") {
        restriction.kind = Restriction::Kind::only_small;
      } else if (dr_kind == "onlyfreq") {
        restriction.kind = Restriction::Kind::only_freq;
      } else {
        throw std::runtime_error("unknown restriction kind: " + dr_kind);
      }
      restriction.r = dr_r;
      RestrictedDataset restricted = restrict_features(dataset, restriction);
      save_dataset_dir(restricted.dataset, dr_out);
      std::cout << restricted.dataset.vocabulary.size() << " of " << dataset.vocabulary.size()
                << " features survive; dataset written to " << dr_out << "\n";
    } else if (*d_mi) {
      Dataset dataset = load_dataset_dir(dmi_data);
      MIScores scores = rank_mutual_information(dataset);
      MIDirection direction = dmi_direction == "bottom" ? MIDirection::bottom : MIDirection::top;
      MISelection selection = select_by_mi(scores, dmi_n, direction);
      RestrictedDataset restricted = apply_feature_subset(dataset, selection.selected);
      save_dataset_dir(restricted.dataset, dmi_out);
      std::cout << "selected " << selection.selected.size() << " features (requested "
                << selection.requested << "); dataset written to " << dmi_out << "\n";
    } else if (*d_distill) {
      MlpModel teacher = load_model(dd_model);
      Dataset dataset = load_dataset_dir(dd_data);
      dd_train.batch_size = std::min(dd_train.batch_size, dataset.samples.size());
      MlpModel student = distill(teacher, dataset, dd_temperature, dd_train);
      save_model(student, dd_out);
      std::cout << "student written to " << dd_out << "\n";
    } else if (*d_retrain) {
      MlpModel model = load_model(dt_model);
      Dataset dataset = load_dataset_dir(dt_data);
      CraftingConfig craft;
      craft.max_distortion = dt_k;
      craft.index_set = manifest_index_set(dataset.vocabulary);
      RetrainResult result = adversarial_retrain(model, dataset, dt_cfg, craft);
      std::size_t retained = 0;
      for (const SampleVector& adv : result.adversarial) {
        if (predict(result.model, adv) == kMalicious) ++retained;
      }
      std::cout << "retrained on " << result.adversarial.size() << " adversarial samples, "
                << retained << " now classified malicious\n";
      save_model(result.model, dt_out);
      std::cout << "checkpoint written to " << dt_out << "\n";
    } else if (*report_cmd) {
      return verify_and_render_report(report_dir, std::cout) == 0 ? 0 : 1;
    } else if (*run_cmd) {
      ExperimentConfig config = load_experiment_config(run_config);
      run_opts.output_dir = run_out;
      if (run_seed_set) run_opts.seed_override = run_seed;
      std::vector<ReportRow> rows = run_experiment(config, run_opts);
      std::cout << "sweep finished: " << rows.size() << " new row(s) in " << run_out << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
