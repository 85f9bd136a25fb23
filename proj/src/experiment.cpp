#include "malcraft/experiment.hpp"

#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace malcraft {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Rejects config objects with keys outside the schema (typos must fail).
void require_keys(const json& obj, const std::string& where,
                  const std::set<std::string>& allowed) {
  if (!obj.is_object()) {
    throw std::runtime_error("config node '" + where + "' must be an object");
  }
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) {
      throw std::runtime_error("unknown config key '" + where + "." + key + "'");
    }
  }
}

template <typename T>
T get_or(const json& obj, const std::string& key, T fallback) {
  auto it = obj.find(key);
  return it == obj.end() ? fallback : it->get<T>();
}

SyntheticConfig parse_synthetic(const json& node) {
  require_keys(node, "data.synthetic",
               {"n_features", "n_samples", "malware_fraction", "n_signal_features",
                "signal_strength", "density", "seed"});
  SyntheticConfig cfg;
  cfg.n_features = get_or<FeatureIndex>(node, "n_features", cfg.n_features);
  cfg.n_samples = get_or<std::size_t>(node, "n_samples", cfg.n_samples);
  cfg.malware_fraction = get_or<double>(node, "malware_fraction", cfg.malware_fraction);
  cfg.n_signal_features = get_or<FeatureIndex>(node, "n_signal_features", cfg.n_signal_features);
  cfg.signal_strength = get_or<double>(node, "signal_strength", cfg.signal_strength);
  cfg.density = get_or<double>(node, "density", cfg.density);
  cfg.seed = get_or<std::uint64_t>(node, "seed", cfg.seed);
  return cfg;
}

Restriction parse_restriction(const json& node) {
  require_keys(node, "defenses.restrictions[]", {"kind", "r"});
  Restriction r;
  const std::string kind = node.at("kind").get<std::string>();
  if (kind == "manifestonly") {
    r.kind = Restriction::Kind::manifest_only;
  } else if (kind == "onlysmall") {
    r.kind = Restriction::Kind::only_small;
  } else if (kind == "onlyfreq") {
    r.kind = Restriction::Kind::only_freq;
  } else {
    throw std::runtime_error("unknown restriction kind '" + kind + "'");
  }
  r.r = get_or<int>(node, "r", 1);
  return r;
}

}  // namespace

ExperimentConfig load_experiment_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open config: " + path.string());
  }
  json root = json::parse(in);
  require_keys(root, "<root>",
               {"version", "data", "split", "architectures", "malware_ratios", "train",
                "crafting", "defenses", "report"});
  const int version = root.at("version").get<int>();
  if (version != 1) {
    throw std::runtime_error("unsupported config version " + std::to_string(version));
  }

  ExperimentConfig cfg;

  const json& data = root.at("data");
  require_keys(data, "data", {"synthetic", "drebin", "files"});
  if (data.size() != 1) {
    throw std::runtime_error("data must name exactly one source");
  }
  if (data.contains("synthetic")) {
    cfg.data.kind = DataSource::Kind::synthetic;
    cfg.data.synthetic = parse_synthetic(data["synthetic"]);
  } else if (data.contains("drebin")) {
    require_keys(data["drebin"], "data.drebin", {"feature_dir", "label_manifest"});
    cfg.data.kind = DataSource::Kind::drebin;
    cfg.data.feature_dir = data["drebin"].at("feature_dir").get<std::string>();
    cfg.data.label_manifest = data["drebin"].at("label_manifest").get<std::string>();
  } else {
    require_keys(data["files"], "data.files", {"vocabulary", "samples"});
    cfg.data.kind = DataSource::Kind::files;
    cfg.data.vocab_file = data["files"].at("vocabulary").get<std::string>();
    cfg.data.samples_file = data["files"].at("samples").get<std::string>();
  }

  if (root.contains("split")) {
    require_keys(root["split"], "split", {"test_fraction", "seed"});
    cfg.test_fraction = get_or<double>(root["split"], "test_fraction", cfg.test_fraction);
    cfg.split_seed = get_or<std::uint64_t>(root["split"], "seed", cfg.split_seed);
  }

  cfg.architectures = root.at("architectures").get<std::vector<std::vector<FeatureIndex>>>();
  cfg.malware_ratios = root.at("malware_ratios").get<std::vector<double>>();
  if (cfg.architectures.empty() || cfg.malware_ratios.empty()) {
    throw std::runtime_error("need at least one architecture and one malware ratio");
  }

  if (root.contains("train")) {
    const json& t = root["train"];
    require_keys(t, "train",
                 {"batch_size", "epochs_per_batch", "learning_rate", "dropout_rate", "seed"});
    cfg.train.batch_size = get_or<std::size_t>(t, "batch_size", cfg.train.batch_size);
    cfg.train.epochs_per_batch = get_or<int>(t, "epochs_per_batch", cfg.train.epochs_per_batch);
    cfg.train.learning_rate = get_or<double>(t, "learning_rate", cfg.train.learning_rate);
    cfg.train.dropout_rate = get_or<double>(t, "dropout_rate", cfg.train.dropout_rate);
    cfg.train.seed = get_or<std::uint64_t>(t, "seed", cfg.train.seed);
  }

  if (root.contains("crafting")) {
    require_keys(root["crafting"], "crafting", {"max_distortion"});
    cfg.crafting_k = get_or<int>(root["crafting"], "max_distortion", cfg.crafting_k);
  }

  if (root.contains("defenses")) {
    const json& d = root["defenses"];
    require_keys(d, "defenses",
                 {"restrictions", "mutual_information", "distillation", "retraining"});
    if (d.contains("restrictions")) {
      for (const json& node : d["restrictions"]) {
        cfg.defenses.restrictions.push_back(parse_restriction(node));
      }
    }
    if (d.contains("mutual_information")) {
      const json& mi = d["mutual_information"];
      require_keys(mi, "defenses.mutual_information", {"n", "directions"});
      cfg.defenses.mi_n = mi.at("n").get<std::vector<FeatureIndex>>();
      for (const std::string& dir : mi.at("directions").get<std::vector<std::string>>()) {
        if (dir == "top") {
          cfg.defenses.mi_directions.push_back(MIDirection::top);
        } else if (dir == "bottom") {
          cfg.defenses.mi_directions.push_back(MIDirection::bottom);
        } else {
          throw std::runtime_error("unknown MI direction '" + dir + "'");
        }
      }
    }
    if (d.contains("distillation")) {
      require_keys(d["distillation"], "defenses.distillation", {"temperatures"});
      cfg.defenses.distill_temperatures =
          d["distillation"].at("temperatures").get<std::vector<double>>();
    }
    if (d.contains("retraining")) {
      require_keys(d["retraining"], "defenses.retraining", {"n_adv", "extra_epochs"});
      cfg.defenses.retrain_n_adv = d["retraining"].at("n_adv").get<std::vector<int>>();
      cfg.defenses.retrain_extra_epochs =
          get_or<int>(d["retraining"], "extra_epochs", cfg.defenses.retrain_extra_epochs);
    }
  }

  if (root.contains("report")) {
    require_keys(root["report"], "report", {"timing_in_csv"});
    cfg.timing_in_csv = get_or<bool>(root["report"], "timing_in_csv", cfg.timing_in_csv);
  }
  return cfg;
}

// ---------------------------------------------------------------------------
// Row formatting
// ---------------------------------------------------------------------------

namespace {

std::string fmt_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", value);
  return buf;
}

std::string fmt_optional(const std::optional<double>& value) {
  return value.has_value() ? fmt_double(*value) : std::string();
}

}  // namespace

std::string arch_string(const std::vector<FeatureIndex>& hidden) {
  std::string out;
  for (std::size_t i = 0; i < hidden.size(); ++i) {
    if (i > 0) out += 'x';
    out += std::to_string(hidden[i]);
  }
  return out;
}

std::string ReportRow::key() const {
  return arch + "|" + fmt_double(ratio) + "|" + defense + "|" + defense_param;
}

std::string csv_header() {
  return "arch,ratio,defense,defense_param,accuracy,fnr,fpr,mr,"
         "avg_distortion_success,avg_distortion_all,denominator,seed,wallclock_s";
}

std::string csv_row(const ReportRow& row, bool timing_in_csv) {
  std::ostringstream out;
  out << row.arch << ',' << fmt_double(row.ratio) << ',' << row.defense << ','
      << row.defense_param << ',' << fmt_optional(row.classifier.accuracy) << ','
      << fmt_optional(row.classifier.fnr) << ',' << fmt_optional(row.classifier.fpr) << ','
      << fmt_optional(row.crafting.mr) << ','
      << fmt_optional(row.crafting.avg_distortion_success) << ','
      << fmt_optional(row.crafting.avg_distortion_all) << ',' << row.crafting.denominator
      << ',' << row.seed << ',';
  if (timing_in_csv) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3f", row.wallclock_s);
    out << buf;
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Sweep
// ---------------------------------------------------------------------------

namespace {

Dataset load_source(const DataSource& source) {
  switch (source.kind) {
    case DataSource::Kind::synthetic:
      return generate_synthetic_corpus(source.synthetic);
    case DataSource::Kind::drebin: {
      IngestResult result = parse_drebin_corpus(source.feature_dir, source.label_manifest);
      std::cerr << result.report;
      return std::move(result.dataset);
    }
    case DataSource::Kind::files:
      return load_dataset(source.vocab_file, source.samples_file);
  }
  throw std::logic_error("unreachable");
}

json metrics_json(const ClassifierMetrics& cm, const CraftingMetrics& km) {
  json out;
  out["confusion"] = {{"tp", cm.tp}, {"tn", cm.tn}, {"fp", cm.fp}, {"fn", cm.fn}};
  if (cm.accuracy) out["accuracy"] = *cm.accuracy;
  if (cm.fnr) out["fnr"] = *cm.fnr;
  if (cm.fpr) out["fpr"] = *cm.fpr;
  if (km.mr) out["mr"] = *km.mr;
  if (km.avg_distortion_success) out["avg_distortion_success"] = *km.avg_distortion_success;
  if (km.avg_distortion_all) out["avg_distortion_all"] = *km.avg_distortion_all;
  out["denominator"] = km.denominator;
  out["success_count"] = km.success_count;
  return out;
}

json traces_json(const CraftingReport& report, const FeatureVocabulary& vocab) {
  json rows = json::array();
  for (const CraftResult& r : report.results) {
    json row;
    row["id"] = r.sample_id;
    row["outcome"] = to_string(r.outcome);
    json added = json::array();
    json f0 = json::array();
    for (const CraftStep& s : r.steps) {
      added.push_back(vocab.entry(s.feature).name);
      f0.push_back(s.benign_prob);
    }
    row["added_features"] = std::move(added);
    row["benign_prob_trace"] = std::move(f0);
    rows.push_back(std::move(row));
  }
  return rows;
}

// Appends one line to a file and flushes so interrupted sweeps keep their
// completed rows.
void append_line(const fs::path& path, const std::string& line) {
  std::ofstream out(path, std::ios::app | std::ios::binary);
  if (!out) throw std::runtime_error("cannot append to " + path.string());
  out << line << '\n';
  out.flush();
}

std::set<std::string> completed_keys(const fs::path& csv_path) {
  std::set<std::string> keys;
  std::ifstream in(csv_path);
  if (!in) return keys;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (first) {  // header
      first = false;
      continue;
    }
    std::istringstream fields(line);
    std::string arch, ratio, defense, param;
    std::getline(fields, arch, ',');
    std::getline(fields, ratio, ',');
    std::getline(fields, defense, ',');
    std::getline(fields, param, ',');
    keys.insert(arch + "|" + ratio + "|" + defense + "|" + param);
  }
  return keys;
}

struct SweepContext {
  const ExperimentConfig& config;
  const RunOptions& options;
  fs::path csv_path;
  fs::path jsonl_path;
  std::set<std::string> done;
  std::vector<ReportRow>* rows;
};

// Evaluates one trained model, writes its row, and returns it.
ReportRow emit_row(SweepContext& ctx, const MlpModel& model, const Dataset& test,
                   const std::vector<SampleVector>& test_malware, const CraftingConfig& craft_cfg,
                   ReportRow row, const FeatureVocabulary& vocab,
                   const ReportRow* baseline, json extra,
                   std::chrono::steady_clock::time_point started) {
  row.classifier = evaluate_classifier(model, test);
  CraftingReport craft_report = craft_corpus(model, test_malware, craft_cfg, ctx.options.jobs);
  row.crafting = crafting_metrics(craft_report);
  row.wallclock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

  json record;
  record["key"] = row.key();
  record["arch"] = row.arch;
  record["ratio"] = row.ratio;
  record["defense"] = row.defense;
  record["defense_param"] = row.defense_param;
  record["seed"] = row.seed;
  // Everything needed to regenerate this row in isolation.
  json seeds{{"split", ctx.config.split_seed}, {"train", row.seed}};
  if (ctx.config.data.kind == DataSource::Kind::synthetic) {
    seeds["data"] = ctx.config.data.synthetic.seed;
  }
  record["seeds"] = std::move(seeds);
  record["metrics"] = metrics_json(row.classifier, row.crafting);
  record["wallclock_s"] = row.wallclock_s;
  record["traces"] = traces_json(craft_report, vocab);
  if (baseline != nullptr) {
    record["baseline_key"] = baseline->key();
    if (baseline->crafting.mr && row.crafting.mr) {
      // Mirrors the difference plots: positive means the defense lowered MR.
      record["delta_mr"] = *baseline->crafting.mr - *row.crafting.mr;
    }
    if (baseline->classifier.accuracy && row.classifier.accuracy) {
      record["delta_accuracy"] = *row.classifier.accuracy - *baseline->classifier.accuracy;
    }
  }
  if (!extra.is_null()) record["defense_detail"] = std::move(extra);

  append_line(ctx.csv_path, csv_row(row, ctx.config.timing_in_csv));
  append_line(ctx.jsonl_path, record.dump());
  ctx.rows->push_back(row);
  return row;
}

MlpModel train_fresh(const Dataset& train, const std::vector<FeatureIndex>& arch,
                     double ratio, const TrainConfig& base) {
  TrainConfig cfg = base;
  cfg.malware_ratio = ratio;
  cfg.batch_size = std::min(cfg.batch_size, train.samples.size());
  MlpModel model = init_model(train.vocabulary.size(), arch, cfg.seed);
  BatchStream stream = make_batches(train, cfg.batch_size, ratio, cfg.seed);
  train_sgd(model, train, stream, cfg);
  return model;
}

std::vector<SampleVector> malware_of(const Dataset& dataset) {
  std::vector<SampleVector> malware;
  for (const SampleVector& s : dataset.samples) {
    if (s.label == kMalicious) malware.push_back(s);
  }
  return malware;
}

}  // namespace

std::vector<ReportRow> run_experiment(const ExperimentConfig& config, const RunOptions& options) {
  fs::create_directories(options.output_dir);
  std::vector<ReportRow> rows;

  SweepContext ctx{config, options, options.output_dir / "report.csv",
                   options.output_dir / "report.jsonl", {}, &rows};

  if (options.resume && fs::exists(ctx.csv_path)) {
    ctx.done = completed_keys(ctx.csv_path);
  } else {
    std::ofstream csv(ctx.csv_path, std::ios::trunc | std::ios::binary);
    csv << csv_header() << '\n';
    std::ofstream(ctx.jsonl_path, std::ios::trunc);
  }

  ExperimentConfig cfg = config;
  if (options.seed_override) {
    cfg.train.seed = *options.seed_override;
  }

  Dataset full = load_source(cfg.data);
  SplitResult split = split_dataset(full, cfg.test_fraction, cfg.split_seed);
  const Dataset& train = split.train;
  const Dataset& test = split.test;
  const std::vector<SampleVector> test_malware = malware_of(test);

  CraftingConfig base_craft;
  base_craft.max_distortion = cfg.crafting_k;
  base_craft.index_set = manifest_index_set(full.vocabulary);

  auto todo = [&](const ReportRow& row) { return ctx.done.count(row.key()) == 0; };

  for (const std::vector<FeatureIndex>& arch : cfg.architectures) {
    for (double ratio : cfg.malware_ratios) {
      ReportRow base_row;
      base_row.arch = arch_string(arch);
      base_row.ratio = ratio;
      base_row.defense = "baseline";
      base_row.seed = cfg.train.seed;

      // Collect the defense rows of this grid point up front so a resumed
      // sweep can tell whether the baseline model is still needed.
      std::vector<ReportRow> defense_rows;
      auto plan_row = [&](const std::string& defense, const std::string& param) {
        ReportRow row = base_row;
        row.defense = defense;
        row.defense_param = param;
        defense_rows.push_back(std::move(row));
      };
      for (const Restriction& r : cfg.defenses.restrictions) {
        plan_row(r.name(), r.param_string());
      }
      for (MIDirection direction : cfg.defenses.mi_directions) {
        for (FeatureIndex n : cfg.defenses.mi_n) {
          plan_row(direction == MIDirection::top ? "mi_top" : "mi_bottom", std::to_string(n));
        }
      }
      for (double t : cfg.defenses.distill_temperatures) plan_row("distill", fmt_double(t));
      for (int n : cfg.defenses.retrain_n_adv) plan_row("retrain", std::to_string(n));
      bool any_defense_pending = false;
      for (const ReportRow& row : defense_rows) {
        if (todo(row)) any_defense_pending = true;
      }

      // The baseline model is needed by distillation and retraining rows
      // even when its own row is already on disk, and its metrics feed the
      // delta columns of every defense row.
      MlpModel baseline_model;
      try {
        if (todo(base_row) || any_defense_pending) {
          baseline_model = train_fresh(train, arch, ratio, cfg.train);
        }
        if (todo(base_row)) {
          auto t0 = std::chrono::steady_clock::now();
          base_row = emit_row(ctx, baseline_model, test, test_malware, base_craft, base_row,
                              full.vocabulary, nullptr, json(), t0);
        } else {
          std::cerr << "skipping completed row " << base_row.key() << "\n";
          if (any_defense_pending) {
            // Resumed sweep: rebuild the baseline metrics the delta columns
            // reference (deterministic, so they match the recorded row).
            base_row.classifier = evaluate_classifier(baseline_model, test);
            base_row.crafting = crafting_metrics(
                craft_corpus(baseline_model, test_malware, base_craft, ctx.options.jobs));
          }
        }
      } catch (const std::exception& e) {
        json err{{"key", base_row.key()}, {"error", e.what()}};
        append_line(ctx.jsonl_path, err.dump());
        std::cerr << "row " << base_row.key() << " failed: " << e.what() << "\n";
        continue;  // defenses depend on the baseline
      }

      auto run_defense_row = [&](ReportRow row, auto&& body) {
        if (!todo(row)) {
          std::cerr << "skipping completed row " << row.key() << "\n";
          return;
        }
        auto t0 = std::chrono::steady_clock::now();
        try {
          body(row, t0);
        } catch (const std::exception& e) {
          json err{{"key", row.key()}, {"error", e.what()}};
          append_line(ctx.jsonl_path, err.dump());
          std::cerr << "row " << row.key() << " failed: " << e.what() << "\n";
        }
      };

      for (const Restriction& restriction : cfg.defenses.restrictions) {
        ReportRow row = base_row;
        row.defense = restriction.name();
        row.defense_param = restriction.param_string();
        run_defense_row(row, [&](ReportRow r, auto t0) {
          // Survivors (and only_freq counts) come from the training split.
          IndexSet kept = restriction_survivors(train, restriction);
          RestrictedDataset rtrain = apply_feature_subset(train, kept);
          RestrictedDataset rtest = apply_feature_subset(test, kept);
          MlpModel model = train_fresh(rtrain.dataset, arch, ratio, cfg.train);
          CraftingConfig craft = base_craft;
          craft.index_set = manifest_index_set(rtrain.dataset.vocabulary);
          json detail{{"surviving_features", rtrain.dataset.vocabulary.size()},
                      {"index_set_size", craft.index_set.size()}};
          emit_row(ctx, model, rtest.dataset, malware_of(rtest.dataset), craft, r,
                   rtrain.dataset.vocabulary, &base_row, detail, t0);
        });
      }

      if (!cfg.defenses.mi_n.empty()) {
        MIScores scores = rank_mutual_information(train);
        for (MIDirection direction : cfg.defenses.mi_directions) {
          for (FeatureIndex n : cfg.defenses.mi_n) {
            ReportRow row = base_row;
            row.defense = direction == MIDirection::top ? "mi_top" : "mi_bottom";
            row.defense_param = std::to_string(n);
            run_defense_row(row, [&](ReportRow r, auto t0) {
              MISelection selection = select_by_mi(scores, n, direction);
              RestrictedDataset rtrain = apply_feature_subset(train, selection.selected);
              RestrictedDataset rtest = apply_feature_subset(test, selection.selected);
              MlpModel model = train_fresh(rtrain.dataset, arch, ratio, cfg.train);
              CraftingConfig craft = base_craft;
              craft.index_set = manifest_index_set(rtrain.dataset.vocabulary);
              json detail{{"requested", selection.requested},
                          {"selected", selection.selected.size()},
                          {"index_set_size", craft.index_set.size()}};
              emit_row(ctx, model, rtest.dataset, malware_of(rtest.dataset), craft, r,
                       rtrain.dataset.vocabulary, &base_row, detail, t0);
            });
          }
        }
      }

      for (double temperature : cfg.defenses.distill_temperatures) {
        ReportRow row = base_row;
        row.defense = "distill";
        row.defense_param = fmt_double(temperature);
        run_defense_row(row, [&](ReportRow r, auto t0) {
          TrainConfig tc = cfg.train;
          tc.malware_ratio = ratio;
          tc.batch_size = std::min(tc.batch_size, train.samples.size());
          MlpModel student = distill(baseline_model, train, temperature, tc);
          emit_row(ctx, student, test, test_malware, base_craft, r, full.vocabulary,
                   &base_row, json(), t0);
        });
      }

      for (int n_adv : cfg.defenses.retrain_n_adv) {
        ReportRow row = base_row;
        row.defense = "retrain";
        row.defense_param = std::to_string(n_adv);
        run_defense_row(row, [&](ReportRow r, auto t0) {
          RetrainConfig rc;
          rc.n_adv = n_adv;
          rc.extra_epochs = cfg.defenses.retrain_extra_epochs;
          rc.train = cfg.train;
          rc.train.malware_ratio = ratio;
          RetrainResult retrained = adversarial_retrain(baseline_model, train, rc, base_craft);
          std::size_t retained = 0;
          for (const SampleVector& adv : retrained.adversarial) {
            if (predict(retrained.model, adv) == kMalicious) ++retained;
          }
          json detail{{"adversarial_used", retrained.adversarial.size()},
                      {"requested", retrained.requested},
                      {"retained_as_malicious", retained}};
          emit_row(ctx, retrained.model, test, test_malware, base_craft, r, full.vocabulary,
                   &base_row, detail, t0);
        });
      }
    }
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Report verification / rendering
// ---------------------------------------------------------------------------

int verify_and_render_report(const fs::path& output_dir, std::ostream& out) {
  const fs::path csv_path = output_dir / "report.csv";
  std::ifstream csv(csv_path);
  if (!csv) {
    throw std::runtime_error("no report.csv under " + output_dir.string());
  }

  std::vector<std::vector<std::string>> table;
  std::string line;
  while (std::getline(csv, line)) {
    std::vector<std::string> fields;
    std::istringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    fields.resize(13);
    table.push_back(std::move(fields));
  }

  std::vector<std::size_t> widths(13, 0);
  for (const auto& row : table) {
    for (std::size_t c = 0; c < row.size(); ++c) widths[c] = std::max(widths[c], row[c].size());
  }
  for (const auto& row : table) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      out << row[c] << std::string(widths[c] - row[c].size() + 2, ' ');
    }
    out << '\n';
  }

  // Check delta bookkeeping against the JSONL mirror.
  std::map<std::string, json> records;
  std::ifstream jsonl(output_dir / "report.jsonl");
  if (jsonl) {
    while (std::getline(jsonl, line)) {
      if (line.empty()) continue;
      json record = json::parse(line);
      if (record.contains("key")) {
        std::string key = record["key"].get<std::string>();
        records[key] = std::move(record);
      }
    }
  }
  int problems = 0;
  for (const auto& [key, record] : records) {
    if (!record.contains("baseline_key")) continue;
    const std::string base_key = record["baseline_key"].get<std::string>();
    auto base = records.find(base_key);
    if (base == records.end()) {
      out << "missing baseline row for " << key << '\n';
      ++problems;
      continue;
    }
    if (record.contains("delta_mr")) {
      const double recorded = record["delta_mr"].get<double>();
      const double baseline_mr = base->second["metrics"]["mr"].get<double>();
      const double row_mr = record["metrics"]["mr"].get<double>();
      if (recorded != baseline_mr - row_mr) {
        out << "delta_mr mismatch for " << key << '\n';
        ++problems;
      }
    }
  }
  if (problems == 0) {
    out << "\nall defense rows reference a baseline; deltas reproduce exactly\n";
  }
  return problems;
}

}  // namespace malcraft
