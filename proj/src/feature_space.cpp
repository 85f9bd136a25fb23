#include "malcraft/feature_space.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace malcraft {

namespace fs = std::filesystem;

bool is_manifest_class(FeatureClass cls) {
  switch (cls) {
    case FeatureClass::hardware:
    case FeatureClass::permission:
    case FeatureClass::component:
    case FeatureClass::intent:
      return true;
    default:
      return false;
  }
}

const char* to_string(FeatureClass cls) {
  switch (cls) {
    case FeatureClass::hardware: return "hardware";
    case FeatureClass::permission: return "permission";
    case FeatureClass::component: return "component";
    case FeatureClass::intent: return "intent";
    case FeatureClass::api_call: return "api_call";
    case FeatureClass::real_permission: return "real_permission";
    case FeatureClass::interesting_call: return "interesting_call";
    case FeatureClass::url: return "url";
    case FeatureClass::unknown: return "unknown";
  }
  return "unknown";
}

namespace {

FeatureClass class_from_name(const std::string& name) {
  static const std::unordered_map<std::string, FeatureClass> table = {
      {"hardware", FeatureClass::hardware},
      {"permission", FeatureClass::permission},
      {"component", FeatureClass::component},
      {"intent", FeatureClass::intent},
      {"api_call", FeatureClass::api_call},
      {"real_permission", FeatureClass::real_permission},
      {"interesting_call", FeatureClass::interesting_call},
      {"url", FeatureClass::url},
      {"unknown", FeatureClass::unknown},
  };
  auto it = table.find(name);
  if (it == table.end()) {
    throw std::invalid_argument("unknown feature class name: " + name);
  }
  return it->second;
}

std::string trim(const std::string& s) {
  std::size_t begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  std::size_t end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

}  // namespace

PrefixMap PrefixMap::drebin_default() {
  PrefixMap map;
  map.prefix_to_class_ = {
      {"feature", FeatureClass::hardware},
      {"permission", FeatureClass::permission},
      {"activity", FeatureClass::component},
      {"service_receiver", FeatureClass::component},
      {"provider", FeatureClass::component},
      {"intent", FeatureClass::intent},
      {"api_call", FeatureClass::api_call},
      {"real_permission", FeatureClass::real_permission},
      {"call", FeatureClass::interesting_call},
      {"url", FeatureClass::url},
  };
  return map;
}

PrefixMap PrefixMap::load(const fs::path& file) {
  std::ifstream in(file);
  if (!in) {
    throw std::runtime_error("cannot open prefix map: " + file.string());
  }
  PrefixMap map = drebin_default();
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error("bad prefix map line (expected prefix=class): " + line);
    }
    map.prefix_to_class_[trim(line.substr(0, eq))] = class_from_name(trim(line.substr(eq + 1)));
  }
  return map;
}

FeatureClass PrefixMap::classify(const std::string& feature) const {
  std::size_t sep = feature.find("::");
  if (sep == std::string::npos) return FeatureClass::unknown;
  auto it = prefix_to_class_.find(feature.substr(0, sep));
  return it == prefix_to_class_.end() ? FeatureClass::unknown : it->second;
}

FeatureVocabulary FeatureVocabulary::build(std::vector<VocabEntry> features) {
  if (features.empty()) {
    throw std::invalid_argument("empty vocabulary");
  }
  std::sort(features.begin(), features.end(), [](const VocabEntry& a, const VocabEntry& b) {
    if (a.cls != b.cls) return a.cls < b.cls;
    return a.name < b.name;
  });
  features.erase(std::unique(features.begin(), features.end()), features.end());

  FeatureVocabulary vocab;
  vocab.entries_ = std::move(features);
  vocab.index_of_.reserve(vocab.entries_.size());
  for (std::size_t i = 0; i < vocab.entries_.size(); ++i) {
    auto [it, inserted] = vocab.index_of_.emplace(vocab.entries_[i].name, static_cast<FeatureIndex>(i));
    if (!inserted) {
      throw std::invalid_argument("feature string appears under two classes: " + vocab.entries_[i].name);
    }
  }
  return vocab;
}

std::optional<FeatureIndex> FeatureVocabulary::index_of(const std::string& feature) const {
  auto it = index_of_.find(feature);
  if (it == index_of_.end()) return std::nullopt;
  return it->second;
}

std::array<FeatureIndex, kFeatureClassCount> FeatureVocabulary::class_counts() const {
  std::array<FeatureIndex, kFeatureClassCount> counts{};
  for (const VocabEntry& e : entries_) {
    ++counts[static_cast<std::size_t>(e.cls)];
  }
  return counts;
}

bool SampleVector::has_feature(FeatureIndex i) const {
  return std::binary_search(indices.begin(), indices.end(), i);
}

std::size_t Dataset::count_label(int label) const {
  return static_cast<std::size_t>(
      std::count_if(samples.begin(), samples.end(),
                    [label](const SampleVector& s) { return s.label == label; }));
}

IndexSet::IndexSet(std::vector<FeatureIndex> members) : members_(std::move(members)) {
  std::sort(members_.begin(), members_.end());
  members_.erase(std::unique(members_.begin(), members_.end()), members_.end());
}

bool IndexSet::contains(FeatureIndex i) const {
  return std::binary_search(members_.begin(), members_.end(), i);
}

// ---------------------------------------------------------------------------
// DREBIN ingestion
// ---------------------------------------------------------------------------

namespace {

std::unordered_set<std::string> read_label_manifest(const fs::path& manifest) {
  std::ifstream in(manifest);
  if (!in) {
    throw std::runtime_error("cannot open label manifest: " + manifest.string());
  }
  std::unordered_set<std::string> malicious;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty()) continue;
    if (first) {  // header row: "sha256,family"
      first = false;
      continue;
    }
    std::size_t comma = line.find(',');
    malicious.insert(comma == std::string::npos ? line : line.substr(0, comma));
  }
  return malicious;
}

// A parseable feature line contains "::" with a non-empty prefix and value.
bool parse_feature_line(const std::string& raw, std::string* feature) {
  std::string line = trim(raw);
  if (line.empty()) return false;
  std::size_t sep = line.find("::");
  if (sep == std::string::npos || sep == 0 || sep + 2 >= line.size()) return false;
  *feature = std::move(line);
  return true;
}

}  // namespace

VocabularyBuildResult build_vocabulary(const std::vector<RawSample>& raw, const PrefixMap& prefixes) {
  std::vector<VocabEntry> entries;
  std::unordered_set<std::string> seen;
  std::size_t unknown = 0;
  for (const RawSample& sample : raw) {
    for (const std::string& feature : sample.features) {
      if (!seen.insert(feature).second) continue;
      FeatureClass cls = prefixes.classify(feature);
      if (cls == FeatureClass::unknown) ++unknown;
      entries.push_back({cls, feature});
    }
  }
  if (unknown > 0) {
    std::cerr << "warning: " << unknown << " feature(s) with unrecognized prefix kept in reject bucket\n";
  }
  return {FeatureVocabulary::build(std::move(entries)), unknown};
}

IngestResult parse_drebin_corpus(const fs::path& feature_dir, const fs::path& label_manifest,
                                 const PrefixMap& prefixes) {
  if (!fs::is_directory(feature_dir)) {
    throw std::runtime_error("feature directory does not exist: " + feature_dir.string());
  }
  std::unordered_set<std::string> malicious = read_label_manifest(label_manifest);

  // Deterministic file order regardless of directory iteration order.
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(feature_dir)) {
    if (entry.is_regular_file()) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());

  IngestReport report;
  std::vector<RawSample> raw;
  raw.reserve(files.size());
  for (const fs::path& file : files) {
    ++report.files_seen;
    std::ifstream in(file);
    if (!in) {
      throw std::runtime_error("cannot open feature file: " + file.string());
    }
    RawSample sample;
    sample.id = file.filename().string();
    std::string line;
    std::size_t bad = 0;
    while (std::getline(in, line)) {
      if (trim(line).empty()) continue;
      std::string feature;
      if (parse_feature_line(line, &feature)) {
        sample.features.push_back(std::move(feature));
      } else {
        ++bad;
      }
    }
    report.malformed_lines += bad;
    if (sample.features.empty()) {
      std::cerr << "warning: skipping sample with zero parseable lines: " << sample.id << "\n";
      ++report.samples_skipped;
      continue;
    }
    raw.push_back(std::move(sample));
  }
  if (raw.empty()) {
    throw std::runtime_error("no samples found in " + feature_dir.string());
  }

  VocabularyBuildResult vb = build_vocabulary(raw, prefixes);
  report.unknown_prefix_features = vb.unknown_prefix_features;

  Dataset dataset;
  dataset.vocabulary = std::move(vb.vocabulary);
  dataset.provenance = Provenance::drebin;
  dataset.samples.reserve(raw.size());
  for (const RawSample& rs : raw) {
    SampleVector sv;
    sv.id = rs.id;
    sv.label = malicious.count(rs.id) ? kMalicious : kBenign;
    sv.indices.reserve(rs.features.size());
    for (const std::string& f : rs.features) {
      sv.indices.push_back(*dataset.vocabulary.index_of(f));
    }
    std::sort(sv.indices.begin(), sv.indices.end());
    sv.indices.erase(std::unique(sv.indices.begin(), sv.indices.end()), sv.indices.end());
    if (sv.label == kMalicious) ++report.malicious;
    dataset.samples.push_back(std::move(sv));
  }

  report.samples_kept = dataset.samples.size();
  report.feature_count = dataset.vocabulary.size();
  report.per_class = dataset.vocabulary.class_counts();
  report.manifest_feature_count =
      static_cast<FeatureIndex>(manifest_index_set(dataset.vocabulary).size());
  return {std::move(dataset), report};
}

IndexSet manifest_index_set(const FeatureVocabulary& vocab) {
  std::vector<FeatureIndex> members;
  for (FeatureIndex i = 0; i < vocab.size(); ++i) {
    if (is_manifest_class(vocab.entry(i).cls)) members.push_back(i);
  }
  return IndexSet(std::move(members));
}

// ---------------------------------------------------------------------------
// Synthetic corpora
// ---------------------------------------------------------------------------

Dataset generate_synthetic_corpus(const SyntheticConfig& config) {
  if (config.n_features < 1 || config.n_samples < 1) {
    throw std::invalid_argument("synthetic corpus needs at least one feature and one sample");
  }
  if (config.malware_fraction <= 0.0 || config.malware_fraction >= 1.0) {
    throw std::invalid_argument("malware_fraction must lie in (0,1)");
  }
  if (config.n_signal_features < 0 || config.n_signal_features > config.n_features) {
    throw std::invalid_argument("n_signal_features must lie in [0, n_features]");
  }
  if (config.signal_strength <= 0.0 || config.signal_strength > 0.5) {
    throw std::invalid_argument("signal_strength must lie in (0, 0.5]");
  }
  if (config.density <= 0.0 || config.density > static_cast<double>(config.n_features)) {
    throw std::invalid_argument("density must lie in (0, n_features]");
  }
  if (config.weak_malware_fraction < 0.0 || config.weak_malware_fraction > 1.0) {
    throw std::invalid_argument("weak_malware_fraction must lie in [0,1]");
  }

  const FeatureIndex n_signal = config.n_signal_features;
  const FeatureIndex n_manifest = (n_signal + 1) / 2;

  // Vocabulary names are chosen so that index order equals (class, name)
  // order: manifest block first, then code-class signal, then background.
  // The manifest block holds the benign-leaning half of the signal, which
  // gives the add-only crafting algorithm real evidence to inject; the
  // malware-leaning half lives outside the manifest, mirroring how code
  // features carry most of the malicious evidence in real corpora.
  std::vector<VocabEntry> entries;
  entries.reserve(static_cast<std::size_t>(config.n_features));
  char buf[48];
  for (FeatureIndex i = 0; i < config.n_features; ++i) {
    if (i < n_manifest) {
      std::snprintf(buf, sizeof(buf), "permission::s%06d", i);
      entries.push_back({FeatureClass::permission, buf});
    } else if (i < n_signal) {
      std::snprintf(buf, sizeof(buf), "api_call::s%06d", i);
      entries.push_back({FeatureClass::api_call, buf});
    } else {
      std::snprintf(buf, sizeof(buf), "api_call::z%06d", i);
      entries.push_back({FeatureClass::api_call, buf});
    }
  }

  Dataset dataset;
  dataset.vocabulary = FeatureVocabulary::build(std::move(entries));
  dataset.provenance = Provenance::synthetic;

  const std::size_t n_malicious =
      static_cast<std::size_t>(std::llround(config.malware_fraction * static_cast<double>(config.n_samples)));

  // Background density chosen so total expected actives equal `density`;
  // signal features contribute n_signal/2 on average regardless of class.
  double signal_expected = 0.5 * static_cast<double>(n_signal);
  double background = 0.0;
  if (config.n_features > n_signal) {
    background = (config.density - signal_expected) / static_cast<double>(config.n_features - n_signal);
    background = std::clamp(background, 0.0, 1.0);
  }

  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const std::size_t n_weak = static_cast<std::size_t>(
      std::llround(config.weak_malware_fraction * static_cast<double>(n_malicious)));

  dataset.samples.reserve(config.n_samples);
  for (std::size_t s = 0; s < config.n_samples; ++s) {
    SampleVector sample;
    sample.label = s < n_malicious ? kMalicious : kBenign;
    std::snprintf(buf, sizeof(buf), "synth-%06zu", s);
    sample.id = buf;
    // The last n_weak malware draw attenuated signal (boundary families).
    const bool weak = sample.label == kMalicious && s >= n_malicious - n_weak;
    for (FeatureIndex i = 0; i < config.n_features; ++i) {
      double p;
      if (i < n_signal) {
        bool leans_malicious = (i >= n_manifest);
        bool matches = (sample.label == kMalicious) == leans_malicious;
        // Informativeness tapers across each block: a few strong features
        // and a long tail of weak ones, like real feature spaces.
        FeatureIndex block_start = leans_malicious ? n_manifest : 0;
        FeatureIndex block_size = leans_malicious ? n_signal - n_manifest : n_manifest;
        double position = block_size > 1
                              ? static_cast<double>(i - block_start) / static_cast<double>(block_size - 1)
                              : 0.0;
        double delta = config.signal_strength * (1.0 - 0.7 * position);
        if (weak) delta *= 0.3;
        p = matches ? 0.5 + delta : 0.5 - delta;
      } else {
        p = background;
      }
      if (unit(rng) < p) sample.indices.push_back(i);
    }
    dataset.samples.push_back(std::move(sample));
  }
  return dataset;
}

// ---------------------------------------------------------------------------
// Persistence
// ---------------------------------------------------------------------------

void save_dataset(const Dataset& dataset, const fs::path& vocab_file, const fs::path& samples_file) {
  std::ofstream vout(vocab_file, std::ios::binary);
  if (!vout) throw std::runtime_error("cannot write vocabulary file: " + vocab_file.string());
  for (const VocabEntry& e : dataset.vocabulary.entries()) {
    vout << e.name << '\n';
  }
  std::ofstream sout(samples_file, std::ios::binary);
  if (!sout) throw std::runtime_error("cannot write samples file: " + samples_file.string());
  for (const SampleVector& s : dataset.samples) {
    sout << s.id << ',' << s.label << ',';
    for (std::size_t i = 0; i < s.indices.size(); ++i) {
      if (i > 0) sout << ' ';
      sout << s.indices[i];
    }
    sout << '\n';
  }
}

Dataset load_dataset(const fs::path& vocab_file, const fs::path& samples_file,
                     const PrefixMap& prefixes) {
  std::ifstream vin(vocab_file);
  if (!vin) throw std::runtime_error("cannot open vocabulary file: " + vocab_file.string());
  std::vector<VocabEntry> entries;
  std::string line;
  while (std::getline(vin, line)) {
    line = trim(line);
    if (line.empty()) continue;
    entries.push_back({prefixes.classify(line), line});
  }
  Dataset dataset;
  dataset.vocabulary = FeatureVocabulary::build(std::move(entries));

  std::ifstream sin(samples_file);
  if (!sin) throw std::runtime_error("cannot open samples file: " + samples_file.string());
  while (std::getline(sin, line)) {
    if (trim(line).empty()) continue;
    std::size_t c1 = line.find(',');
    std::size_t c2 = c1 == std::string::npos ? std::string::npos : line.find(',', c1 + 1);
    if (c2 == std::string::npos) {
      throw std::runtime_error("bad sample line: " + line);
    }
    SampleVector sample;
    sample.id = line.substr(0, c1);
    sample.label = std::stoi(line.substr(c1 + 1, c2 - c1 - 1));
    std::istringstream idx(line.substr(c2 + 1));
    FeatureIndex i;
    while (idx >> i) {
      if (i < 0 || i >= dataset.vocabulary.size()) {
        throw std::runtime_error("sample index out of vocabulary range in: " + sample.id);
      }
      sample.indices.push_back(i);
    }
    if (!std::is_sorted(sample.indices.begin(), sample.indices.end())) {
      throw std::runtime_error("sample indices not strictly increasing in: " + sample.id);
    }
    dataset.samples.push_back(std::move(sample));
  }
  return dataset;
}

std::vector<std::string> feature_strings(const SampleVector& sample, const FeatureVocabulary& vocab) {
  std::vector<std::string> out;
  out.reserve(sample.indices.size());
  for (FeatureIndex i : sample.indices) {
    out.push_back(vocab.entry(i).name);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Splits and batches
// ---------------------------------------------------------------------------

SplitResult split_dataset(const Dataset& dataset, double test_fraction, std::uint64_t seed) {
  if (test_fraction <= 0.0 || test_fraction >= 1.0) {
    throw std::invalid_argument("test_fraction must lie in (0,1)");
  }
  std::vector<std::size_t> by_label[2];
  for (std::size_t i = 0; i < dataset.samples.size(); ++i) {
    by_label[dataset.samples[i].label == kMalicious ? 1 : 0].push_back(i);
  }
  std::mt19937_64 rng(mix_seed(seed, 0x5eed));
  SplitResult result;
  result.train.vocabulary = dataset.vocabulary;
  result.train.provenance = dataset.provenance;
  result.test.vocabulary = dataset.vocabulary;
  result.test.provenance = dataset.provenance;
  std::vector<std::size_t> train_rows, test_rows;
  for (auto& rows : by_label) {
    std::shuffle(rows.begin(), rows.end(), rng);
    std::size_t n_test = static_cast<std::size_t>(
        std::llround(test_fraction * static_cast<double>(rows.size())));
    test_rows.insert(test_rows.end(), rows.begin(), rows.begin() + n_test);
    train_rows.insert(train_rows.end(), rows.begin() + n_test, rows.end());
  }
  // Original order keeps split output independent of shuffle internals.
  std::sort(train_rows.begin(), train_rows.end());
  std::sort(test_rows.begin(), test_rows.end());
  for (std::size_t r : train_rows) result.train.samples.push_back(dataset.samples[r]);
  for (std::size_t r : test_rows) result.test.samples.push_back(dataset.samples[r]);
  return result;
}

namespace {

// Without-replacement pool that reshuffles each time it is exhausted.
class CyclingPool {
 public:
  CyclingPool(std::vector<std::size_t> rows, std::mt19937_64& rng) : rows_(std::move(rows)), rng_(rng) {
    std::shuffle(rows_.begin(), rows_.end(), rng_);
  }

  std::size_t next() {
    if (cursor_ == rows_.size()) {
      std::shuffle(rows_.begin(), rows_.end(), rng_);
      cursor_ = 0;
    }
    return rows_[cursor_++];
  }

 private:
  std::vector<std::size_t> rows_;
  std::mt19937_64& rng_;
  std::size_t cursor_ = 0;
};

}  // namespace

BatchStream make_batches(const Dataset& train, std::size_t batch_size, double malware_ratio,
                         std::uint64_t seed) {
  if (malware_ratio <= 0.0 || malware_ratio >= 1.0) {
    throw std::invalid_argument("malware_ratio must lie in (0,1)");
  }
  if (batch_size == 0 || batch_size > train.samples.size()) {
    throw std::invalid_argument("batch_size must lie in [1, dataset size]");
  }
  std::vector<std::size_t> malware_rows, benign_rows;
  for (std::size_t i = 0; i < train.samples.size(); ++i) {
    (train.samples[i].label == kMalicious ? malware_rows : benign_rows).push_back(i);
  }
  if (malware_rows.empty() || benign_rows.empty()) {
    throw std::invalid_argument("training set must contain both classes");
  }

  const std::size_t malware_per_batch = static_cast<std::size_t>(
      std::ceil(static_cast<double>(batch_size) * malware_ratio));
  if (malware_per_batch > batch_size) {
    throw std::invalid_argument("malware_ratio leaves no room for benign samples");
  }
  const std::size_t benign_per_batch = batch_size - malware_per_batch;
  const std::size_t n_batches =
      (malware_rows.size() + malware_per_batch - 1) / malware_per_batch;

  std::mt19937_64 rng(mix_seed(seed, 0xba7c4));
  CyclingPool malware_pool(std::move(malware_rows), rng);
  CyclingPool benign_pool(std::move(benign_rows), rng);

  BatchStream stream;
  stream.batch_size = batch_size;
  stream.malware_per_batch = malware_per_batch;
  stream.batches.reserve(n_batches);
  for (std::size_t b = 0; b < n_batches; ++b) {
    Batch batch;
    batch.sample_rows.reserve(batch_size);
    for (std::size_t i = 0; i < malware_per_batch; ++i) batch.sample_rows.push_back(malware_pool.next());
    for (std::size_t i = 0; i < benign_per_batch; ++i) batch.sample_rows.push_back(benign_pool.next());
    stream.batches.push_back(std::move(batch));
  }
  return stream;
}

std::ostream& operator<<(std::ostream& os, const IngestReport& report) {
  os << "files seen:              " << report.files_seen << '\n'
     << "samples kept:            " << report.samples_kept << '\n'
     << "samples skipped:         " << report.samples_skipped << '\n'
     << "malformed lines:         " << report.malformed_lines << '\n'
     << "unknown-prefix features: " << report.unknown_prefix_features << '\n'
     << "malicious samples:       " << report.malicious << '\n'
     << "features (M):            " << report.feature_count << '\n'
     << "manifest features:       " << report.manifest_feature_count << '\n';
  for (int c = 0; c < kFeatureClassCount; ++c) {
    if (report.per_class[static_cast<std::size_t>(c)] == 0) continue;
    os << "  class " << to_string(static_cast<FeatureClass>(c)) << ": "
       << report.per_class[static_cast<std::size_t>(c)] << '\n';
  }
  return os;
}

}  // namespace malcraft
