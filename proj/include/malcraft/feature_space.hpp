#pragma once

#include "malcraft/types.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace malcraft {

// Feature classes of the DREBIN feature format, named after the line
// prefixes used in the on-disk files. The first four are declared in
// AndroidManifest.xml and can be injected into an APK without touching
// code; the rest are extracted from the dex code. Features whose prefix
// is not recognized land in `unknown` (kept, but never manifest).
enum class FeatureClass : std::uint8_t {
  hardware = 0,         // "feature::"
  permission,           // "permission::"
  component,            // "activity::", "service_receiver::", "provider::"
  intent,               // "intent::"
  api_call,             // "api_call::"
  real_permission,      // "real_permission::"
  interesting_call,     // "call::"
  url,                  // "url::"
  unknown,              // unrecognized prefix, reject bucket
};

inline constexpr int kFeatureClassCount = 9;

bool is_manifest_class(FeatureClass cls);
const char* to_string(FeatureClass cls);

// Maps a feature-line prefix (the part before "::") to its class.
// The default table matches the public DREBIN release; a mapping file with
// lines "prefix=class_name" can override or extend it.
class PrefixMap {
 public:
  static PrefixMap drebin_default();
  static PrefixMap load(const std::filesystem::path& file);

  FeatureClass classify(const std::string& feature) const;

 private:
  std::unordered_map<std::string, FeatureClass> prefix_to_class_;
};

struct VocabEntry {
  FeatureClass cls;
  std::string name;  // full feature string, e.g. "permission::...SEND_SMS"

  friend bool operator==(const VocabEntry&, const VocabEntry&) = default;
};

// Bijection between feature strings and dense indices [0, M).
// Entries are sorted by (class, name) so two vocabularies built from the
// same feature set are identical.
class FeatureVocabulary {
 public:
  FeatureVocabulary() = default;

  // Deduplicates, sorts, and indexes. Throws std::invalid_argument on an
  // empty feature set.
  static FeatureVocabulary build(std::vector<VocabEntry> features);

  FeatureIndex size() const { return static_cast<FeatureIndex>(entries_.size()); }
  const VocabEntry& entry(FeatureIndex i) const { return entries_[static_cast<std::size_t>(i)]; }
  const std::vector<VocabEntry>& entries() const { return entries_; }

  std::optional<FeatureIndex> index_of(const std::string& feature) const;

  std::array<FeatureIndex, kFeatureClassCount> class_counts() const;

  friend bool operator==(const FeatureVocabulary& a, const FeatureVocabulary& b) {
    return a.entries_ == b.entries_;
  }

 private:
  std::vector<VocabEntry> entries_;
  std::unordered_map<std::string, FeatureIndex> index_of_;
};

// Sparse binary indicator vector: indices strictly increasing, all < M.
struct SampleVector {
  std::string id;
  std::vector<FeatureIndex> indices;
  int label = kBenign;

  bool has_feature(FeatureIndex i) const;
};

enum class Provenance { drebin, synthetic, restricted };

struct Dataset {
  FeatureVocabulary vocabulary;
  std::vector<SampleVector> samples;
  Provenance provenance = Provenance::synthetic;

  std::size_t count_label(int label) const;
};

// Sorted, unique set of feature indices within [0, M).
class IndexSet {
 public:
  IndexSet() = default;
  explicit IndexSet(std::vector<FeatureIndex> members);  // sorts + dedupes

  const std::vector<FeatureIndex>& members() const { return members_; }
  std::size_t size() const { return members_.size(); }
  bool empty() const { return members_.empty(); }
  bool contains(FeatureIndex i) const;

  friend bool operator==(const IndexSet&, const IndexSet&) = default;

 private:
  std::vector<FeatureIndex> members_;
};

// ---------------------------------------------------------------------------
// DREBIN ingestion
// ---------------------------------------------------------------------------

struct IngestReport {
  std::size_t files_seen = 0;
  std::size_t samples_kept = 0;
  std::size_t samples_skipped = 0;    // files with zero parseable lines
  std::size_t malformed_lines = 0;    // lines without a "prefix::" shape
  std::size_t unknown_prefix_features = 0;
  std::size_t malicious = 0;
  FeatureIndex feature_count = 0;
  FeatureIndex manifest_feature_count = 0;
  std::array<FeatureIndex, kFeatureClassCount> per_class{};
};

struct IngestResult {
  Dataset dataset;
  IngestReport report;
};

// Reads one feature file per application from `feature_dir` plus a CSV label
// manifest ("sha256,family" header; listed hashes are malicious) and builds
// the dataset over the union of observed features.
IngestResult parse_drebin_corpus(const std::filesystem::path& feature_dir,
                                 const std::filesystem::path& label_manifest,
                                 const PrefixMap& prefixes = PrefixMap::drebin_default());

struct RawSample {
  std::string id;
  std::vector<std::string> features;
};

struct VocabularyBuildResult {
  FeatureVocabulary vocabulary;
  std::size_t unknown_prefix_features = 0;
};

VocabularyBuildResult build_vocabulary(const std::vector<RawSample>& raw,
                                       const PrefixMap& prefixes = PrefixMap::drebin_default());

// Indices of all features in manifest classes (hardware, permission,
// component, intent). These are the only features the crafting algorithm
// may add.
IndexSet manifest_index_set(const FeatureVocabulary& vocab);

// ---------------------------------------------------------------------------
// Synthetic corpora
// ---------------------------------------------------------------------------

// Desk-scale stand-in for the real corpus. The generated feature space
// plants `n_signal_features` informative features at the front of the
// vocabulary. The first ceil(n_signal_features/2) of them are manifest-class
// and lean benign (active with probability 0.5+delta for benign samples,
// 0.5-delta for malware); the rest are code-class and lean malicious
// (probabilities swapped). The crafting index set is therefore non-trivial
// and holds genuinely addable benign evidence. Within each block the
// probability delta tapers linearly from signal_strength down to 30% of it,
// giving the heavy-tailed informativeness profile of real feature spaces.
// Remaining features are uninformative background noise whose density is
// chosen so each sample holds `density` active features on average.
struct SyntheticConfig {
  FeatureIndex n_features = 1000;
  std::size_t n_samples = 10000;
  double malware_fraction = 0.1;
  FeatureIndex n_signal_features = 50;
  double signal_strength = 0.35;  // in (0, 0.5]
  double density = 30.0;          // mean active features per sample
  // Fraction of malware drawn with the signal deltas scaled down to 30%,
  // modelling weak-evidence families that sit near the class boundary.
  double weak_malware_fraction = 0.0;
  std::uint64_t seed = 1;
};

Dataset generate_synthetic_corpus(const SyntheticConfig& config);

// ---------------------------------------------------------------------------
// Persistence (vocabulary file: one feature string per line; samples file:
// "id,label,idx1 idx2 ...")
// ---------------------------------------------------------------------------

void save_dataset(const Dataset& dataset, const std::filesystem::path& vocab_file,
                  const std::filesystem::path& samples_file);
Dataset load_dataset(const std::filesystem::path& vocab_file,
                     const std::filesystem::path& samples_file,
                     const PrefixMap& prefixes = PrefixMap::drebin_default());

// Serializes a sample back to its de-duplicated feature strings.
std::vector<std::string> feature_strings(const SampleVector& sample,
                                         const FeatureVocabulary& vocab);

// ---------------------------------------------------------------------------
// Splits and batches
// ---------------------------------------------------------------------------

struct SplitResult {
  Dataset train;
  Dataset test;
};

// Stratified split by label; `test_fraction` of each class goes to test.
SplitResult split_dataset(const Dataset& dataset, double test_fraction, std::uint64_t seed);

struct Batch {
  std::vector<std::size_t> sample_rows;  // positions into Dataset::samples
};

// Batches with ceil(batch_size * malware_ratio) malicious samples each,
// drawn without replacement per epoch-cycle (reshuffled when a class pool is
// exhausted). The stream is exactly long enough for every malicious sample
// to appear at least once.
struct BatchStream {
  std::vector<Batch> batches;
  std::size_t batch_size = 0;
  std::size_t malware_per_batch = 0;
};

BatchStream make_batches(const Dataset& train, std::size_t batch_size, double malware_ratio,
                         std::uint64_t seed);

std::ostream& operator<<(std::ostream& os, const IngestReport& report);

}  // namespace malcraft
