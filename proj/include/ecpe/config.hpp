#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>

namespace ecpe {

// Flat key=value text file. '#' starts a comment, blank lines are skipped,
// keys may not repeat. Typed getters mark keys as consumed so that
// require_consumed() can reject typos.
class KvFile {
 public:
  static KvFile load(const std::filesystem::path& path);
  static KvFile from_string(const std::string& text, const std::string& name);

  bool has(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& def);
  double get_double(const std::string& key, double def);
  int get_int(const std::string& key, int def);
  std::uint64_t get_u64(const std::string& key, std::uint64_t def);
  bool get_bool(const std::string& key, bool def);

  // Throws DataError listing any keys never touched by a getter.
  void require_consumed() const;

  const std::map<std::string, std::string>& entries() const { return entries_; }

 private:
  std::string name_;
  std::map<std::string, std::string> entries_;
  std::set<std::string> consumed_;

  const std::string* find(const std::string& key);
};

enum class ModelKind { Indep, InterEC, InterCE };
enum class LabelMode { Hard, Soft };
enum class FilterSource { Gold, Predicted };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& s);

// Step-1 training hyperparameters plus the pair-filter knobs, so one file
// configures a whole run.
struct TrainConfig {
  double lambda = 0.5;
  int batch_size = 32;
  double learning_rate = 0.005;
  int epochs = 20;
  std::uint64_t seed = 1;
  int max_len = 30;      // tokens kept per clause
  int max_clauses = 75;  // clauses kept per document
  double keep_prob = 0.8;
  double l2 = 1e-5;
  int d_lab = 50;
  int hidden = 100;
  int embedding_dim = 200;  // used when embeddings are randomly initialized
  int min_count = 1;        // vocabulary cutoff
  LabelMode label_mode = LabelMode::Hard;

  FilterSource filter_source = FilterSource::Gold;
  double filter_threshold = 0.5;
  int filter_k = 10;
  int filter_epochs = 300;
  double filter_lr = 0.02;
  double filter_l2 = 1e-5;

  void validate() const;  // throws DataError on out-of-range fields
  static TrainConfig from_kv(KvFile& kv);
  static TrainConfig from_file(const std::filesystem::path& path);
  std::string to_kv_text() const;
};

// Everything run-experiment needs on top of TrainConfig.
struct ExperimentConfig {
  TrainConfig train;
  ModelKind kind = ModelKind::Indep;
  bool bound = false;
  double split_ratio = 0.9;
  int n_runs = 20;
  std::string corpus_path;
  std::string embeddings_path;  // empty means random initialization
  std::string out_dir;

  void validate() const;
  static ExperimentConfig from_file(const std::filesystem::path& path);
  std::string to_kv_text() const;
};

}  // namespace ecpe
