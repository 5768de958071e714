#include "ecpe/config.hpp"

#include <cerrno>
#include <climits>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "ecpe/error.hpp"

namespace ecpe {

namespace {

std::string strip(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

KvFile KvFile::from_string(const std::string& text, const std::string& name) {
  KvFile kv;
  kv.name_ = name;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = strip(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw DataError(name + " line " + std::to_string(line_no) +
                      ": expected key=value");
    std::string key = strip(line.substr(0, eq));
    std::string value = strip(line.substr(eq + 1));
    if (key.empty())
      throw DataError(name + " line " + std::to_string(line_no) + ": empty key");
    if (!kv.entries_.emplace(key, value).second)
      throw DataError(name + " line " + std::to_string(line_no) +
                      ": duplicate key '" + key + "'");
  }
  return kv;
}

KvFile KvFile::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_string(buf.str(), path.string());
}

bool KvFile::has(const std::string& key) const { return entries_.count(key) > 0; }

const std::string* KvFile::find(const std::string& key) {
  auto it = entries_.find(key);
  if (it == entries_.end()) return nullptr;
  consumed_.insert(key);
  return &it->second;
}

std::string KvFile::get_string(const std::string& key, const std::string& def) {
  const std::string* v = find(key);
  return v ? *v : def;
}

double KvFile::get_double(const std::string& key, double def) {
  const std::string* v = find(key);
  if (!v) return def;
  errno = 0;
  char* end = nullptr;
  const double out = std::strtod(v->c_str(), &end);
  if (errno != 0 || end == v->c_str() || *end != '\0')
    throw DataError(name_ + ": key '" + key + "' has non-numeric value '" + *v + "'");
  return out;
}

int KvFile::get_int(const std::string& key, int def) {
  const std::string* v = find(key);
  if (!v) return def;
  errno = 0;
  char* end = nullptr;
  const long out = std::strtol(v->c_str(), &end, 10);
  if (errno != 0 || end == v->c_str() || *end != '\0' || out < INT_MIN || out > INT_MAX)
    throw DataError(name_ + ": key '" + key + "' has non-integer value '" + *v + "'");
  return static_cast<int>(out);
}

std::uint64_t KvFile::get_u64(const std::string& key, std::uint64_t def) {
  const std::string* v = find(key);
  if (!v) return def;
  errno = 0;
  char* end = nullptr;
  const unsigned long long out = std::strtoull(v->c_str(), &end, 10);
  if (errno != 0 || end == v->c_str() || *end != '\0' || v->front() == '-')
    throw DataError(name_ + ": key '" + key + "' has non-integer value '" + *v + "'");
  return out;
}

bool KvFile::get_bool(const std::string& key, bool def) {
  const std::string* v = find(key);
  if (!v) return def;
  if (*v == "true" || *v == "1") return true;
  if (*v == "false" || *v == "0") return false;
  throw DataError(name_ + ": key '" + key + "' must be true or false, got '" + *v + "'");
}

void KvFile::require_consumed() const {
  std::string unknown;
  for (const auto& [key, value] : entries_) {
    if (!consumed_.count(key)) {
      if (!unknown.empty()) unknown += ", ";
      unknown += key;
    }
  }
  if (!unknown.empty())
    throw DataError(name_ + ": unknown config keys: " + unknown);
}

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::Indep: return "indep";
    case ModelKind::InterEC: return "inter-ec";
    case ModelKind::InterCE: return "inter-ce";
  }
  return "indep";
}

ModelKind model_kind_from_string(const std::string& s) {
  if (s == "indep") return ModelKind::Indep;
  if (s == "inter-ec") return ModelKind::InterEC;
  if (s == "inter-ce") return ModelKind::InterCE;
  throw DataError("unknown model kind '" + s + "' (expected indep, inter-ec or inter-ce)");
}

void TrainConfig::validate() const {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw DataError("lambda must lie in [0, 1]");
  if (batch_size < 1) throw DataError("batch_size must be >= 1");
  if (!(learning_rate > 0.0)) throw DataError("learning_rate must be positive");
  if (epochs < 0) throw DataError("epochs must be >= 0");
  if (max_len < 1) throw DataError("max_len must be >= 1");
  if (max_clauses < 1) throw DataError("max_clauses must be >= 1");
  if (!(keep_prob > 0.0 && keep_prob <= 1.0))
    throw DataError("keep_prob must lie in (0, 1]");
  if (l2 < 0.0) throw DataError("l2 must be >= 0");
  if (d_lab < 1) throw DataError("d_lab must be >= 1");
  if (hidden < 1) throw DataError("hidden must be >= 1");
  if (embedding_dim < 1) throw DataError("embedding_dim must be >= 1");
  if (min_count < 1) throw DataError("min_count must be >= 1");
  if (!(filter_threshold > 0.0 && filter_threshold < 1.0))
    throw DataError("filter_threshold must lie in (0, 1)");
  if (filter_k < 0) throw DataError("filter_k must be >= 0");
  if (filter_epochs < 1) throw DataError("filter_epochs must be >= 1");
  if (!(filter_lr > 0.0)) throw DataError("filter_lr must be positive");
  if (filter_l2 < 0.0) throw DataError("filter_l2 must be >= 0");
}

TrainConfig TrainConfig::from_kv(KvFile& kv) {
  TrainConfig c;
  c.lambda = kv.get_double("lambda", c.lambda);
  c.batch_size = kv.get_int("batch_size", c.batch_size);
  c.learning_rate = kv.get_double("learning_rate", c.learning_rate);
  c.epochs = kv.get_int("epochs", c.epochs);
  c.seed = kv.get_u64("seed", c.seed);
  c.max_len = kv.get_int("max_len", c.max_len);
  c.max_clauses = kv.get_int("max_clauses", c.max_clauses);
  c.keep_prob = kv.get_double("keep_prob", c.keep_prob);
  c.l2 = kv.get_double("l2", c.l2);
  c.d_lab = kv.get_int("d_lab", c.d_lab);
  c.hidden = kv.get_int("hidden", c.hidden);
  c.embedding_dim = kv.get_int("embedding_dim", c.embedding_dim);
  c.min_count = kv.get_int("min_count", c.min_count);
  const std::string mode = kv.get_string("label_mode", "hard");
  if (mode == "hard")
    c.label_mode = LabelMode::Hard;
  else if (mode == "soft")
    c.label_mode = LabelMode::Soft;
  else
    throw DataError("label_mode must be hard or soft, got '" + mode + "'");
  const std::string src = kv.get_string("filter_source", "gold");
  if (src == "gold")
    c.filter_source = FilterSource::Gold;
  else if (src == "predicted")
    c.filter_source = FilterSource::Predicted;
  else
    throw DataError("filter_source must be gold or predicted, got '" + src + "'");
  c.filter_threshold = kv.get_double("filter_threshold", c.filter_threshold);
  c.filter_k = kv.get_int("filter_k", c.filter_k);
  c.filter_epochs = kv.get_int("filter_epochs", c.filter_epochs);
  c.filter_lr = kv.get_double("filter_lr", c.filter_lr);
  c.filter_l2 = kv.get_double("filter_l2", c.filter_l2);
  c.validate();
  return c;
}

TrainConfig TrainConfig::from_file(const std::filesystem::path& path) {
  KvFile kv = KvFile::load(path);
  TrainConfig c = from_kv(kv);
  kv.require_consumed();
  return c;
}

namespace {

void append_train_kv(std::ostringstream& out, const TrainConfig& c) {
  out << "lambda = " << c.lambda << '\n'
      << "batch_size = " << c.batch_size << '\n'
      << "learning_rate = " << c.learning_rate << '\n'
      << "epochs = " << c.epochs << '\n'
      << "seed = " << c.seed << '\n'
      << "max_len = " << c.max_len << '\n'
      << "max_clauses = " << c.max_clauses << '\n'
      << "keep_prob = " << c.keep_prob << '\n'
      << "l2 = " << c.l2 << '\n'
      << "d_lab = " << c.d_lab << '\n'
      << "hidden = " << c.hidden << '\n'
      << "embedding_dim = " << c.embedding_dim << '\n'
      << "min_count = " << c.min_count << '\n'
      << "label_mode = " << (c.label_mode == LabelMode::Hard ? "hard" : "soft") << '\n'
      << "filter_source = "
      << (c.filter_source == FilterSource::Gold ? "gold" : "predicted") << '\n'
      << "filter_threshold = " << c.filter_threshold << '\n'
      << "filter_k = " << c.filter_k << '\n'
      << "filter_epochs = " << c.filter_epochs << '\n'
      << "filter_lr = " << c.filter_lr << '\n'
      << "filter_l2 = " << c.filter_l2 << '\n';
}

}  // namespace

std::string TrainConfig::to_kv_text() const {
  std::ostringstream out;
  out.precision(17);
  append_train_kv(out, *this);
  return out.str();
}

void ExperimentConfig::validate() const {
  train.validate();
  if (!(split_ratio > 0.0 && split_ratio < 1.0))
    throw DataError("split_ratio must lie in (0, 1)");
  if (n_runs < 1) throw DataError("n_runs must be >= 1");
  if (corpus_path.empty()) throw DataError("corpus is required");
  if (out_dir.empty()) throw DataError("out_dir is required");
}

ExperimentConfig ExperimentConfig::from_file(const std::filesystem::path& path) {
  KvFile kv = KvFile::load(path);
  ExperimentConfig c;
  c.train = TrainConfig::from_kv(kv);
  c.kind = model_kind_from_string(kv.get_string("model", "indep"));
  c.bound = kv.get_bool("bound", false);
  c.split_ratio = kv.get_double("split_ratio", c.split_ratio);
  c.n_runs = kv.get_int("n_runs", c.n_runs);
  c.corpus_path = kv.get_string("corpus", "");
  c.embeddings_path = kv.get_string("embeddings", "");
  c.out_dir = kv.get_string("out_dir", "");
  kv.require_consumed();
  c.validate();
  return c;
}

std::string ExperimentConfig::to_kv_text() const {
  std::ostringstream out;
  out.precision(17);
  append_train_kv(out, train);
  out << "model = " << to_string(kind) << '\n'
      << "bound = " << (bound ? "true" : "false") << '\n'
      << "split_ratio = " << split_ratio << '\n'
      << "n_runs = " << n_runs << '\n'
      << "corpus = " << corpus_path << '\n'
      << "embeddings = " << embeddings_path << '\n'
      << "out_dir = " << out_dir << '\n';
  return out.str();
}

}  // namespace ecpe
