#include "ecpe/pairing.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ecpe/container.hpp"
#include "ecpe/error.hpp"
#include "ecpe/kernels.hpp"
#include "ecpe/neural.hpp"

namespace ecpe {

using kernels::active;
using nlohmann::json;

std::vector<EmotionCausePair> cartesian_pairs(const std::vector<int>& emotions,
                                              const std::vector<int>& causes) {
  std::vector<int> e = emotions, c = causes;
  std::sort(e.begin(), e.end());
  std::sort(c.begin(), c.end());
  std::vector<EmotionCausePair> out;
  out.reserve(e.size() * c.size());
  for (int ei : e)
    for (int ci : c) out.push_back({ei, ci});
  return out;
}

Vec pair_features(const Mat& s, const EmotionCausePair& pair, int k) {
  const int T = static_cast<int>(s.rows);
  if (pair.emotion < 1 || pair.emotion > T || pair.cause < 1 || pair.cause > T)
    throw DataError("pair (" + std::to_string(pair.emotion) + "," +
                    std::to_string(pair.cause) + ") outside document of " +
                    std::to_string(T) + " clauses");
  const std::size_t d = s.cols;
  Vec x(2 * d + 2 * static_cast<std::size_t>(k) + 1, 0.0);
  const double* se = s.row(static_cast<std::size_t>(pair.emotion - 1));
  const double* sc = s.row(static_cast<std::size_t>(pair.cause - 1));
  std::copy(se, se + d, x.begin());
  std::copy(sc, sc + d, x.begin() + static_cast<std::ptrdiff_t>(d));
  const int offset = std::clamp(pair.cause - pair.emotion, -k, k);
  x[2 * d + static_cast<std::size_t>(offset + k)] = 1.0;
  return x;
}

double FilterModel::score(const Vec& x) const {
  if (x.size() != theta.size())
    throw DataError("filter feature length " + std::to_string(x.size()) +
                    " does not match model (" + std::to_string(theta.size()) + ")");
  const double z = active().dot(theta.data(), x.data(), x.size()) + bias;
  return 1.0 / (1.0 + std::exp(-z));
}

std::vector<FilterExample> build_filter_examples(const Corpus& corpus,
                                                 const StepOneModel& model,
                                                 FilterSource source, int k) {
  std::vector<FilterExample> out;
  for (const auto& raw : corpus.docs) {
    const Document doc = truncate_document(raw, model.config.max_clauses, nullptr);
    if (doc.clauses.empty()) continue;
    const GoldLabels gold = gold_labels(doc);
    const DocForward fwd = model.forward_doc(doc, &gold, nullptr);
    std::vector<int> emotions, causes;
    if (source == FilterSource::Gold) {
      emotions = doc.emotion_set();
      causes = doc.cause_set();
    } else {
      std::tie(emotions, causes) = model.extract_sets(fwd, &gold);
    }
    for (const auto& pair : cartesian_pairs(emotions, causes)) {
      FilterExample ex;
      ex.x = pair_features(fwd.s, pair, k);
      ex.y = std::binary_search(doc.pairs.begin(), doc.pairs.end(), pair) ? 1 : 0;
      out.push_back(std::move(ex));
    }
  }
  return out;
}

FilterModel train_filter(const std::vector<FilterExample>& examples,
                         const TrainConfig& config) {
  if (examples.empty())
    throw DataError("no candidate pairs to train the filter on; "
                    "check the step-1 extraction output");
  const std::size_t d = examples[0].x.size();
  for (const auto& ex : examples)
    if (ex.x.size() != d)
      throw DataError("inconsistent filter feature lengths");

  FilterModel model;
  model.k = config.filter_k;
  model.threshold = config.filter_threshold;
  model.theta.assign(d, 0.0);
  Rng rng(config.seed);
  for (double& w : model.theta) w = rng.uniform(-0.01, 0.01);
  model.bias = rng.uniform(-0.01, 0.01);

  const auto& ops = active();
  const double inv_n = 1.0 / static_cast<double>(examples.size());
  Vec grad(d + 1), m(d + 1, 0.0), v(d + 1, 0.0), block(d + 1);
  std::copy(model.theta.begin(), model.theta.end(), block.begin());
  block[d] = model.bias;

  for (int epoch = 1; epoch <= config.filter_epochs; ++epoch) {
    std::fill(grad.begin(), grad.end(), 0.0);
    for (const auto& ex : examples) {
      const double z = ops.dot(block.data(), ex.x.data(), d) + block[d];
      const double err = (1.0 / (1.0 + std::exp(-z)) - ex.y) * inv_n;
      ops.axpy(err, ex.x.data(), grad.data(), d);
      grad[d] += err;
    }
    ops.axpy(config.filter_l2, block.data(), grad.data(), d);  // theta only
    if (!all_finite(grad.data(), grad.size()))
      throw NumericError("non-finite gradient in parameter 'filter_theta'");
    const double bias1 = 1.0 - std::pow(0.9, epoch);
    const double bias2 = 1.0 - std::pow(0.999, epoch);
    ops.adam(block.data(), m.data(), v.data(), grad.data(), d + 1,
             config.filter_lr, 0.9, 0.999, 1e-8, bias1, bias2, 0.0);
  }
  std::copy(block.begin(), block.begin() + static_cast<std::ptrdiff_t>(d),
            model.theta.begin());
  model.bias = block[d];
  return model;
}

std::pair<std::vector<std::size_t>, double> filter_pairs(
    const FilterModel& model, const std::vector<Vec>& features) {
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < features.size(); ++i)
    if (model.score(features[i]) >= model.threshold) kept.push_back(i);
  const double keep_rate =
      features.empty() ? 1.0
                       : static_cast<double>(kept.size()) /
                             static_cast<double>(features.size());
  return {std::move(kept), keep_rate};
}

DocPairs extract_doc_pairs(const StepOneModel& model, const FilterModel* filter,
                           const Document& raw, const GoldLabels* gold) {
  const Document doc = truncate_document(raw, model.config.max_clauses, nullptr);
  DocPairs out;
  out.doc_id = doc.id;
  GoldLabels local;
  const GoldLabels* g = gold;
  if (model.bound && !g) {
    local = gold_labels(doc);
    g = &local;
  }
  const DocForward fwd = model.forward_doc(doc, g, nullptr);
  std::tie(out.emotions, out.causes) = model.extract_sets(fwd, g);
  const auto candidates = cartesian_pairs(out.emotions, out.causes);
  out.n_candidates = candidates.size();
  for (const auto& pair : candidates) {
    ScoredPair sp{pair.emotion, pair.cause, 1.0};
    if (filter) {
      sp.score = filter->score(pair_features(fwd.s, pair, filter->k));
      if (sp.score < filter->threshold) continue;
    }
    out.pairs.push_back(sp);
  }
  return out;
}

void save_pairs(const std::vector<DocPairs>& all, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write pairs file: " + path.string());
  for (const auto& dp : all) {
    json j;
    j["doc_id"] = dp.doc_id;
    j["emotions"] = dp.emotions;
    j["causes"] = dp.causes;
    j["n_candidates"] = dp.n_candidates;
    json pairs = json::array();
    for (const auto& p : dp.pairs)
      pairs.push_back({{"emotion", p.emotion}, {"cause", p.cause}, {"score", p.score}});
    j["pairs"] = std::move(pairs);
    out << j.dump() << '\n';
  }
  if (!out) throw DataError("failed writing pairs file: " + path.string());
}

std::vector<DocPairs> load_pairs(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open pairs file: " + path.string());
  std::vector<DocPairs> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw DataError(path.string() + " line " + std::to_string(line_no) +
                      ": invalid JSON: " + e.what());
    }
    try {
      DocPairs dp;
      dp.doc_id = j.at("doc_id").get<std::string>();
      dp.emotions = j.at("emotions").get<std::vector<int>>();
      dp.causes = j.at("causes").get<std::vector<int>>();
      dp.n_candidates = j.at("n_candidates").get<std::size_t>();
      for (const auto& p : j.at("pairs"))
        dp.pairs.push_back({p.at("emotion").get<int>(), p.at("cause").get<int>(),
                            p.value("score", 1.0)});
      out.push_back(std::move(dp));
    } catch (const json::exception& e) {
      throw DataError(path.string() + " line " + std::to_string(line_no) +
                      ": bad pairs record: " + e.what());
    }
  }
  return out;
}

void save_filter(const FilterModel& model, const std::filesystem::path& path) {
  json meta;
  meta["kind"] = "filter";
  meta["k"] = model.k;
  meta["threshold"] = model.threshold;
  Mat theta(1, model.theta.size());
  std::copy(model.theta.begin(), model.theta.end(), theta.data());
  Mat bias(1, 1);
  bias.at(0, 0) = model.bias;
  write_container(path, meta.dump(), {{"theta", &theta}, {"bias", &bias}});
}

FilterModel load_filter(const std::filesystem::path& path) {
  std::vector<NamedMat> tensors;
  const std::string meta_text = read_container(path, tensors);
  json meta;
  try {
    meta = json::parse(meta_text);
  } catch (const json::parse_error& e) {
    throw DataError(path.string() + ": bad filter metadata: " + e.what());
  }
  if (meta.value("kind", "") != "filter")
    throw DataError(path.string() + ": not a filter model file");
  if (tensors.size() != 2 || tensors[0].name != "theta" || tensors[1].name != "bias" ||
      tensors[1].m.size() != 1)
    throw DataError(path.string() + ": unexpected filter tensor layout");
  FilterModel model;
  model.k = meta.at("k").get<int>();
  model.threshold = meta.at("threshold").get<double>();
  model.theta.assign(tensors[0].m.data(), tensors[0].m.data() + tensors[0].m.size());
  model.bias = tensors[1].m.at(0, 0);
  return model;
}

}  // namespace ecpe
