#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "ecpe/config.hpp"
#include "ecpe/corpus.hpp"
#include "ecpe/model.hpp"
#include "ecpe/tensor.hpp"

namespace ecpe {

// Cartesian product of the extracted sets, e ascending then c ascending.
std::vector<EmotionCausePair> cartesian_pairs(const std::vector<int>& emotions,
                                              const std::vector<int>& causes);

// x = [s row for the emotion clause, s row for the cause clause,
//      one-hot of clamp(cause - emotion, -K, K)], length 4h + 2K + 1.
// Indices are 1-based and must be within the document.
Vec pair_features(const Mat& s, const EmotionCausePair& pair, int k);

struct FilterModel {
  Vec theta;
  double bias = 0.0;
  int k = 10;
  double threshold = 0.5;

  double score(const Vec& x) const;  // sigmoid(theta . x + bias)
};

struct FilterExample {
  Vec x;
  int y = 0;
};

// Candidate pairs over the corpus from the configured source sets (gold
// annotations or step-1 predictions), labeled 1 iff annotated.
std::vector<FilterExample> build_filter_examples(const Corpus& corpus,
                                                 const StepOneModel& model,
                                                 FilterSource source, int k);

// Full-batch gradient descent (Adam) on mean log-loss with an L2 penalty on
// theta. Deterministic per config seed. Throws DataError on zero examples.
FilterModel train_filter(const std::vector<FilterExample>& examples,
                         const TrainConfig& config);

// kept = pairs scoring >= threshold, in input order;
// keep_rate = kept/total, 1.0 for an empty input.
std::pair<std::vector<std::size_t>, double> filter_pairs(
    const FilterModel& model, const std::vector<Vec>& features);

struct ScoredPair {
  int emotion = 0;
  int cause = 0;
  double score = 1.0;
};

// One pairs-file record: the extracted sets, the candidate count, and the
// kept pairs.
struct DocPairs {
  std::string doc_id;
  std::vector<int> emotions, causes;
  std::size_t n_candidates = 0;
  std::vector<ScoredPair> pairs;
};

// End-to-end step 2 for one document. filter may be null (keep everything,
// score 1.0). gold is consulted only by bound models.
DocPairs extract_doc_pairs(const StepOneModel& model, const FilterModel* filter,
                           const Document& doc, const GoldLabels* gold);

// Line-delimited records:
// {"doc_id": ..., "emotions": [...], "causes": [...], "n_candidates": N,
//  "pairs": [{"emotion": e, "cause": c, "score": s}, ...]}
void save_pairs(const std::vector<DocPairs>& all, const std::filesystem::path& path);
std::vector<DocPairs> load_pairs(const std::filesystem::path& path);

void save_filter(const FilterModel& model, const std::filesystem::path& path);
FilterModel load_filter(const std::filesystem::path& path);

}  // namespace ecpe
