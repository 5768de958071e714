#pragma once

#include <filesystem>
#include <tuple>
#include <vector>

#include "ecpe/config.hpp"
#include "ecpe/corpus.hpp"

namespace ecpe {

// Planted-cue corpus generator. Emotion clauses carry a reserved emotion-cue
// token, cause clauses a cause-cue token, and the cause sits at a signed
// offset (cause - emotion) inside [min_offset, max_offset]. The cue
// probabilities weaken the signal; the spurious knobs plant cue-bearing
// clauses that belong to no pair; shared_emotion_frac picks between
// one-emotion-many-causes and several disjoint pairs in multi-pair
// documents.
struct SynthSpec {
  int n_docs = 100;
  int clauses_min = 8, clauses_max = 12;
  int clause_len_min = 4, clause_len_max = 8;
  int vocab_size = 50;
  int n_emotion_cues = 2, n_cause_cues = 2;
  int min_offset = -2, max_offset = 0;
  double frac_two = 0.0;        // fraction of documents with two pairs
  double frac_more = 0.0;       // fraction with three pairs
  double shared_emotion_frac = 1.0;
  double emotion_cue_prob = 1.0;
  double cause_cue_prob = 1.0;
  double spurious_emotion_prob = 0.0;
  double spurious_cause_prob = 0.0;
  std::uint64_t seed = 1;

  void validate() const;
  static SynthSpec from_file(const std::filesystem::path& path);

  // A spec whose oracle recovers the gold annotations exactly: certain cues,
  // no spurious clauses.
  bool clean() const {
    return emotion_cue_prob == 1.0 && cause_cue_prob == 1.0 &&
           spurious_emotion_prob == 0.0 && spurious_cause_prob == 0.0;
  }
};

Corpus generate_corpus(const SynthSpec& spec);

// Cue-lookup extraction: E and C are the clauses carrying the respective
// cues; pairs are all (e, c) in E x C with c - e inside the offset window.
std::tuple<std::vector<int>, std::vector<int>, std::vector<EmotionCausePair>>
oracle_extract(const Document& doc, const SynthSpec& spec);

}  // namespace ecpe
