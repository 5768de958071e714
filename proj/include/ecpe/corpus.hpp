#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace ecpe {

// An (emotion clause, cause clause) pair, clause indices 1-based as in the
// corpus files. A pair may point at a single clause (emotion == cause).
struct EmotionCausePair {
  int emotion = 0;
  int cause = 0;

  friend bool operator==(const EmotionCausePair&, const EmotionCausePair&) = default;
  friend auto operator<=>(const EmotionCausePair&, const EmotionCausePair&) = default;
};

struct Clause {
  std::vector<std::string> tokens;
};

// Ordered clauses plus gold pair annotations. `pairs` is kept sorted and
// deduplicated, so it behaves as a set.
struct Document {
  std::string id;
  std::vector<Clause> clauses;
  std::vector<EmotionCausePair> pairs;

  // Distinct emotion / cause clause indices, ascending.
  std::vector<int> emotion_set() const;
  std::vector<int> cause_set() const;
};

struct Corpus {
  std::vector<Document> docs;
};

// Normalizes (sorts + dedupes pairs) and validates one document:
// at least one clause, non-empty whitespace-free tokens, pair indices in
// [1, #clauses]. Throws DataError naming the document on violation.
void validate_document(Document& doc);

// Line-delimited records, one JSON object per line:
//   {"doc_id": "...", "clauses": [["tok", ...], ...], "pairs": [[e, c], ...]}
// Indices are 1-based. Parse errors report the line number.
Corpus load_corpus(const std::filesystem::path& path);
void save_corpus(const Corpus& corpus, const std::filesystem::path& path);
std::string corpus_to_jsonl(const Corpus& corpus);

// Documents with identical clause token sequences are merged into one
// document holding the union of their pair sets. First-occurrence order and
// the first document's id are kept. Every input document must carry at
// least one pair.
Corpus merge_documents(const Corpus& raw);

// Seeded uniform shuffle, then the first floor(train_ratio * N) documents
// go to train and the rest to test.
std::pair<Corpus, Corpus> split_corpus(const Corpus& corpus, double train_ratio,
                                       std::uint64_t seed);

struct CorpusStats {
  std::size_t documents = 0;
  std::size_t with_zero_pairs = 0;  // not expected in annotated corpora
  std::size_t with_one_pair = 0;
  std::size_t with_two_pairs = 0;
  std::size_t with_more_pairs = 0;
  std::size_t total_pairs = 0;
  std::size_t min_clauses = 0, max_clauses = 0;
  double mean_clauses = 0.0;

  double pct_one() const;
  double pct_two() const;
  double pct_more() const;
};

CorpusStats corpus_stats(const Corpus& corpus);
std::string format_stats(const CorpusStats& stats);

}  // namespace ecpe
