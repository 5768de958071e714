#pragma once

#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include "ecpe/corpus.hpp"
#include "ecpe/rng.hpp"
#include "ecpe/tensor.hpp"

namespace ecpe {

// Token ids. PAD is 0, UNK is 1, corpus tokens follow ordered by frequency
// descending then lexicographic, so two builds of the same corpus agree.
struct Vocabulary {
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;

  std::unordered_map<std::string, int> token_to_id;
  std::vector<std::string> id_to_token;  // ["<pad>", "<unk>", ...]

  int size() const { return static_cast<int>(id_to_token.size()); }
  int id_of(const std::string& token) const;  // UNK when absent
};

Vocabulary build_vocab(const Corpus& corpus, int min_count);

// |V| x d_w row per token id. PAD row stays all-zero.
struct EmbeddingTable {
  Mat rows;
  bool trainable = true;

  int dim() const { return static_cast<int>(rows.cols); }
};

// Every row except PAD drawn from U(-0.01, 0.01).
EmbeddingTable random_embeddings(const Vocabulary& vocab, int d_w, Rng& rng);

// Textual word2vec: header "count dim", then "token v1 ... v_dw" per line.
// Rows found in the file are copied; missing tokens (UNK included) are drawn
// from U(-0.01, 0.01) under rng; PAD stays zero. Dimension mismatches and
// malformed lines raise DataError with the line number.
EmbeddingTable load_word_vectors(const std::filesystem::path& path,
                                 const Vocabulary& vocab, int d_w, Rng& rng);

// Token ids for one clause, truncated to max_len and padded with PAD.
struct ClauseIds {
  std::vector<int> ids;  // length max_len
  int valid_len = 0;
};

ClauseIds clause_ids(const Vocabulary& vocab, const Clause& clause, int max_len);

// max_len x d_w matrix of embedding rows for the clause; PAD rows are zero.
Mat lookup_clause(const EmbeddingTable& table, const Vocabulary& vocab,
                  const Clause& clause, int max_len, int* valid_len);

}  // namespace ecpe
