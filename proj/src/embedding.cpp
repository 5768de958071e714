#include "ecpe/embedding.hpp"

#include <algorithm>
#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include "ecpe/error.hpp"

namespace ecpe {

int Vocabulary::id_of(const std::string& token) const {
  auto it = token_to_id.find(token);
  return it == token_to_id.end() ? kUnk : it->second;
}

Vocabulary build_vocab(const Corpus& corpus, int min_count) {
  if (corpus.docs.empty()) throw DataError("cannot build vocabulary from an empty corpus");
  std::map<std::string, std::size_t> freq;
  for (const auto& doc : corpus.docs)
    for (const auto& clause : doc.clauses)
      for (const auto& tok : clause.tokens) ++freq[tok];

  std::vector<std::pair<std::string, std::size_t>> kept;
  for (auto& [tok, count] : freq)
    if (count >= static_cast<std::size_t>(min_count)) kept.emplace_back(tok, count);
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  Vocabulary v;
  v.id_to_token = {"<pad>", "<unk>"};
  for (auto& [tok, count] : kept) {
    v.token_to_id.emplace(tok, v.size());
    v.id_to_token.push_back(tok);
  }
  return v;
}

EmbeddingTable random_embeddings(const Vocabulary& vocab, int d_w, Rng& rng) {
  EmbeddingTable table;
  table.rows = Mat(vocab.size(), d_w);
  for (int id = 1; id < vocab.size(); ++id) {
    double* row = table.rows.row(id);
    for (int j = 0; j < d_w; ++j) row[j] = rng.uniform(-0.01, 0.01);
  }
  return table;
}

EmbeddingTable load_word_vectors(const std::filesystem::path& path,
                                 const Vocabulary& vocab, int d_w, Rng& rng) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open embeddings file: " + path.string());

  std::string line;
  if (!std::getline(in, line))
    throw DataError(path.string() + ": empty embeddings file");
  {
    std::istringstream header(line);
    long long count = 0, dim = 0;
    if (!(header >> count >> dim))
      throw DataError(path.string() + " line 1: expected header 'count dim'");
    if (dim != d_w)
      throw DataError(path.string() + ": embedding dimension is " +
                      std::to_string(dim) + ", expected " + std::to_string(d_w));
  }

  EmbeddingTable table;
  table.rows = Mat(vocab.size(), d_w);
  std::vector<char> filled(static_cast<std::size_t>(vocab.size()), 0);
  filled[Vocabulary::kPad] = 1;  // PAD stays zero even if the file names it

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string token;
    if (!(fields >> token))
      throw DataError(path.string() + " line " + std::to_string(line_no) +
                      ": malformed vector line");
    std::vector<double> values;
    values.reserve(static_cast<std::size_t>(d_w));
    std::string field;
    while (fields >> field) {
      errno = 0;
      char* end = nullptr;
      const double x = std::strtod(field.c_str(), &end);
      if (errno != 0 || end == field.c_str() || *end != '\0')
        throw DataError(path.string() + " line " + std::to_string(line_no) +
                        ": non-numeric value '" + field + "'");
      values.push_back(x);
    }
    if (values.size() != static_cast<std::size_t>(d_w))
      throw DataError(path.string() + " line " + std::to_string(line_no) + ": got " +
                      std::to_string(values.size()) + " values, expected " +
                      std::to_string(d_w));
    auto it = vocab.token_to_id.find(token);
    if (it == vocab.token_to_id.end()) continue;  // not in this run's vocabulary
    if (it->second == Vocabulary::kPad) continue;
    std::copy(values.begin(), values.end(), table.rows.row(it->second));
    filled[static_cast<std::size_t>(it->second)] = 1;
  }

  for (int id = 1; id < vocab.size(); ++id) {
    if (filled[static_cast<std::size_t>(id)]) continue;
    double* row = table.rows.row(id);
    for (int j = 0; j < d_w; ++j) row[j] = rng.uniform(-0.01, 0.01);
  }
  if (!all_finite(table.rows))
    throw DataError(path.string() + ": embeddings contain non-finite values");
  return table;
}

ClauseIds clause_ids(const Vocabulary& vocab, const Clause& clause, int max_len) {
  ClauseIds out;
  out.ids.assign(static_cast<std::size_t>(max_len), Vocabulary::kPad);
  out.valid_len = std::min<int>(max_len, static_cast<int>(clause.tokens.size()));
  for (int t = 0; t < out.valid_len; ++t)
    out.ids[static_cast<std::size_t>(t)] = vocab.id_of(clause.tokens[static_cast<std::size_t>(t)]);
  return out;
}

Mat lookup_clause(const EmbeddingTable& table, const Vocabulary& vocab,
                  const Clause& clause, int max_len, int* valid_len) {
  const ClauseIds ids = clause_ids(vocab, clause, max_len);
  Mat out(max_len, table.dim());
  for (int t = 0; t < ids.valid_len; ++t) {
    const double* src = table.rows.row(ids.ids[static_cast<std::size_t>(t)]);
    std::copy(src, src + table.dim(), out.row(t));
  }
  if (valid_len) *valid_len = ids.valid_len;
  return out;
}

}  // namespace ecpe
