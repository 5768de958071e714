#include "ecpe/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "ecpe/error.hpp"
#include "ecpe/rng.hpp"

namespace ecpe {

using nlohmann::json;

std::vector<int> Document::emotion_set() const {
  std::vector<int> out;
  for (const auto& p : pairs) out.push_back(p.emotion);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<int> Document::cause_set() const {
  std::vector<int> out;
  for (const auto& p : pairs) out.push_back(p.cause);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

void validate_document(Document& doc) {
  if (doc.id.empty()) throw DataError("document with empty doc_id");
  if (doc.clauses.empty())
    throw DataError("document '" + doc.id + "' has no clauses");
  for (std::size_t i = 0; i < doc.clauses.size(); ++i) {
    if (doc.clauses[i].tokens.empty())
      throw DataError("document '" + doc.id + "' clause " +
                      std::to_string(i + 1) + " has no tokens");
    for (const auto& tok : doc.clauses[i].tokens) {
      if (tok.empty())
        throw DataError("document '" + doc.id + "' clause " +
                        std::to_string(i + 1) + " has an empty token");
      for (char c : tok)
        if (std::isspace(static_cast<unsigned char>(c)))
          throw DataError("document '" + doc.id + "' clause " +
                          std::to_string(i + 1) +
                          " has a token containing whitespace");
    }
  }
  const int n = static_cast<int>(doc.clauses.size());
  for (const auto& p : doc.pairs) {
    if (p.emotion < 1 || p.emotion > n || p.cause < 1 || p.cause > n)
      throw DataError("document '" + doc.id + "' pair (" +
                      std::to_string(p.emotion) + "," + std::to_string(p.cause) +
                      ") out of range 1.." + std::to_string(n));
  }
  std::sort(doc.pairs.begin(), doc.pairs.end());
  doc.pairs.erase(std::unique(doc.pairs.begin(), doc.pairs.end()),
                  doc.pairs.end());
}

namespace {

Document parse_document(const json& j, std::size_t line_no) {
  const std::string where = "line " + std::to_string(line_no);
  if (!j.is_object()) throw DataError(where + ": record is not a JSON object");
  if (!j.contains("doc_id") || !j["doc_id"].is_string())
    throw DataError(where + ": missing or non-string 'doc_id'");
  if (!j.contains("clauses") || !j["clauses"].is_array())
    throw DataError(where + ": missing or non-array 'clauses'");
  if (!j.contains("pairs") || !j["pairs"].is_array())
    throw DataError(where + ": missing or non-array 'pairs'");

  Document doc;
  doc.id = j["doc_id"].get<std::string>();
  for (const auto& cl : j["clauses"]) {
    if (!cl.is_array())
      throw DataError(where + ": clause is not an array of tokens");
    Clause clause;
    for (const auto& tok : cl) {
      if (!tok.is_string())
        throw DataError(where + ": token is not a string");
      clause.tokens.push_back(tok.get<std::string>());
    }
    doc.clauses.push_back(std::move(clause));
  }
  for (const auto& pr : j["pairs"]) {
    if (!pr.is_array() || pr.size() != 2 || !pr[0].is_number_integer() ||
        !pr[1].is_number_integer())
      throw DataError(where + ": pair is not a [emotion, cause] integer pair");
    doc.pairs.push_back({pr[0].get<int>(), pr[1].get<int>()});
  }
  try {
    validate_document(doc);
  } catch (const DataError& e) {
    throw DataError(where + ": " + e.what());
  }
  return doc;
}

}  // namespace

Corpus load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open corpus file: " + path.string());
  Corpus corpus;
  std::string line;
  std::size_t line_no = 0;
  std::map<std::string, std::size_t> seen_ids;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw DataError("line " + std::to_string(line_no) +
                      ": invalid JSON: " + e.what());
    }
    Document doc = parse_document(j, line_no);
    auto [it, inserted] = seen_ids.emplace(doc.id, line_no);
    if (!inserted)
      throw DataError("line " + std::to_string(line_no) + ": duplicate doc_id '" +
                      doc.id + "' (first seen at line " +
                      std::to_string(it->second) + ")");
    corpus.docs.push_back(std::move(doc));
  }
  return corpus;
}

std::string corpus_to_jsonl(const Corpus& corpus) {
  std::ostringstream out;
  for (const auto& doc : corpus.docs) {
    json j;
    j["doc_id"] = doc.id;
    json clauses = json::array();
    for (const auto& cl : doc.clauses) clauses.push_back(cl.tokens);
    j["clauses"] = std::move(clauses);
    json pairs = json::array();
    for (const auto& p : doc.pairs) pairs.push_back({p.emotion, p.cause});
    j["pairs"] = std::move(pairs);
    out << j.dump() << '\n';
  }
  return out.str();
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write corpus file: " + path.string());
  out << corpus_to_jsonl(corpus);
  if (!out) throw DataError("failed writing corpus file: " + path.string());
}

Corpus merge_documents(const Corpus& raw) {
  // Key documents by their full token content.
  std::map<std::string, std::size_t> index;
  Corpus merged;
  for (const auto& doc : raw.docs) {
    if (doc.pairs.empty())
      throw DataError("document '" + doc.id + "' has no pair annotation");
    std::string key;
    for (const auto& cl : doc.clauses) {
      for (const auto& tok : cl.tokens) {
        key += tok;
        key += '\x01';
      }
      key += '\x02';
    }
    auto it = index.find(key);
    if (it == index.end()) {
      index.emplace(std::move(key), merged.docs.size());
      merged.docs.push_back(doc);
    } else {
      auto& dst = merged.docs[it->second];
      dst.pairs.insert(dst.pairs.end(), doc.pairs.begin(), doc.pairs.end());
      std::sort(dst.pairs.begin(), dst.pairs.end());
      dst.pairs.erase(std::unique(dst.pairs.begin(), dst.pairs.end()),
                      dst.pairs.end());
    }
  }
  return merged;
}

std::pair<Corpus, Corpus> split_corpus(const Corpus& corpus, double train_ratio,
                                       std::uint64_t seed) {
  if (!(train_ratio >= 0.0 && train_ratio <= 1.0))
    throw DataError("train_ratio must lie in [0, 1]");
  std::vector<std::size_t> order(corpus.docs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);
  const auto n_train =
      static_cast<std::size_t>(std::floor(train_ratio * static_cast<double>(order.size())));
  std::pair<Corpus, Corpus> out;
  for (std::size_t i = 0; i < order.size(); ++i) {
    auto& dst = (i < n_train) ? out.first : out.second;
    dst.docs.push_back(corpus.docs[order[i]]);
  }
  return out;
}

CorpusStats corpus_stats(const Corpus& corpus) {
  CorpusStats s;
  s.documents = corpus.docs.size();
  std::size_t clause_total = 0;
  for (const auto& doc : corpus.docs) {
    const std::size_t np = doc.pairs.size();
    if (np == 0)
      ++s.with_zero_pairs;
    else if (np == 1)
      ++s.with_one_pair;
    else if (np == 2)
      ++s.with_two_pairs;
    else
      ++s.with_more_pairs;
    s.total_pairs += np;
    const std::size_t nc = doc.clauses.size();
    clause_total += nc;
    if (s.min_clauses == 0 || nc < s.min_clauses) s.min_clauses = nc;
    s.max_clauses = std::max(s.max_clauses, nc);
  }
  if (s.documents > 0)
    s.mean_clauses = static_cast<double>(clause_total) / static_cast<double>(s.documents);
  return s;
}

double CorpusStats::pct_one() const {
  return documents ? 100.0 * static_cast<double>(with_one_pair) / static_cast<double>(documents) : 0.0;
}
double CorpusStats::pct_two() const {
  return documents ? 100.0 * static_cast<double>(with_two_pairs) / static_cast<double>(documents) : 0.0;
}
double CorpusStats::pct_more() const {
  return documents ? 100.0 * static_cast<double>(with_more_pairs) / static_cast<double>(documents) : 0.0;
}

std::string format_stats(const CorpusStats& s) {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(2);
  out << "documents:          " << s.documents << '\n';
  if (s.with_zero_pairs > 0)
    out << "with zero pairs:    " << s.with_zero_pairs << '\n';
  out << "with one pair:      " << s.with_one_pair << " (" << s.pct_one() << "%)\n"
      << "with two pairs:     " << s.with_two_pairs << " (" << s.pct_two() << "%)\n"
      << "with more pairs:    " << s.with_more_pairs << " (" << s.pct_more() << "%)\n"
      << "total pairs:        " << s.total_pairs << '\n'
      << "clauses per doc:    min " << s.min_clauses << ", mean " << s.mean_clauses
      << ", max " << s.max_clauses << '\n';
  return out.str();
}

}  // namespace ecpe
