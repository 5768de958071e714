#include "ecpe/synthgen.hpp"

#include <algorithm>
#include <cstdio>
#include <string>

#include "ecpe/error.hpp"
#include "ecpe/rng.hpp"

namespace ecpe {

namespace {

constexpr int kGeometryRetries = 1000;

std::string emotion_cue(int j) { return "EMO" + std::to_string(j); }
std::string cause_cue(int j) { return "CAU" + std::to_string(j); }

bool is_cue(const std::string& token, const char* prefix, int n_cues) {
  const std::size_t plen = std::char_traits<char>::length(prefix);
  if (token.size() <= plen || token.compare(0, plen, prefix) != 0) return false;
  int idx = 0;
  for (std::size_t i = plen; i < token.size(); ++i) {
    if (token[i] < '0' || token[i] > '9') return false;
    idx = idx * 10 + (token[i] - '0');
  }
  return idx < n_cues;
}

// Positions (1-based) whose offset from e lies inside the window.
std::vector<int> window_positions(int e, int n, const SynthSpec& s) {
  std::vector<int> out;
  for (int c = std::max(1, e + s.min_offset); c <= std::min(n, e + s.max_offset); ++c)
    out.push_back(c);
  return out;
}

struct DocPlan {
  int n_clauses = 0;
  std::vector<int> emotions, causes;          // real roles, may overlap
  std::vector<EmotionCausePair> pairs;
  std::vector<int> spurious_emotions, spurious_causes;
};

bool plan_geometry(const SynthSpec& s, Rng& rng, DocPlan& plan) {
  const int n = rng.range(s.clauses_min, s.clauses_max);
  plan = DocPlan{};
  plan.n_clauses = n;

  int n_pairs = 1;
  {
    const double u = rng.uniform01();
    if (u < s.frac_more)
      n_pairs = 3;
    else if (u < s.frac_more + s.frac_two)
      n_pairs = 2;
  }
  const bool shared = n_pairs > 1 ? rng.bernoulli(s.shared_emotion_frac) : true;
  const int width = s.max_offset - s.min_offset;

  if (shared) {
    std::vector<int> feasible;
    for (int e = 1; e <= n; ++e)
      if (static_cast<int>(window_positions(e, n, s).size()) >= n_pairs)
        feasible.push_back(e);
    if (feasible.empty()) return false;
    const int e = feasible[rng.bounded(feasible.size())];
    std::vector<int> causes = window_positions(e, n, s);
    rng.shuffle(causes);
    causes.resize(static_cast<std::size_t>(n_pairs));
    plan.emotions.push_back(e);
    for (int c : causes) {
      plan.causes.push_back(c);
      plan.pairs.push_back({e, c});
    }
  } else {
    // Disjoint windows: any two emotions further apart than the window
    // width, so no cross-pair offset lands inside it and the cue oracle
    // stays exact.
    std::vector<int> emotions;
    for (int attempt = 0; attempt < 200 && static_cast<int>(emotions.size()) < n_pairs;
         ++attempt) {
      std::vector<int> candidates;
      for (int e = 1; e <= n; ++e) {
        if (window_positions(e, n, s).empty()) continue;
        bool far = true;
        for (int prev : emotions)
          if (std::abs(e - prev) <= width) far = false;
        if (far) candidates.push_back(e);
      }
      if (candidates.empty()) {
        emotions.clear();
        continue;
      }
      emotions.push_back(candidates[rng.bounded(candidates.size())]);
    }
    if (static_cast<int>(emotions.size()) < n_pairs) return false;
    std::sort(emotions.begin(), emotions.end());
    for (int e : emotions) {
      std::vector<int> options = window_positions(e, n, s);
      const int c = options[rng.bounded(options.size())];
      plan.emotions.push_back(e);
      plan.causes.push_back(c);
      plan.pairs.push_back({e, c});
    }
  }

  auto taken = [&](int p) {
    auto in = [p](const std::vector<int>& v) {
      return std::find(v.begin(), v.end(), p) != v.end();
    };
    return in(plan.emotions) || in(plan.causes) || in(plan.spurious_emotions) ||
           in(plan.spurious_causes);
  };

  if (rng.bernoulli(s.spurious_cause_prob)) {
    // A cause cue that no emotion-cue clause can claim through the window.
    std::vector<int> candidates;
    for (int p = 1; p <= n; ++p) {
      if (taken(p)) continue;
      bool clear = true;
      for (int e : plan.emotions) {
        const int off = p - e;
        if (off >= s.min_offset && off <= s.max_offset) clear = false;
      }
      if (clear) candidates.push_back(p);
    }
    if (!candidates.empty())
      plan.spurious_causes.push_back(candidates[rng.bounded(candidates.size())]);
  }
  if (rng.bernoulli(s.spurious_emotion_prob)) {
    std::vector<int> candidates;
    for (int p = 1; p <= n; ++p) {
      if (taken(p)) continue;
      bool clear = true;
      for (int c : plan.causes) {
        const int off = c - p;
        if (off >= s.min_offset && off <= s.max_offset) clear = false;
      }
      for (int c : plan.spurious_causes) {
        const int off = c - p;
        if (off >= s.min_offset && off <= s.max_offset) clear = false;
      }
      if (clear) candidates.push_back(p);
    }
    if (!candidates.empty())
      plan.spurious_emotions.push_back(candidates[rng.bounded(candidates.size())]);
  }
  return true;
}

}  // namespace

void SynthSpec::validate() const {
  if (n_docs < 1) throw DataError("n_docs must be >= 1");
  if (clauses_min < 1 || clauses_max < clauses_min)
    throw DataError("clause count range is empty");
  if (clause_len_min < 2 || clause_len_max < clause_len_min)
    throw DataError("clause length range must allow >= 2 tokens");
  if (vocab_size < 1) throw DataError("vocab_size must be >= 1");
  if (n_emotion_cues < 1 || n_cause_cues < 1)
    throw DataError("cue counts must be >= 1");
  if (min_offset > max_offset) throw DataError("offset window is empty");
  for (double frac : {frac_two, frac_more, shared_emotion_frac, emotion_cue_prob,
                      cause_cue_prob, spurious_emotion_prob, spurious_cause_prob})
    if (!(frac >= 0.0 && frac <= 1.0))
      throw DataError("fractions and probabilities must lie in [0, 1]");
  if (frac_two + frac_more > 1.0)
    throw DataError("frac_two + frac_more must not exceed 1");
}

SynthSpec SynthSpec::from_file(const std::filesystem::path& path) {
  KvFile kv = KvFile::load(path);
  SynthSpec s;
  s.n_docs = kv.get_int("n_docs", s.n_docs);
  s.clauses_min = kv.get_int("clauses_min", s.clauses_min);
  s.clauses_max = kv.get_int("clauses_max", s.clauses_max);
  s.clause_len_min = kv.get_int("clause_len_min", s.clause_len_min);
  s.clause_len_max = kv.get_int("clause_len_max", s.clause_len_max);
  s.vocab_size = kv.get_int("vocab_size", s.vocab_size);
  s.n_emotion_cues = kv.get_int("n_emotion_cues", s.n_emotion_cues);
  s.n_cause_cues = kv.get_int("n_cause_cues", s.n_cause_cues);
  s.min_offset = kv.get_int("min_offset", s.min_offset);
  s.max_offset = kv.get_int("max_offset", s.max_offset);
  s.frac_two = kv.get_double("frac_two", s.frac_two);
  s.frac_more = kv.get_double("frac_more", s.frac_more);
  s.shared_emotion_frac = kv.get_double("shared_emotion_frac", s.shared_emotion_frac);
  s.emotion_cue_prob = kv.get_double("emotion_cue_prob", s.emotion_cue_prob);
  s.cause_cue_prob = kv.get_double("cause_cue_prob", s.cause_cue_prob);
  s.spurious_emotion_prob = kv.get_double("spurious_emotion_prob", s.spurious_emotion_prob);
  s.spurious_cause_prob = kv.get_double("spurious_cause_prob", s.spurious_cause_prob);
  s.seed = kv.get_u64("seed", s.seed);
  kv.require_consumed();
  s.validate();
  return s;
}

Corpus generate_corpus(const SynthSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  Corpus corpus;
  corpus.docs.reserve(static_cast<std::size_t>(spec.n_docs));

  for (int d = 1; d <= spec.n_docs; ++d) {
    DocPlan plan;
    bool ok = false;
    for (int attempt = 0; attempt < kGeometryRetries && !ok; ++attempt)
      ok = plan_geometry(spec, rng, plan);
    if (!ok)
      throw DataError("infeasible pair geometry: offsets " +
                      std::to_string(spec.min_offset) + ".." +
                      std::to_string(spec.max_offset) + " do not fit documents of " +
                      std::to_string(spec.clauses_min) + ".." +
                      std::to_string(spec.clauses_max) + " clauses");

    Document doc;
    char id[32];
    std::snprintf(id, sizeof id, "synth-%06d", d);
    doc.id = id;
    doc.pairs = plan.pairs;

    auto contains = [](const std::vector<int>& v, int p) {
      return std::find(v.begin(), v.end(), p) != v.end();
    };
    for (int i = 1; i <= plan.n_clauses; ++i) {
      Clause clause;
      const int len = rng.range(spec.clause_len_min, spec.clause_len_max);
      for (int t = 0; t < len; ++t)
        clause.tokens.push_back(
            "w" + std::to_string(rng.bounded(static_cast<std::uint64_t>(spec.vocab_size))));

      const bool emo_here =
          (contains(plan.emotions, i) && rng.bernoulli(spec.emotion_cue_prob)) ||
          contains(plan.spurious_emotions, i);
      const bool cau_here =
          (contains(plan.causes, i) && rng.bernoulli(spec.cause_cue_prob)) ||
          contains(plan.spurious_causes, i);
      int emo_pos = -1;
      if (emo_here) {
        emo_pos = static_cast<int>(rng.bounded(static_cast<std::uint64_t>(len)));
        clause.tokens[static_cast<std::size_t>(emo_pos)] =
            emotion_cue(static_cast<int>(rng.bounded(static_cast<std::uint64_t>(spec.n_emotion_cues))));
      }
      if (cau_here) {
        int pos = static_cast<int>(rng.bounded(static_cast<std::uint64_t>(len)));
        while (pos == emo_pos)
          pos = static_cast<int>(rng.bounded(static_cast<std::uint64_t>(len)));
        clause.tokens[static_cast<std::size_t>(pos)] =
            cause_cue(static_cast<int>(rng.bounded(static_cast<std::uint64_t>(spec.n_cause_cues))));
      }
      doc.clauses.push_back(std::move(clause));
    }
    validate_document(doc);
    corpus.docs.push_back(std::move(doc));
  }
  return corpus;
}

std::tuple<std::vector<int>, std::vector<int>, std::vector<EmotionCausePair>>
oracle_extract(const Document& doc, const SynthSpec& spec) {
  std::vector<int> emotions, causes;
  for (std::size_t i = 0; i < doc.clauses.size(); ++i) {
    bool emo = false, cau = false;
    for (const auto& tok : doc.clauses[i].tokens) {
      if (is_cue(tok, "EMO", spec.n_emotion_cues)) emo = true;
      if (is_cue(tok, "CAU", spec.n_cause_cues)) cau = true;
    }
    if (emo) emotions.push_back(static_cast<int>(i) + 1);
    if (cau) causes.push_back(static_cast<int>(i) + 1);
  }
  std::vector<EmotionCausePair> pairs;
  for (int e : emotions)
    for (int c : causes)
      if (c - e >= spec.min_offset && c - e <= spec.max_offset)
        pairs.push_back({e, c});
  return {std::move(emotions), std::move(causes), std::move(pairs)};
}

}  // namespace ecpe
