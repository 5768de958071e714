#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "ecpe/error.hpp"
#include "ecpe/experiment.hpp"
#include "ecpe/synthgen.hpp"
#include "test_util.hpp"

using namespace ecpe;
namespace fs = std::filesystem;
using test_util::temp_dir;

namespace {

Document gold_doc(const std::string& id, int n_clauses,
                  std::vector<EmotionCausePair> pairs) {
  Document d;
  d.id = id;
  for (int i = 0; i < n_clauses; ++i) d.clauses.push_back({{"tok", "x"}});
  d.pairs = std::move(pairs);
  validate_document(d);
  return d;
}

DocPairs pred(const std::string& id, std::vector<ScoredPair> pairs,
              std::size_t candidates) {
  DocPairs p;
  p.doc_id = id;
  p.pairs = std::move(pairs);
  p.n_candidates = candidates;
  for (const ScoredPair& sp : p.pairs) {
    p.emotions.push_back(sp.emotion);
    p.causes.push_back(sp.cause);
  }
  return p;
}

ExperimentConfig small_experiment(const fs::path& dir, int n_runs) {
  SynthSpec s;
  s.n_docs = 24;
  s.clauses_min = 3;
  s.clauses_max = 5;
  s.clause_len_min = 3;
  s.clause_len_max = 5;
  s.vocab_size = 12;
  s.min_offset = -1;
  s.max_offset = 0;
  s.seed = 5;
  save_corpus(generate_corpus(s), dir / "corpus.jsonl");

  ExperimentConfig cfg;
  cfg.kind = ModelKind::Indep;
  cfg.n_runs = n_runs;
  cfg.split_ratio = 0.75;
  cfg.corpus_path = (dir / "corpus.jsonl").string();
  cfg.out_dir = (dir / "exp").string();
  cfg.train.epochs = 2;
  cfg.train.batch_size = 4;
  cfg.train.hidden = 3;
  cfg.train.embedding_dim = 4;
  cfg.train.d_lab = 2;
  cfg.train.max_len = 6;
  cfg.train.max_clauses = 6;
  cfg.train.filter_epochs = 40;
  cfg.train.filter_k = 4;
  cfg.train.seed = 100;
  return cfg;
}

}  // namespace

TEST_CASE("evaluate_pairs scores predictions against annotations") {
  Corpus gold;
  gold.docs.push_back(gold_doc("a", 4, {{2, 1}, {2, 2}}));
  gold.docs.push_back(gold_doc("b", 3, {{1, 3}}));
  gold.docs.push_back(gold_doc("c", 3, {{2, 2}}));  // no prediction record

  std::vector<DocPairs> preds;
  preds.push_back(pred("a", {{2, 1, 0.9}, {3, 1, 0.8}}, 4));
  preds.push_back(pred("b", {{1, 3, 0.7}}, 1));

  const MetricsReport r = evaluate_pairs(preds, gold);
  CHECK(r.pair_counts.correct == 2);    // (2,1) in a, (1,3) in b
  CHECK(r.pair_counts.proposed == 3);
  CHECK(r.pair_counts.annotated == 4);  // c still counts
  CHECK(r.pair.p == doctest::Approx(2.0 / 3.0));
  CHECK(r.pair.r == doctest::Approx(0.5));

  // emotion sets: a {2,3} vs {2}; b {1} vs {1}; c {} vs {2}
  CHECK(r.emotion_counts.correct == 2);
  CHECK(r.emotion_counts.proposed == 3);
  CHECK(r.emotion_counts.annotated == 3);

  CHECK(r.kept_pairs == 3);
  CHECK(r.candidate_pairs == 5);
  CHECK(r.keep_rate == doctest::Approx(0.6));
}

TEST_CASE("evaluate_pairs rejects duplicate and unknown documents") {
  Corpus gold;
  gold.docs.push_back(gold_doc("a", 3, {{2, 1}}));

  std::vector<DocPairs> dup;
  dup.push_back(pred("a", {}, 0));
  dup.push_back(pred("a", {}, 0));
  CHECK_THROWS_AS(evaluate_pairs(dup, gold), DataError);

  std::vector<DocPairs> unknown;
  unknown.push_back(pred("ghost", {}, 0));
  try {
    evaluate_pairs(unknown, gold);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("ghost") != std::string::npos);
  }
}

TEST_CASE("evaluate_pairs with no candidates reports keep_rate 1") {
  Corpus gold;
  gold.docs.push_back(gold_doc("a", 3, {{2, 1}}));
  const MetricsReport r = evaluate_pairs({}, gold);
  CHECK(r.keep_rate == 1.0);
  CHECK(r.pair.r == 0.0);
}

TEST_CASE("run_experiment writes every artifact and resumes cleanly") {
  const fs::path dir = temp_dir("exp_artifacts");
  const ExperimentConfig cfg = small_experiment(dir, 2);

  std::ostringstream progress;
  const ExperimentResult res = run_experiment(cfg, &progress);
  CHECK(res.completed == 2);
  REQUIRE(res.runs.size() == 2);
  CHECK(res.runs[0].completed);
  CHECK(res.runs[1].completed);

  const fs::path out = cfg.out_dir;
  CHECK(fs::exists(out / "config.resolved"));
  CHECK(fs::exists(out / "aggregate.json"));
  CHECK(fs::exists(out / "aggregate_nofilter.json"));
  CHECK(fs::exists(out / "aggregate.txt"));
  for (const char* run : {"run_01", "run_02"}) {
    CAPTURE(run);
    const fs::path rd = out / "runs" / run;
    CHECK(fs::exists(rd / "step1.ckpt"));
    CHECK(fs::exists(rd / "filter.ckpt"));
    CHECK(fs::exists(rd / "train_log.jsonl"));
    CHECK(fs::exists(rd / "pairs_filter.jsonl"));
    CHECK(fs::exists(rd / "pairs_nofilter.jsonl"));
    CHECK(fs::exists(rd / "report.json"));
    CHECK(fs::exists(rd / "report_nofilter.json"));
    CHECK_FALSE(fs::exists(rd / "failed.txt"));
  }

  // distinct seeds per run
  const MetricsReport r1 = load_report_json(out / "runs/run_01/report.json");
  const MetricsReport r2 = load_report_json(out / "runs/run_02/report.json");
  CHECK(r1.seed == cfg.train.seed + 1);
  CHECK(r2.seed == cfg.train.seed + 2);
  CHECK(r1.run == 1);

  // a second invocation skips every completed run without touching it
  const auto stamp = fs::last_write_time(out / "runs/run_01/step1.ckpt");
  std::ostringstream again;
  const ExperimentResult res2 = run_experiment(cfg, &again);
  CHECK(res2.completed == 2);
  CHECK(again.str().find("already complete") != std::string::npos);
  CHECK(fs::last_write_time(out / "runs/run_01/step1.ckpt") == stamp);

  // deleting one report forces exactly that run to rerun
  fs::remove(out / "runs/run_02/report.json");
  std::ostringstream third;
  const ExperimentResult res3 = run_experiment(cfg, &third);
  CHECK(res3.completed == 2);
  CHECK(third.str().find("run_01: already complete") != std::string::npos);
  CHECK(third.str().find("run_02: already complete") == std::string::npos);
  CHECK(fs::exists(out / "runs/run_02/report.json"));
}

TEST_CASE("experiments rerun to identical aggregates") {
  const fs::path dir = temp_dir("exp_deterministic");
  ExperimentConfig cfg = small_experiment(dir, 1);

  run_experiment(cfg, nullptr);
  std::ifstream f1(fs::path(cfg.out_dir) / "aggregate.json");
  std::stringstream s1;
  s1 << f1.rdbuf();

  fs::remove_all(cfg.out_dir);
  run_experiment(cfg, nullptr);
  std::ifstream f2(fs::path(cfg.out_dir) / "aggregate.json");
  std::stringstream s2;
  s2 << f2.rdbuf();

  CHECK(s1.str() == s2.str());
  CHECK(!s1.str().empty());
}

TEST_CASE("single-run aggregates mirror the run report") {
  const fs::path dir = temp_dir("exp_single");
  const ExperimentConfig cfg = small_experiment(dir, 1);
  const ExperimentResult res = run_experiment(cfg, nullptr);

  REQUIRE(res.completed == 1);
  CHECK(res.with_filter.n_runs == 1);
  CHECK(res.with_filter.mean.pair.f1 ==
        doctest::Approx(res.runs[0].with_filter.pair.f1));
  CHECK(res.with_filter.stddev.pair.f1 == doctest::Approx(0.0));
  CHECK(res.without_filter.mean.pair.f1 ==
        doctest::Approx(res.runs[0].without_filter.pair.f1));
}

TEST_CASE("reproduce_tables renders present and absent experiments") {
  const fs::path dir = temp_dir("exp_tables");
  const ExperimentConfig cfg = small_experiment(dir, 1);
  run_experiment(cfg, nullptr);

  const std::string text =
      reproduce_tables({fs::path(cfg.out_dir), dir / "never_ran"});
  CHECK(text.find("extraction results") != std::string::npos);
  CHECK(text.find("pair filter ablation") != std::string::npos);
  CHECK(text.find("indep") != std::string::npos);
  CHECK(text.find("never_ran") != std::string::npos);
  CHECK(text.find("(absent)") != std::string::npos);
  CHECK(text.find("w/o filter") != std::string::npos);
}
