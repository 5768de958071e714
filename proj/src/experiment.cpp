#include "ecpe/experiment.hpp"

#include <cstdio>
#include <exception>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>
#include <utility>

#include <json.hpp>

#include "ecpe/embedding.hpp"
#include "ecpe/error.hpp"
#include "ecpe/model.hpp"
#include "ecpe/rng.hpp"

namespace ecpe {

namespace fs = std::filesystem;
using nlohmann::json;

MetricsReport evaluate_pairs(const std::vector<DocPairs>& pred, const Corpus& gold) {
  std::unordered_map<std::string, const DocPairs*> by_id;
  for (const auto& dp : pred)
    if (!by_id.emplace(dp.doc_id, &dp).second)
      throw DataError("duplicate predictions for document '" + dp.doc_id + "'");

  std::unordered_set<std::string> known;
  std::vector<std::vector<EmotionCausePair>> prop_pairs, gold_pairs;
  std::vector<std::vector<int>> prop_e, gold_e, prop_c, gold_c;
  MetricsReport r;
  for (const auto& doc : gold.docs) {
    known.insert(doc.id);
    gold_pairs.push_back(doc.pairs);
    gold_e.push_back(doc.emotion_set());
    gold_c.push_back(doc.cause_set());
    const auto it = by_id.find(doc.id);
    if (it == by_id.end()) {
      prop_pairs.emplace_back();
      prop_e.emplace_back();
      prop_c.emplace_back();
      continue;
    }
    const DocPairs& dp = *it->second;
    std::vector<EmotionCausePair> pp;
    pp.reserve(dp.pairs.size());
    for (const auto& sp : dp.pairs) pp.push_back({sp.emotion, sp.cause});
    prop_pairs.push_back(std::move(pp));
    prop_e.push_back(dp.emotions);
    prop_c.push_back(dp.causes);
    r.kept_pairs += dp.pairs.size();
    r.candidate_pairs += dp.n_candidates;
  }
  for (const auto& dp : pred)
    if (!known.count(dp.doc_id))
      throw DataError("predictions for unknown document '" + dp.doc_id + "'");

  r.emotion_counts = count_clauses(prop_e, gold_e);
  r.cause_counts = count_clauses(prop_c, gold_c);
  r.pair_counts = count_pairs(prop_pairs, gold_pairs);
  r.keep_rate = r.candidate_pairs == 0
                    ? 1.0
                    : static_cast<double>(r.kept_pairs) /
                          static_cast<double>(r.candidate_pairs);
  r.recompute_prf();
  return r;
}

namespace {

std::string run_name(int k) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "run_%02d", k);
  return buf;
}

bool run_complete(const fs::path& dir, MetricsReport* wf, MetricsReport* nf) {
  try {
    *wf = load_report_json(dir / "report.json");
    *nf = load_report_json(dir / "report_nofilter.json");
    return true;
  } catch (const std::exception&) {
    return false;
  }
}

// The unfiltered output is the full candidate set, every pair scored 1.
DocPairs unfiltered_from(const DocPairs& filtered) {
  DocPairs out;
  out.doc_id = filtered.doc_id;
  out.emotions = filtered.emotions;
  out.causes = filtered.causes;
  out.n_candidates = filtered.n_candidates;
  for (const auto& pair : cartesian_pairs(filtered.emotions, filtered.causes))
    out.pairs.push_back({pair.emotion, pair.cause, 1.0});
  return out;
}

void run_one(const ExperimentConfig& config, int k, const fs::path& run_dir,
             const Corpus& corpus, RunOutcome& outcome) {
  TrainConfig tc = config.train;
  tc.seed = config.train.seed + static_cast<std::uint64_t>(k);

  auto [train_c, test_c] = split_corpus(corpus, config.split_ratio, tc.seed);
  if (train_c.docs.empty() || test_c.docs.empty())
    throw DataError("split leaves an empty side (" +
                    std::to_string(train_c.docs.size()) + " train / " +
                    std::to_string(test_c.docs.size()) + " test)");

  const Vocabulary vocab = build_vocab(train_c, tc.min_count);
  Rng rng(tc.seed);
  const EmbeddingTable table =
      config.embeddings_path.empty()
          ? random_embeddings(vocab, tc.embedding_dim, rng)
          : load_word_vectors(config.embeddings_path, vocab, tc.embedding_dim, rng);
  StepOneModel model =
      StepOneModel::create(config.kind, config.bound, tc, vocab, table, rng);

  const fs::path log_path = run_dir / "train_log.jsonl";
  std::ofstream log(log_path);
  if (!log) throw DataError("cannot write training log: " + log_path.string());
  train_model(model, train_c, &log);
  save_checkpoint(model, run_dir / "step1.ckpt");

  const auto examples =
      build_filter_examples(train_c, model, tc.filter_source, tc.filter_k);
  const FilterModel filter = train_filter(examples, tc);
  save_filter(filter, run_dir / "filter.ckpt");

  std::vector<DocPairs> with_filter, without_filter;
  with_filter.reserve(test_c.docs.size());
  without_filter.reserve(test_c.docs.size());
  for (const auto& doc : test_c.docs) {
    with_filter.push_back(extract_doc_pairs(model, &filter, doc, nullptr));
    without_filter.push_back(unfiltered_from(with_filter.back()));
  }
  save_pairs(without_filter, run_dir / "pairs_nofilter.jsonl");
  save_pairs(with_filter, run_dir / "pairs_filter.jsonl");

  outcome.without_filter = evaluate_pairs(without_filter, test_c);
  outcome.with_filter = evaluate_pairs(with_filter, test_c);
  for (MetricsReport* r : {&outcome.without_filter, &outcome.with_filter}) {
    r->run = k;
    r->seed = tc.seed;
  }
  save_report_json(outcome.without_filter, run_dir / "report_nofilter.json");
  save_report_json(outcome.with_filter, run_dir / "report.json");
}

json report_json(const MetricsReport& r) {
  auto prf_j = [](const PRF& v) { return json{{"p", v.p}, {"r", v.r}, {"f1", v.f1}}; };
  auto counts_j = [](const TaskCounts& c) {
    return json{{"correct", c.correct},
                {"proposed", c.proposed},
                {"annotated", c.annotated}};
  };
  json j;
  j["emotion"] = prf_j(r.emotion);
  j["cause"] = prf_j(r.cause);
  j["pair"] = prf_j(r.pair);
  j["emotion_counts"] = counts_j(r.emotion_counts);
  j["cause_counts"] = counts_j(r.cause_counts);
  j["pair_counts"] = counts_j(r.pair_counts);
  j["keep_rate"] = r.keep_rate;
  j["kept_pairs"] = r.kept_pairs;
  j["candidate_pairs"] = r.candidate_pairs;
  return j;
}

MetricsReport report_from_json(const json& j) {
  auto prf_f = [](const json& v) {
    return PRF{v.at("p").get<double>(), v.at("r").get<double>(),
               v.at("f1").get<double>()};
  };
  auto counts_f = [](const json& v) {
    TaskCounts c;
    c.correct = v.at("correct").get<std::size_t>();
    c.proposed = v.at("proposed").get<std::size_t>();
    c.annotated = v.at("annotated").get<std::size_t>();
    return c;
  };
  MetricsReport r;
  r.emotion = prf_f(j.at("emotion"));
  r.cause = prf_f(j.at("cause"));
  r.pair = prf_f(j.at("pair"));
  r.emotion_counts = counts_f(j.at("emotion_counts"));
  r.cause_counts = counts_f(j.at("cause_counts"));
  r.pair_counts = counts_f(j.at("pair_counts"));
  r.keep_rate = j.at("keep_rate").get<double>();
  r.kept_pairs = j.at("kept_pairs").get<std::size_t>();
  r.candidate_pairs = j.at("candidate_pairs").get<std::size_t>();
  return r;
}

void save_aggregate(const AggregateReport& agg, int n_requested,
                    const fs::path& path) {
  json j;
  j["n_runs"] = agg.n_runs;
  j["n_requested"] = n_requested;
  j["mean"] = report_json(agg.mean);
  j["stddev"] = report_json(agg.stddev);
  j["pooled"] = report_json(agg.pooled);
  std::ofstream out(path);
  if (!out) throw DataError("cannot write aggregate file: " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw DataError("failed writing aggregate file: " + path.string());
}

AggregateReport load_aggregate(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open aggregate file: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw DataError(path.string() + ": invalid aggregate JSON: " + e.what());
  }
  try {
    AggregateReport agg;
    agg.n_runs = j.at("n_runs").get<int>();
    agg.mean = report_from_json(j.at("mean"));
    agg.stddev = report_from_json(j.at("stddev"));
    agg.pooled = report_from_json(j.at("pooled"));
    return agg;
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": bad aggregate contents: " + e.what());
  }
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config,
                                std::ostream* progress) {
  config.validate();
  const Corpus corpus = load_corpus(config.corpus_path);
  if (corpus.docs.empty())
    throw DataError("experiment corpus is empty: " + config.corpus_path);

  const fs::path out_dir(config.out_dir);
  fs::create_directories(out_dir / "runs");
  {
    const fs::path cfg_path = out_dir / "config.resolved";
    std::ofstream cfg(cfg_path);
    cfg << config.to_kv_text();
    if (!cfg) throw DataError("cannot write " + cfg_path.string());
  }

  ExperimentResult result;
  std::vector<MetricsReport> done_wf, done_nf;
  for (int k = 1; k <= config.n_runs; ++k) {
    RunOutcome outcome;
    outcome.run = k;
    const fs::path run_dir = out_dir / "runs" / run_name(k);
    fs::create_directories(run_dir);
    if (run_complete(run_dir, &outcome.with_filter, &outcome.without_filter)) {
      outcome.completed = true;
      if (progress) *progress << run_name(k) << ": already complete, skipping\n";
    } else {
      try {
        run_one(config, k, run_dir, corpus, outcome);
        outcome.completed = true;
        if (progress)
          *progress << run_name(k) << ": pair F1 "
                    << std::fixed << std::setprecision(4)
                    << outcome.without_filter.pair.f1 << " w/o filter, "
                    << outcome.with_filter.pair.f1 << " w/ filter (keep_rate "
                    << outcome.with_filter.keep_rate << ")\n";
      } catch (const std::exception& e) {
        outcome.error = e.what();
        std::ofstream fail(run_dir / "failed.txt");
        fail << e.what() << '\n';
        if (progress) *progress << run_name(k) << " failed: " << e.what() << '\n';
      }
    }
    if (outcome.completed) {
      done_wf.push_back(outcome.with_filter);
      done_nf.push_back(outcome.without_filter);
      ++result.completed;
    }
    result.runs.push_back(std::move(outcome));
  }

  if (result.completed == 0)
    throw DataError("all " + std::to_string(config.n_runs) +
                    " runs failed; see failed.txt under " +
                    (out_dir / "runs").string());
  if (result.completed < config.n_runs && progress)
    *progress << "warning: aggregate covers " << result.completed << " of "
              << config.n_runs << " runs\n";

  result.with_filter = aggregate_runs(done_wf);
  result.without_filter = aggregate_runs(done_nf);
  save_aggregate(result.with_filter, config.n_runs, out_dir / "aggregate.json");
  save_aggregate(result.without_filter, config.n_runs,
                 out_dir / "aggregate_nofilter.json");

  {
    const fs::path txt_path = out_dir / "aggregate.txt";
    std::ofstream txt(txt_path);
    if (!txt) throw DataError("cannot write " + txt_path.string());
    txt << "model: " << to_string(config.kind) << (config.bound ? " (bound)" : "")
        << "\nruns completed: " << result.completed << " of " << config.n_runs
        << "\n\nmean over runs (w/ filter):\n"
        << format_report(result.with_filter.mean)
        << "\npooled counts (w/ filter):\n"
        << format_report(result.with_filter.pooled) << "\npair F1 stddev: "
        << std::fixed << std::setprecision(4)
        << result.with_filter.stddev.pair.f1 << "\n\n"
        << ablation_table(to_string(config.kind), config.bound,
                          result.without_filter.mean, result.with_filter.mean);
    if (!txt) throw DataError("failed writing " + txt_path.string());
  }
  return result;
}

namespace {

struct ExpRow {
  std::string label;  // directory name, used when the aggregate is unreadable
  bool ok = false;
  bool bound = false;
  std::string model;
  MetricsReport mean_wf, mean_nf;
};

void extraction_row(std::ostream& out, const std::string& name,
                    const ExpRow& row) {
  out << std::left << std::setw(14) << name;
  if (!row.ok) {
    out << "  (absent)\n";
    return;
  }
  out << std::right << std::fixed << std::setprecision(4);
  for (const PRF* task : {&row.mean_wf.emotion, &row.mean_wf.cause, &row.mean_wf.pair})
    out << std::setw(8) << task->p << std::setw(8) << task->r << std::setw(8)
        << task->f1;
  out << '\n';
}

}  // namespace

std::string reproduce_tables(const std::vector<std::filesystem::path>& dirs) {
  std::vector<ExpRow> rows;
  for (const auto& dir : dirs) {
    ExpRow row;
    row.label = dir.filename().empty() ? dir.string() : dir.filename().string();
    try {
      const ExperimentConfig cfg =
          ExperimentConfig::from_file(dir / "config.resolved");
      row.model = to_string(cfg.kind);
      row.bound = cfg.bound;
      row.mean_wf = load_aggregate(dir / "aggregate.json").mean;
      row.mean_nf = load_aggregate(dir / "aggregate_nofilter.json").mean;
      row.ok = true;
    } catch (const std::exception&) {
      row.ok = false;
    }
    rows.push_back(std::move(row));
  }

  std::ostringstream out;
  auto header = [&out] {
    out << std::left << std::setw(14) << "model" << std::right;
    for (const char* col : {"emo_P", "emo_R", "emo_F1", "cau_P", "cau_R",
                            "cau_F1", "pair_P", "pair_R", "pair_F1"})
      out << std::setw(8) << col;
    out << '\n';
  };

  out << "extraction results (mean over runs)\n";
  header();
  for (const auto& row : rows)
    if (!row.ok || !row.bound)
      extraction_row(out, row.ok ? row.model : row.label, row);

  out << "\nwith gold labels fed across sub-tasks (# rows)\n";
  header();
  for (const auto& row : rows)
    extraction_row(out, row.ok ? (row.bound ? "#" + row.model : row.model) : row.label,
                   row);

  out << "\npair filter ablation (mean over runs)\n"
      << std::left << std::setw(26) << "model" << std::right << std::setw(8) << "P"
      << std::setw(8) << "R" << std::setw(8) << "F1" << std::setw(11)
      << "keep_rate" << '\n';
  for (const auto& row : rows) {
    if (row.ok && row.bound) continue;
    if (!row.ok) {
      out << std::left << std::setw(26) << row.label << "  (absent)\n";
      continue;
    }
    auto line = [&](const std::string& label, const MetricsReport& r) {
      out << std::left << std::setw(26) << label << std::right << std::fixed
          << std::setprecision(4) << std::setw(8) << r.pair.p << std::setw(8)
          << r.pair.r << std::setw(8) << r.pair.f1 << std::setw(11) << r.keep_rate
          << '\n';
    };
    line(row.model + " w/o filter", row.mean_nf);
    line(row.model + " w/ filter", row.mean_wf);
  }
  return out.str();
}

}  // namespace ecpe
