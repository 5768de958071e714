#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ecpe/config.hpp"
#include "ecpe/corpus.hpp"
#include "ecpe/embedding.hpp"
#include "ecpe/error.hpp"
#include "ecpe/experiment.hpp"
#include "ecpe/kernels.hpp"
#include "ecpe/metrics.hpp"
#include "ecpe/model.hpp"
#include "ecpe/pairing.hpp"
#include "ecpe/synthgen.hpp"

namespace {

void apply_kernels(const std::string& choice) {
  using ecpe::kernels::Backend;
  Backend want = Backend::Auto;
  if (choice == "scalar") want = Backend::Scalar;
  else if (choice == "avx2") want = Backend::Avx2;
  const Backend got = ecpe::kernels::select(want);
  if (want == Backend::Avx2 && got != Backend::Avx2)
    std::cerr << "note: avx2 kernels unavailable, using "
              << ecpe::kernels::backend_name(got) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"two-step emotion-cause pair extraction"};
  app.require_subcommand(1);

  std::string kernels = "auto";
  app.add_option("--kernels", kernels, "compute backend (auto, scalar, avx2)")
      ->check(CLI::IsMember({"auto", "scalar", "avx2"}));

  auto* prep = app.add_subcommand(
      "prepare-corpus", "merge duplicate documents and validate annotations");
  std::string prep_in, prep_out;
  bool prep_stats = false;
  prep->add_option("--in", prep_in, "raw corpus (jsonl)")->required();
  prep->add_option("--out", prep_out, "merged corpus")->required();
  prep->add_flag("--stats", prep_stats, "print pair-count statistics");
  prep->callback([&] {
    apply_kernels(kernels);
    const ecpe::Corpus raw = ecpe::load_corpus(prep_in);
    const ecpe::Corpus merged = ecpe::merge_documents(raw);
    ecpe::save_corpus(merged, prep_out);
    std::cout << "merged " << raw.docs.size() << " documents into "
              << merged.docs.size() << '\n';
    if (prep_stats) std::cout << ecpe::format_stats(ecpe::corpus_stats(merged));
  });

  auto* synth = app.add_subcommand("synth", "generate a planted-cue corpus");
  std::string synth_spec, synth_out;
  synth->add_option("--spec", synth_spec, "generator spec (key = value)")->required();
  synth->add_option("--out", synth_out, "corpus to write")->required();
  synth->callback([&] {
    apply_kernels(kernels);
    const ecpe::SynthSpec spec = ecpe::SynthSpec::from_file(synth_spec);
    const ecpe::Corpus corpus = ecpe::generate_corpus(spec);
    ecpe::save_corpus(corpus, synth_out);
    std::cout << "wrote " << corpus.docs.size() << " documents\n";
  });

  auto* train = app.add_subcommand("train", "train a step-1 model");
  std::string train_model_s = "indep", train_config, train_corpus, train_emb;
  std::string train_out, train_filter_out, train_log;
  bool train_bound = false;
  train->add_option("--model", train_model_s, "indep, inter-ec, inter-ce")
      ->check(CLI::IsMember({"indep", "inter-ec", "inter-ce"}));
  train->add_flag("--bound", train_bound, "feed gold labels across sub-tasks");
  train->add_option("--config", train_config, "training config file");
  train->add_option("--corpus", train_corpus, "training corpus")->required();
  train->add_option("--embeddings", train_emb,
                    "word2vec text file (absent: random init)");
  train->add_option("--out", train_out, "checkpoint to write")->required();
  train->add_option("--filter-out", train_filter_out,
                    "also train the pair filter and write it here");
  train->add_option("--log", train_log, "per-epoch loss log (jsonl)");
  train->callback([&] {
    apply_kernels(kernels);
    ecpe::TrainConfig tc = train_config.empty()
                               ? ecpe::TrainConfig{}
                               : ecpe::TrainConfig::from_file(train_config);
    const ecpe::ModelKind kind = ecpe::model_kind_from_string(train_model_s);
    const ecpe::Corpus corpus = ecpe::load_corpus(train_corpus);
    if (corpus.docs.empty())
      throw ecpe::DataError("training corpus is empty: " + train_corpus);
    const ecpe::Vocabulary vocab = ecpe::build_vocab(corpus, tc.min_count);
    ecpe::Rng rng(tc.seed);
    const ecpe::EmbeddingTable table =
        train_emb.empty()
            ? ecpe::random_embeddings(vocab, tc.embedding_dim, rng)
            : ecpe::load_word_vectors(train_emb, vocab, tc.embedding_dim, rng);
    ecpe::StepOneModel model =
        ecpe::StepOneModel::create(kind, train_bound, tc, vocab, table, rng);

    std::ofstream log;
    std::ostream* log_p = nullptr;
    if (!train_log.empty()) {
      log.open(train_log);
      if (!log) throw ecpe::DataError("cannot write log file: " + train_log);
      log_p = &log;
    }
    const ecpe::TrainResult res = ecpe::train_model(model, corpus, log_p);
    ecpe::save_checkpoint(model, train_out);
    std::cout << "trained " << ecpe::to_string(kind)
              << (model.bound ? " (bound)" : "") << " for " << tc.epochs
              << " epochs, final loss " << res.log.back().loss << '\n';
    if (res.truncated_docs > 0)
      std::cout << "note: " << res.truncated_docs << " documents truncated to "
                << tc.max_clauses << " clauses\n";

    if (!train_filter_out.empty()) {
      const auto examples =
          ecpe::build_filter_examples(corpus, model, tc.filter_source, tc.filter_k);
      const ecpe::FilterModel filter = ecpe::train_filter(examples, tc);
      ecpe::save_filter(filter, train_filter_out);
      std::cout << "filter trained on " << examples.size() << " candidate pairs\n";
    }
  });

  auto* pair = app.add_subcommand("pair", "extract pairs with a trained model");
  std::string pair_step1, pair_filter, pair_in, pair_out;
  pair->add_option("--step1", pair_step1, "step-1 checkpoint")->required();
  pair->add_option("--filter", pair_filter, "pair filter (absent: keep all)");
  pair->add_option("--in", pair_in, "corpus to extract from")->required();
  pair->add_option("--out", pair_out, "pairs file to write")->required();
  pair->callback([&] {
    apply_kernels(kernels);
    ecpe::StepOneModel model = ecpe::load_checkpoint(pair_step1);
    ecpe::FilterModel filter;
    const bool filtered = !pair_filter.empty();
    if (filtered) filter = ecpe::load_filter(pair_filter);
    const ecpe::Corpus corpus = ecpe::load_corpus(pair_in);
    std::vector<ecpe::DocPairs> all;
    all.reserve(corpus.docs.size());
    std::size_t kept = 0, candidates = 0;
    for (const auto& doc : corpus.docs) {
      all.push_back(ecpe::extract_doc_pairs(model, filtered ? &filter : nullptr,
                                            doc, nullptr));
      kept += all.back().pairs.size();
      candidates += all.back().n_candidates;
    }
    ecpe::save_pairs(all, pair_out);
    std::cout << "kept " << kept << " of " << candidates << " candidate pairs\n";
  });

  auto* eval = app.add_subcommand("evaluate", "score a pairs file against gold");
  std::string eval_pred, eval_gold, eval_report;
  eval->add_option("--pred", eval_pred, "pairs file")->required();
  eval->add_option("--gold", eval_gold, "annotated corpus")->required();
  eval->add_option("--report", eval_report, "also write the report as json");
  eval->callback([&] {
    apply_kernels(kernels);
    const auto preds = ecpe::load_pairs(eval_pred);
    const ecpe::Corpus gold = ecpe::load_corpus(eval_gold);
    const ecpe::MetricsReport report = ecpe::evaluate_pairs(preds, gold);
    if (!eval_report.empty()) ecpe::save_report_json(report, eval_report);
    std::cout << ecpe::format_report(report);
  });

  auto* runex = app.add_subcommand("run-experiment",
                                   "split, train, filter, pair, score, n times");
  std::string runex_config;
  runex->add_option("--config", runex_config, "experiment config file")->required();
  runex->callback([&] {
    apply_kernels(kernels);
    const ecpe::ExperimentConfig config =
        ecpe::ExperimentConfig::from_file(runex_config);
    const ecpe::ExperimentResult result = ecpe::run_experiment(config, &std::cout);
    std::cout << "\nmean over " << result.completed << " runs (w/ filter):\n"
              << ecpe::format_report(result.with_filter.mean)
              << "artifacts under " << config.out_dir << '\n';
  });

  auto* tables = app.add_subcommand("reproduce-tables",
                                    "format result tables from experiment dirs");
  std::vector<std::string> table_dirs;
  std::string tables_out;
  tables->add_option("--experiment", table_dirs, "experiment directory (repeatable)")
      ->required();
  tables->add_option("--out", tables_out, "write tables here instead of stdout");
  tables->callback([&] {
    apply_kernels(kernels);
    const std::vector<std::filesystem::path> dirs(table_dirs.begin(),
                                                  table_dirs.end());
    const std::string text = ecpe::reproduce_tables(dirs);
    if (tables_out.empty()) {
      std::cout << text;
    } else {
      std::ofstream out(tables_out);
      out << text;
      if (!out) throw ecpe::DataError("cannot write " + tables_out);
    }
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const ecpe::DataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const ecpe::NumericError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
