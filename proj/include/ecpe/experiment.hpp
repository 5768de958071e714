#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "ecpe/config.hpp"
#include "ecpe/corpus.hpp"
#include "ecpe/metrics.hpp"
#include "ecpe/pairing.hpp"

namespace ecpe {

// Scores a pairs file against corpus annotations. Documents without a
// prediction record count as empty extractions; predictions for documents
// absent from the corpus are an error. keep_rate pools kept pairs over
// candidates across the whole corpus.
MetricsReport evaluate_pairs(const std::vector<DocPairs>& pred, const Corpus& gold);

struct RunOutcome {
  int run = 0;
  bool completed = false;
  std::string error;  // set when the run failed
  MetricsReport with_filter, without_filter;
};

struct ExperimentResult {
  std::vector<RunOutcome> runs;
  int completed = 0;
  AggregateReport with_filter;
  AggregateReport without_filter;
};

// Full pipeline, n_runs times under seeds base+1..base+n: split, train the
// step-1 model, train the filter, extract pairs with and without it, score
// everything against the held-out split. All artifacts land under
// config.out_dir; runs whose reports already parse are skipped, so an
// interrupted experiment resumes where it stopped. A failed run leaves
// failed.txt in its directory and is excluded from the aggregate; every run
// failing is an error.
ExperimentResult run_experiment(const ExperimentConfig& config,
                                std::ostream* progress);

// Formats extraction, gold-label-bound, and filter-ablation tables from
// completed experiment directories. Directories without a readable
// aggregate get a row flagged (absent).
std::string reproduce_tables(const std::vector<std::filesystem::path>& dirs);

}  // namespace ecpe
