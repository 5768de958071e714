#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ecpe/corpus.hpp"

namespace ecpe {

struct PRF {
  double p = 0.0, r = 0.0, f1 = 0.0;
};

// Micro counts over a corpus: correct = sum of per-document intersection
// sizes, proposed / annotated = global sums.
struct TaskCounts {
  std::size_t correct = 0, proposed = 0, annotated = 0;

  TaskCounts& operator+=(const TaskCounts& o);
};

// P = correct/proposed, R = correct/annotated (0 on zero denominators),
// F1 = 2PR/(P+R) (0 when P+R = 0).
PRF prf(const TaskCounts& counts);

// Inputs are aligned per document; each inner vector is treated as a set.
TaskCounts count_pairs(const std::vector<std::vector<EmotionCausePair>>& proposed,
                       const std::vector<std::vector<EmotionCausePair>>& annotated);
TaskCounts count_clauses(const std::vector<std::vector<int>>& proposed,
                         const std::vector<std::vector<int>>& annotated);

PRF pair_prf(const std::vector<std::vector<EmotionCausePair>>& proposed,
             const std::vector<std::vector<EmotionCausePair>>& annotated);
PRF clause_prf(const std::vector<std::vector<int>>& proposed,
               const std::vector<std::vector<int>>& annotated);

struct MetricsReport {
  PRF emotion, cause, pair;
  TaskCounts emotion_counts, cause_counts, pair_counts;
  double keep_rate = 1.0;
  std::size_t kept_pairs = 0, candidate_pairs = 0;
  int run = 0;
  std::uint64_t seed = 0;

  void recompute_prf();  // fills the PRF fields from the counts
};

// Field-wise mean and standard deviation (population) across runs, plus the
// micro scores of the summed counts. Mean-of-runs is the headline number;
// the pooled variant is reported alongside, labeled as such.
struct AggregateReport {
  int n_runs = 0;
  MetricsReport mean;
  MetricsReport stddev;
  MetricsReport pooled;
};

AggregateReport aggregate_runs(const std::vector<MetricsReport>& runs);

// Table with one row per task (emotion, cause, pair) and P/R/F1 columns.
std::string format_report(const MetricsReport& report);
// Two-column comparison of the same model without and with the pair filter,
// plus the keep_rate. Bound rows are prefixed with '#'.
std::string ablation_table(const std::string& model_name, bool bound,
                           const MetricsReport& without_filter,
                           const MetricsReport& with_filter);

void save_report_json(const MetricsReport& report, const std::filesystem::path& path);
MetricsReport load_report_json(const std::filesystem::path& path);

}  // namespace ecpe
