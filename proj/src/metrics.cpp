#include "ecpe/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "ecpe/error.hpp"

namespace ecpe {

using nlohmann::json;

TaskCounts& TaskCounts::operator+=(const TaskCounts& o) {
  correct += o.correct;
  proposed += o.proposed;
  annotated += o.annotated;
  return *this;
}

PRF prf(const TaskCounts& c) {
  PRF out;
  if (c.proposed > 0)
    out.p = static_cast<double>(c.correct) / static_cast<double>(c.proposed);
  if (c.annotated > 0)
    out.r = static_cast<double>(c.correct) / static_cast<double>(c.annotated);
  if (out.p + out.r > 0.0) out.f1 = 2.0 * out.p * out.r / (out.p + out.r);
  return out;
}

namespace {

template <class T>
TaskCounts count_sets(const std::vector<std::vector<T>>& proposed,
                      const std::vector<std::vector<T>>& annotated) {
  if (proposed.size() != annotated.size())
    throw DataError("metric inputs differ in document count");
  TaskCounts c;
  for (std::size_t d = 0; d < proposed.size(); ++d) {
    std::vector<T> p = proposed[d], a = annotated[d];
    std::sort(p.begin(), p.end());
    p.erase(std::unique(p.begin(), p.end()), p.end());
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
    c.proposed += p.size();
    c.annotated += a.size();
    std::vector<T> both;
    std::set_intersection(p.begin(), p.end(), a.begin(), a.end(),
                          std::back_inserter(both));
    c.correct += both.size();
  }
  return c;
}

}  // namespace

TaskCounts count_pairs(const std::vector<std::vector<EmotionCausePair>>& proposed,
                       const std::vector<std::vector<EmotionCausePair>>& annotated) {
  return count_sets(proposed, annotated);
}

TaskCounts count_clauses(const std::vector<std::vector<int>>& proposed,
                         const std::vector<std::vector<int>>& annotated) {
  return count_sets(proposed, annotated);
}

PRF pair_prf(const std::vector<std::vector<EmotionCausePair>>& proposed,
             const std::vector<std::vector<EmotionCausePair>>& annotated) {
  return prf(count_pairs(proposed, annotated));
}

PRF clause_prf(const std::vector<std::vector<int>>& proposed,
               const std::vector<std::vector<int>>& annotated) {
  return prf(count_clauses(proposed, annotated));
}

void MetricsReport::recompute_prf() {
  emotion = prf(emotion_counts);
  cause = prf(cause_counts);
  pair = prf(pair_counts);
}

AggregateReport aggregate_runs(const std::vector<MetricsReport>& runs) {
  if (runs.empty()) throw DataError("aggregate_runs needs at least one report");
  AggregateReport agg;
  agg.n_runs = static_cast<int>(runs.size());
  const double n = static_cast<double>(runs.size());

  auto fields = [](MetricsReport& r) {
    return std::vector<double*>{&r.emotion.p, &r.emotion.r, &r.emotion.f1,
                                &r.cause.p,   &r.cause.r,   &r.cause.f1,
                                &r.pair.p,    &r.pair.r,    &r.pair.f1,
                                &r.keep_rate};
  };
  auto fields_const = [&](const MetricsReport& r) {
    return fields(const_cast<MetricsReport&>(r));
  };

  std::vector<double*> mean_f = fields(agg.mean);
  std::vector<double*> std_f = fields(agg.stddev);
  for (double* f : mean_f) *f = 0.0;
  for (double* f : std_f) *f = 0.0;
  for (const auto& run : runs) {
    const auto run_f = fields_const(run);
    for (std::size_t i = 0; i < run_f.size(); ++i) *mean_f[i] += *run_f[i] / n;
  }
  for (const auto& run : runs) {
    const auto run_f = fields_const(run);
    for (std::size_t i = 0; i < run_f.size(); ++i) {
      const double d = *run_f[i] - *mean_f[i];
      *std_f[i] += d * d / n;
    }
  }
  for (double* f : std_f) *f = std::sqrt(*f);

  for (const auto& run : runs) {
    agg.pooled.emotion_counts += run.emotion_counts;
    agg.pooled.cause_counts += run.cause_counts;
    agg.pooled.pair_counts += run.pair_counts;
    agg.pooled.kept_pairs += run.kept_pairs;
    agg.pooled.candidate_pairs += run.candidate_pairs;
    agg.mean.kept_pairs += run.kept_pairs;
    agg.mean.candidate_pairs += run.candidate_pairs;
  }
  agg.pooled.recompute_prf();
  agg.pooled.keep_rate = agg.pooled.candidate_pairs
                             ? static_cast<double>(agg.pooled.kept_pairs) /
                                   static_cast<double>(agg.pooled.candidate_pairs)
                             : 1.0;
  return agg;
}

namespace {

void prf_row(std::ostringstream& out, const std::string& label, const PRF& v) {
  out << std::left << std::setw(22) << label << std::right << std::fixed
      << std::setprecision(4) << std::setw(8) << v.p << std::setw(8) << v.r
      << std::setw(8) << v.f1 << '\n';
}

}  // namespace

std::string format_report(const MetricsReport& report) {
  std::ostringstream out;
  out << std::left << std::setw(22) << "task" << std::right << std::setw(8) << "P"
      << std::setw(8) << "R" << std::setw(8) << "F1" << '\n';
  prf_row(out, "emotion extraction", report.emotion);
  prf_row(out, "cause extraction", report.cause);
  prf_row(out, "pair extraction", report.pair);
  out << std::left << std::setw(22) << "keep_rate" << std::right << std::fixed
      << std::setprecision(4) << std::setw(8) << report.keep_rate << '\n';
  return out.str();
}

std::string ablation_table(const std::string& model_name, bool bound,
                           const MetricsReport& without_filter,
                           const MetricsReport& with_filter) {
  const std::string name = (bound ? "#" : "") + model_name;
  std::ostringstream out;
  out << std::left << std::setw(26) << "model" << std::right << std::setw(8) << "P"
      << std::setw(8) << "R" << std::setw(8) << "F1" << std::setw(11)
      << "keep_rate" << '\n';
  auto row = [&](const std::string& label, const MetricsReport& r) {
    out << std::left << std::setw(26) << label << std::right << std::fixed
        << std::setprecision(4) << std::setw(8) << r.pair.p << std::setw(8)
        << r.pair.r << std::setw(8) << r.pair.f1 << std::setw(11) << r.keep_rate
        << '\n';
  };
  row(name + " w/o filter", without_filter);
  row(name + " w/ filter", with_filter);
  return out.str();
}

namespace {

json prf_json(const PRF& v) { return {{"p", v.p}, {"r", v.r}, {"f1", v.f1}}; }
json counts_json(const TaskCounts& c) {
  return {{"correct", c.correct}, {"proposed", c.proposed}, {"annotated", c.annotated}};
}

PRF prf_from_json(const json& j) {
  return {j.at("p").get<double>(), j.at("r").get<double>(), j.at("f1").get<double>()};
}

TaskCounts counts_from_json(const json& j) {
  TaskCounts c;
  c.correct = j.at("correct").get<std::size_t>();
  c.proposed = j.at("proposed").get<std::size_t>();
  c.annotated = j.at("annotated").get<std::size_t>();
  return c;
}

}  // namespace

void save_report_json(const MetricsReport& r, const std::filesystem::path& path) {
  json j;
  j["emotion"] = prf_json(r.emotion);
  j["cause"] = prf_json(r.cause);
  j["pair"] = prf_json(r.pair);
  j["emotion_counts"] = counts_json(r.emotion_counts);
  j["cause_counts"] = counts_json(r.cause_counts);
  j["pair_counts"] = counts_json(r.pair_counts);
  j["keep_rate"] = r.keep_rate;
  j["kept_pairs"] = r.kept_pairs;
  j["candidate_pairs"] = r.candidate_pairs;
  j["run"] = r.run;
  j["seed"] = r.seed;
  std::ofstream out(path);
  if (!out) throw DataError("cannot write report file: " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw DataError("failed writing report file: " + path.string());
}

MetricsReport load_report_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open report file: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw DataError(path.string() + ": invalid report JSON: " + e.what());
  }
  try {
    MetricsReport r;
    r.emotion = prf_from_json(j.at("emotion"));
    r.cause = prf_from_json(j.at("cause"));
    r.pair = prf_from_json(j.at("pair"));
    r.emotion_counts = counts_from_json(j.at("emotion_counts"));
    r.cause_counts = counts_from_json(j.at("cause_counts"));
    r.pair_counts = counts_from_json(j.at("pair_counts"));
    r.keep_rate = j.at("keep_rate").get<double>();
    r.kept_pairs = j.at("kept_pairs").get<std::size_t>();
    r.candidate_pairs = j.at("candidate_pairs").get<std::size_t>();
    r.run = j.value("run", 0);
    r.seed = j.value("seed", std::uint64_t{0});
    return r;
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": bad report contents: " + e.what());
  }
}

}  // namespace ecpe
