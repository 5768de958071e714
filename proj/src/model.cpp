#include "ecpe/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <ostream>

#include <json.hpp>

#include "ecpe/error.hpp"
#include "ecpe/kernels.hpp"

namespace ecpe {

using kernels::active;

void Branch::init(const std::string& prefix, int two_h, int extra, int h, Rng& rng) {
  clause.init(prefix + "_clause", two_h + extra, h, rng);
  head.init(prefix + "_head", 2 * h, 2, rng);
}

void Branch::collect(std::vector<Param*>& out) {
  clause.collect(out);
  head.collect(out);
}

GoldLabels gold_labels(const Document& doc) {
  GoldLabels g;
  g.emotion.assign(doc.clauses.size(), 0);
  g.cause.assign(doc.clauses.size(), 0);
  for (int i : doc.emotion_set()) g.emotion[static_cast<std::size_t>(i - 1)] = 1;
  for (int i : doc.cause_set()) g.cause[static_cast<std::size_t>(i - 1)] = 1;
  return g;
}

double joint_loss(double loss_e, double loss_c, double lambda) {
  return lambda * loss_e + (1.0 - lambda) * loss_c;
}

StepOneModel StepOneModel::create(ModelKind kind, bool bound,
                                  const TrainConfig& config,
                                  const Vocabulary& vocab,
                                  const EmbeddingTable& table, Rng& rng) {
  StepOneModel m;
  m.kind = kind;
  m.bound = bound && kind != ModelKind::Indep;
  m.config = config;
  m.config.embedding_dim = table.dim();
  m.vocab = vocab;
  m.embedding_trainable = table.trainable;

  if (table.rows.rows != static_cast<std::size_t>(vocab.size()))
    throw DataError("embedding table has " + std::to_string(table.rows.rows) +
                    " rows for a vocabulary of " + std::to_string(vocab.size()));
  m.embedding = Param("embedding", static_cast<std::size_t>(vocab.size()),
                      static_cast<std::size_t>(table.dim()));
  m.embedding.value = table.rows;

  const int h = config.hidden;
  m.word.init("word", table.dim(), h, rng);
  m.attn.init("attn", 2 * h, rng);
  if (m.has_label_emb()) {
    m.label_emb = Param("label_emb", 2, static_cast<std::size_t>(config.d_lab));
    init_uniform(m.label_emb, rng);
  }
  const int extra_e = (kind == ModelKind::InterCE) ? config.d_lab : 0;
  const int extra_c = (kind == ModelKind::InterEC) ? config.d_lab : 0;
  m.emo.init("e", 2 * h, extra_e, h, rng);
  m.cau.init("c", 2 * h, extra_c, h, rng);
  return m;
}

std::vector<Param*> StepOneModel::params() {
  std::vector<Param*> out;
  out.push_back(&embedding);
  word.collect(out);
  attn.collect(out);
  if (has_label_emb()) out.push_back(&label_emb);
  emo.collect(out);
  cau.collect(out);
  return out;
}

std::vector<Param*> StepOneModel::trainable_params() {
  std::vector<Param*> out = params();
  if (!embedding_trainable)
    out.erase(std::remove(out.begin(), out.end(), &embedding), out.end());
  return out;
}

namespace {

void run_branch(const Branch& branch, const Mat& in, int T, BiLstmCache& cache,
                Mat& probs) {
  bilstm_forward(branch.clause, in, T, cache);
  probs = Mat(static_cast<std::size_t>(T), 2);
  for (int i = 0; i < T; ++i)
    softmax_head(branch.head, cache.out.row(static_cast<std::size_t>(i)),
                 probs.row(static_cast<std::size_t>(i)));
}

int argmax2(const double* p) { return p[1] > p[0] ? 1 : 0; }

double sq_norm(const Mat& m) {
  return active().dot(m.data(), m.data(), m.size());
}

}  // namespace

DocForward StepOneModel::forward_doc(const Document& doc, const GoldLabels* gold,
                                     Rng* rng) const {
  const int T = static_cast<int>(doc.clauses.size());
  if (T < 1) throw DataError("document '" + doc.id + "' has no clauses");
  if (bound && !gold)
    throw DataError("bound model needs annotated input (document '" + doc.id + "')");

  const int h = config.hidden;
  const std::size_t two_h = 2 * static_cast<std::size_t>(h);
  const int d_w = static_cast<int>(embedding.value.cols);
  const std::size_t d_lab = static_cast<std::size_t>(config.d_lab);

  DocForward f;
  f.T = T;
  f.ids.resize(static_cast<std::size_t>(T));
  f.x.resize(static_cast<std::size_t>(T));
  if (rng) f.mask.resize(static_cast<std::size_t>(T));
  f.word.resize(static_cast<std::size_t>(T));
  f.attn.resize(static_cast<std::size_t>(T));
  f.s = Mat(static_cast<std::size_t>(T), two_h);

  for (int i = 0; i < T; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    f.ids[ui] = clause_ids(vocab, doc.clauses[ui], config.max_len);
    const int V = f.ids[ui].valid_len;
    Mat& xi = f.x[ui];
    xi = Mat(static_cast<std::size_t>(V), static_cast<std::size_t>(d_w));
    for (int t = 0; t < V; ++t) {
      const double* src = embedding.value.row(
          static_cast<std::size_t>(f.ids[ui].ids[static_cast<std::size_t>(t)]));
      std::memcpy(xi.row(static_cast<std::size_t>(t)), src,
                  static_cast<std::size_t>(d_w) * sizeof(double));
    }
    if (rng) {
      Mat& mask = f.mask[ui];
      mask = Mat(xi.rows, xi.cols);
      dropout_mask(mask, config.keep_prob, *rng);
      active().mul(xi.data(), mask.data(), xi.data(), xi.size());
    }
    bilstm_forward(word, xi, V, f.word[ui]);
    attention_forward(attn, f.word[ui].out, V, f.attn[ui]);
    std::memcpy(f.s.row(ui), f.attn[ui].s.data(), two_h * sizeof(double));
  }

  const bool soft = config.label_mode == LabelMode::Soft && !bound;
  auto build_fed_input = [&](const Mat& first_probs, const std::vector<int>& gold_fed,
                             Mat& in, std::vector<int>& fed) {
    in = Mat(static_cast<std::size_t>(T), two_h + d_lab);
    fed.resize(static_cast<std::size_t>(T));
    for (int i = 0; i < T; ++i) {
      const auto ui = static_cast<std::size_t>(i);
      double* row = in.row(ui);
      std::memcpy(row, f.s.row(ui), two_h * sizeof(double));
      fed[ui] = bound ? gold_fed[ui] : argmax2(first_probs.row(ui));
      double* y = row + two_h;
      if (soft) {
        const double* p = first_probs.row(ui);
        for (std::size_t j = 0; j < d_lab; ++j)
          y[j] = p[0] * label_emb.value.at(0, j) + p[1] * label_emb.value.at(1, j);
      } else {
        std::memcpy(y, label_emb.value.row(static_cast<std::size_t>(fed[ui])),
                    d_lab * sizeof(double));
      }
    }
  };

  if (kind == ModelKind::InterEC) {
    f.in_e = f.s;
    run_branch(emo, f.in_e, T, f.clause_e, f.p_e);
    build_fed_input(f.p_e, gold ? gold->emotion : std::vector<int>(), f.in_c, f.fed);
    run_branch(cau, f.in_c, T, f.clause_c, f.p_c);
  } else if (kind == ModelKind::InterCE) {
    f.in_c = f.s;
    run_branch(cau, f.in_c, T, f.clause_c, f.p_c);
    build_fed_input(f.p_c, gold ? gold->cause : std::vector<int>(), f.in_e, f.fed);
    run_branch(emo, f.in_e, T, f.clause_e, f.p_e);
  } else {
    f.in_e = f.s;
    f.in_c = f.s;
    run_branch(emo, f.in_e, T, f.clause_e, f.p_e);
    run_branch(cau, f.in_c, T, f.clause_c, f.p_c);
  }

  if (gold) {
    for (int i = 0; i < T; ++i) {
      const auto ui = static_cast<std::size_t>(i);
      f.loss_e += cross_entropy(f.p_e.row(ui), 2, gold->emotion[ui]);
      f.loss_c += cross_entropy(f.p_c.row(ui), 2, gold->cause[ui]);
    }
    f.loss_e /= T;
    f.loss_c /= T;
    f.penalty = 0.5 * config.l2 *
                (config.lambda * sq_norm(emo.head.w.value) +
                 (1.0 - config.lambda) * sq_norm(cau.head.w.value));
    f.loss = joint_loss(f.loss_e, f.loss_c, config.lambda) + f.penalty;
  }
  return f;
}

void StepOneModel::backward_doc(const Document& doc, DocForward& f,
                                const GoldLabels& gold, double w_doc) {
  (void)doc;
  const int T = f.T;
  const int h = config.hidden;
  const std::size_t two_h = 2 * static_cast<std::size_t>(h);
  const std::size_t d_lab = static_cast<std::size_t>(config.d_lab);
  const double lambda = config.lambda;
  const double ce_e = w_doc * lambda / T;
  const double ce_c = w_doc * (1.0 - lambda) / T;
  const bool soft = config.label_mode == LabelMode::Soft && !bound;
  const auto& ops = active();

  auto branch_backward = [&](Branch& branch, BiLstmCache& cache, const Mat& probs,
                             const std::vector<int>& y, double ce_w,
                             const Mat* dp_ext, std::size_t in_cols) {
    Mat dr(static_cast<std::size_t>(T), two_h);
    for (int i = 0; i < T; ++i) {
      const auto ui = static_cast<std::size_t>(i);
      softmax_head_backward(branch.head, cache.out.row(ui), probs.row(ui), y[ui],
                            ce_w, dp_ext ? dp_ext->row(ui) : nullptr, dr.row(ui));
    }
    Mat din(static_cast<std::size_t>(T), in_cols);
    bilstm_backward(branch.clause, cache, dr, din);
    return din;
  };

  // Gradient of the fed label embedding: hard labels route it into the
  // selected row; soft labels also push back into the first head's output.
  auto fed_label_backward = [&](const Mat& din, const Mat& first_probs,
                                Mat* dp_first) {
    for (int i = 0; i < T; ++i) {
      const auto ui = static_cast<std::size_t>(i);
      const double* dy = din.row(ui) + two_h;
      if (soft) {
        const double* p = first_probs.row(ui);
        for (int k = 0; k < 2; ++k) {
          ops.axpy(p[k], dy, label_emb.grad.row(static_cast<std::size_t>(k)), d_lab);
          dp_first->at(ui, static_cast<std::size_t>(k)) =
              ops.dot(label_emb.value.row(static_cast<std::size_t>(k)), dy, d_lab);
        }
      } else {
        ops.axpy(1.0, dy, label_emb.grad.row(static_cast<std::size_t>(f.fed[ui])),
                 d_lab);
      }
    }
  };

  Mat ds(static_cast<std::size_t>(T), two_h);
  auto add_s_part = [&](const Mat& din) {
    for (int i = 0; i < T; ++i)
      ops.axpy(1.0, din.row(static_cast<std::size_t>(i)),
               ds.row(static_cast<std::size_t>(i)), two_h);
  };

  if (kind == ModelKind::InterEC) {
    Mat din_c =
        branch_backward(cau, f.clause_c, f.p_c, gold.cause, ce_c, nullptr, two_h + d_lab);
    Mat dp_e(static_cast<std::size_t>(T), 2);
    fed_label_backward(din_c, f.p_e, soft ? &dp_e : nullptr);
    add_s_part(din_c);
    Mat din_e = branch_backward(emo, f.clause_e, f.p_e, gold.emotion, ce_e,
                                soft ? &dp_e : nullptr, two_h);
    add_s_part(din_e);
  } else if (kind == ModelKind::InterCE) {
    Mat din_e =
        branch_backward(emo, f.clause_e, f.p_e, gold.emotion, ce_e, nullptr, two_h + d_lab);
    Mat dp_c(static_cast<std::size_t>(T), 2);
    fed_label_backward(din_e, f.p_c, soft ? &dp_c : nullptr);
    add_s_part(din_e);
    Mat din_c = branch_backward(cau, f.clause_c, f.p_c, gold.cause, ce_c,
                                soft ? &dp_c : nullptr, two_h);
    add_s_part(din_c);
  } else {
    add_s_part(branch_backward(emo, f.clause_e, f.p_e, gold.emotion, ce_e, nullptr, two_h));
    add_s_part(branch_backward(cau, f.clause_c, f.p_c, gold.cause, ce_c, nullptr, two_h));
  }

  for (int i = 0; i < T; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    const int V = f.ids[ui].valid_len;
    Mat dx(f.x[ui].rows, f.x[ui].cols);
    Mat dh(static_cast<std::size_t>(V), two_h);
    attention_backward(attn, f.attn[ui], f.word[ui].out, V, ds.row(ui), dh);
    bilstm_backward(word, f.word[ui], dh, dx);
    if (!f.mask.empty()) ops.mul(dx.data(), f.mask[ui].data(), dx.data(), dx.size());
    for (int t = 0; t < V; ++t) {
      const auto id =
          static_cast<std::size_t>(f.ids[ui].ids[static_cast<std::size_t>(t)]);
      ops.axpy(1.0, dx.row(static_cast<std::size_t>(t)), embedding.grad.row(id),
               static_cast<std::size_t>(embedding.value.cols));
    }
  }

  ops.axpy(w_doc * lambda * config.l2, emo.head.w.value.data(),
           emo.head.w.grad.data(), emo.head.w.size());
  ops.axpy(w_doc * (1.0 - lambda) * config.l2, cau.head.w.value.data(),
           cau.head.w.grad.data(), cau.head.w.size());
}

std::pair<std::vector<int>, std::vector<int>> StepOneModel::extract_sets(
    const DocForward& f, const GoldLabels* gold) const {
  std::vector<int> e, c;
  for (int i = 0; i < f.T; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    if (argmax2(f.p_e.row(ui)) == 1) e.push_back(i + 1);
    if (argmax2(f.p_c.row(ui)) == 1) c.push_back(i + 1);
  }
  if (bound && gold) {
    if (kind == ModelKind::InterEC) {
      e.clear();
      for (std::size_t i = 0; i < gold->emotion.size(); ++i)
        if (gold->emotion[i]) e.push_back(static_cast<int>(i) + 1);
    } else if (kind == ModelKind::InterCE) {
      c.clear();
      for (std::size_t i = 0; i < gold->cause.size(); ++i)
        if (gold->cause[i]) c.push_back(static_cast<int>(i) + 1);
    }
  }
  return {std::move(e), std::move(c)};
}

Document truncate_document(const Document& doc, int max_clauses, bool* changed) {
  if (static_cast<int>(doc.clauses.size()) <= max_clauses) {
    if (changed) *changed = false;
    return doc;
  }
  Document out;
  out.id = doc.id;
  out.clauses.assign(doc.clauses.begin(), doc.clauses.begin() + max_clauses);
  for (const auto& p : doc.pairs)
    if (p.emotion <= max_clauses && p.cause <= max_clauses) out.pairs.push_back(p);
  if (changed) *changed = true;
  return out;
}

TrainResult train_model(StepOneModel& model, const Corpus& train,
                        std::ostream* log_stream, const EpochCallback& after_epoch) {
  if (train.docs.empty()) throw DataError("training corpus is empty");
  const TrainConfig& cfg = model.config;

  TrainResult result;
  std::vector<Document> docs;
  docs.reserve(train.docs.size());
  for (const auto& doc : train.docs) {
    bool changed = false;
    docs.push_back(truncate_document(doc, cfg.max_clauses, &changed));
    if (changed) ++result.truncated_docs;
  }
  std::vector<GoldLabels> gold;
  gold.reserve(docs.size());
  for (const auto& doc : docs) gold.push_back(gold_labels(doc));

  Rng rng(cfg.seed);
  Adam opt;
  opt.lr = cfg.learning_rate;
  const std::vector<Param*> tp = model.trainable_params();

  std::vector<std::size_t> order(docs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    rng.shuffle(order);
    EpochLog log;
    log.epoch = epoch;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end =
          std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      const double w_doc = 1.0 / static_cast<double>(end - start);
      zero_grads(tp);
      for (std::size_t k = start; k < end; ++k) {
        const std::size_t d = order[k];
        DocForward f = model.forward_doc(docs[d], &gold[d], &rng);
        if (!std::isfinite(f.loss))
          throw NumericError("non-finite loss at epoch " + std::to_string(epoch) +
                             ", document '" + docs[d].id + "'");
        model.backward_doc(docs[d], f, gold[d], w_doc);
        log.loss += f.loss;
        log.loss_e += f.loss_e;
        log.loss_c += f.loss_c;
      }
      opt.update(tp);
    }
    log.loss /= static_cast<double>(docs.size());
    log.loss_e /= static_cast<double>(docs.size());
    log.loss_c /= static_cast<double>(docs.size());
    result.log.push_back(log);
    if (log_stream) {
      nlohmann::json j{{"epoch", log.epoch},
                       {"loss", log.loss},
                       {"loss_e", log.loss_e},
                       {"loss_c", log.loss_c}};
      (*log_stream) << j.dump() << '\n';
    }
    if (after_epoch && !after_epoch(epoch)) break;
  }
  return result;
}

}  // namespace ecpe
