#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "ecpe/config.hpp"
#include "ecpe/corpus.hpp"
#include "ecpe/embedding.hpp"
#include "ecpe/neural.hpp"

namespace ecpe {

// One upper-layer branch: clause-level encoder over the shared clause
// representations plus a softmax head.
struct Branch {
  BiLstm clause;
  Head head;

  void init(const std::string& prefix, int two_h, int extra, int h, Rng& rng);
  void collect(std::vector<Param*>& out);
};

// 0/1 per clause, derived from the pair annotations.
struct GoldLabels {
  std::vector<int> emotion;
  std::vector<int> cause;
};

GoldLabels gold_labels(const Document& doc);

// Forward state for one document. Kept around for the backward pass and for
// pair featurization (rows of s).
struct DocForward {
  int T = 0;
  std::vector<ClauseIds> ids;
  std::vector<Mat> x;     // embedded clauses after dropout
  std::vector<Mat> mask;  // dropout masks (empty when not training)
  std::vector<BiLstmCache> word;
  std::vector<AttentionCache> attn;
  Mat s;                  // T x 2h shared clause representations
  Mat in_e, in_c;         // clause-level encoder inputs
  BiLstmCache clause_e, clause_c;
  Mat p_e, p_c;           // T x 2 head outputs
  std::vector<int> fed;   // labels fed across branches (Inter kinds)
  double loss_e = 0.0, loss_c = 0.0, penalty = 0.0, loss = 0.0;
};

double joint_loss(double loss_e, double loss_c, double lambda);

// Hierarchical two-task model: a shared word-level encoder with attention
// pooling produces one representation per clause; two clause-level branches
// predict emotion and cause. Inter kinds embed the first branch's predicted
// labels and concatenate them into the second branch's input; bound models
// feed gold labels instead.
struct StepOneModel {
  ModelKind kind = ModelKind::Indep;
  bool bound = false;
  TrainConfig config;
  Vocabulary vocab;
  bool embedding_trainable = true;

  Param embedding;  // |V| x d_w
  BiLstm word;      // lower layer, d_w -> 2h
  Attention attn;   // pooling over word states
  Param label_emb;  // 2 x d_lab, Inter kinds only
  Branch emo, cau;

  static StepOneModel create(ModelKind kind, bool bound, const TrainConfig& config,
                             const Vocabulary& vocab, const EmbeddingTable& table,
                             Rng& rng);

  bool has_label_emb() const { return kind != ModelKind::Indep; }
  std::vector<Param*> params();            // fixed order, for checkpoints
  std::vector<Param*> trainable_params();  // optimizer order

  // Forward pass. gold is required when bound (the fed labels come from it)
  // and whenever a loss is wanted. rng drives dropout and must be non-null
  // exactly when training.
  DocForward forward_doc(const Document& doc, const GoldLabels* gold, Rng* rng) const;

  // Accumulates parameter gradients for one document, scaled by w_doc.
  void backward_doc(const Document& doc, DocForward& fwd, const GoldLabels& gold,
                    double w_doc);

  // E = {i : argmax p_e_i = 1}, C likewise (ties resolve to 0). For bound
  // Inter models the fed task's set is replaced by the gold set.
  std::pair<std::vector<int>, std::vector<int>> extract_sets(
      const DocForward& fwd, const GoldLabels* gold) const;
};

struct EpochLog {
  int epoch = 0;
  double loss = 0.0, loss_e = 0.0, loss_c = 0.0;
};

struct TrainResult {
  std::vector<EpochLog> log;
  std::size_t truncated_docs = 0;
};

// Fixed-epoch Adam training with per-epoch shuffling under the model's
// config seed. Writes one JSON record per epoch to log_stream when given.
// Documents longer than max_clauses are truncated (pairs beyond the cut are
// dropped and counted in the result). Throws NumericError when the loss
// leaves the finite range. after_epoch, when set, runs after each epoch and
// may return false to stop early.
using EpochCallback = std::function<bool(int epoch)>;
TrainResult train_model(StepOneModel& model, const Corpus& train,
                        std::ostream* log_stream,
                        const EpochCallback& after_epoch = nullptr);

// Applies the model's max_clauses cap to a copy of the document.
Document truncate_document(const Document& doc, int max_clauses, bool* changed);

// Checkpoint container, bit-exact round trip.
void save_checkpoint(StepOneModel& model, const std::filesystem::path& path);
StepOneModel load_checkpoint(const std::filesystem::path& path);

}  // namespace ecpe
