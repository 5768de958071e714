#include <doctest.h>

#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "ecpe/corpus.hpp"
#include "ecpe/embedding.hpp"
#include "ecpe/error.hpp"
#include "ecpe/model.hpp"
#include "test_util.hpp"

using namespace ecpe;
using test_util::temp_dir;

namespace {

Document make_doc(const std::string& id, std::vector<std::vector<std::string>> clauses,
                  std::vector<EmotionCausePair> pairs) {
  Document d;
  d.id = id;
  for (auto& toks : clauses) d.clauses.push_back({std::move(toks)});
  d.pairs = std::move(pairs);
  validate_document(d);
  return d;
}

Document toy_doc() {
  return make_doc("toy",
                  {{"the", "storm", "hit"}, {"we", "felt", "sad"}, {"so", "it", "goes"}},
                  {{2, 1}});
}

Corpus toy_corpus() {
  Corpus c;
  c.docs.push_back(toy_doc());
  c.docs.push_back(make_doc("d2", {{"rain", "fell"}, {"she", "was", "angry"}}, {{2, 1}}));
  c.docs.push_back(make_doc(
      "d3", {{"he", "won"}, {"joy", "filled", "him"}, {"they", "left"}}, {{2, 1}}));
  c.docs.push_back(make_doc("d4", {{"loss", "of", "work"}, {"fear", "took", "hold"}},
                            {{2, 1}, {2, 2}}));
  return c;
}

TrainConfig tiny_config() {
  TrainConfig c;
  c.lambda = 0.6;
  c.batch_size = 2;
  c.learning_rate = 0.01;
  c.epochs = 3;
  c.seed = 5;
  c.max_len = 4;
  c.max_clauses = 8;
  c.keep_prob = 1.0;
  c.l2 = 0.01;
  c.d_lab = 2;
  c.hidden = 3;
  c.embedding_dim = 4;
  c.min_count = 1;
  return c;
}

StepOneModel make_model(ModelKind kind, bool bound, const TrainConfig& cfg,
                        const Corpus& corpus, std::uint64_t seed = 7) {
  Vocabulary vocab = build_vocab(corpus, cfg.min_count);
  Rng rng(seed);
  EmbeddingTable table = random_embeddings(vocab, cfg.embedding_dim, rng);
  return StepOneModel::create(kind, bound, cfg, vocab, table, rng);
}

Vec snapshot(const std::vector<Param*>& params) {
  Vec all;
  for (const Param* p : params)
    all.insert(all.end(), p->value.a.begin(), p->value.a.end());
  return all;
}

}  // namespace

TEST_CASE("gold_labels marks emotion and cause clauses") {
  const Document d = make_doc("g", {{"a"}, {"b"}, {"c"}, {"d"}}, {{2, 1}, {2, 4}});
  const GoldLabels g = gold_labels(d);
  CHECK(g.emotion == std::vector<int>{0, 1, 0, 0});
  CHECK(g.cause == std::vector<int>{1, 0, 0, 1});
}

TEST_CASE("joint_loss mixes the task losses") {
  CHECK(joint_loss(2.0, 4.0, 1.0) == 2.0);
  CHECK(joint_loss(2.0, 4.0, 0.0) == 4.0);
  CHECK(joint_loss(2.0, 4.0, 0.25) == doctest::Approx(0.25 * 2 + 0.75 * 4));
}

TEST_CASE("document gradients pass finite differences for every kind") {
  const Corpus corpus = toy_corpus();
  const Document doc = toy_doc();
  const GoldLabels gold = gold_labels(doc);

  struct Case {
    const char* tag;
    ModelKind kind;
    bool bound;
    LabelMode mode;
  };
  // unbound hard inter models pick the fed label by argmax, which a finite
  // difference can flip; the differentiable configurations cover the same
  // backward code paths
  const Case cases[] = {
      {"indep", ModelKind::Indep, false, LabelMode::Hard},
      {"inter-ec bound", ModelKind::InterEC, true, LabelMode::Hard},
      {"inter-ce bound", ModelKind::InterCE, true, LabelMode::Hard},
      {"inter-ec soft", ModelKind::InterEC, false, LabelMode::Soft},
      {"inter-ce soft", ModelKind::InterCE, false, LabelMode::Soft},
  };
  for (const Case& c : cases) {
    CAPTURE(c.tag);
    TrainConfig cfg = tiny_config();
    cfg.label_mode = c.mode;
    StepOneModel m = make_model(c.kind, c.bound, cfg, corpus);

    const auto params = m.trainable_params();
    zero_grads(params);
    DocForward fwd = m.forward_doc(doc, &gold, nullptr);
    CHECK(fwd.loss == doctest::Approx(joint_loss(fwd.loss_e, fwd.loss_c, cfg.lambda) +
                                      fwd.penalty));
    m.backward_doc(doc, fwd, gold, 1.0);

    auto loss = [&] { return m.forward_doc(doc, &gold, nullptr).loss; };
    const GradCheckResult res = grad_check(loss, params);
    CAPTURE(res.worst_param);
    CAPTURE(res.worst_index);
    CHECK(res.max_rel_err < 1e-4);
  }
}

TEST_CASE("indep branches do not interact") {
  const Corpus corpus = toy_corpus();
  const Document doc = toy_doc();
  const GoldLabels gold = gold_labels(doc);
  StepOneModel m = make_model(ModelKind::Indep, false, tiny_config(), corpus);

  const DocForward before = m.forward_doc(doc, &gold, nullptr);
  std::vector<Param*> cau_params;
  m.cau.collect(cau_params);
  for (Param* p : cau_params)
    for (double& v : p->value.a) v += 0.1;
  const DocForward after = m.forward_doc(doc, &gold, nullptr);

  CHECK(after.p_e.a == before.p_e.a);
  CHECK(after.p_c.a != before.p_c.a);

  std::vector<Param*> emo_params;
  m.emo.collect(emo_params);
  for (Param* p : emo_params)
    for (double& v : p->value.a) v += 0.1;
  const DocForward last = m.forward_doc(doc, &gold, nullptr);
  CHECK(last.p_c.a == after.p_c.a);
  CHECK(last.p_e.a != after.p_e.a);
}

TEST_CASE("bound models feed gold labels") {
  const Corpus corpus = toy_corpus();
  const Document doc = toy_doc();
  const GoldLabels gold = gold_labels(doc);

  StepOneModel ec = make_model(ModelKind::InterEC, true, tiny_config(), corpus);
  CHECK(ec.forward_doc(doc, &gold, nullptr).fed == gold.emotion);

  StepOneModel ce = make_model(ModelKind::InterCE, true, tiny_config(), corpus);
  CHECK(ce.forward_doc(doc, &gold, nullptr).fed == gold.cause);
}

TEST_CASE("lambda pins the untrained branch at its initialization") {
  const Corpus corpus = toy_corpus();

  TrainConfig cfg = tiny_config();
  cfg.lambda = 1.0;
  StepOneModel m = make_model(ModelKind::Indep, false, cfg, corpus);
  std::vector<Param*> cau_params, emo_params;
  m.cau.collect(cau_params);
  m.emo.collect(emo_params);
  const Vec cau_before = snapshot(cau_params);
  const Vec emo_before = snapshot(emo_params);
  train_model(m, corpus, nullptr);
  CHECK(snapshot(cau_params) == cau_before);
  CHECK(snapshot(emo_params) != emo_before);

  cfg.lambda = 0.0;
  StepOneModel m0 = make_model(ModelKind::Indep, false, cfg, corpus);
  std::vector<Param*> cau0, emo0;
  m0.cau.collect(cau0);
  m0.emo.collect(emo0);
  const Vec cau0_before = snapshot(cau0);
  const Vec emo0_before = snapshot(emo0);
  train_model(m0, corpus, nullptr);
  CHECK(snapshot(emo0) == emo0_before);
  CHECK(snapshot(cau0) != cau0_before);

  // at lambda = 1 the cause loss carries no weight, and in inter-ec the
  // label embedding only feeds the cause branch, so it stays frozen too
  cfg.lambda = 1.0;
  StepOneModel ec = make_model(ModelKind::InterEC, false, cfg, corpus);
  std::vector<Param*> ec_cau;
  ec.cau.collect(ec_cau);
  ec_cau.push_back(&ec.label_emb);
  const Vec ec_before = snapshot(ec_cau);
  train_model(ec, corpus, nullptr);
  CHECK(snapshot(ec_cau) == ec_before);
}

TEST_CASE("extract_sets takes the argmax with ties resolving to zero") {
  const Corpus corpus = toy_corpus();
  const Document doc = toy_doc();
  StepOneModel m = make_model(ModelKind::Indep, false, tiny_config(), corpus);
  DocForward fwd = m.forward_doc(doc, nullptr, nullptr);

  const double pe[3][2] = {{0.3, 0.7}, {0.5, 0.5}, {0.2, 0.8}};
  const double pc[3][2] = {{0.6, 0.4}, {0.1, 0.9}, {0.5, 0.5}};
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 2; ++k) {
      fwd.p_e.at(i, k) = pe[i][k];
      fwd.p_c.at(i, k) = pc[i][k];
    }

  const auto [e, c] = m.extract_sets(fwd, nullptr);
  CHECK(e == std::vector<int>{1, 3});
  CHECK(c == std::vector<int>{2});
}

TEST_CASE("bound extraction substitutes the gold set for the fed task") {
  const Corpus corpus = toy_corpus();
  const Document doc = toy_doc();
  const GoldLabels gold = gold_labels(doc);

  StepOneModel ec = make_model(ModelKind::InterEC, true, tiny_config(), corpus);
  DocForward fwd = ec.forward_doc(doc, &gold, nullptr);
  for (int i = 0; i < 3; ++i) {
    fwd.p_e.at(i, 0) = 0.1;  // predicts every clause as emotion
    fwd.p_e.at(i, 1) = 0.9;
  }
  const auto [e, c] = ec.extract_sets(fwd, &gold);
  CHECK(e == std::vector<int>{2});  // gold wins

  StepOneModel ce = make_model(ModelKind::InterCE, true, tiny_config(), corpus);
  DocForward fwd2 = ce.forward_doc(doc, &gold, nullptr);
  for (int i = 0; i < 3; ++i) {
    fwd2.p_c.at(i, 0) = 0.1;
    fwd2.p_c.at(i, 1) = 0.9;
  }
  const auto [e2, c2] = ce.extract_sets(fwd2, &gold);
  CHECK(c2 == std::vector<int>{1});
}

TEST_CASE("training is deterministic under a fixed seed") {
  const Corpus corpus = toy_corpus();
  TrainConfig cfg = tiny_config();
  cfg.keep_prob = 0.8;  // dropout active, still seeded
  cfg.epochs = 2;

  auto run = [&] {
    StepOneModel m = make_model(ModelKind::InterEC, false, cfg, corpus, 11);
    train_model(m, corpus, nullptr);
    return snapshot(m.params());
  };
  CHECK(run() == run());
}

TEST_CASE("checkpoints round trip bit-exactly") {
  const auto dir = temp_dir("ckpt");
  const Corpus corpus = toy_corpus();
  TrainConfig cfg = tiny_config();
  cfg.label_mode = LabelMode::Soft;
  StepOneModel m = make_model(ModelKind::InterCE, true, cfg, corpus);
  train_model(m, corpus, nullptr);

  save_checkpoint(m, dir / "m.ckpt");
  StepOneModel r = load_checkpoint(dir / "m.ckpt");

  CHECK(r.kind == m.kind);
  CHECK(r.bound == m.bound);
  CHECK(r.config.lambda == m.config.lambda);
  CHECK(r.config.hidden == m.config.hidden);
  CHECK(r.config.label_mode == m.config.label_mode);
  CHECK(r.config.max_len == m.config.max_len);
  CHECK(r.vocab.id_to_token == m.vocab.id_to_token);
  CHECK(r.embedding_trainable == m.embedding_trainable);

  const auto mp = m.params();
  const auto rp = r.params();
  REQUIRE(mp.size() == rp.size());
  for (std::size_t i = 0; i < mp.size(); ++i) {
    CAPTURE(mp[i]->name);
    CHECK(rp[i]->name == mp[i]->name);
    CHECK(rp[i]->value.a == mp[i]->value.a);
  }

  const Document doc = toy_doc();
  const GoldLabels gold = gold_labels(doc);
  const DocForward a = m.forward_doc(doc, &gold, nullptr);
  const DocForward b = r.forward_doc(doc, &gold, nullptr);
  CHECK(a.p_e.a == b.p_e.a);
  CHECK(a.p_c.a == b.p_c.a);
}

TEST_CASE("truncate_document drops clauses and out-of-range pairs") {
  const Document d = make_doc("t", {{"a"}, {"b"}, {"c"}, {"d"}, {"e"}},
                              {{1, 1}, {2, 4}, {5, 3}});
  bool changed = false;
  const Document cut = truncate_document(d, 3, &changed);
  CHECK(changed);
  CHECK(cut.clauses.size() == 3);
  CHECK(cut.pairs == std::vector<EmotionCausePair>{{1, 1}});

  bool untouched = true;
  const Document same = truncate_document(d, 5, &untouched);
  CHECK_FALSE(untouched);
  CHECK(same.clauses.size() == 5);
  CHECK(same.pairs == d.pairs);
}

TEST_CASE("training counts truncated documents") {
  Corpus corpus = toy_corpus();
  corpus.docs.push_back(make_doc(
      "long",
      {{"c1"}, {"c2"}, {"c3"}, {"c4"}, {"c5"}, {"c6"}, {"c7"}, {"c8"}, {"c9"}, {"c10"}},
      {{2, 1}}));
  TrainConfig cfg = tiny_config();
  cfg.epochs = 1;
  StepOneModel m = make_model(ModelKind::Indep, false, cfg, corpus);
  const TrainResult res = train_model(m, corpus, nullptr);
  CHECK(res.truncated_docs == 1);
}

TEST_CASE("training requires a non-empty corpus") {
  const Corpus corpus = toy_corpus();
  StepOneModel m = make_model(ModelKind::Indep, false, tiny_config(), corpus);
  Corpus empty;
  CHECK_THROWS_AS(train_model(m, empty, nullptr), DataError);
}

TEST_CASE("epoch log and early stopping") {
  const Corpus corpus = toy_corpus();
  TrainConfig cfg = tiny_config();
  cfg.epochs = 10;
  StepOneModel m = make_model(ModelKind::Indep, false, cfg, corpus);

  std::ostringstream log;
  int calls = 0;
  const TrainResult res = train_model(m, corpus, &log, [&](int epoch) {
    ++calls;
    CHECK(epoch == calls);
    return epoch < 3;
  });

  CHECK(calls == 3);
  REQUIRE(res.log.size() == 3);
  CHECK(res.log[0].epoch == 1);
  CHECK(res.log[2].epoch == 3);
  for (const EpochLog& e : res.log) {
    CHECK(e.loss == doctest::Approx(joint_loss(e.loss_e, e.loss_c, cfg.lambda))
                        .epsilon(0.5));  // penalty rides on top
    CHECK(e.loss > 0.0);
  }

  int lines = 0;
  std::string line;
  std::istringstream in(log.str());
  while (std::getline(in, line)) {
    ++lines;
    CHECK(line.find("\"epoch\"") != std::string::npos);
    CHECK(line.find("\"loss\"") != std::string::npos);
  }
  CHECK(lines == 3);
}
