#include <doctest.h>

#include <string>

#include "ecpe/config.hpp"
#include "ecpe/error.hpp"
#include "test_util.hpp"

using namespace ecpe;
using test_util::temp_dir;
using test_util::write_file;

TEST_CASE("kv parsing: comments, whitespace, blanks") {
  KvFile kv = KvFile::from_string(
      "# a comment\n"
      "  alpha = 1.5   # trailing comment\n"
      "\n"
      "beta=  text value  \n"
      "gamma = -3\n",
      "inline");
  CHECK(kv.get_double("alpha", 0.0) == 1.5);
  CHECK(kv.get_string("beta", "") == "text value");
  CHECK(kv.get_int("gamma", 0) == -3);
  CHECK(kv.get_int("absent", 7) == 7);
  CHECK(kv.has("alpha"));
  CHECK(!kv.has("absent"));
  kv.require_consumed();
}

TEST_CASE("kv parsing errors") {
  CHECK_THROWS_AS(KvFile::from_string("novalue\n", "x"), DataError);
  CHECK_THROWS_AS(KvFile::from_string("= 3\n", "x"), DataError);
  CHECK_THROWS_AS(KvFile::from_string("a = 1\na = 2\n", "x"), DataError);

  KvFile kv = KvFile::from_string("n = 1.5\n", "x");
  CHECK_THROWS_AS(kv.get_int("n", 0), DataError);
  KvFile kv2 = KvFile::from_string("n = abc\n", "x");
  CHECK_THROWS_AS(kv2.get_double("n", 0.0), DataError);
  KvFile kv3 = KvFile::from_string("n = -4\n", "x");
  CHECK_THROWS_AS(kv3.get_u64("n", 0), DataError);
  KvFile kv4 = KvFile::from_string("b = yes\n", "x");
  CHECK_THROWS_AS(kv4.get_bool("b", false), DataError);
}

TEST_CASE("unknown keys are rejected") {
  KvFile kv = KvFile::from_string("known = 1\ntypo_key = 2\n", "cfg");
  kv.get_int("known", 0);
  try {
    kv.require_consumed();
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("typo_key") != std::string::npos);
  }
}

TEST_CASE("model kind names round trip") {
  for (ModelKind k : {ModelKind::Indep, ModelKind::InterEC, ModelKind::InterCE})
    CHECK(model_kind_from_string(to_string(k)) == k);
  CHECK_THROWS_AS(model_kind_from_string("interec"), DataError);
}

TEST_CASE("train config defaults and round trip") {
  const TrainConfig def;
  CHECK(def.lambda == 0.5);
  CHECK(def.batch_size == 32);
  CHECK(def.learning_rate == 0.005);
  CHECK(def.keep_prob == 0.8);
  CHECK(def.l2 == 1e-5);
  CHECK(def.hidden == 100);
  CHECK(def.embedding_dim == 200);
  def.validate();

  const auto dir = temp_dir("config");
  TrainConfig c = def;
  c.lambda = 0.25;
  c.epochs = 7;
  c.seed = 99;
  c.label_mode = LabelMode::Soft;
  c.filter_source = FilterSource::Predicted;
  write_file(dir / "t.cfg", c.to_kv_text());
  const TrainConfig back = TrainConfig::from_file(dir / "t.cfg");
  CHECK(back.lambda == 0.25);
  CHECK(back.epochs == 7);
  CHECK(back.seed == 99);
  CHECK(back.label_mode == LabelMode::Soft);
  CHECK(back.filter_source == FilterSource::Predicted);
  CHECK(back.to_kv_text() == c.to_kv_text());
}

TEST_CASE("train config validation") {
  TrainConfig c;
  c.lambda = 1.5;
  CHECK_THROWS_AS(c.validate(), DataError);
  c = TrainConfig{};
  c.keep_prob = 0.0;
  CHECK_THROWS_AS(c.validate(), DataError);
  c = TrainConfig{};
  c.batch_size = 0;
  CHECK_THROWS_AS(c.validate(), DataError);
  c = TrainConfig{};
  c.filter_threshold = 1.0;
  CHECK_THROWS_AS(c.validate(), DataError);
  c = TrainConfig{};
  c.learning_rate = 0.0;
  CHECK_THROWS_AS(c.validate(), DataError);
}

TEST_CASE("train config rejects unknown keys and bad enums") {
  const auto dir = temp_dir("config_bad");
  write_file(dir / "typo.cfg", "epochz = 5\n");
  CHECK_THROWS_AS(TrainConfig::from_file(dir / "typo.cfg"), DataError);
  write_file(dir / "mode.cfg", "label_mode = fuzzy\n");
  CHECK_THROWS_AS(TrainConfig::from_file(dir / "mode.cfg"), DataError);
  CHECK_THROWS_AS(TrainConfig::from_file(dir / "missing.cfg"), DataError);
}

TEST_CASE("experiment config round trip") {
  const auto dir = temp_dir("config_exp");
  write_file(dir / "e.cfg",
             "model = inter-ec\n"
             "bound = true\n"
             "n_runs = 3\n"
             "split_ratio = 0.8\n"
             "corpus = data.jsonl\n"
             "out_dir = out\n"
             "epochs = 2\n");
  const ExperimentConfig e = ExperimentConfig::from_file(dir / "e.cfg");
  CHECK(e.kind == ModelKind::InterEC);
  CHECK(e.bound);
  CHECK(e.n_runs == 3);
  CHECK(e.split_ratio == 0.8);
  CHECK(e.corpus_path == "data.jsonl");
  CHECK(e.embeddings_path.empty());
  CHECK(e.train.epochs == 2);

  write_file(dir / "e2.cfg", e.to_kv_text());
  const ExperimentConfig e2 = ExperimentConfig::from_file(dir / "e2.cfg");
  CHECK(e2.to_kv_text() == e.to_kv_text());

  write_file(dir / "bad.cfg", "model = indep\n");  // no corpus/out_dir
  CHECK_THROWS_AS(ExperimentConfig::from_file(dir / "bad.cfg"), DataError);
}
