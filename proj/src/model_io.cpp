#include <json.hpp>

#include "ecpe/container.hpp"
#include "ecpe/error.hpp"
#include "ecpe/model.hpp"

namespace ecpe {

using nlohmann::json;

void save_checkpoint(StepOneModel& model, const std::filesystem::path& path) {
  json meta;
  meta["kind"] = "step1";
  meta["model"] = to_string(model.kind);
  meta["bound"] = model.bound;
  meta["embedding_trainable"] = model.embedding_trainable;
  meta["config"] = model.config.to_kv_text();
  meta["vocab"] = model.vocab.id_to_token;

  std::vector<std::pair<std::string, const Mat*>> tensors;
  for (Param* p : model.params()) tensors.emplace_back(p->name, &p->value);
  write_container(path, meta.dump(), tensors);
}

StepOneModel load_checkpoint(const std::filesystem::path& path) {
  std::vector<NamedMat> tensors;
  const std::string meta_text = read_container(path, tensors);
  json meta;
  try {
    meta = json::parse(meta_text);
  } catch (const json::parse_error& e) {
    throw DataError(path.string() + ": bad checkpoint metadata: " + e.what());
  }
  if (meta.value("kind", "") != "step1")
    throw DataError(path.string() + ": not a step-1 model checkpoint (kind is '" +
                    meta.value("kind", "") + "')");

  KvFile kv = KvFile::from_string(meta.at("config").get<std::string>(),
                                  path.string() + "#config");
  TrainConfig config = TrainConfig::from_kv(kv);
  const ModelKind kind = model_kind_from_string(meta.at("model").get<std::string>());
  const bool bound = meta.value("bound", false);

  Vocabulary vocab;
  vocab.id_to_token = meta.at("vocab").get<std::vector<std::string>>();
  if (vocab.id_to_token.size() < 2)
    throw DataError(path.string() + ": checkpoint vocabulary is too small");
  for (int id = 2; id < vocab.size(); ++id)
    vocab.token_to_id.emplace(vocab.id_to_token[static_cast<std::size_t>(id)], id);

  EmbeddingTable table;
  table.rows = Mat(static_cast<std::size_t>(vocab.size()),
                   static_cast<std::size_t>(config.embedding_dim));
  table.trainable = meta.value("embedding_trainable", true);
  Rng rng(0);  // values are overwritten below
  StepOneModel model =
      StepOneModel::create(kind, bound, config, vocab, table, rng);

  std::vector<Param*> params = model.params();
  if (params.size() != tensors.size())
    throw DataError(path.string() + ": checkpoint holds " +
                    std::to_string(tensors.size()) + " tensors, expected " +
                    std::to_string(params.size()));
  for (std::size_t k = 0; k < params.size(); ++k) {
    const NamedMat& t = tensors[k];
    Param* p = params[k];
    if (t.name != p->name || t.m.rows != p->value.rows || t.m.cols != p->value.cols)
      throw DataError(path.string() + ": tensor '" + t.name +
                      "' does not match expected '" + p->name + "' (" +
                      std::to_string(p->value.rows) + "x" +
                      std::to_string(p->value.cols) + ")");
    p->value = t.m;
  }
  return model;
}

}  // namespace ecpe
