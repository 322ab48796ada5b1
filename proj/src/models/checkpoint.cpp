#include "milkit/models/checkpoint.hpp"

#include <algorithm>
#include <fstream>

#include "milkit/array_file.hpp"
#include "milkit/errors.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace milkit {

namespace {

const char* attachment_name(SmAttachment a) {
  return a == SmAttachment::features ? "features" : "attention_logits";
}

SmAttachment parse_attachment(const std::string& s) {
  if (s == "attention_logits") return SmAttachment::attention_logits;
  if (s == "features") return SmAttachment::features;
  throw ConfigError("sm.attachment must be 'attention_logits' or 'features'");
}

}  // namespace

json config_to_json(const ModelConfig& config) {
  json j;
  j["model_name"] = config.model_name;
  j["in_dim"] = config.in_dim;
  if (config.embed_dim) j["embed_dim"] = *config.embed_dim;
  if (config.attention_width) j["attention_width"] = *config.attention_width;
  if (config.n_encoder_layers) j["n_encoder_layers"] = *config.n_encoder_layers;
  if (config.n_heads) j["n_heads"] = *config.n_heads;
  if (config.n_graph_layers) j["n_graph_layers"] = *config.n_graph_layers;
  if (config.gated) j["gated"] = *config.gated;
  if (config.sm) {
    j["sm"] = {{"alpha", config.sm->alpha},
               {"steps", config.sm->steps},
               {"attachment", attachment_name(config.sm->attachment)}};
  }
  return j;
}

ModelConfig config_from_json(const json& j) {
  static const std::vector<std::string> kKeys = {
      "model_name", "in_dim",        "embed_dim", "attention_width",
      "n_encoder_layers", "n_heads", "n_graph_layers", "gated", "sm"};
  if (!j.is_object()) throw ConfigError("model config must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find(kKeys.begin(), kKeys.end(), it.key()) == kKeys.end())
      throw ConfigError("unknown model config key: '" + it.key() + "'");
  }
  ModelConfig c;
  if (j.contains("model_name")) c.model_name = j.at("model_name").get<std::string>();
  if (j.contains("in_dim")) c.in_dim = j.at("in_dim").get<std::int64_t>();
  if (j.contains("embed_dim")) c.embed_dim = j.at("embed_dim").get<std::int64_t>();
  if (j.contains("attention_width"))
    c.attention_width = j.at("attention_width").get<std::int64_t>();
  if (j.contains("n_encoder_layers"))
    c.n_encoder_layers = j.at("n_encoder_layers").get<std::int64_t>();
  if (j.contains("n_heads")) c.n_heads = j.at("n_heads").get<std::int64_t>();
  if (j.contains("n_graph_layers"))
    c.n_graph_layers = j.at("n_graph_layers").get<std::int64_t>();
  if (j.contains("gated")) c.gated = j.at("gated").get<bool>();
  if (j.contains("sm")) {
    const json& s = j.at("sm");
    static const std::vector<std::string> kSmKeys = {"alpha", "steps", "attachment"};
    for (auto it = s.begin(); it != s.end(); ++it) {
      if (std::find(kSmKeys.begin(), kSmKeys.end(), it.key()) == kSmKeys.end())
        throw ConfigError("unknown model config key: 'sm." + it.key() + "'");
    }
    SmSettings sm;
    if (s.contains("alpha")) sm.alpha = s.at("alpha").get<double>();
    if (s.contains("steps")) sm.steps = s.at("steps").get<std::int64_t>();
    if (s.contains("attachment"))
      sm.attachment = parse_attachment(s.at("attachment").get<std::string>());
    c.sm = sm;
  }
  return c;
}

void save_checkpoint(MILModel& model, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir / "params", ec);
  if (ec) throw Error("cannot create checkpoint directory: " + dir.string());

  json meta;
  meta["format"] = "milkit-checkpoint";
  meta["version"] = 1;
  meta["model"] = config_to_json(model.config());
  json names = json::array();
  for (nn::Parameter* p : model.parameters()) {
    names.push_back(p->name);
    write_array(p->value, dir / "params" / (p->name + ".milt"));
  }
  meta["parameters"] = names;

  std::ofstream os(dir / "model.json", std::ios::binary | std::ios::trunc);
  if (!os) throw Error("cannot write checkpoint metadata: " + dir.string());
  os << meta.dump(2) << '\n';
}

MILModelPtr load_checkpoint(const fs::path& dir) {
  std::ifstream is(dir / "model.json");
  if (!is) throw Error("cannot open checkpoint metadata: " + (dir / "model.json").string());
  json meta;
  try {
    is >> meta;
  } catch (const json::exception& e) {
    throw Error("bad checkpoint metadata: " + std::string(e.what()));
  }
  if (!meta.contains("format") || meta.at("format") != "milkit-checkpoint")
    throw Error("not a milkit checkpoint: " + dir.string());
  MILModelPtr model = build_model(config_from_json(meta.at("model")), 0);
  for (nn::Parameter* p : model->parameters()) {
    const fs::path f = dir / "params" / (p->name + ".milt");
    Array<double> stored = read_array_f64(f);
    if (stored.shape() != p->value.shape())
      throw Error("checkpoint parameter shape mismatch: " + p->name);
    p->value = std::move(stored);
  }
  return model;
}

}  // namespace milkit
