#include "videogan/config.hpp"

#include <fstream>

#include "videogan/errors.hpp"

namespace videogan {
using nlohmann::json;

nlohmann::json to_json(const RunConfig& config) {
  const auto& m = config.model;
  const auto& t = config.train;
  return {{"model",
           {{"frame_size", m.frame_size},
            {"base_channels", m.base_channels},
            {"bottleneck_channels", m.bottleneck_channels},
            {"downsample_stages", m.downsample_stages},
            {"residual_blocks_per_stage", m.residual_blocks_per_stage},
            {"fusion_mode", to_string(m.fusion_mode)},
            {"critic_channels", m.critic_channels}}},
          {"train",
           {{"learning_rate", t.learning_rate},
            {"adam_beta1", t.adam_beta1},
            {"adam_beta2", t.adam_beta2},
            {"batch_size", t.batch_size},
            {"epochs", t.epochs},
            {"seed", t.seed},
            {"checkpoint_interval", t.checkpoint_interval},
            {"decay_start_epoch", t.decay_start_epoch},
            {"weights",
             {{"adv", t.weights.adv},
              {"cyc", t.weights.cyc},
              {"idt", t.weights.idt},
              {"hist", t.weights.hist},
              {"iv", t.weights.iv}}}}}};
}

namespace {

void check_keys(const json& schema, const json& patch, const std::string& where) {
  if (!patch.is_object()) throw ConfigError("config section '" + where + "' must be an object");
  for (const auto& [key, value] : patch.items()) {
    if (!schema.contains(key)) throw ConfigError("unknown config key '" + where + key + "'");
    if (schema[key].is_object()) check_keys(schema[key], value, where + key + ".");
  }
}

RunConfig from_json(const json& doc) {
  RunConfig config;
  const auto& m = doc.at("model");
  config.model.frame_size = m.at("frame_size").get<int>();
  config.model.base_channels = m.at("base_channels").get<int>();
  config.model.bottleneck_channels = m.at("bottleneck_channels").get<int>();
  config.model.downsample_stages = m.at("downsample_stages").get<int>();
  config.model.residual_blocks_per_stage = m.at("residual_blocks_per_stage").get<int>();
  config.model.fusion_mode = parse_fusion_mode(m.at("fusion_mode").get<std::string>());
  config.model.critic_channels = m.at("critic_channels").get<int>();
  const auto& t = doc.at("train");
  config.train.learning_rate = t.at("learning_rate").get<double>();
  config.train.adam_beta1 = t.at("adam_beta1").get<double>();
  config.train.adam_beta2 = t.at("adam_beta2").get<double>();
  config.train.batch_size = t.at("batch_size").get<int>();
  config.train.epochs = t.at("epochs").get<int>();
  config.train.seed = t.at("seed").get<uint64_t>();
  config.train.checkpoint_interval = t.at("checkpoint_interval").get<int>();
  config.train.decay_start_epoch = t.at("decay_start_epoch").get<int>();
  const auto& w = t.at("weights");
  config.train.weights = {w.at("adv").get<double>(), w.at("cyc").get<double>(), w.at("idt").get<double>(),
                          w.at("hist").get<double>(), w.at("iv").get<double>()};
  return config;
}

}  // namespace

RunConfig apply_config_patch(const RunConfig& base, const json& patch) {
  auto doc = to_json(base);
  check_keys(doc, patch, "");
  doc.merge_patch(patch);
  try {
    auto config = from_json(doc);
    config.model.validate();
    config.train.validate();
    return config;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid config value: ") + e.what());
  }
}

RunConfig load_run_config(const std::filesystem::path& path, const RunConfig& base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  json patch;
  try {
    patch = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("malformed config file '" + path.string() + "': " + e.what());
  }
  return apply_config_patch(base, patch);
}

}  // namespace videogan
