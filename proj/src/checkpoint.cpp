#include "videogan/config.hpp"
#include "videogan/errors.hpp"
#include "videogan/trainer.hpp"

namespace videogan {
namespace {

std::vector<std::pair<std::string, torch::optim::Adam*>> named_optimizers(const ModelBundle& bundle) {
  return {{"opt_g", bundle.opt_g.get()},
          {"opt_d_a", bundle.opt_d_a.get()},
          {"opt_d_b", bundle.opt_d_b.get()},
          {"opt_c_a", bundle.opt_c_a.get()},
          {"opt_c_b", bundle.opt_c_b.get()}};
}

}  // namespace

void save_checkpoint(const ModelBundle& bundle, const std::filesystem::path& path) {
  torch::serialize::OutputArchive archive;
  archive.write("version", c10::IValue(kCheckpointVersion));
  archive.write("config", c10::IValue(to_json(bundle.config).dump()));
  archive.write("step", c10::IValue(bundle.step));
  archive.write("epoch", c10::IValue(static_cast<int64_t>(bundle.epoch)));
  for (const auto& [name, module] : bundle.nets.named_modules()) {
    torch::serialize::OutputArchive sub;
    module->save(sub);
    archive.write(name, sub);
  }
  for (const auto& [name, optimizer] : named_optimizers(bundle)) {
    torch::serialize::OutputArchive sub;
    optimizer->save(sub);
    archive.write(name, sub);
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  try {
    archive.save_to(path.string());
  } catch (const c10::Error& e) {
    throw CheckpointError("cannot write checkpoint '" + path.string() + "': " + e.what_without_backtrace());
  }
}

ModelBundle load_checkpoint(const std::filesystem::path& path) {
  if (!std::filesystem::is_regular_file(path)) throw CheckpointError("checkpoint '" + path.string() + "' not found");
  try {
    torch::serialize::InputArchive archive;
    archive.load_from(path.string());
    c10::IValue value;
    archive.read("version", value);
    if (value.toInt() != kCheckpointVersion) {
      throw CheckpointError("checkpoint '" + path.string() + "' has unsupported version " +
                            std::to_string(value.toInt()));
    }
    archive.read("config", value);
    const auto config = apply_config_patch(RunConfig{}, nlohmann::json::parse(value.toStringRef()));
    ModelBundle bundle = make_bundle(config);
    archive.read("step", value);
    bundle.step = value.toInt();
    archive.read("epoch", value);
    bundle.epoch = static_cast<int>(value.toInt());
    for (const auto& [name, module] : bundle.nets.named_modules()) {
      torch::serialize::InputArchive sub;
      archive.read(name, sub);
      module->load(sub);
    }
    for (const auto& [name, optimizer] : named_optimizers(bundle)) {
      torch::serialize::InputArchive sub;
      archive.read(name, sub);
      optimizer->load(sub);
    }
    return bundle;
  } catch (const c10::Error& e) {
    throw CheckpointError("cannot read checkpoint '" + path.string() + "': " + e.what_without_backtrace());
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError("checkpoint '" + path.string() + "' carries a malformed config: " + e.what());
  }
}

}  // namespace videogan
