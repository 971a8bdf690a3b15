#include "videogan/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "videogan/config.hpp"
#include "videogan/data_pipeline.hpp"
#include "videogan/errors.hpp"
#include "videogan/evaluation.hpp"
#include "videogan/trainer.hpp"
#include "videogan/verification.hpp"

namespace videogan::cli {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path default_output(const std::string& subcommand) {
  const char* root = std::getenv(kOutputRootEnv);
  return fs::path(root && *root ? root : "videogan_out") / subcommand;
}

void write_resolved(const fs::path& out, const std::string& subcommand, json resolved) {
  fs::create_directories(out);
  resolved["subcommand"] = subcommand;
  std::ofstream file(out / "resolved_config.json");
  if (!file) throw Error("cannot write resolved config into '" + out.string() + "'");
  file << resolved.dump(2) << '\n';
}

std::string category(const Error& e) {
  if (dynamic_cast<const ManifestError*>(&e)) return "manifest";
  if (dynamic_cast<const ImageError*>(&e)) return "image";
  if (dynamic_cast<const ShapeError*>(&e)) return "shape";
  if (dynamic_cast<const RangeError*>(&e)) return "range";
  if (dynamic_cast<const ConfigError*>(&e)) return "config";
  if (dynamic_cast<const DomainError*>(&e)) return "domain";
  if (dynamic_cast<const NumericError*>(&e)) return "numeric";
  if (dynamic_cast<const CheckpointError*>(&e)) return "checkpoint";
  return "runtime";
}

std::array<double, 3> to_array3(const std::vector<double>& v, const char* flag) {
  if (v.size() != 3) throw ConfigError(std::string(flag) + " takes exactly three values");
  return {v[0], v[1], v[2]};
}

struct Options {
  fs::path out;
  uint64_t seed = 0;
  bool seed_set = false;
  // prepare
  fs::path frames_dir;
  std::string domain = "A";
  int reference_index = 0;
  // synth
  int clips = 4, frames = 8, heldout = 2;
  std::vector<double> gain{1.3, 1.0, 0.75}, bias{0.0, 0.0, 0.0}, gamma{1.2, 1.2, 1.2};
  // train
  fs::path domain_a, domain_b, config, resume;
  std::optional<int> epochs, frame_size, base_channels, bottleneck_channels, stages, critic_channels, batch_size,
      checkpoint_interval;
  std::optional<double> learning_rate;
  std::optional<std::string> fusion;
  std::vector<double> weights;
  bool unit_weights = false;
  // translate / evaluate
  fs::path checkpoint, manifest, ground_truth;
  std::string direction = "ab";
  // gradcheck / selftest
  double tolerance = 1e-4;
  int steps = 300;
  bool verbose = false;
};

int cmd_prepare(const Options& o) {
  const auto out = o.out.empty() ? default_output("prepare") : o.out;
  const auto manifest = manifest_from_directory(o.frames_dir, parse_domain(o.domain), o.reference_index);
  write_resolved(out, "prepare",
                 {{"frames_dir", o.frames_dir.string()}, {"domain", o.domain}, {"reference_index", o.reference_index}});
  save_manifest(manifest, out / "manifest.json");
  std::cout << "wrote " << (out / "manifest.json").string() << " (" << manifest.clips.size() << " clips, "
            << manifest.frame_count() << " frames)\n";
  return kExitOk;
}

int cmd_synth(const Options& o) {
  const auto out = o.out.empty() ? default_output("synth") : o.out;
  const int size = o.frame_size.value_or(64);
  ColorTransformSpec transform{to_array3(o.gain, "--gain"), to_array3(o.bias, "--bias"), to_array3(o.gamma, "--gamma")};
  transform.validate();
  write_resolved(out, "synth",
                 {{"seed", o.seed}, {"clips_per_domain", o.clips}, {"frames", o.frames}, {"heldout", o.heldout},
                  {"frame_size", size}, {"gain", transform.gain}, {"bias", transform.bias}, {"gamma", transform.gamma}});
  std::vector<VideoClip> base;
  for (int i = 0; i < 2 * o.clips; ++i) {
    base.push_back(generate_moving_shapes_clip("clip" + std::to_string(i), o.frames, size, o.seed * 1000 + i));
  }
  const auto domains = synthesize_domain_pair(base, transform, o.seed);
  write_clips(domains.domain_a, out / "data" / "domain_a", out / "domain_a.json");
  write_clips(domains.domain_b, out / "data" / "domain_b", out / "domain_b.json");
  if (o.heldout > 0) {
    std::vector<VideoClip> heldout, truth;
    for (int i = 0; i < o.heldout; ++i) {
      auto clip = generate_moving_shapes_clip("heldout" + std::to_string(i), o.frames, size, o.seed * 1000 + 500 + i);
      auto gt = apply_color_transform(clip, transform);
      gt.domain = Domain::kB;
      heldout.push_back(std::move(clip));
      truth.push_back(std::move(gt));
    }
    write_clips(heldout, out / "data" / "heldout_a", out / "heldout_a.json");
    write_clips(truth, out / "data" / "heldout_a_truth", out / "heldout_a_truth.json");
  }
  save_transform(transform, out / "transform.json");
  std::cout << "wrote synthetic domains to " << out.string() << '\n';
  return kExitOk;
}

RunConfig resolve_run_config(const Options& o) {
  RunConfig config;
  if (!o.config.empty()) config = load_run_config(o.config, config);
  json patch = json::object();
  auto& m = patch["model"] = json::object();
  auto& t = patch["train"] = json::object();
  if (o.frame_size) m["frame_size"] = *o.frame_size;
  if (o.base_channels) m["base_channels"] = *o.base_channels;
  if (o.bottleneck_channels) m["bottleneck_channels"] = *o.bottleneck_channels;
  if (o.stages) m["downsample_stages"] = *o.stages;
  if (o.critic_channels) m["critic_channels"] = *o.critic_channels;
  if (o.fusion) m["fusion_mode"] = to_string(parse_fusion_mode(*o.fusion));
  if (o.epochs) t["epochs"] = *o.epochs;
  if (o.batch_size) t["batch_size"] = *o.batch_size;
  if (o.checkpoint_interval) t["checkpoint_interval"] = *o.checkpoint_interval;
  if (o.learning_rate) t["learning_rate"] = *o.learning_rate;
  if (o.seed_set) t["seed"] = o.seed;
  if (o.unit_weights) t["weights"] = {{"adv", 1.0}, {"cyc", 1.0}, {"idt", 1.0}, {"hist", 1.0}, {"iv", 1.0}};
  if (!o.weights.empty()) {
    if (o.weights.size() != 5) throw ConfigError("--weights takes five values: adv cyc idt hist iv");
    t["weights"] = {{"adv", o.weights[0]}, {"cyc", o.weights[1]}, {"idt", o.weights[2]},
                    {"hist", o.weights[3]}, {"iv", o.weights[4]}};
  }
  return apply_config_patch(config, patch);
}

int cmd_train(const Options& o) {
  const auto out = o.out.empty() ? default_output("train") : o.out;
  const auto config = resolve_run_config(o);
  auto resolved = to_json(config);
  resolved["domain_a"] = o.domain_a.string();
  resolved["domain_b"] = o.domain_b.string();
  write_resolved(out, "train", resolved);
  const auto manifest_a = load_manifest(o.domain_a);
  const auto manifest_b = load_manifest(o.domain_b);
  std::optional<fs::path> resume;
  if (!o.resume.empty()) resume = o.resume;
  const auto bundle = train(manifest_a, manifest_b, config, out, resume);
  std::cout << "trained " << bundle.step << " steps over " << bundle.epoch << " epochs; checkpoint "
            << (out / "final.pt").string() << '\n';
  return kExitOk;
}

int cmd_translate(const Options& o) {
  const auto out = o.out.empty() ? default_output("translate") : o.out;
  const auto direction = parse_direction(o.direction);
  write_resolved(out, "translate",
                 {{"checkpoint", o.checkpoint.string()}, {"manifest", o.manifest.string()}, {"direction", o.direction}});
  auto bundle = load_checkpoint(o.checkpoint);
  const auto manifest = load_manifest(o.manifest);
  const auto& model = bundle.config.model;
  std::vector<VideoClip> translated;
  for (const auto& entry : manifest.clips) {
    const auto clip = load_clip(manifest, entry.id, model.frame_size, RangeTag::kUnit, model.downsample_factor());
    translated.push_back(translate_clip(bundle, clip, direction));
  }
  write_clips(translated, out / "frames", out / "translated.json");
  std::cout << "translated " << translated.size() << " clips into " << out.string() << '\n';
  return kExitOk;
}

int cmd_evaluate(const Options& o) {
  const auto out = o.out.empty() ? default_output("evaluate") : o.out;
  const auto direction = parse_direction(o.direction);
  write_resolved(out, "evaluate",
                 {{"checkpoint", o.checkpoint.string()}, {"manifest", o.manifest.string()}, {"direction", o.direction},
                  {"ground_truth", o.ground_truth.string()}});
  auto bundle = load_checkpoint(o.checkpoint);
  const auto manifest = load_manifest(o.manifest);
  std::optional<DatasetManifest> truth;
  if (!o.ground_truth.empty()) truth = load_manifest(o.ground_truth);
  const auto report = evaluate_run(bundle, manifest, direction, truth, out);
  std::cout << report.to_json()["aggregate"].dump(2) << '\n';
  return kExitOk;
}

int cmd_gradcheck(const Options& o) {
  const auto out = o.out.empty() ? default_output("gradcheck") : o.out;
  write_resolved(out, "gradcheck", {{"seed", o.seed}, {"tolerance", o.tolerance}});
  const auto rows = run_gradcheck_suite(o.seed, o.tolerance);
  bool ok = true;
  json doc = json::array();
  std::cout << std::left << std::setw(26) << "term" << std::setw(10) << "elements" << "max relative error\n";
  for (const auto& row : rows) {
    std::cout << std::left << std::setw(26) << row.name << std::setw(10) << row.elements << std::scientific
              << std::setprecision(3) << row.max_relative_error << (row.passed ? "" : "  FAIL") << '\n'
              << std::defaultfloat;
    doc.push_back({{"term", row.name}, {"elements", row.elements}, {"max_relative_error", row.max_relative_error},
                   {"passed", row.passed}});
    ok = ok && row.passed;
  }
  std::ofstream(out / "gradcheck.json") << doc.dump(2) << '\n';
  return ok ? kExitOk : kExitThreshold;
}

int cmd_selftest(const Options& o) {
  const auto out = o.out.empty() ? default_output("selftest") : o.out;
  ToyExperimentOptions options;
  options.seed = o.seed;
  options.min_steps = o.steps;
  if (o.fusion) options.fusion_mode = parse_fusion_mode(*o.fusion);
  if (o.learning_rate) options.learning_rate = *o.learning_rate;
  if (!o.weights.empty()) {
    if (o.weights.size() != 5) throw ConfigError("--weights takes five values: adv cyc idt hist iv");
    options.weights = {o.weights[0], o.weights[1], o.weights[2], o.weights[3], o.weights[4]};
  }
  options.output_dir = out;
  options.verbose = o.verbose;
  const SelftestThresholds thresholds;
  write_resolved(out, "selftest",
                 {{"seed", o.seed}, {"min_steps", o.steps}, {"frame_size", options.frame_size},
                  {"base_channels", options.base_channels}, {"fusion_mode", to_string(options.fusion_mode)},
                  {"learning_rate", options.learning_rate},
                  {"weights",
                   {{"adv", options.weights.adv}, {"cyc", options.weights.cyc}, {"idt", options.weights.idt},
                    {"hist", options.weights.hist}, {"iv", options.weights.iv}}},
                  {"thresholds",
                   {{"min_color_error_reduction", thresholds.min_color_error_reduction},
                    {"min_content_preservation", thresholds.min_content_preservation},
                    {"max_std_ratio", thresholds.max_std_ratio},
                    {"max_hist_rcd_preservation", thresholds.max_hist_rcd_preservation}}}});
  const auto result = run_toy_experiment(options);
  const auto verdict = judge_selftest(result, thresholds);
  auto line = [](bool pass, const std::string& text) {
    std::cout << (pass ? "[PASS] " : "[FAIL] ") << text << '\n';
  };
  std::cout << "steps trained: " << result.steps << '\n';
  line(verdict.color_moved, "color error " + std::to_string(result.translated_color_error) + " vs untranslated " +
                                std::to_string(result.baseline_color_error) + " (need <= 50%)");
  line(verdict.content_kept, "content preservation " + std::to_string(result.content_preservation) + " (need >= 0.7)");
  line(verdict.consistency_kept,
       "intra-video std translated (" + std::to_string(result.translated_color_std[0]) + ", " +
           std::to_string(result.translated_color_std[1]) + ", " + std::to_string(result.translated_color_std[2]) +
           ") vs source (" + std::to_string(result.source_color_std[0]) + ", " +
           std::to_string(result.source_color_std[1]) + ", " + std::to_string(result.source_color_std[2]) +
           ") (need <= 2x)");
  line(verdict.hist_rcd_kept, "hist_rcd preservation " + std::to_string(result.hist_rcd_preservation) + " (need <= 0.1)");
  std::ofstream(out / "selftest_report.json") << result.report.to_json().dump(2) << '\n';
  return verdict.passed() ? kExitOk : kExitThreshold;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"Unpaired video-to-video translation with X-shape generators"};
  app.require_subcommand(1);
  Options o;

  auto add_out = [&](CLI::App* sub) { sub->add_option("--out", o.out, "Output directory"); };
  auto add_seed = [&](CLI::App* sub) {
    sub->add_option_function<uint64_t>(
        "--seed", [&](const uint64_t& v) { o.seed = v; o.seed_set = true; }, "Random seed");
  };

  auto* prepare = app.add_subcommand("prepare", "Build a manifest from a directory of clip folders");
  prepare->add_option("--frames-dir", o.frames_dir, "Directory with one subdirectory per clip")->required();
  prepare->add_option("--domain", o.domain, "Domain label (A or B)")->required();
  prepare->add_option("--reference-index", o.reference_index, "Reference frame index for every clip");
  add_out(prepare);
  add_seed(prepare);

  auto* synth = app.add_subcommand("synth", "Generate a synthetic domain pair with a known color transform");
  synth->add_option("--clips", o.clips, "Clips per domain");
  synth->add_option("--frames", o.frames, "Frames per clip");
  synth->add_option("--heldout", o.heldout, "Held-out domain-A clips with ground truth");
  synth->add_option("--frame-size", o.frame_size, "Frame side length");
  synth->add_option("--gain", o.gain, "Per-channel gain")->expected(3);
  synth->add_option("--bias", o.bias, "Per-channel bias")->expected(3);
  synth->add_option("--gamma", o.gamma, "Per-channel gamma")->expected(3);
  add_out(synth);
  add_seed(synth);

  auto* train_cmd = app.add_subcommand("train", "Train all six networks");
  train_cmd->add_option("--domain-a", o.domain_a, "Domain A manifest")->required();
  train_cmd->add_option("--domain-b", o.domain_b, "Domain B manifest")->required();
  train_cmd->add_option("--config", o.config, "JSON config overlay");
  train_cmd->add_option("--epochs", o.epochs);
  train_cmd->add_option("--frame-size", o.frame_size);
  train_cmd->add_option("--base-channels", o.base_channels);
  train_cmd->add_option("--bottleneck-channels", o.bottleneck_channels);
  train_cmd->add_option("--stages", o.stages, "Encoder downsampling stages");
  train_cmd->add_option("--critic-channels", o.critic_channels);
  train_cmd->add_option("--batch-size", o.batch_size);
  train_cmd->add_option("--lr", o.learning_rate);
  train_cmd->add_option("--checkpoint-interval", o.checkpoint_interval);
  train_cmd->add_option("--fusion", o.fusion, "dense, share or none")
      ->check(CLI::IsMember({"dense", "share", "none"}));
  train_cmd->add_option("--weights", o.weights, "adv cyc idt hist iv")->expected(5);
  train_cmd->add_flag("--unit-weights", o.unit_weights, "Use an unweighted sum of all terms");
  train_cmd->add_option("--resume", o.resume, "Checkpoint to continue from");
  add_out(train_cmd);
  add_seed(train_cmd);

  auto* translate = app.add_subcommand("translate", "Translate every clip of a manifest");
  translate->add_option("--checkpoint", o.checkpoint)->required();
  translate->add_option("--manifest", o.manifest)->required();
  translate->add_option("--direction", o.direction)->check(CLI::IsMember({"ab", "ba"}));
  add_out(translate);
  add_seed(translate);

  auto* evaluate = app.add_subcommand("evaluate", "Translate and score every clip of a manifest");
  evaluate->add_option("--checkpoint", o.checkpoint)->required();
  evaluate->add_option("--manifest", o.manifest)->required();
  evaluate->add_option("--ground-truth", o.ground_truth, "Manifest of ground-truth translations");
  evaluate->add_option("--direction", o.direction)->check(CLI::IsMember({"ab", "ba"}));
  add_out(evaluate);
  add_seed(evaluate);

  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference gradient checks of all losses");
  gradcheck->add_option("--tolerance", o.tolerance);
  add_out(gradcheck);
  add_seed(gradcheck);

  auto* selftest = app.add_subcommand("selftest", "Self-contained toy training run with pass thresholds");
  selftest->add_option("--steps", o.steps, "Minimum number of training steps");
  selftest->add_option("--fusion", o.fusion)->check(CLI::IsMember({"dense", "share", "none"}));
  selftest->add_option("--lr", o.learning_rate);
  selftest->add_option("--weights", o.weights, "adv cyc idt hist iv")->expected(5);
  selftest->add_flag("--verbose", o.verbose);
  add_out(selftest);
  add_seed(selftest);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e);
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    app.exit(e);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (prepare->parsed()) return cmd_prepare(o);
    if (synth->parsed()) return cmd_synth(o);
    if (train_cmd->parsed()) return cmd_train(o);
    if (translate->parsed()) return cmd_translate(o);
    if (evaluate->parsed()) return cmd_evaluate(o);
    if (gradcheck->parsed()) return cmd_gradcheck(o);
    if (selftest->parsed()) return cmd_selftest(o);
  } catch (const Error& e) {
    std::cerr << "error [" << category(e) << "]: " << e.what() << '\n';
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error [runtime]: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace videogan::cli
