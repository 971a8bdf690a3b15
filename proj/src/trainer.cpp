#include "videogan/trainer.hpp"

#include <cmath>
#include <fstream>
#include <random>

#include "videogan/config.hpp"
#include "videogan/errors.hpp"
#include "videogan/histogram.hpp"

namespace videogan {
namespace fs = std::filesystem;

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
    throw ConfigError("Adam betas must lie in [0, 1)");
  }
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (checkpoint_interval < 0) throw ConfigError("checkpoint_interval must be >= 0");
  weights.validate();
}

double TrainConfig::learning_rate_at(int epoch) const {
  if (decay_start_epoch < 0 || epoch < decay_start_epoch) return learning_rate;
  const double span = static_cast<double>(epochs - decay_start_epoch);
  return learning_rate * std::max(0.0, 1.0 - (epoch - decay_start_epoch) / span);
}

namespace {

uint64_t mix_seed(uint64_t seed, uint64_t a, uint64_t b = 0, uint64_t c = 0) {
  // splitmix64 over the combined words.
  uint64_t x = seed;
  for (uint64_t word : {a, b, c}) {
    x += 0x9E3779B97F4A7C15ULL + word;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    x ^= x >> 31;
  }
  return x;
}

void set_requires_grad(const std::vector<torch::Tensor>& params, bool flag) {
  for (auto p : params) p.requires_grad_(flag);
}

std::unique_ptr<torch::optim::Adam> make_adam(std::vector<torch::Tensor> params, const TrainConfig& t) {
  return std::make_unique<torch::optim::Adam>(
      std::move(params), torch::optim::AdamOptions(t.learning_rate).betas({t.adam_beta1, t.adam_beta2}));
}

std::vector<torch::Tensor> concat(std::vector<torch::Tensor> a, const std::vector<torch::Tensor>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

void check_finite(const LossReport& report, int64_t step) {
  for (const auto& [name, value] : report.terms) {
    if (!std::isfinite(value)) {
      throw NumericError("non-finite loss term '" + name + "' (" + std::to_string(value) + ") at step " +
                         std::to_string(step));
    }
  }
}

}  // namespace

std::vector<torch::Tensor> ModelBundle::generator_parameters() const {
  return concat(unique_parameters(*nets.g_ab), unique_parameters(*nets.g_ba));
}

std::vector<torch::Tensor> ModelBundle::critic_parameters() const {
  auto out = concat(unique_parameters(*nets.d_a), unique_parameters(*nets.d_b));
  out = concat(std::move(out), unique_parameters(*nets.c_a));
  return concat(std::move(out), unique_parameters(*nets.c_b));
}

void ModelBundle::set_learning_rate(double lr) {
  for (auto* opt : {opt_g.get(), opt_d_a.get(), opt_d_b.get(), opt_c_a.get(), opt_c_b.get()}) {
    for (auto& group : opt->param_groups()) static_cast<torch::optim::AdamOptions&>(group.options()).lr(lr);
  }
}

ModelBundle make_bundle(const RunConfig& config) {
  config.model.validate();
  config.train.validate();
  ModelBundle bundle;
  bundle.config = config;
  bundle.nets = build_models(config.model, config.train.seed);
  const auto& t = config.train;
  bundle.opt_g = make_adam(bundle.generator_parameters(), t);
  bundle.opt_d_a = make_adam(unique_parameters(*bundle.nets.d_a), t);
  bundle.opt_d_b = make_adam(unique_parameters(*bundle.nets.d_b), t);
  bundle.opt_c_a = make_adam(unique_parameters(*bundle.nets.c_a), t);
  bundle.opt_c_b = make_adam(unique_parameters(*bundle.nets.c_b), t);
  return bundle;
}

PairBatch make_batch(std::span<const FramePair> pairs, Domain domain) {
  if (pairs.empty()) throw ShapeError("cannot build an empty batch");
  std::vector<torch::Tensor> sources, references;
  std::vector<double> targets;
  for (const auto& pair : pairs) {
    sources.push_back(pair.source.to_signed().pixels());
    references.push_back(pair.reference.to_signed().pixels());
    const auto rcd = relative_color_distribution(pair.source.to_unit(), pair.reference.to_unit());
    targets.insert(targets.end(), rcd.values.begin(), rcd.values.end());
  }
  const auto n = static_cast<int64_t>(pairs.size());
  return {domain, torch::stack(sources), torch::stack(references),
          torch::tensor(targets, torch::kFloat64).view({n, kHistogramLength}).to(torch::kFloat32)};
}

LossReport train_step(ModelBundle& bundle, const PairBatch& batch_a, const PairBatch& batch_b,
                      const PairBatch& real_a, const PairBatch& real_b, const PhaseHook& on_phase) {
  using namespace loss_terms;
  if (batch_a.domain != Domain::kA || real_a.domain != Domain::kA) {
    throw DomainError("train_step expected domain A batches in the A slots");
  }
  if (batch_b.domain != Domain::kB || real_b.domain != Domain::kB) {
    throw DomainError("train_step expected domain B batches in the B slots");
  }
  auto& n = bundle.nets;
  const auto& w = bundle.config.train.weights;
  const auto critic_params = bundle.critic_parameters();
  LossReport report;
  auto record = [&](const char* name, const torch::Tensor& value) { report.terms[name] = value.item<double>(); };

  // Generator phase: critics frozen.
  set_requires_grad(critic_params, false);
  bundle.opt_g->zero_grad();
  auto fake_b = n.g_ab->forward(batch_a.source, batch_a.reference);
  auto rec_a = n.g_ba->forward(fake_b.first, fake_b.second);
  auto fake_a = n.g_ba->forward(batch_b.source, batch_b.reference);
  auto rec_b = n.g_ab->forward(fake_a.first, fake_a.second);
  auto idt_b = n.g_ab->forward(batch_b.source, batch_b.reference);
  auto idt_a = n.g_ba->forward(batch_a.source, batch_a.reference);

  const auto adv_ab = adversarial_g(n.d_b->forward(torch::cat({fake_b.first, fake_b.second})));
  const auto adv_ba = adversarial_g(n.d_a->forward(torch::cat({fake_a.first, fake_a.second})));
  const auto val_b = n.c_b->forward(fake_b.first, fake_b.second);
  const auto val_a = n.c_a->forward(fake_a.first, fake_a.second);
  const auto hist_ab = hist_loss(val_b.hist, batch_a.hist_rcd);
  const auto hist_ba = hist_loss(val_a.hist, batch_b.hist_rcd);
  const auto iv_ab = intra_video_g(val_b.iv);
  const auto iv_ba = intra_video_g(val_a.iv);
  const auto cyc = cycle_loss(batch_a.source, batch_a.reference, rec_a.first, rec_a.second) +
                   cycle_loss(batch_b.source, batch_b.reference, rec_b.first, rec_b.second);
  const auto idt = identity_loss(idt_b.first, idt_b.second, batch_b.source, batch_b.reference) +
                   identity_loss(idt_a.first, idt_a.second, batch_a.source, batch_a.reference);
  const auto g_total = w.adv * (adv_ab + adv_ba) + w.hist * (hist_ab + hist_ba) + w.iv * (iv_ab + iv_ba) +
                       w.cyc * cyc + w.idt * idt;
  record(kAdvAB, adv_ab);
  record(kAdvBA, adv_ba);
  record(kHistAB, hist_ab);
  record(kHistBA, hist_ba);
  record(kIvAB, iv_ab);
  record(kIvBA, iv_ba);
  record(kCyc, cyc);
  record(kIdt, idt);
  check_finite(report, bundle.step);
  g_total.backward();
  bundle.opt_g->step();
  set_requires_grad(critic_params, true);
  if (on_phase) on_phase(TrainPhase::kGenerator);

  // Critic phase on the translations produced before the generator update.
  for (auto* opt : {bundle.opt_d_a.get(), bundle.opt_d_b.get(), bundle.opt_c_a.get(), bundle.opt_c_b.get()}) {
    opt->zero_grad();
  }
  const auto fb_src = fake_b.first.detach(), fb_ref = fake_b.second.detach();
  const auto fa_src = fake_a.first.detach(), fa_ref = fake_a.second.detach();
  const auto disc_b = adversarial_d(n.d_b->forward(torch::cat({batch_b.source, batch_b.reference})),
                                    n.d_b->forward(torch::cat({fb_src, fb_ref})));
  const auto disc_a = adversarial_d(n.d_a->forward(torch::cat({batch_a.source, batch_a.reference})),
                                    n.d_a->forward(torch::cat({fa_src, fa_ref})));
  const auto real_val_b = n.c_b->forward(real_b.source, real_b.reference);
  const auto real_val_a = n.c_a->forward(real_a.source, real_a.reference);
  const auto val_hist_b = hist_loss(real_val_b.hist, real_b.hist_rcd);
  const auto val_hist_a = hist_loss(real_val_a.hist, real_a.hist_rcd);
  const auto val_iv_b = intra_video_c(real_val_b.iv, n.c_b->forward(fb_src, fb_ref).iv);
  const auto val_iv_a = intra_video_c(real_val_a.iv, n.c_a->forward(fa_src, fa_ref).iv);
  const auto c_total = disc_a + disc_b + val_hist_a + val_hist_b + val_iv_a + val_iv_b;
  record(kDiscA, disc_a);
  record(kDiscB, disc_b);
  record(kValHistA, val_hist_a);
  record(kValHistB, val_hist_b);
  record(kValIvA, val_iv_a);
  record(kValIvB, val_iv_b);
  check_finite(report, bundle.step);
  c_total.backward();
  for (auto* opt : {bundle.opt_d_a.get(), bundle.opt_d_b.get(), bundle.opt_c_a.get(), bundle.opt_c_b.get()}) {
    opt->step();
  }
  if (on_phase) on_phase(TrainPhase::kCritic);

  report.total = total_objective(report, w);
  report.critic_total = c_total.item<double>();
  ++bundle.step;
  return report;
}

namespace {

std::vector<FramePair> epoch_pairs(const std::vector<VideoClip>& clips, uint64_t seed, int epoch, uint64_t tag) {
  std::vector<FramePair> pairs;
  for (const auto& clip : clips) {
    auto clip_pairs = iterate_pairs(clip);
    pairs.insert(pairs.end(), clip_pairs.begin(), clip_pairs.end());
  }
  std::mt19937_64 rng(mix_seed(seed, tag, static_cast<uint64_t>(epoch)));
  std::shuffle(pairs.begin(), pairs.end(), rng);
  return pairs;
}

std::vector<FramePair> real_pairs(const std::vector<VideoClip>& clips, uint64_t seed, int64_t step, uint64_t tag,
                                  int count) {
  std::vector<FramePair> out;
  for (int i = 0; i < count; ++i) {
    const uint64_t draw = mix_seed(seed, tag, static_cast<uint64_t>(step), static_cast<uint64_t>(i));
    const auto& clip = clips[draw % clips.size()];
    out.push_back(sample_real_pair(clip, mix_seed(draw, 1)));
  }
  return out;
}

void check_domain_clips(const std::vector<VideoClip>& clips, Domain domain) {
  if (clips.empty()) throw DomainError("domain " + to_string(domain) + " has no clips");
  for (const auto& clip : clips) {
    if (clip.domain != domain) {
      throw DomainError("clip '" + clip.clip_id + "' is labeled " + to_string(clip.domain) + " but was supplied as " +
                        to_string(domain));
    }
    if (clip.size() < 2) throw ShapeError("clip '" + clip.clip_id + "' needs at least two frames");
  }
}

nlohmann::json report_json(const LossReport& report, int epoch, int64_t step) {
  nlohmann::json record{{"epoch", epoch}, {"step", step}};
  for (const auto& [name, value] : report.terms) record[name] = value;
  record["total"] = report.total;
  record["critic_total"] = report.critic_total;
  return record;
}

std::string checkpoint_name(int epoch) {
  char name[64];
  std::snprintf(name, sizeof(name), "checkpoint_epoch_%04d.pt", epoch);
  return name;
}

}  // namespace

void train_clips(ModelBundle& bundle, const std::vector<VideoClip>& clips_a, const std::vector<VideoClip>& clips_b,
                 const TrainOptions& options) {
  check_domain_clips(clips_a, Domain::kA);
  check_domain_clips(clips_b, Domain::kB);
  const auto& t = bundle.config.train;
  std::ofstream log;
  if (!options.output_dir.empty()) {
    fs::create_directories(options.output_dir);
    log.open(options.output_dir / "log.jsonl", std::ios::app);
    if (!log) throw Error("cannot open training log in '" + options.output_dir.string() + "'");
  }
  for (int epoch = bundle.epoch; epoch < t.epochs; ++epoch) {
    bundle.set_learning_rate(t.learning_rate_at(epoch));
    const auto pairs_a = epoch_pairs(clips_a, t.seed, epoch, 0);
    const auto pairs_b = epoch_pairs(clips_b, t.seed, epoch, 1);
    const auto longest = std::max(pairs_a.size(), pairs_b.size());
    const auto bs = static_cast<size_t>(t.batch_size);
    const auto steps = (longest + bs - 1) / bs;
    for (size_t s = 0; s < steps; ++s) {
      std::vector<FramePair> chunk_a, chunk_b;
      for (size_t i = 0; i < bs; ++i) {
        chunk_a.push_back(pairs_a[(s * bs + i) % pairs_a.size()]);
        chunk_b.push_back(pairs_b[(s * bs + i) % pairs_b.size()]);
      }
      const auto real_a = real_pairs(clips_a, t.seed, bundle.step, 2, t.batch_size);
      const auto real_b = real_pairs(clips_b, t.seed, bundle.step, 3, t.batch_size);
      const int64_t step = bundle.step;
      const auto report = train_step(bundle, make_batch(chunk_a, Domain::kA), make_batch(chunk_b, Domain::kB),
                                     make_batch(real_a, Domain::kA), make_batch(real_b, Domain::kB));
      if (log) log << report_json(report, epoch, step).dump() << '\n';
      if (options.on_step) options.on_step(step, report);
    }
    bundle.epoch = epoch + 1;
    if (log) log.flush();
    if (!options.output_dir.empty() && t.checkpoint_interval > 0 && bundle.epoch % t.checkpoint_interval == 0) {
      save_checkpoint(bundle, options.output_dir / checkpoint_name(bundle.epoch));
    }
  }
}

std::vector<VideoClip> load_domain_clips(const DatasetManifest& manifest, Domain domain, int frame_size,
                                         int downsample_factor) {
  std::vector<VideoClip> clips;
  for (const auto& entry : manifest.clips) {
    if (entry.domain != domain) {
      throw DomainError("manifest clip '" + entry.id + "' is labeled " + to_string(entry.domain) + ", expected " +
                        to_string(domain));
    }
    clips.push_back(load_clip(manifest, entry.id, frame_size, RangeTag::kUnit, downsample_factor));
  }
  if (clips.empty()) throw DomainError("domain " + to_string(domain) + " manifest lists no clips");
  return clips;
}

ModelBundle train(const DatasetManifest& manifest_a, const DatasetManifest& manifest_b, const RunConfig& config,
                  const fs::path& output_dir, const std::optional<fs::path>& resume_from) {
  config.model.validate();
  config.train.validate();
  const auto clips_a =
      load_domain_clips(manifest_a, Domain::kA, config.model.frame_size, config.model.downsample_factor());
  const auto clips_b =
      load_domain_clips(manifest_b, Domain::kB, config.model.frame_size, config.model.downsample_factor());

  ModelBundle bundle = resume_from ? load_checkpoint(*resume_from) : make_bundle(config);
  if (resume_from) {
    if (to_json(RunConfig{bundle.config.model, {}}) != to_json(RunConfig{config.model, {}})) {
      throw ConfigError("checkpoint model configuration differs from the requested one");
    }
    bundle.config.train = config.train;
  }

  fs::create_directories(output_dir);
  {
    std::ofstream meta(output_dir / "run.json");
    if (!meta) throw Error("cannot write run metadata in '" + output_dir.string() + "'");
    nlohmann::json doc{{"config", to_json(bundle.config)},
                       {"checkpoint_version", kCheckpointVersion},
                       {"start_epoch", bundle.epoch},
                       {"domain_a_clips", clips_a.size()},
                       {"domain_b_clips", clips_b.size()}};
    if (resume_from) doc["resumed_from"] = resume_from->string();
    meta << doc.dump(2) << '\n';
  }
  train_clips(bundle, clips_a, clips_b, {output_dir, {}});
  save_checkpoint(bundle, output_dir / "final.pt");
  return bundle;
}

Direction parse_direction(const std::string& text) {
  if (text == "ab" || text == "AB" || text == "a2b") return Direction::kAB;
  if (text == "ba" || text == "BA" || text == "b2a") return Direction::kBA;
  throw ConfigError("unknown direction '" + text + "' (expected ab or ba)");
}

std::string to_string(Direction direction) { return direction == Direction::kAB ? "ab" : "ba"; }
Domain source_domain(Direction direction) { return direction == Direction::kAB ? Domain::kA : Domain::kB; }
Domain target_domain(Direction direction) { return direction == Direction::kAB ? Domain::kB : Domain::kA; }

PairTranslator generator_translator(XShapeGenerator generator) {
  return [generator](const torch::Tensor& source, const torch::Tensor& reference) mutable {
    const bool was_training = generator->is_training();
    generator->eval();
    torch::NoGradGuard no_grad;
    auto out = generator->forward(source, reference);
    generator->train(was_training);
    return out;
  };
}

VideoClip translate_clip(const PairTranslator& translator, const VideoClip& clip, Direction direction) {
  clip.validate();
  if (clip.domain != source_domain(direction)) {
    throw DomainError("clip '" + clip.clip_id + "' belongs to domain " + to_string(clip.domain) +
                      " but direction " + to_string(direction) + " translates from " +
                      to_string(source_domain(direction)));
  }
  if (clip.size() < 2) throw ShapeError("clip '" + clip.clip_id + "' needs at least two frames to translate");

  const auto pairs = iterate_pairs(clip);
  const auto reference = clip.reference().to_signed().pixels();
  VideoClip out{clip.clip_id, target_domain(direction), std::vector<Frame>(clip.frames.size()),
                clip.reference_index};
  constexpr size_t kChunk = 8;
  for (size_t start = 0; start < pairs.size(); start += kChunk) {
    const size_t end = std::min(pairs.size(), start + kChunk);
    std::vector<torch::Tensor> sources;
    for (size_t i = start; i < end; ++i) sources.push_back(pairs[i].source.to_signed().pixels());
    const auto src = torch::stack(sources);
    const auto ref = reference.unsqueeze(0).expand_as(src).contiguous();
    const auto [translated, translated_ref] = translator(src, ref);
    for (size_t i = start; i < end; ++i) {
      out.frames[pairs[i].source_index] =
          Frame(translated[static_cast<int64_t>(i - start)].clamp(-1.0, 1.0), RangeTag::kSigned).to_unit();
    }
    if (start == 0) out.frames[clip.reference_index] = Frame(translated_ref[0].clamp(-1.0, 1.0), RangeTag::kSigned).to_unit();
  }
  return out;
}

VideoClip translate_clip(ModelBundle& bundle, const VideoClip& clip, Direction direction) {
  auto generator = direction == Direction::kAB ? bundle.nets.g_ab : bundle.nets.g_ba;
  return translate_clip(generator_translator(generator), clip, direction);
}

}  // namespace videogan
