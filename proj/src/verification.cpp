#include "videogan/verification.hpp"

#include <cmath>
#include <functional>
#include <iostream>
#include <random>

#include "videogan/data_pipeline.hpp"
#include "videogan/histogram.hpp"
#include "videogan/losses.hpp"

namespace videogan {
namespace {

using ScalarFn = std::function<torch::Tensor(const torch::Tensor&)>;

double max_relative_error(const ScalarFn& fn, torch::Tensor input) {
  constexpr double kStep = 1e-6;
  input = input.to(torch::kFloat64).detach().clone().requires_grad_(true);
  fn(input).backward();
  const auto analytic = input.grad().clone();
  auto probe = input.detach().clone();
  auto flat = probe.view({-1});
  double worst = 0.0;
  for (int64_t i = 0; i < flat.numel(); ++i) {
    const double original = flat[i].item<double>();
    flat[i] = original + kStep;
    const double up = fn(probe).item<double>();
    flat[i] = original - kStep;
    const double down = fn(probe).item<double>();
    flat[i] = original;
    const double numeric = (up - down) / (2.0 * kStep);
    const double a = analytic.view({-1})[i].item<double>();
    const double denom = std::max({std::abs(a), std::abs(numeric), 1e-6});
    worst = std::max(worst, std::abs(a - numeric) / denom);
  }
  return worst;
}

// Values at least `gap` away from the matching entries of `avoid`, so
// absolute-value kinks stay outside the finite-difference stencil.
torch::Tensor away_from(const torch::Tensor& avoid, double gap, torch::Generator& gen) {
  auto out = avoid + (torch::rand(avoid.sizes(), gen, torch::kFloat64) * 0.4 + gap) *
                         (torch::randint(0, 2, avoid.sizes(), gen, torch::kFloat64) * 2 - 1);
  return out;
}

}  // namespace

std::vector<GradcheckRow> run_gradcheck_suite(uint64_t seed, double tolerance) {
  auto gen = at::make_generator<at::CPUGeneratorImpl>(seed);
  const auto opts = torch::kFloat64;
  std::vector<GradcheckRow> rows;
  auto add = [&](const std::string& name, const ScalarFn& fn, const torch::Tensor& input) {
    const double err = max_relative_error(fn, input);
    rows.push_back({name, input.numel(), err, err <= tolerance});
  };

  add("adversarial_g", [](const torch::Tensor& x) { return adversarial_g(x); },
      torch::randn({1, 1, 8, 8}, gen, opts));
  add("adversarial_d", [](const torch::Tensor& x) { return adversarial_d(x.slice(0, 0, 32), x.slice(0, 32, 64)); },
      torch::randn({64}, gen, opts));

  const auto source = torch::rand({1, 3, 2, 2}, gen, opts) * 2 - 1;
  const auto reference = torch::rand({1, 3, 2, 2}, gen, opts) * 2 - 1;
  const auto targets = torch::cat({source.view({-1}), reference.view({-1})});
  const auto split_pair = [source](const torch::Tensor& x) {
    return std::pair{x.slice(0, 0, 12).view_as(source), x.slice(0, 12, 24).view_as(source)};
  };
  add("cycle_loss",
      [=](const torch::Tensor& x) {
        auto [s, r] = split_pair(x);
        return cycle_loss(source, reference, s, r);
      },
      away_from(targets, 1e-3, gen));
  add("identity_loss",
      [=](const torch::Tensor& x) {
        auto [s, r] = split_pair(x);
        return identity_loss(s, r, source, reference);
      },
      away_from(targets, 1e-3, gen));

  const auto hist_target = torch::rand({2, 15}, gen, opts) * 2 - 1;
  add("hist_loss", [=](const torch::Tensor& x) { return hist_loss(x, hist_target); },
      away_from(hist_target, 1e-3, gen));
  add("intra_video_g", [](const torch::Tensor& x) { return intra_video_g(x); }, torch::randn({4}, gen, opts));
  add("intra_video_c", [](const torch::Tensor& x) { return intra_video_c(x.slice(0, 0, 4), x.slice(0, 4, 8)); },
      torch::randn({8}, gen, opts));

  const auto projection = torch::randn({3, 5}, gen, opts);
  add("soft_channel_histogram",
      [=](const torch::Tensor& x) { return (soft_channel_histogram(x, 5, 0.05) * projection).sum(); },
      torch::rand({3, 4, 4}, gen, opts));
  return rows;
}

ToyExperimentResult run_toy_experiment(const ToyExperimentOptions& options) {
  const int total_base = 2 * options.clips_per_domain;
  std::vector<VideoClip> base;
  for (int i = 0; i < total_base; ++i) {
    base.push_back(generate_moving_shapes_clip("clip" + std::to_string(i), options.frames_per_clip,
                                               options.frame_size, options.seed * 1000 + static_cast<uint64_t>(i)));
  }
  const auto domains = synthesize_domain_pair(base, options.transform, options.seed);
  std::vector<VideoClip> heldout, truth;
  for (int i = 0; i < options.heldout_clips; ++i) {
    auto clip = generate_moving_shapes_clip("heldout" + std::to_string(i), options.frames_per_clip,
                                            options.frame_size, options.seed * 1000 + 500 + static_cast<uint64_t>(i));
    auto gt = apply_color_transform(clip, options.transform);
    gt.domain = Domain::kB;
    heldout.push_back(std::move(clip));
    truth.push_back(std::move(gt));
  }

  RunConfig config;
  config.model.frame_size = options.frame_size;
  config.model.base_channels = options.base_channels;
  config.model.bottleneck_channels = options.bottleneck_channels;
  config.model.downsample_stages = options.downsample_stages;
  config.model.critic_channels = options.critic_channels;
  config.model.fusion_mode = options.fusion_mode;
  config.train.seed = options.seed;
  config.train.learning_rate = options.learning_rate;
  config.train.weights = options.weights;
  config.train.checkpoint_interval = 0;
  int64_t pairs_a = 0, pairs_b = 0;
  for (const auto& clip : domains.domain_a) pairs_a += clip.size() - 1;
  for (const auto& clip : domains.domain_b) pairs_b += clip.size() - 1;
  const int64_t steps_per_epoch = std::max(pairs_a, pairs_b);
  config.train.epochs = static_cast<int>((options.min_steps + steps_per_epoch - 1) / steps_per_epoch);

  if (!options.output_dir.empty()) {
    write_clips(domains.domain_a, options.output_dir / "data" / "domain_a", options.output_dir / "domain_a.json");
    write_clips(domains.domain_b, options.output_dir / "data" / "domain_b", options.output_dir / "domain_b.json");
    write_clips(heldout, options.output_dir / "data" / "heldout_a", options.output_dir / "heldout_a.json");
    write_clips(truth, options.output_dir / "data" / "heldout_a_truth", options.output_dir / "heldout_a_truth.json");
    save_transform(options.transform, options.output_dir / "transform.json");
  }

  ToyExperimentResult result;
  auto bundle = make_bundle(config);
  TrainOptions train_options;
  if (!options.output_dir.empty()) train_options.output_dir = options.output_dir / "run";
  train_options.on_step = [&](int64_t step, const LossReport& report) {
    const double cyc = report.at(loss_terms::kCyc);
    if (step == 0) result.first_cycle_loss = cyc;
    result.last_cycle_loss = cyc;
    if (options.verbose && step % 25 == 0) {
      std::cerr << "step " << step << "  total " << report.total << "  cyc " << cyc << "  critic "
                << report.critic_total << '\n';
    }
  };
  train_clips(bundle, domains.domain_a, domains.domain_b, train_options);
  if (!options.output_dir.empty()) save_checkpoint(bundle, options.output_dir / "run" / "final.pt");
  result.steps = bundle.step;

  auto evaluation = evaluate_clips(generator_translator(bundle.nets.g_ab), heldout, Direction::kAB, truth);
  result.report = evaluation.report;
  const auto n = static_cast<double>(heldout.size());
  for (const auto& m : evaluation.report.clips) {
    result.baseline_color_error += *m.baseline_color_target_error / n;
    result.translated_color_error += *m.color_target_error / n;
    result.content_preservation += m.content_preservation / n;
    result.hist_rcd_preservation += m.hist_rcd_preservation / n;
    for (int c = 0; c < 3; ++c) {
      result.source_color_std[c] += m.source_intra_video_color_std[c] / n;
      result.translated_color_std[c] += m.intra_video_color_std[c] / n;
    }
  }
  return result;
}

SelftestVerdict judge_selftest(const ToyExperimentResult& result, const SelftestThresholds& thresholds) {
  SelftestVerdict verdict;
  verdict.color_moved =
      result.translated_color_error <= (1.0 - thresholds.min_color_error_reduction) * result.baseline_color_error;
  verdict.content_kept = result.content_preservation >= thresholds.min_content_preservation;
  verdict.consistency_kept = true;
  for (int c = 0; c < 3; ++c) {
    if (result.translated_color_std[c] > thresholds.max_std_ratio * result.source_color_std[c]) {
      verdict.consistency_kept = false;
    }
  }
  verdict.hist_rcd_kept = result.hist_rcd_preservation <= thresholds.max_hist_rcd_preservation;
  return verdict;
}

}  // namespace videogan
