#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "videogan/evaluation.hpp"
#include "videogan/networks.hpp"

namespace videogan {

struct GradcheckRow {
  std::string name;
  int64_t elements = 0;
  double max_relative_error = 0.0;
  bool passed = false;
};

/// Compares autograd gradients with central finite differences (double
/// precision, step 1e-6) for every loss term and the soft histogram, on random
/// inputs of at most 64 elements kept away from absolute-value kinks. Relative
/// error is |analytic - numeric| / max(|analytic|, |numeric|, 1e-6).
std::vector<GradcheckRow> run_gradcheck_suite(uint64_t seed, double tolerance = 1e-4);

/// Desk-scale experiment: procedurally generated moving-shape clips, domain B
/// = domain A under a known color transform, training, then evaluation on
/// held-out A clips translated to B against their ground truth.
struct ToyExperimentOptions {
  uint64_t seed = 0;
  int min_steps = 300;
  int frame_size = 64;
  int base_channels = 16;
  int bottleneck_channels = 128;
  int downsample_stages = 3;
  int critic_channels = 16;
  FusionMode fusion_mode = FusionMode::kDenseFusion;
  int clips_per_domain = 4;
  int frames_per_clip = 8;
  int heldout_clips = 2;
  double learning_rate = 1e-3;
  LossWeights weights;
  ColorTransformSpec transform{{1.3, 1.0, 0.75}, {0.0, 0.0, 0.0}, {1.2, 1.2, 1.2}};
  // When set, the synthetic data, checkpoints, logs and evaluation are written here.
  std::filesystem::path output_dir;
  bool verbose = false;
};

struct ToyExperimentResult {
  int64_t steps = 0;
  double baseline_color_error = 0.0;
  double translated_color_error = 0.0;
  double content_preservation = 0.0;
  double hist_rcd_preservation = 0.0;
  std::array<double, 3> source_color_std{};
  std::array<double, 3> translated_color_std{};
  double first_cycle_loss = 0.0;
  double last_cycle_loss = 0.0;
  EvaluationReport report;
};

ToyExperimentResult run_toy_experiment(const ToyExperimentOptions& options);

/// Pass thresholds of the self-test.
struct SelftestThresholds {
  double min_color_error_reduction = 0.5;
  double min_content_preservation = 0.7;
  double max_std_ratio = 2.0;
  double max_hist_rcd_preservation = 0.1;
};

struct SelftestVerdict {
  bool color_moved = false;
  bool content_kept = false;
  bool consistency_kept = false;
  bool hist_rcd_kept = false;
  bool passed() const { return color_moved && content_kept && consistency_kept && hist_rcd_kept; }
};

SelftestVerdict judge_selftest(const ToyExperimentResult& result, const SelftestThresholds& thresholds = {});

}  // namespace videogan
