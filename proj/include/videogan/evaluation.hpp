#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "videogan/data_pipeline.hpp"
#include "videogan/trainer.hpp"

namespace videogan {

struct ClipMetrics {
  std::string clip_id;
  // Per-channel population std, across frames, of each frame's mean color.
  std::array<double, 3> intra_video_color_std{};
  std::array<double, 3> source_intra_video_color_std{};
  double content_preservation = 0.0;
  // Defined only when a ground-truth clip is available.
  std::optional<double> color_target_error;
  std::optional<double> baseline_color_target_error;
  double hist_rcd_preservation = 0.0;
};

struct EvaluationReport {
  std::string direction;
  std::vector<ClipMetrics> clips;

  nlohmann::json to_json() const;
};

std::array<double, 3> intra_video_consistency(const VideoClip& clip);

/// Structural similarity of luminance (Y = 0.299 R + 0.587 G + 0.114 B, unit
/// range) over all 8x8 windows at stride 1 with uniform weights and
/// C1 = (0.01)^2, C2 = (0.03)^2. Each frame's mean index is clamped at 0, so
/// the clip value lies in [0, 1].
double structural_similarity(const Frame& a, const Frame& b);
double content_preservation(const VideoClip& original, const VideoClip& translated);

/// Mean over frames of the mean absolute difference between 15-bin histograms.
double color_transfer_error(const VideoClip& translated, const VideoClip& ground_truth);

/// Mean over non-reference frames of |hist_rcd(original) - hist_rcd(translated)|_1 / 15.
double hist_rcd_preservation(const VideoClip& original, const VideoClip& translated);

ClipMetrics evaluate_clip(const VideoClip& source, const VideoClip& translated,
                          const VideoClip* ground_truth = nullptr);

struct EvaluationOutput {
  EvaluationReport report;
  std::vector<VideoClip> translated;
};

/// Translates each clip and scores it. `ground_truth`, when non-empty, must
/// hold a clip with the same id for every source clip.
EvaluationOutput evaluate_clips(const PairTranslator& translator, const std::vector<VideoClip>& clips,
                                Direction direction, const std::vector<VideoClip>& ground_truth = {});

/// Loads the manifest, evaluates every clip and writes `report.json` plus one
/// `<clip_id>_grid.png` per clip (rows: original, translated, ground truth if
/// any) into `output_dir`.
EvaluationReport evaluate_run(const PairTranslator& translator, const DatasetManifest& manifest, Direction direction,
                              const std::optional<DatasetManifest>& ground_truth, const std::filesystem::path& output_dir,
                              int frame_size, int downsample_factor);
EvaluationReport evaluate_run(ModelBundle& bundle, const DatasetManifest& manifest, Direction direction,
                              const std::optional<DatasetManifest>& ground_truth, const std::filesystem::path& output_dir);

}  // namespace videogan
