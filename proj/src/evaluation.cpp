#include "videogan/evaluation.hpp"

#include <cmath>
#include <fstream>
#include <map>

#include "videogan/errors.hpp"
#include "videogan/histogram.hpp"
#include "videogan/image_io.hpp"

namespace videogan {
namespace F = torch::nn::functional;

namespace {

void require_same_structure(const VideoClip& a, const VideoClip& b, const char* what) {
  a.validate();
  b.validate();
  if (a.frames.size() != b.frames.size()) throw ShapeError(std::string(what) + ": frame counts differ");
  if (a.frames.front().height() != b.frames.front().height() || a.frames.front().width() != b.frames.front().width()) {
    throw ShapeError(std::string(what) + ": frame sizes differ");
  }
}

double mean_abs_difference(const std::vector<double>& a, const std::vector<double>& b) {
  double sum = 0.0;
  for (size_t i = 0; i < a.size(); ++i) sum += std::abs(a[i] - b[i]);
  return sum / static_cast<double>(a.size());
}

torch::Tensor luminance(const Frame& frame) {
  const auto p = frame.to_unit().pixels().to(torch::kFloat64);
  return (0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2]).unsqueeze(0).unsqueeze(0);
}

std::pair<double, double> mean_and_std(const std::vector<double>& values) {
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  return {mean, std::sqrt(var / static_cast<double>(values.size()))};
}

// Translated frames are scored as they would be written to disk, which also
// keeps signed/unit round-off from moving pixels across histogram bin edges.
VideoClip quantize_8bit(VideoClip clip) {
  for (auto& frame : clip.frames) frame = Frame((frame.pixels() * 255.0).round().clamp(0, 255).div(255.0), RangeTag::kUnit);
  return clip;
}

}  // namespace

std::array<double, 3> intra_video_consistency(const VideoClip& clip) {
  clip.validate();
  if (clip.size() < 2) throw ShapeError("intra-video consistency needs at least two frames");
  std::array<double, 3> out{};
  for (int c = 0; c < 3; ++c) {
    std::vector<double> means;
    for (const auto& frame : clip.frames) means.push_back(frame.to_unit().pixels()[c].to(torch::kFloat64).mean().item<double>());
    out[c] = mean_and_std(means).second;
  }
  return out;
}

double structural_similarity(const Frame& a, const Frame& b) {
  if (a.height() != b.height() || a.width() != b.width()) throw ShapeError("SSIM frames differ in size");
  constexpr int kWindow = 8;
  if (a.height() < kWindow || a.width() < kWindow) throw ShapeError("SSIM needs frames of at least 8x8");
  constexpr double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  const auto x = luminance(a), y = luminance(b);
  const auto pool = [](const torch::Tensor& t) { return F::avg_pool2d(t, F::AvgPool2dFuncOptions(kWindow).stride(1)); };
  const auto mu_x = pool(x), mu_y = pool(y);
  const auto var_x = pool(x * x) - mu_x * mu_x;
  const auto var_y = pool(y * y) - mu_y * mu_y;
  const auto cov = pool(x * y) - mu_x * mu_y;
  const auto index = ((2 * mu_x * mu_y + c1) * (2 * cov + c2)) / ((mu_x * mu_x + mu_y * mu_y + c1) * (var_x + var_y + c2));
  return std::clamp(index.mean().item<double>(), 0.0, 1.0);
}

double content_preservation(const VideoClip& original, const VideoClip& translated) {
  require_same_structure(original, translated, "content preservation");
  double sum = 0.0;
  for (size_t i = 0; i < original.frames.size(); ++i) sum += structural_similarity(original.frames[i], translated.frames[i]);
  return sum / static_cast<double>(original.frames.size());
}

double color_transfer_error(const VideoClip& translated, const VideoClip& ground_truth) {
  require_same_structure(translated, ground_truth, "color transfer error");
  double sum = 0.0;
  for (size_t i = 0; i < translated.frames.size(); ++i) {
    sum += mean_abs_difference(channel_histogram(translated.frames[i].to_unit()).mass,
                               channel_histogram(ground_truth.frames[i].to_unit()).mass);
  }
  return sum / static_cast<double>(translated.frames.size());
}

double hist_rcd_preservation(const VideoClip& original, const VideoClip& translated) {
  require_same_structure(original, translated, "hist_rcd preservation");
  if (original.reference_index != translated.reference_index) throw ShapeError("clips use different reference frames");
  if (original.size() < 2) throw ShapeError("hist_rcd preservation needs at least two frames");
  const auto& orig_ref = original.reference();
  const auto& trans_ref = translated.reference();
  double sum = 0.0;
  for (int i = 0; i < original.size(); ++i) {
    if (i == original.reference_index) continue;
    const auto before = relative_color_distribution(original.frames[i].to_unit(), orig_ref.to_unit());
    const auto after = relative_color_distribution(translated.frames[i].to_unit(), trans_ref.to_unit());
    sum += mean_abs_difference(before.values, after.values);
  }
  return sum / static_cast<double>(original.size() - 1);
}

ClipMetrics evaluate_clip(const VideoClip& source, const VideoClip& translated, const VideoClip* ground_truth) {
  ClipMetrics m;
  m.clip_id = source.clip_id;
  m.intra_video_color_std = intra_video_consistency(translated);
  m.source_intra_video_color_std = intra_video_consistency(source);
  m.content_preservation = content_preservation(source, translated);
  m.hist_rcd_preservation = hist_rcd_preservation(source, translated);
  if (ground_truth) {
    m.color_target_error = color_transfer_error(translated, *ground_truth);
    m.baseline_color_target_error = color_transfer_error(source, *ground_truth);
  }
  return m;
}

EvaluationOutput evaluate_clips(const PairTranslator& translator, const std::vector<VideoClip>& clips,
                                Direction direction, const std::vector<VideoClip>& ground_truth) {
  if (clips.empty()) throw ManifestError("nothing to evaluate: no clips");
  std::map<std::string, const VideoClip*> truth;
  for (const auto& clip : ground_truth) truth[clip.clip_id] = &clip;
  EvaluationOutput out;
  out.report.direction = to_string(direction);
  for (const auto& clip : clips) {
    const VideoClip* gt = nullptr;
    if (!ground_truth.empty()) {
      auto it = truth.find(clip.clip_id);
      if (it == truth.end()) throw ManifestError("no ground-truth clip for '" + clip.clip_id + "'");
      gt = it->second;
    }
    auto translated = quantize_8bit(translate_clip(translator, clip, direction));
    out.report.clips.push_back(evaluate_clip(clip.to_range(RangeTag::kUnit), translated, gt));
    out.translated.push_back(std::move(translated));
  }
  return out;
}

nlohmann::json EvaluationReport::to_json() const {
  using nlohmann::json;
  json doc;
  doc["version"] = 1;
  doc["direction"] = direction;
  doc["conventions"] = {
      {"std", "population (divide by n)"},
      {"translated_frames", "quantized to 8 bits before scoring"},
      {"content_preservation", "mean per-frame SSIM of luminance, 8x8 windows, stride 1, C1=1e-4, C2=9e-4, clamped at 0"},
      {"color_target_error", "mean over frames of mean |hist15(translated) - hist15(ground truth)|"},
      {"hist_rcd_preservation", "mean over non-reference frames of |rcd(original) - rcd(translated)|_1 / 15"}};
  doc["clips"] = json::array();
  std::map<std::string, std::vector<double>> scalars;
  std::map<std::string, std::array<std::vector<double>, 3>> vectors;
  for (const auto& m : clips) {
    json record{{"clip_id", m.clip_id},
                {"intra_video_color_std", m.intra_video_color_std},
                {"source_intra_video_color_std", m.source_intra_video_color_std},
                {"content_preservation", m.content_preservation},
                {"hist_rcd_preservation", m.hist_rcd_preservation},
                {"color_target_error", m.color_target_error ? json(*m.color_target_error) : json(nullptr)},
                {"baseline_color_target_error",
                 m.baseline_color_target_error ? json(*m.baseline_color_target_error) : json(nullptr)}};
    doc["clips"].push_back(record);
    scalars["content_preservation"].push_back(m.content_preservation);
    scalars["hist_rcd_preservation"].push_back(m.hist_rcd_preservation);
    if (m.color_target_error) scalars["color_target_error"].push_back(*m.color_target_error);
    if (m.baseline_color_target_error) scalars["baseline_color_target_error"].push_back(*m.baseline_color_target_error);
    for (int c = 0; c < 3; ++c) {
      vectors["intra_video_color_std"][c].push_back(m.intra_video_color_std[c]);
      vectors["source_intra_video_color_std"][c].push_back(m.source_intra_video_color_std[c]);
    }
  }
  json aggregate;
  aggregate["clip_count"] = clips.size();
  for (const auto& [name, values] : scalars) {
    const auto [mean, std] = mean_and_std(values);
    aggregate[name] = {{"mean", mean}, {"std", std}};
  }
  for (const auto& [name, per_channel] : vectors) {
    std::array<double, 3> means{}, stds{};
    for (int c = 0; c < 3; ++c) std::tie(means[c], stds[c]) = mean_and_std(per_channel[c]);
    aggregate[name] = {{"mean", means}, {"std", stds}};
  }
  doc["aggregate"] = aggregate;
  return doc;
}

EvaluationReport evaluate_run(const PairTranslator& translator, const DatasetManifest& manifest, Direction direction,
                              const std::optional<DatasetManifest>& ground_truth,
                              const std::filesystem::path& output_dir, int frame_size, int downsample_factor) {
  if (manifest.clips.empty()) throw ManifestError("cannot evaluate an empty manifest");
  std::vector<VideoClip> clips, truth;
  for (const auto& entry : manifest.clips) {
    clips.push_back(load_clip(manifest, entry.id, frame_size, RangeTag::kUnit, downsample_factor));
  }
  if (ground_truth) {
    for (const auto& entry : ground_truth->clips) {
      truth.push_back(load_clip(*ground_truth, entry.id, frame_size, RangeTag::kUnit, downsample_factor));
    }
  }
  auto out = evaluate_clips(translator, clips, direction, truth);
  std::filesystem::create_directories(output_dir);
  for (size_t i = 0; i < clips.size(); ++i) {
    std::vector<std::vector<Frame>> rows{clips[i].frames, out.translated[i].frames};
    for (const auto& gt : truth) {
      if (gt.clip_id == clips[i].clip_id) rows.push_back(gt.frames);
    }
    write_frame_grid(rows, output_dir / (clips[i].clip_id + "_grid.png"));
  }
  std::ofstream report(output_dir / "report.json");
  if (!report) throw Error("cannot write evaluation report in '" + output_dir.string() + "'");
  report << out.report.to_json().dump(2) << '\n';
  return out.report;
}

EvaluationReport evaluate_run(ModelBundle& bundle, const DatasetManifest& manifest, Direction direction,
                              const std::optional<DatasetManifest>& ground_truth,
                              const std::filesystem::path& output_dir) {
  auto generator = direction == Direction::kAB ? bundle.nets.g_ab : bundle.nets.g_ba;
  return evaluate_run(generator_translator(generator), manifest, direction, ground_truth, output_dir,
                      bundle.config.model.frame_size, bundle.config.model.downsample_factor());
}

}  // namespace videogan
