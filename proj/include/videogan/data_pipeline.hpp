#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "videogan/types.hpp"

namespace videogan {

/// Manifest schema (JSON):
///
///   {
///     "version": 1,
///     "root": "frames",            // relative to the manifest's directory, or absolute
///     "clips": [
///       {"id": "clip0", "domain": "A", "frames": ["clip0/000.png", ...], "reference_index": 0}
///     ]
///   }
///
/// `reference_index` is optional and defaults to 0.
struct ClipEntry {
  std::string id;
  Domain domain = Domain::kA;
  std::vector<std::string> frames;
  int reference_index = 0;
};

struct DatasetManifest {
  std::filesystem::path root_path;
  std::vector<ClipEntry> clips;

  const ClipEntry& clip(const std::string& clip_id) const;
  int64_t frame_count() const;
};

inline constexpr int kManifestVersion = 1;

DatasetManifest load_manifest(const std::filesystem::path& path);
/// Writes `manifest` to `path`. The root is stored relative to the manifest's
/// directory when possible.
void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);
void validate_manifest(const DatasetManifest& manifest);

/// Loads one clip, resizing every frame to size x size. `size` must be at least
/// 8 and divisible by `downsample_factor` (the generator's 2^stages).
VideoClip load_clip(const DatasetManifest& manifest, const std::string& clip_id, int size, RangeTag range,
                    int downsample_factor = 32);

/// All (source, reference) pairs of a clip: one per non-reference frame, in
/// frame order, or permuted deterministically when a seed is given.
std::vector<FramePair> iterate_pairs(const VideoClip& clip, std::optional<uint64_t> shuffle_seed = std::nullopt);

/// Two distinct frames of one clip, drawn uniformly over unordered pairs and
/// returned in random order.
FramePair sample_real_pair(const VideoClip& clip, uint64_t rng_seed);

/// Per-channel color distortion y = clamp(gain * x^gamma + bias, 0, 1).
struct ColorTransformSpec {
  std::array<double, 3> gain{1.0, 1.0, 1.0};
  std::array<double, 3> bias{0.0, 0.0, 0.0};
  std::array<double, 3> gamma{1.0, 1.0, 1.0};

  static constexpr double kMinGain = 0.25, kMaxGain = 4.0;
  static constexpr double kMinBias = -0.5, kMaxBias = 0.5;
  static constexpr double kMinGamma = 0.2, kMaxGamma = 5.0;

  void validate() const;
};

Frame apply_color_transform(const Frame& frame, const ColorTransformSpec& transform);
VideoClip apply_color_transform(const VideoClip& clip, const ColorTransformSpec& transform);

struct SyntheticDomains {
  std::vector<VideoClip> domain_a;
  std::vector<VideoClip> domain_b;
  ColorTransformSpec transform;
};

/// Splits `base_clips` into two disjoint halves (seeded). The first half
/// becomes domain A unchanged; the second becomes domain B with `transform`
/// applied to every frame.
SyntheticDomains synthesize_domain_pair(const std::vector<VideoClip>& base_clips, const ColorTransformSpec& transform,
                                        uint64_t rng_seed);

/// Procedural clip of colored shapes drifting over a shaded background with a
/// slow per-clip illumination drift. Unit range, deterministic in `seed`.
VideoClip generate_moving_shapes_clip(const std::string& clip_id, int frames, int size, uint64_t seed);

/// Writes every clip's frames as PNG files under `directory/<clip_id>/` and a
/// manifest at `manifest_path` whose root is `directory`.
DatasetManifest write_clips(const std::vector<VideoClip>& clips, const std::filesystem::path& directory,
                            const std::filesystem::path& manifest_path);

void save_transform(const ColorTransformSpec& transform, const std::filesystem::path& path);
ColorTransformSpec load_transform(const std::filesystem::path& path);

/// Builds a manifest from a directory tree: each immediate subdirectory is a
/// clip whose frames are the image files it contains, sorted by name.
DatasetManifest manifest_from_directory(const std::filesystem::path& frames_dir, Domain domain, int reference_index = 0);

}  // namespace videogan
