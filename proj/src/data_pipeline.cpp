#include "videogan/data_pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <set>

#include "json.hpp"
#include "videogan/errors.hpp"
#include "videogan/image_io.hpp"

namespace videogan {
namespace fs = std::filesystem;
using nlohmann::json;

const ClipEntry& DatasetManifest::clip(const std::string& clip_id) const {
  for (const auto& entry : clips) {
    if (entry.id == clip_id) return entry;
  }
  throw ManifestError("clip '" + clip_id + "' is not listed in the manifest");
}

int64_t DatasetManifest::frame_count() const {
  int64_t total = 0;
  for (const auto& entry : clips) total += static_cast<int64_t>(entry.frames.size());
  return total;
}

void validate_manifest(const DatasetManifest& manifest) {
  std::set<std::string> seen;
  for (const auto& entry : manifest.clips) {
    if (entry.id.empty()) throw ManifestError("clip with empty id");
    if (!seen.insert(entry.id).second) throw ManifestError("duplicate clip_id '" + entry.id + "'");
    if (entry.frames.empty()) throw ManifestError("clip '" + entry.id + "' lists no frames");
    if (entry.reference_index < 0 || entry.reference_index >= static_cast<int>(entry.frames.size())) {
      throw ManifestError("clip '" + entry.id + "' has reference_index " + std::to_string(entry.reference_index) +
                          " outside its " + std::to_string(entry.frames.size()) + " frames");
    }
    for (const auto& name : entry.frames) {
      const auto file = manifest.root_path / name;
      if (!fs::is_regular_file(file)) {
        throw ManifestError("clip '" + entry.id + "' references missing frame file '" + file.string() + "'");
      }
    }
  }
}

DatasetManifest load_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ManifestError("cannot open manifest '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ManifestError("malformed manifest '" + path.string() + "': " + e.what());
  }
  DatasetManifest manifest;
  try {
    const int version = doc.value("version", kManifestVersion);
    if (version != kManifestVersion) {
      throw ManifestError("manifest '" + path.string() + "' has unsupported version " + std::to_string(version));
    }
    fs::path root = doc.at("root").get<std::string>();
    manifest.root_path = root.is_absolute() ? root : path.parent_path() / root;
    for (const auto& item : doc.at("clips")) {
      ClipEntry entry;
      entry.id = item.at("id").get<std::string>();
      entry.domain = parse_domain(item.at("domain").get<std::string>());
      entry.frames = item.at("frames").get<std::vector<std::string>>();
      entry.reference_index = item.value("reference_index", 0);
      manifest.clips.push_back(std::move(entry));
    }
  } catch (const json::exception& e) {
    throw ManifestError("malformed manifest '" + path.string() + "': " + e.what());
  } catch (const DomainError& e) {
    throw ManifestError("malformed manifest '" + path.string() + "': " + e.what());
  }
  validate_manifest(manifest);
  return manifest;
}

void save_manifest(const DatasetManifest& manifest, const fs::path& path) {
  json doc;
  doc["version"] = kManifestVersion;
  const auto base = path.has_parent_path() ? path.parent_path() : fs::path(".");
  std::error_code ec;
  auto relative = fs::relative(manifest.root_path, base, ec);
  doc["root"] = (ec || relative.empty()) ? manifest.root_path.string() : relative.string();
  doc["clips"] = json::array();
  for (const auto& entry : manifest.clips) {
    doc["clips"].push_back({{"id", entry.id},
                            {"domain", to_string(entry.domain)},
                            {"frames", entry.frames},
                            {"reference_index", entry.reference_index}});
  }
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw ManifestError("cannot write manifest '" + path.string() + "'");
  out << doc.dump(2) << '\n';
}

VideoClip load_clip(const DatasetManifest& manifest, const std::string& clip_id, int size, RangeTag range,
                    int downsample_factor) {
  if (downsample_factor < 1) throw ConfigError("downsample factor must be positive");
  if (size < 8 || size % downsample_factor != 0) {
    throw ConfigError("frame size " + std::to_string(size) + " must be >= 8 and divisible by " +
                      std::to_string(downsample_factor));
  }
  const auto& entry = manifest.clip(clip_id);
  VideoClip clip{entry.id, entry.domain, {}, entry.reference_index};
  clip.frames.reserve(entry.frames.size());
  for (const auto& name : entry.frames) clip.frames.push_back(read_frame(manifest.root_path / name, size, range));
  clip.validate();
  return clip;
}

std::vector<FramePair> iterate_pairs(const VideoClip& clip, std::optional<uint64_t> shuffle_seed) {
  clip.validate();
  if (clip.size() < 2) throw ShapeError("clip '" + clip.clip_id + "' needs at least two frames to form pairs");
  std::vector<FramePair> pairs;
  pairs.reserve(clip.frames.size() - 1);
  for (int i = 0; i < clip.size(); ++i) {
    if (i == clip.reference_index) continue;
    pairs.push_back({clip.frames[i], clip.reference(), clip.clip_id, i, clip.reference_index});
  }
  if (shuffle_seed) {
    std::mt19937_64 rng(*shuffle_seed);
    std::shuffle(pairs.begin(), pairs.end(), rng);
  }
  return pairs;
}

FramePair sample_real_pair(const VideoClip& clip, uint64_t rng_seed) {
  clip.validate();
  const int n = static_cast<int>(clip.size());
  if (n < 2) throw ShapeError("clip '" + clip.clip_id + "' needs at least two frames to sample a pair");
  std::mt19937_64 rng(rng_seed);
  const int first = std::uniform_int_distribution<int>(0, n - 1)(rng);
  int second = std::uniform_int_distribution<int>(0, n - 2)(rng);
  if (second >= first) ++second;
  return {clip.frames[first], clip.frames[second], clip.clip_id, first, second};
}

void ColorTransformSpec::validate() const {
  for (int c = 0; c < 3; ++c) {
    if (!(gain[c] >= kMinGain && gain[c] <= kMaxGain)) throw ConfigError("gain out of range [0.25, 4]");
    if (!(bias[c] >= kMinBias && bias[c] <= kMaxBias)) throw ConfigError("bias out of range [-0.5, 0.5]");
    if (!(gamma[c] >= kMinGamma && gamma[c] <= kMaxGamma)) throw ConfigError("gamma out of range [0.2, 5]");
  }
}

Frame apply_color_transform(const Frame& frame, const ColorTransformSpec& transform) {
  transform.validate();
  const auto unit = frame.to_unit().pixels();
  std::vector<torch::Tensor> channels;
  for (int c = 0; c < 3; ++c) {
    auto channel = unit[c];
    if (transform.gamma[c] != 1.0) channel = channel.pow(transform.gamma[c]);
    channels.push_back((channel * transform.gain[c] + transform.bias[c]).clamp(0.0, 1.0));
  }
  return Frame(torch::stack(channels), RangeTag::kUnit).to_range(frame.range());
}

VideoClip apply_color_transform(const VideoClip& clip, const ColorTransformSpec& transform) {
  VideoClip out{clip.clip_id, clip.domain, {}, clip.reference_index};
  out.frames.reserve(clip.frames.size());
  for (const auto& frame : clip.frames) out.frames.push_back(apply_color_transform(frame, transform));
  return out;
}

SyntheticDomains synthesize_domain_pair(const std::vector<VideoClip>& base_clips, const ColorTransformSpec& transform,
                                        uint64_t rng_seed) {
  if (base_clips.size() < 2) throw ConfigError("synthesizing two disjoint domains needs at least two base clips");
  transform.validate();
  std::vector<size_t> order(base_clips.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::mt19937_64 rng(rng_seed);
  std::shuffle(order.begin(), order.end(), rng);

  SyntheticDomains out;
  out.transform = transform;
  const size_t half = (order.size() + 1) / 2;
  for (size_t k = 0; k < order.size(); ++k) {
    VideoClip clip = base_clips[order[k]];
    if (k < half) {
      clip.domain = Domain::kA;
      out.domain_a.push_back(std::move(clip));
    } else {
      auto transformed = apply_color_transform(clip, transform);
      transformed.domain = Domain::kB;
      out.domain_b.push_back(std::move(transformed));
    }
  }
  return out;
}

DatasetManifest write_clips(const std::vector<VideoClip>& clips, const fs::path& directory,
                            const fs::path& manifest_path) {
  DatasetManifest manifest;
  manifest.root_path = directory;
  for (const auto& clip : clips) {
    ClipEntry entry{clip.clip_id, clip.domain, {}, clip.reference_index};
    for (size_t i = 0; i < clip.frames.size(); ++i) {
      char name[32];
      std::snprintf(name, sizeof(name), "%04zu.png", i);
      const auto relative = fs::path(clip.clip_id) / name;
      write_frame(clip.frames[i], directory / relative);
      entry.frames.push_back(relative.generic_string());
    }
    manifest.clips.push_back(std::move(entry));
  }
  save_manifest(manifest, manifest_path);
  return manifest;
}

void save_transform(const ColorTransformSpec& transform, const fs::path& path) {
  json doc{{"model", "y = clamp(gain * x^gamma + bias, 0, 1)"},
           {"gain", transform.gain},
           {"bias", transform.bias},
           {"gamma", transform.gamma}};
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write transform record '" + path.string() + "'");
  out << doc.dump(2) << '\n';
}

ColorTransformSpec load_transform(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open transform record '" + path.string() + "'");
  try {
    const auto doc = json::parse(in);
    ColorTransformSpec spec;
    spec.gain = doc.at("gain").get<std::array<double, 3>>();
    spec.bias = doc.at("bias").get<std::array<double, 3>>();
    spec.gamma = doc.at("gamma").get<std::array<double, 3>>();
    spec.validate();
    return spec;
  } catch (const json::exception& e) {
    throw ConfigError("malformed transform record '" + path.string() + "': " + e.what());
  }
}

DatasetManifest manifest_from_directory(const fs::path& frames_dir, Domain domain, int reference_index) {
  if (!fs::is_directory(frames_dir)) throw ManifestError("'" + frames_dir.string() + "' is not a directory");
  static const std::set<std::string> kExtensions{".png", ".jpg", ".jpeg", ".bmp", ".tif", ".tiff", ".ppm"};
  DatasetManifest manifest;
  manifest.root_path = frames_dir;
  std::vector<fs::path> clip_dirs;
  for (const auto& item : fs::directory_iterator(frames_dir)) {
    if (item.is_directory()) clip_dirs.push_back(item.path());
  }
  std::sort(clip_dirs.begin(), clip_dirs.end());
  for (const auto& dir : clip_dirs) {
    ClipEntry entry{dir.filename().string(), domain, {}, reference_index};
    std::vector<std::string> names;
    for (const auto& item : fs::directory_iterator(dir)) {
      auto ext = item.path().extension().string();
      std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return std::tolower(ch); });
      if (item.is_regular_file() && kExtensions.count(ext)) names.push_back(item.path().filename().string());
    }
    std::sort(names.begin(), names.end());
    for (const auto& name : names) entry.frames.push_back((dir.filename() / name).generic_string());
    if (!entry.frames.empty()) manifest.clips.push_back(std::move(entry));
  }
  if (manifest.clips.empty()) throw ManifestError("no clip directories with frames under '" + frames_dir.string() + "'");
  validate_manifest(manifest);
  return manifest;
}

}  // namespace videogan
