#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <torch/torch.h>

namespace videogan {

enum class RangeTag { kUnit, kSigned };
enum class Domain { kA, kB };

std::string to_string(RangeTag range);
std::string to_string(Domain domain);
Domain parse_domain(std::string_view text);
Domain other(Domain domain);

/// One RGB video frame, stored channels-first as a float32 [3, H, W] tensor.
///
/// `kUnit` frames hold values in [0, 1]; `kSigned` frames hold values in
/// [-1, 1]. The constructor rejects tensors that violate the declared range.
class Frame {
 public:
  Frame() = default;
  Frame(torch::Tensor pixels, RangeTag range);

  const torch::Tensor& pixels() const { return pixels_; }
  RangeTag range() const { return range_; }
  int64_t height() const { return pixels_.size(1); }
  int64_t width() const { return pixels_.size(2); }
  bool defined() const { return pixels_.defined(); }

  Frame to_unit() const;
  Frame to_signed() const;
  Frame to_range(RangeTag range) const;

 private:
  torch::Tensor pixels_;
  RangeTag range_ = RangeTag::kUnit;
};

struct VideoClip {
  std::string clip_id;
  Domain domain = Domain::kA;
  std::vector<Frame> frames;
  int reference_index = 0;

  const Frame& reference() const { return frames.at(reference_index); }
  int64_t size() const { return static_cast<int64_t>(frames.size()); }
  // Throws ShapeError / RangeError when frames disagree in size or range.
  void validate() const;
  VideoClip to_range(RangeTag range) const;
};

/// Generator input unit. For pairs produced by iterate_pairs the reference is
/// always the clip's reference frame; pairs drawn by sample_real_pair hold two
/// arbitrary distinct frames of one clip.
struct FramePair {
  Frame source;
  Frame reference;
  std::string clip_id;
  int source_index = 0;
  int reference_index = 0;
};

}  // namespace videogan
