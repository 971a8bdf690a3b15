#include "videogan/types.hpp"

#include "videogan/errors.hpp"

namespace videogan {

std::string to_string(RangeTag range) { return range == RangeTag::kUnit ? "unit" : "signed"; }

std::string to_string(Domain domain) { return domain == Domain::kA ? "A" : "B"; }

Domain parse_domain(std::string_view text) {
  if (text == "A" || text == "a") return Domain::kA;
  if (text == "B" || text == "b") return Domain::kB;
  throw DomainError("unknown domain label '" + std::string(text) + "' (expected A or B)");
}

Domain other(Domain domain) { return domain == Domain::kA ? Domain::kB : Domain::kA; }

Frame::Frame(torch::Tensor pixels, RangeTag range) : range_(range) {
  if (!pixels.defined() || pixels.dim() != 3 || pixels.size(0) != 3) {
    throw ShapeError("frame tensor must have shape [3, H, W]");
  }
  if (pixels.size(1) < 1 || pixels.size(2) < 1) throw ShapeError("frame must be non-empty");
  pixels_ = pixels.to(torch::kFloat32).contiguous();
  const double lo = range == RangeTag::kUnit ? 0.0 : -1.0;
  const auto min = pixels_.min().item<double>();
  const auto max = pixels_.max().item<double>();
  if (!(min >= lo && max <= 1.0)) {
    throw RangeError("frame values [" + std::to_string(min) + ", " + std::to_string(max) +
                     "] fall outside the declared " + to_string(range) + " range");
  }
}

Frame Frame::to_unit() const {
  if (range_ == RangeTag::kUnit) return *this;
  return Frame(((pixels_ + 1.0) * 0.5).clamp(0.0, 1.0), RangeTag::kUnit);
}

Frame Frame::to_signed() const {
  if (range_ == RangeTag::kSigned) return *this;
  return Frame((pixels_ * 2.0 - 1.0).clamp(-1.0, 1.0), RangeTag::kSigned);
}

Frame Frame::to_range(RangeTag range) const { return range == RangeTag::kUnit ? to_unit() : to_signed(); }

void VideoClip::validate() const {
  if (frames.empty()) throw ShapeError("clip '" + clip_id + "' has no frames");
  if (reference_index < 0 || reference_index >= size()) {
    throw ShapeError("clip '" + clip_id + "' reference_index " + std::to_string(reference_index) +
                     " out of range for " + std::to_string(frames.size()) + " frames");
  }
  const auto& first = frames.front();
  for (const auto& frame : frames) {
    if (frame.height() != first.height() || frame.width() != first.width()) {
      throw ShapeError("clip '" + clip_id + "' mixes frame sizes");
    }
    if (frame.range() != first.range()) throw RangeError("clip '" + clip_id + "' mixes range tags");
  }
}

VideoClip VideoClip::to_range(RangeTag range) const {
  VideoClip out{clip_id, domain, {}, reference_index};
  out.frames.reserve(frames.size());
  for (const auto& frame : frames) out.frames.push_back(frame.to_range(range));
  return out;
}

}  // namespace videogan
