#include "videogan/histogram.hpp"

#include <cmath>

#include "videogan/errors.hpp"

namespace videogan {
namespace {

void count_channels(const float* data, int64_t pixels, int bins, int64_t* counts) {
  for (int c = 0; c < 3; ++c) {
    const float* channel = data + c * pixels;
    int64_t* out = counts + c * bins;
    for (int64_t i = 0; i < pixels; ++i) {
      // x * bins is exact in double for float inputs and small bin counts.
      auto bin = static_cast<int>(std::floor(static_cast<double>(channel[i]) * bins));
      if (bin >= bins) bin = bins - 1;
      if (bin < 0) bin = 0;
      ++out[bin];
    }
  }
}

void check_bins(int bins) {
  if (bins < 2) throw ConfigError("histogram needs at least 2 bins");
}

}  // namespace

torch::Tensor HistogramVector::to_tensor() const {
  return torch::tensor(values, torch::kFloat64).to(torch::kFloat32);
}

void HistogramVector::check_invariants(double tolerance) const {
  if (values.size() != static_cast<size_t>(3 * bins)) throw ShapeError("histogram vector length mismatch");
  for (int c = 0; c < 3; ++c) {
    double sum = 0.0;
    for (int b = 0; b < bins; ++b) {
      const double v = values[static_cast<size_t>(c * bins + b)];
      if (kind == HistogramKind::kAbsolute && v < 0.0) throw RangeError("negative absolute histogram bin");
      if (kind == HistogramKind::kRelative && (v < -1.0 || v > 1.0)) throw RangeError("relative bin outside [-1, 1]");
      sum += v;
    }
    const double expected = kind == HistogramKind::kAbsolute ? 1.0 : 0.0;
    if (std::abs(sum - expected) > tolerance) throw RangeError("histogram channel mass violates its invariant");
  }
}

std::vector<int64_t> channel_histogram_counts(const Frame& frame, int bins) {
  check_bins(bins);
  if (frame.range() != RangeTag::kUnit) {
    throw RangeError("channel_histogram needs a unit-range frame; convert signed frames first");
  }
  std::vector<int64_t> counts(static_cast<size_t>(3 * bins), 0);
  const auto pixels = frame.pixels().contiguous();
  count_channels(pixels.data_ptr<float>(), frame.height() * frame.width(), bins, counts.data());
  return counts;
}

ChannelHistogram channel_histogram(const Frame& frame, int bins) {
  const auto counts = channel_histogram_counts(frame, bins);
  const double total = static_cast<double>(frame.height() * frame.width());
  ChannelHistogram hist{bins, std::vector<double>(counts.size())};
  for (size_t i = 0; i < counts.size(); ++i) hist.mass[i] = static_cast<double>(counts[i]) / total;
  return hist;
}

HistogramVector absolute_histogram(const Frame& frame, int bins) {
  return {HistogramKind::kAbsolute, bins, channel_histogram(frame, bins).mass};
}

HistogramVector relative_color_distribution(const Frame& source, const Frame& reference, int bins) {
  if (source.height() != reference.height() || source.width() != reference.width()) {
    throw ShapeError("relative color distribution needs frames of equal size");
  }
  const auto src = channel_histogram(source, bins);
  const auto ref = channel_histogram(reference, bins);
  HistogramVector out{HistogramKind::kRelative, bins, std::vector<double>(src.mass.size())};
  for (size_t i = 0; i < out.values.size(); ++i) out.values[i] = ref.mass[i] - src.mass[i];
  return out;
}

torch::Tensor relative_color_distribution_batch(const torch::Tensor& sources, const torch::Tensor& references,
                                                int bins) {
  if (sources.dim() != 4 || !sources.sizes().equals(references.sizes())) {
    throw ShapeError("batched relative color distribution needs two [N, 3, H, W] tensors of equal shape");
  }
  const auto n = sources.size(0);
  std::vector<double> flat;
  flat.reserve(static_cast<size_t>(n * 3 * bins));
  for (int64_t i = 0; i < n; ++i) {
    const auto rcd = relative_color_distribution(Frame(sources[i].detach().cpu(), RangeTag::kUnit),
                                                 Frame(references[i].detach().cpu(), RangeTag::kUnit), bins);
    flat.insert(flat.end(), rcd.values.begin(), rcd.values.end());
  }
  return torch::tensor(flat, torch::kFloat64).view({n, 3 * bins}).to(torch::kFloat32);
}

torch::Tensor soft_channel_histogram(const torch::Tensor& pixels, int bins, double temperature) {
  check_bins(bins);
  if (!(temperature > 0.0)) throw ConfigError("soft histogram temperature must be positive");
  if (pixels.dim() != 3 || pixels.size(0) != 3) throw ShapeError("soft histogram expects a [3, H, W] tensor");
  const auto options = torch::TensorOptions().dtype(pixels.scalar_type()).device(pixels.device());
  const auto centers = (torch::arange(bins, options) + 0.5) / static_cast<double>(bins);
  const auto values = pixels.reshape({3, -1, 1});
  const auto logits = -(values - centers.view({1, 1, bins})).square() / temperature;
  return torch::softmax(logits, -1).mean(1);
}

}  // namespace videogan
