#pragma once

#include <cstdint>
#include <vector>

#include "videogan/types.hpp"

namespace videogan {

inline constexpr int kHistogramBins = 5;
inline constexpr int kHistogramLength = 3 * kHistogramBins;

/// Per-channel histogram with uniform bins on [0, 1]; bin b covers
/// [b/bins, (b+1)/bins) and the last bin is closed at 1. `mass` is laid out
/// channel-major (R bins, then G, then B) and each channel sums to 1.
struct ChannelHistogram {
  int bins = kHistogramBins;
  std::vector<double> mass;

  double at(int channel, int bin) const { return mass[static_cast<size_t>(channel * bins + bin)]; }
};

enum class HistogramKind { kAbsolute, kRelative };

struct HistogramVector {
  HistogramKind kind = HistogramKind::kAbsolute;
  int bins = kHistogramBins;
  std::vector<double> values;

  torch::Tensor to_tensor() const;
  // Throws RangeError if the per-channel mass invariant of `kind` is broken.
  void check_invariants(double tolerance = 1e-6) const;
};

/// Raw per-channel pixel counts; the unnormalized form of channel_histogram.
std::vector<int64_t> channel_histogram_counts(const Frame& frame, int bins = kHistogramBins);

/// Throws RangeError on signed-range frames; convert with Frame::to_unit first.
ChannelHistogram channel_histogram(const Frame& frame, int bins = kHistogramBins);

HistogramVector absolute_histogram(const Frame& frame, int bins = kHistogramBins);

/// Relative color distribution: hist(reference) - hist(source), channels
/// concatenated in R, G, B order.
HistogramVector relative_color_distribution(const Frame& source, const Frame& reference, int bins = kHistogramBins);

/// Batched relative distributions for unit-range [N, 3, H, W] tensors; returns
/// [N, 3 * bins] float32.
torch::Tensor relative_color_distribution_batch(const torch::Tensor& sources, const torch::Tensor& references,
                                                int bins = kHistogramBins);

/// Differentiable histogram of a unit-range [3, H, W] tensor. Each pixel is
/// softly assigned to bins by softmax(-(x - center)^2 / temperature); as the
/// temperature shrinks the result approaches channel_histogram. Returns
/// [3, bins] in the input's dtype.
torch::Tensor soft_channel_histogram(const torch::Tensor& pixels, int bins, double temperature);

}  // namespace videogan
