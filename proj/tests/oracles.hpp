#pragma once

// Independent reference implementations used to cross-check the library.
// They deliberately use scalar loops over raw values instead of tensor ops.

#include <algorithm>
#include <cmath>
#include <vector>

#include <torch/torch.h>

namespace videogan::testing {

/// Bin membership by explicit interval comparison: [b/bins, (b+1)/bins),
/// with the last interval closed at 1.
inline std::vector<int64_t> brute_force_counts(const torch::Tensor& pixels, int bins) {
  auto x = pixels.to(torch::kDouble).contiguous();
  const auto* data = x.data_ptr<double>();
  const int64_t plane = x.size(1) * x.size(2);
  std::vector<int64_t> counts(static_cast<size_t>(3 * bins), 0);
  for (int c = 0; c < 3; ++c) {
    for (int64_t i = 0; i < plane; ++i) {
      const double v = data[c * plane + i];
      for (int b = 0; b < bins; ++b) {
        const double lo = static_cast<double>(b) / bins;
        const double hi = static_cast<double>(b + 1) / bins;
        const bool last = b == bins - 1;
        if (v >= lo && (v < hi || (last && v <= 1.0))) {
          ++counts[static_cast<size_t>(c * bins + b)];
          break;
        }
      }
    }
  }
  return counts;
}

inline std::vector<double> brute_force_histogram(const torch::Tensor& pixels, int bins) {
  const auto counts = brute_force_counts(pixels, bins);
  const double n = static_cast<double>(pixels.size(1) * pixels.size(2));
  std::vector<double> out;
  for (auto c : counts) out.push_back(static_cast<double>(c) / n);
  return out;
}

/// Windowed SSIM on Rec.601 luminance: every 8x8 window at stride 1,
/// two-pass moments per window, mean index clamped to [0, 1].
inline double brute_force_ssim(const torch::Tensor& a, const torch::Tensor& b) {
  const auto luma = [](const torch::Tensor& t) {
    auto x = t.to(torch::kDouble).contiguous();
    const auto* d = x.data_ptr<double>();
    const int64_t h = x.size(1), w = x.size(2), plane = h * w;
    std::vector<double> y(static_cast<size_t>(plane));
    for (int64_t i = 0; i < plane; ++i) y[i] = 0.299 * d[i] + 0.587 * d[plane + i] + 0.114 * d[2 * plane + i];
    return y;
  };
  const int64_t h = a.size(1), w = a.size(2);
  const auto x = luma(a), y = luma(b);
  constexpr int k = 8;
  constexpr double c1 = 1e-4, c2 = 9e-4;
  double total = 0.0;
  int64_t windows = 0;
  for (int64_t r = 0; r + k <= h; ++r) {
    for (int64_t c = 0; c + k <= w; ++c) {
      double mx = 0.0, my = 0.0;
      for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) {
          mx += x[(r + i) * w + c + j];
          my += y[(r + i) * w + c + j];
        }
      mx /= k * k;
      my /= k * k;
      double vx = 0.0, vy = 0.0, cov = 0.0;
      for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) {
          const double dx = x[(r + i) * w + c + j] - mx, dy = y[(r + i) * w + c + j] - my;
          vx += dx * dx;
          vy += dy * dy;
          cov += dx * dy;
        }
      vx /= k * k;
      vy /= k * k;
      cov /= k * k;
      total += ((2 * mx * my + c1) * (2 * cov + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
      ++windows;
    }
  }
  return std::clamp(total / static_cast<double>(windows), 0.0, 1.0);
}

/// Central finite-difference gradient of a scalar function of one tensor.
template <typename Fn>
torch::Tensor numeric_gradient(Fn&& fn, const torch::Tensor& at, double h = 1e-6) {
  auto x = at.detach().to(torch::kDouble).clone();
  auto grad = torch::zeros_like(x);
  auto flat = x.view(-1);
  auto gflat = grad.view(-1);
  for (int64_t i = 0; i < flat.numel(); ++i) {
    const double orig = flat[i].item<double>();
    flat[i] = orig + h;
    const double plus = fn(x).template item<double>();
    flat[i] = orig - h;
    const double minus = fn(x).template item<double>();
    flat[i] = orig;
    gflat[i] = (plus - minus) / (2 * h);
  }
  return grad;
}

template <typename Fn>
torch::Tensor analytic_gradient(Fn&& fn, const torch::Tensor& at) {
  auto x = at.detach().to(torch::kDouble).clone().requires_grad_(true);
  fn(x).backward();
  return x.grad().detach();
}

/// max_i |a_i - n_i| / max(|a_i|, |n_i|, floor)
inline double max_relative_error(const torch::Tensor& analytic, const torch::Tensor& numeric, double floor = 1e-6) {
  auto a = analytic.to(torch::kDouble).view(-1);
  auto n = numeric.to(torch::kDouble).view(-1);
  double worst = 0.0;
  for (int64_t i = 0; i < a.numel(); ++i) {
    const double av = a[i].item<double>(), nv = n[i].item<double>();
    worst = std::max(worst, std::abs(av - nv) / std::max({std::abs(av), std::abs(nv), floor}));
  }
  return worst;
}

}  // namespace videogan::testing
