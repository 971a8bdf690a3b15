#include <cmath>
#include <random>

#include "videogan/data_pipeline.hpp"
#include "videogan/errors.hpp"

namespace videogan {
namespace {

struct Shape {
  bool disc;
  double cx, cy, vx, vy, extent_x, extent_y;
  std::array<float, 3> color;
};

}  // namespace

VideoClip generate_moving_shapes_clip(const std::string& clip_id, int frames, int size, uint64_t seed) {
  if (frames < 1 || size < 8) throw ConfigError("moving-shapes clip needs >= 1 frame and size >= 8");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto range = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

  const std::array<float, 3> top{float(range(0.15, 0.6)), float(range(0.15, 0.6)), float(range(0.15, 0.6))};
  const std::array<float, 3> bottom{float(range(0.15, 0.6)), float(range(0.15, 0.6)), float(range(0.15, 0.6))};

  std::vector<Shape> shapes(2 + static_cast<int>(unit(rng) * 2.0));
  for (auto& shape : shapes) {
    shape.disc = unit(rng) < 0.5;
    shape.cx = range(0.2, 0.8) * size;
    shape.cy = range(0.2, 0.8) * size;
    const double speed = range(0.02, 0.05) * size;
    const double angle = range(0.0, 2.0 * M_PI);
    shape.vx = speed * std::cos(angle);
    shape.vy = speed * std::sin(angle);
    shape.extent_x = range(0.08, 0.2) * size;
    shape.extent_y = shape.disc ? shape.extent_x : range(0.08, 0.2) * size;
    shape.color = {float(range(0.1, 0.85)), float(range(0.1, 0.85)), float(range(0.1, 0.85))};
  }
  const double drift_phase = range(0.0, 2.0 * M_PI);
  const double drift_amplitude = range(0.03, 0.08);

  const auto coords = torch::arange(size, torch::kFloat32) + 0.5f;
  const auto ys = coords.view({size, 1}).expand({size, size});
  const auto xs = coords.view({1, size}).expand({size, size});
  const auto t = (ys / float(size)).unsqueeze(0);
  auto background = torch::empty({3, size, size});
  for (int c = 0; c < 3; ++c) background[c] = (top[c] * (1.0f - t[0]) + bottom[c] * t[0]);

  VideoClip clip{clip_id, Domain::kA, {}, 0};
  for (int f = 0; f < frames; ++f) {
    auto image = background.clone();
    for (const auto& shape : shapes) {
      // Shapes bounce off the borders so they stay in view.
      auto bounce = [&](double start, double velocity, double extent) {
        const double lo = extent, hi = size - extent, span = std::max(hi - lo, 1.0);
        double pos = std::fmod(start - lo + velocity * f, 2.0 * span);
        if (pos < 0) pos += 2.0 * span;
        return lo + (pos <= span ? pos : 2.0 * span - pos);
      };
      const double cx = bounce(shape.cx, shape.vx, shape.extent_x);
      const double cy = bounce(shape.cy, shape.vy, shape.extent_y);
      torch::Tensor mask;
      if (shape.disc) {
        mask = (xs - cx).square() + (ys - cy).square() <= shape.extent_x * shape.extent_x;
      } else {
        mask = ((xs - cx).abs() <= shape.extent_x).logical_and((ys - cy).abs() <= shape.extent_y);
      }
      for (int c = 0; c < 3; ++c) image[c] = torch::where(mask, torch::full({}, shape.color[c]), image[c]);
    }
    const double illumination = 1.0 + drift_amplitude * std::sin(drift_phase + 0.5 * f);
    clip.frames.emplace_back((image * illumination).clamp(0.0, 1.0), RangeTag::kUnit);
  }
  return clip;
}

}  // namespace videogan
