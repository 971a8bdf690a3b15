#include "videogan/image_io.hpp"

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "videogan/errors.hpp"

namespace videogan {
namespace {

cv::Mat to_rgb8(const Frame& frame) {
  auto unit = frame.to_unit().pixels();
  auto hwc = (unit * 255.0).round().clamp(0, 255).to(torch::kUInt8).permute({1, 2, 0}).contiguous();
  cv::Mat rgb(static_cast<int>(frame.height()), static_cast<int>(frame.width()), CV_8UC3, hwc.data_ptr<uint8_t>());
  cv::Mat bgr;
  cv::cvtColor(rgb, bgr, cv::COLOR_RGB2BGR);
  return bgr;
}

}  // namespace

Frame read_frame(const std::filesystem::path& path, int size, RangeTag range) {
  cv::Mat bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
  if (bgr.empty()) throw ImageError("cannot decode image '" + path.string() + "'");
  if (size > 0 && (bgr.rows != size || bgr.cols != size)) {
    cv::Mat resized;
    cv::resize(bgr, resized, cv::Size(size, size), 0, 0, cv::INTER_LINEAR);
    bgr = resized;
  }
  cv::Mat rgb;
  cv::cvtColor(bgr, rgb, cv::COLOR_BGR2RGB);
  auto hwc = torch::from_blob(rgb.data, {rgb.rows, rgb.cols, 3}, torch::kUInt8);
  auto unit = hwc.permute({2, 0, 1}).to(torch::kFloat32).div(255.0).contiguous();
  return Frame(unit, RangeTag::kUnit).to_range(range);
}

void write_frame(const Frame& frame, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  if (!cv::imwrite(path.string(), to_rgb8(frame))) throw ImageError("cannot write image '" + path.string() + "'");
}

void write_frame_grid(const std::vector<std::vector<Frame>>& rows, const std::filesystem::path& path) {
  if (rows.empty() || rows.front().empty()) throw ShapeError("frame grid needs at least one frame");
  std::vector<cv::Mat> stripes;
  for (const auto& row : rows) {
    if (row.size() != rows.front().size()) throw ShapeError("frame grid rows differ in length");
    std::vector<cv::Mat> tiles;
    for (const auto& frame : row) tiles.push_back(to_rgb8(frame));
    cv::Mat stripe;
    cv::hconcat(tiles, stripe);
    stripes.push_back(stripe);
  }
  cv::Mat grid;
  cv::vconcat(stripes, grid);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  if (!cv::imwrite(path.string(), grid)) throw ImageError("cannot write image '" + path.string() + "'");
}

}  // namespace videogan
