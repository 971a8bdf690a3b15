#pragma once

#include <filesystem>

#include "videogan/types.hpp"

namespace videogan {

/// Decodes an 8-bit image, resizes it bilinearly to size x size (skipped when
/// size <= 0) and maps it into `range`. Throws ImageError when undecodable.
Frame read_frame(const std::filesystem::path& path, int size, RangeTag range);

/// Writes the frame as an 8-bit RGB PNG (values rounded to the nearest level).
void write_frame(const Frame& frame, const std::filesystem::path& path);

/// Writes rows of frames as one tiled image. Every row must have the same
/// number of frames of identical size.
void write_frame_grid(const std::vector<std::vector<Frame>>& rows, const std::filesystem::path& path);

}  // namespace videogan
