#pragma once

#include <optional>
#include <string>

#include "tspfcn/raster.hpp"

namespace tspfcn {

/// 8-bit RGB PNG.
void save_png(const RasterImage& image, const std::string& path);
/// Any PNG libpng can decode, converted to 8-bit RGB. Throws IoError when the file cannot be
/// opened, FormatError when it is truncated or not a PNG, ShapeError when `expect_w/h` are given
/// and do not match.
RasterImage load_png(const std::string& path, std::optional<int> expect_w = std::nullopt,
                     std::optional<int> expect_h = std::nullopt);

/// Label mask as 8-bit grayscale, black path on white, the same convention as prediction masks.
void save_label_png(const LabelMask& mask, const std::string& path);
LabelMask load_label_png(const std::string& path, std::optional<int> expect_w = std::nullopt,
                         std::optional<int> expect_h = std::nullopt);

} // namespace tspfcn
