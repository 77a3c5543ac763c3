#include "tspfcn/png_io.hpp"

#include <cstring>
#include <filesystem>
#include <vector>

#include <png.h>

#include "tspfcn/errors.hpp"

namespace tspfcn {

namespace {

void write_png(const std::string& path, int w, int h, png_uint_32 format, const void* pixels) {
    png_image img;
    std::memset(&img, 0, sizeof img);
    img.version = PNG_IMAGE_VERSION;
    img.width = static_cast<png_uint_32>(w);
    img.height = static_cast<png_uint_32>(h);
    img.format = format;
    if (!png_image_write_to_file(&img, path.c_str(), 0, pixels, 0, nullptr)) {
        std::string msg = img.message;
        png_image_free(&img);
        throw IoError("cannot write PNG " + path + ": " + msg);
    }
}

std::vector<std::uint8_t> read_png(const std::string& path, png_uint_32 format, int& w, int& h) {
    if (!std::filesystem::exists(path)) {
        throw IoError("no such file: " + path);
    }
    png_image img;
    std::memset(&img, 0, sizeof img);
    img.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&img, path.c_str())) {
        std::string msg = img.message;
        png_image_free(&img);
        throw FormatError("malformed PNG " + path + ": " + msg);
    }
    img.format = format;
    std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(img));
    if (!png_image_finish_read(&img, nullptr, buf.data(), 0, nullptr)) {
        std::string msg = img.message;
        png_image_free(&img);
        throw FormatError("malformed PNG " + path + ": " + msg);
    }
    w = static_cast<int>(img.width);
    h = static_cast<int>(img.height);
    png_image_free(&img);
    return buf;
}

void check_dims(const std::string& path, int w, int h, std::optional<int> ew,
                std::optional<int> eh) {
    if ((ew && *ew != w) || (eh && *eh != h)) {
        throw ShapeError(path + ": image is " + std::to_string(w) + "x" + std::to_string(h) +
                         ", expected " + std::to_string(ew.value_or(w)) + "x" +
                         std::to_string(eh.value_or(h)));
    }
}

} // namespace

void save_png(const RasterImage& image, const std::string& path) {
    write_png(path, image.width(), image.height(), PNG_FORMAT_RGB, image.bytes().data());
}

RasterImage load_png(const std::string& path, std::optional<int> expect_w,
                     std::optional<int> expect_h) {
    int w = 0;
    int h = 0;
    auto buf = read_png(path, PNG_FORMAT_RGB, w, h);
    check_dims(path, w, h, expect_w, expect_h);
    return RasterImage(w, h, std::move(buf));
}

void save_label_png(const LabelMask& mask, const std::string& path) {
    std::vector<std::uint8_t> gray(mask.bits().size());
    for (std::size_t i = 0; i < gray.size(); ++i) {
        gray[i] = mask.bits()[i] ? 0 : 255;
    }
    write_png(path, mask.width(), mask.height(), PNG_FORMAT_GRAY, gray.data());
}

LabelMask load_label_png(const std::string& path, std::optional<int> expect_w,
                         std::optional<int> expect_h) {
    int w = 0;
    int h = 0;
    auto gray = read_png(path, PNG_FORMAT_GRAY, w, h);
    check_dims(path, w, h, expect_w, expect_h);
    LabelMask mask(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            mask.set_path(x, y, gray[static_cast<std::size_t>(y) * w + x] < 128);
        }
    }
    return mask;
}

} // namespace tspfcn
