#pragma once

/// @file raster.hpp
/// @brief Rasterization of instances and tours into input images and one-hot label masks.
///
/// Images are row-major from the top-left; pixel (x, y) is column x, row y. A city's
/// pixel position is the truncated projected coordinate, clamped to the last row/column
/// because the projection maps the maximum onto w (resp. h) itself.

#include <compare>
#include <cstdint>
#include <string>
#include <vector>

#include "tspfcn/instance.hpp"
#include "tspfcn/tensor.hpp"

namespace tspfcn {

struct Rgb {
    std::uint8_t r = 0;
    std::uint8_t g = 0;
    std::uint8_t b = 0;

    friend bool operator==(const Rgb&, const Rgb&) = default;
};

inline constexpr Rgb kRed{255, 0, 0};
inline constexpr Rgb kBlue{0, 0, 255};
inline constexpr Rgb kWhite{255, 255, 255};
inline constexpr Rgb kBlack{0, 0, 0};

enum class RenderMode { full_graph, scatter, tour_label };

std::string to_string(RenderMode mode);
RenderMode render_mode_from_string(const std::string& s);

struct RenderConfig {
    int w = 224;
    int h = 224;
    int city_halfwidth = 6;
    int label_thickness = 1;
    Rgb city_color = kRed;
    Rgb path_color = kBlue;
    Rgb background_color = kWhite;
    RenderMode mode = RenderMode::full_graph;

    /// 224 x 224, 6-pixel city half-width.
    static RenderConfig paper();
    /// 64 x 64 with the city half-width scaled down to 2 pixels.
    static RenderConfig desk();
    /// size x size with the half-width scaled from 6 px at 224 (at least 1).
    static RenderConfig sized(int size);

    /// Throws ConfigError on clashing colors or squares that do not fit the image.
    void validate() const;
};

nlohmann::json to_json(const RenderConfig& cfg);
RenderConfig render_config_from_json(const nlohmann::json& j);

struct PixelPos {
    int x = 0;
    int y = 0;

    friend auto operator<=>(const PixelPos&, const PixelPos&) = default;
};

PixelPos city_pixel(const PixelCoords& pc, int i);
std::vector<PixelPos> city_pixels(const PixelCoords& pc);

class RasterImage {
  public:
    RasterImage() = default;
    RasterImage(int w, int h, Rgb fill = kWhite);
    RasterImage(int w, int h, std::vector<std::uint8_t> rgb);

    int width() const noexcept { return w_; }
    int height() const noexcept { return h_; }
    Rgb at(int x, int y) const;
    void set(int x, int y, Rgb c);
    const std::vector<std::uint8_t>& bytes() const noexcept { return rgb_; }

    friend bool operator==(const RasterImage&, const RasterImage&) = default;

  private:
    int w_ = 0;
    int h_ = 0;
    std::vector<std::uint8_t> rgb_;
};

/// Two-class one-hot mask stored as the class-1 indicator (class 0 is its complement,
/// so every pixel is one-hot by construction). Class 1 = optimal path or city; when the
/// mask comes from a network prediction it is the black (path) class.
class LabelMask {
  public:
    LabelMask() = default;
    LabelMask(int w, int h);

    int width() const noexcept { return w_; }
    int height() const noexcept { return h_; }
    bool is_path(int x, int y) const;
    void set_path(int x, int y, bool on);
    /// One-hot value of class k (0 = background, 1 = path) at (x, y).
    int value(int x, int y, int k) const { return (k == 1) == is_path(x, y) ? 1 : 0; }
    std::size_t count_path() const;
    const std::vector<std::uint8_t>& bits() const noexcept { return bits_; }

    /// Shape {2, h, w}, channel 0 background, channel 1 path.
    template <typename T>
    Tensor<T> one_hot() const {
        Tensor<T> t({2, h_, w_});
        for (int y = 0; y < h_; ++y) {
            for (int x = 0; x < w_; ++x) {
                const bool p = is_path(x, y);
                t.at(0, y, x) = p ? T{0} : T{1};
                t.at(1, y, x) = p ? T{1} : T{0};
            }
        }
        return t;
    }

    friend bool operator==(const LabelMask&, const LabelMask&) = default;

  private:
    int w_ = 0;
    int h_ = 0;
    std::vector<std::uint8_t> bits_;
};

/// Discrete segment between two pixels. Endpoints are put in lexicographic (x, y) order,
/// then the major axis advances one pixel per step while the minor axis takes
/// floor(t * d_minor / p); the result is 8-connected and independent of argument order.
/// Throws RasterError if either endpoint is outside a w x h image.
std::vector<PixelPos> line_pixels(PixelPos a, PixelPos b, int w, int h);

struct RenderFlags {
    bool degenerate_axis = false;
    /// Two distinct cities share an integer pixel.
    bool pixel_collision = false;
};

RenderFlags inspect(const TspInstance& instance, const RenderConfig& cfg);

RasterImage render_input(const TspInstance& instance, const RenderConfig& cfg);
RasterImage render_scatter(const TspInstance& instance, const RenderConfig& cfg);
/// Dispatches on cfg.mode (full_graph or scatter).
RasterImage render_image(const TspInstance& instance, const RenderConfig& cfg);
LabelMask render_label(const TspInstance& instance, const Tour& tour, const RenderConfig& cfg);

/// Per-pixel argmax over a {2, h, w} probability map; ties go to the path class.
/// Throws NumericError on NaN.
template <typename T>
LabelMask binarize(const Tensor<T>& probs) {
    if (probs.rank() != 3 || probs.dim(0) != 2) {
        throw ShapeError("binarize: expected {2,h,w}, got " + shape_str(probs.shape()));
    }
    check_finite(probs, "probability map");
    LabelMask m(probs.dim(2), probs.dim(1));
    for (int y = 0; y < probs.dim(1); ++y) {
        for (int x = 0; x < probs.dim(2); ++x) {
            m.set_path(x, y, probs.at(1, y, x) >= probs.at(0, y, x));
        }
    }
    return m;
}

/// Path pixels black, everything else white.
RasterImage mask_to_image(const LabelMask& mask);
/// Black (all channels < 128) pixels become the path class.
LabelMask image_to_mask(const RasterImage& image);

template <typename T>
RasterImage probs_to_image(const Tensor<T>& probs) {
    return mask_to_image(binarize(probs));
}

/// Network input: RGB bytes / 255 as a {3, h, w} tensor.
template <typename T>
Tensor<T> image_to_tensor(const RasterImage& image) {
    Tensor<T> t({3, image.height(), image.width()});
    const auto& b = image.bytes();
    const std::size_t plane = static_cast<std::size_t>(image.width()) * image.height();
    for (std::size_t p = 0; p < plane; ++p) {
        for (std::size_t c = 0; c < 3; ++c) {
            t[c * plane + p] = static_cast<T>(b[p * 3 + c]) / T{255};
        }
    }
    return t;
}

} // namespace tspfcn
