#include "tspfcn/raster.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "tspfcn/errors.hpp"

namespace tspfcn {

std::string to_string(RenderMode mode) {
    switch (mode) {
    case RenderMode::full_graph:
        return "full-graph";
    case RenderMode::scatter:
        return "scatter";
    case RenderMode::tour_label:
        return "tour-label";
    }
    return "?";
}

RenderMode render_mode_from_string(const std::string& s) {
    if (s == "full-graph" || s == "full") {
        return RenderMode::full_graph;
    }
    if (s == "scatter") {
        return RenderMode::scatter;
    }
    if (s == "tour-label") {
        return RenderMode::tour_label;
    }
    throw ConfigError("unknown render mode '" + s + "'");
}

RenderConfig RenderConfig::paper() { return RenderConfig{}; }

RenderConfig RenderConfig::desk() { return sized(64); }

RenderConfig RenderConfig::sized(int size) {
    RenderConfig cfg;
    cfg.w = size;
    cfg.h = size;
    cfg.city_halfwidth = std::max(1, static_cast<int>(std::lround(6.0 * size / 224.0)));
    return cfg;
}

void RenderConfig::validate() const {
    if (w < 2 || h < 2) {
        throw ConfigError("render: image dims must be >= 2");
    }
    if (city_halfwidth < 0 || 2 * city_halfwidth + 1 >= std::min(w, h)) {
        throw ConfigError("render: city square does not fit the image");
    }
    if (label_thickness < 1) {
        throw ConfigError("render: label thickness must be >= 1");
    }
    if (city_color == path_color || city_color == background_color ||
        path_color == background_color) {
        throw ConfigError("render: city, path and background colors must differ");
    }
}

namespace {

nlohmann::json rgb_json(Rgb c) { return {c.r, c.g, c.b}; }

Rgb rgb_from_json(const nlohmann::json& j) {
    return Rgb{j.at(0).get<std::uint8_t>(), j.at(1).get<std::uint8_t>(),
               j.at(2).get<std::uint8_t>()};
}

} // namespace

nlohmann::json to_json(const RenderConfig& cfg) {
    return {{"w", cfg.w},
            {"h", cfg.h},
            {"city_halfwidth", cfg.city_halfwidth},
            {"label_thickness", cfg.label_thickness},
            {"city_color", rgb_json(cfg.city_color)},
            {"path_color", rgb_json(cfg.path_color)},
            {"background_color", rgb_json(cfg.background_color)},
            {"mode", to_string(cfg.mode)}};
}

RenderConfig render_config_from_json(const nlohmann::json& j) {
    try {
        RenderConfig cfg;
        cfg.w = j.at("w").get<int>();
        cfg.h = j.at("h").get<int>();
        cfg.city_halfwidth = j.at("city_halfwidth").get<int>();
        cfg.label_thickness = j.value("label_thickness", 1);
        cfg.city_color = rgb_from_json(j.at("city_color"));
        cfg.path_color = rgb_from_json(j.at("path_color"));
        cfg.background_color = rgb_from_json(j.at("background_color"));
        cfg.mode = render_mode_from_string(j.at("mode").get<std::string>());
        cfg.validate();
        return cfg;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed render config: ") + e.what());
    }
}

PixelPos city_pixel(const PixelCoords& pc, int i) {
    const auto& p = pc.points.at(static_cast<std::size_t>(i));
    return {std::min(static_cast<int>(p.x), pc.w - 1), std::min(static_cast<int>(p.y), pc.h - 1)};
}

std::vector<PixelPos> city_pixels(const PixelCoords& pc) {
    std::vector<PixelPos> out;
    out.reserve(pc.points.size());
    for (int i = 0; i < static_cast<int>(pc.points.size()); ++i) {
        out.push_back(city_pixel(pc, i));
    }
    return out;
}

RasterImage::RasterImage(int w, int h, Rgb fill)
    : w_(w), h_(h), rgb_(static_cast<std::size_t>(w) * h * 3) {
    for (std::size_t p = 0; p < rgb_.size(); p += 3) {
        rgb_[p] = fill.r;
        rgb_[p + 1] = fill.g;
        rgb_[p + 2] = fill.b;
    }
}

RasterImage::RasterImage(int w, int h, std::vector<std::uint8_t> rgb)
    : w_(w), h_(h), rgb_(std::move(rgb)) {
    if (rgb_.size() != static_cast<std::size_t>(w) * h * 3) {
        throw ShapeError("RasterImage: byte count does not match dimensions");
    }
}

Rgb RasterImage::at(int x, int y) const {
    const std::size_t p = (static_cast<std::size_t>(y) * w_ + x) * 3;
    return {rgb_[p], rgb_[p + 1], rgb_[p + 2]};
}

void RasterImage::set(int x, int y, Rgb c) {
    const std::size_t p = (static_cast<std::size_t>(y) * w_ + x) * 3;
    rgb_[p] = c.r;
    rgb_[p + 1] = c.g;
    rgb_[p + 2] = c.b;
}

LabelMask::LabelMask(int w, int h) : w_(w), h_(h), bits_(static_cast<std::size_t>(w) * h, 0) {}

bool LabelMask::is_path(int x, int y) const {
    return bits_[static_cast<std::size_t>(y) * w_ + x] != 0;
}

void LabelMask::set_path(int x, int y, bool on) {
    bits_[static_cast<std::size_t>(y) * w_ + x] = on ? 1 : 0;
}

std::size_t LabelMask::count_path() const {
    return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

namespace {

int floor_div(int num, int den) {
    // den > 0
    const int q = num / den;
    return (num % den != 0 && num < 0) ? q - 1 : q;
}

bool inside(PixelPos p, int w, int h) { return p.x >= 0 && p.y >= 0 && p.x < w && p.y < h; }

template <typename Paint>
void for_square(PixelPos c, int halfwidth, int w, int h, Paint&& paint) {
    const int x0 = std::max(0, c.x - halfwidth);
    const int x1 = std::min(w - 1, c.x + halfwidth);
    const int y0 = std::max(0, c.y - halfwidth);
    const int y1 = std::min(h - 1, c.y + halfwidth);
    for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
            paint(x, y);
        }
    }
}

void paint_cities(RasterImage& img, const std::vector<PixelPos>& cities, const RenderConfig& cfg) {
    for (const auto& c : cities) {
        for_square(c, cfg.city_halfwidth, cfg.w, cfg.h,
                   [&](int x, int y) { img.set(x, y, cfg.city_color); });
    }
}

} // namespace

std::vector<PixelPos> line_pixels(PixelPos a, PixelPos b, int w, int h) {
    if (!inside(a, w, h) || !inside(b, w, h)) {
        throw RasterError("line endpoint outside " + std::to_string(w) + "x" + std::to_string(h) +
                          " image");
    }
    if (b < a) {
        std::swap(a, b);
    }
    const int dx = b.x - a.x;
    const int dy = b.y - a.y;
    const int p = std::max(std::abs(dx), std::abs(dy));
    std::vector<PixelPos> out;
    out.reserve(static_cast<std::size_t>(p) + 1);
    out.push_back(a);
    for (int t = 1; t <= p; ++t) {
        out.push_back({a.x + floor_div(t * dx, p), a.y + floor_div(t * dy, p)});
    }
    return out;
}

RenderFlags inspect(const TspInstance& instance, const RenderConfig& cfg) {
    const auto pc = normalize(instance, cfg.w, cfg.h);
    auto px = city_pixels(pc);
    std::sort(px.begin(), px.end());
    RenderFlags f;
    f.degenerate_axis = pc.degenerate();
    f.pixel_collision = std::adjacent_find(px.begin(), px.end()) != px.end();
    return f;
}

RasterImage render_input(const TspInstance& instance, const RenderConfig& cfg) {
    cfg.validate();
    const auto cities = city_pixels(normalize(instance, cfg.w, cfg.h));
    RasterImage img(cfg.w, cfg.h, cfg.background_color);
    for (std::size_t i = 0; i < cities.size(); ++i) {
        for (std::size_t j = i + 1; j < cities.size(); ++j) {
            for (const auto& p : line_pixels(cities[i], cities[j], cfg.w, cfg.h)) {
                img.set(p.x, p.y, cfg.path_color);
            }
        }
    }
    // Squares go on top so paths never hide a city.
    paint_cities(img, cities, cfg);
    return img;
}

RasterImage render_scatter(const TspInstance& instance, const RenderConfig& cfg) {
    cfg.validate();
    const auto cities = city_pixels(normalize(instance, cfg.w, cfg.h));
    RasterImage img(cfg.w, cfg.h, cfg.background_color);
    paint_cities(img, cities, cfg);
    return img;
}

RasterImage render_image(const TspInstance& instance, const RenderConfig& cfg) {
    switch (cfg.mode) {
    case RenderMode::full_graph:
        return render_input(instance, cfg);
    case RenderMode::scatter:
        return render_scatter(instance, cfg);
    case RenderMode::tour_label:
        break;
    }
    throw ConfigError("render_image: tour-label mode renders masks, not input images");
}

LabelMask render_label(const TspInstance& instance, const Tour& tour, const RenderConfig& cfg) {
    cfg.validate();
    auto verdict = validate_tour(instance, tour.order);
    if (!verdict) {
        throw InvalidTourError("render_label: " + verdict.reason);
    }
    const auto cities = city_pixels(normalize(instance, cfg.w, cfg.h));
    LabelMask mask(cfg.w, cfg.h);
    const int brush = (cfg.label_thickness - 1) / 2;
    const std::size_t n = tour.order.size();
    for (std::size_t k = 0; k < n; ++k) {
        const auto a = cities[static_cast<std::size_t>(tour.order[k])];
        const auto b = cities[static_cast<std::size_t>(tour.order[(k + 1) % n])];
        for (const auto& p : line_pixels(a, b, cfg.w, cfg.h)) {
            for_square(p, brush, cfg.w, cfg.h, [&](int x, int y) { mask.set_path(x, y, true); });
        }
    }
    for (const auto& c : cities) {
        for_square(c, cfg.city_halfwidth, cfg.w, cfg.h,
                   [&](int x, int y) { mask.set_path(x, y, true); });
    }
    return mask;
}

RasterImage mask_to_image(const LabelMask& mask) {
    RasterImage img(mask.width(), mask.height(), kWhite);
    for (int y = 0; y < mask.height(); ++y) {
        for (int x = 0; x < mask.width(); ++x) {
            if (mask.is_path(x, y)) {
                img.set(x, y, kBlack);
            }
        }
    }
    return img;
}

LabelMask image_to_mask(const RasterImage& image) {
    LabelMask m(image.width(), image.height());
    for (int y = 0; y < image.height(); ++y) {
        for (int x = 0; x < image.width(); ++x) {
            const Rgb c = image.at(x, y);
            m.set_path(x, y, c.r < 128 && c.g < 128 && c.b < 128);
        }
    }
    return m;
}

} // namespace tspfcn
