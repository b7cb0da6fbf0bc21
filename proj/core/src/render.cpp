#include "qlattr/render.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <stdexcept>

namespace qlattr {

namespace {

struct Rgb {
    double r, g, b;
};

// Low -> high: blue, green, yellow.
Rgb ramp(double t) {
    t = std::clamp(t, 0.0, 1.0);
    const Rgb blue{0.10, 0.15, 0.80};
    const Rgb green{0.10, 0.72, 0.30};
    const Rgb yellow{0.98, 0.91, 0.12};
    auto lerp = [](const Rgb& a, const Rgb& b, double s) {
        return Rgb{a.r + s * (b.r - a.r), a.g + s * (b.g - a.g), a.b + s * (b.b - a.b)};
    };
    return t < 0.5 ? lerp(blue, green, 2.0 * t) : lerp(green, yellow, 2.0 * t - 1.0);
}

std::string hex_color(const Rgb& c) {
    char buf[8];
    std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", static_cast<int>(std::lround(c.r * 255)),
                  static_cast<int>(std::lround(c.g * 255)), static_cast<int>(std::lround(c.b * 255)));
    return buf;
}

struct ProjRect {
    double cx, cy, rx, ry;
    double weight;
};

std::vector<ProjRect> project(const CoveringData& data, const RenderOptions& opts) {
    const int a = opts.axes[0];
    const int b = opts.axes[1];
    if (a < 0 || b < 0 || a >= data.dim || b >= data.dim || a == b)
        throw std::invalid_argument("render: projection axes invalid for this dimension");

    std::vector<ProjRect> rects;
    if (data.dim > 2 && data.has_measure) {
        // All leaves share one radius vector, so projected rectangles tile a
        // regular grid; collapse coincident cells and sum their weights.
        std::map<std::pair<long long, long long>, ProjRect> cells;
        for (const LeafRow& row : data.rows) {
            const double wx = 2.0 * row.radius[a];
            const double wy = 2.0 * row.radius[b];
            const auto key = std::make_pair(static_cast<long long>(std::llround(row.center[a] / wx)),
                                            static_cast<long long>(std::llround(row.center[b] / wy)));
            auto [it, fresh] = cells.try_emplace(
                key, ProjRect{row.center[a], row.center[b], row.radius[a], row.radius[b], 0.0});
            it->second.weight += row.measure;
            (void)fresh;
        }
        rects.reserve(cells.size());
        for (const auto& [_, rect] : cells) rects.push_back(rect);
    } else {
        rects.reserve(data.rows.size());
        for (const LeafRow& row : data.rows)
            rects.push_back({row.center[a], row.center[b], row.radius[a], row.radius[b], row.measure});
    }
    return rects;
}

} // namespace

std::size_t render_rect_count(const CoveringData& data, const RenderOptions& opts) {
    return project(data, opts).size();
}

void render_svg(std::ostream& os, const CoveringData& data, const RenderOptions& opts) {
    const std::vector<ProjRect> rects = project(data, opts);

    double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
    bool first = true;
    for (const ProjRect& r : rects) {
        if (first) {
            xmin = r.cx - r.rx;
            xmax = r.cx + r.rx;
            ymin = r.cy - r.ry;
            ymax = r.cy + r.ry;
            first = false;
        } else {
            xmin = std::min(xmin, r.cx - r.rx);
            xmax = std::max(xmax, r.cx + r.rx);
            ymin = std::min(ymin, r.cy - r.ry);
            ymax = std::max(ymax, r.cy + r.ry);
        }
    }
    const double margin = 0.02;
    const double spanx = (xmax - xmin) * (1 + 2 * margin);
    const double spany = (ymax - ymin) * (1 + 2 * margin);
    const double x0 = xmin - (xmax - xmin) * margin;
    const double y1 = ymax + (ymax - ymin) * margin;
    const double sx = opts.width / (spanx > 0 ? spanx : 1.0);
    const double sy = opts.height / (spany > 0 ? spany : 1.0);

    double max_w = 0.0;
    for (const ProjRect& r : rects) max_w = std::max(max_w, r.weight);
    const bool colored = data.has_measure && max_w > 0.0;
    const double floor_w = max_w * 1e-6;
    const double log_floor = colored ? std::log(floor_w) : 0.0;
    const double log_span = colored ? std::log(max_w) - log_floor : 1.0;

    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << opts.width << "\" height=\""
       << opts.height << "\" viewBox=\"0 0 " << opts.width << ' ' << opts.height << "\">\n";
    os << "<rect x=\"0\" y=\"0\" width=\"" << opts.width << "\" height=\"" << opts.height
       << "\" fill=\"white\"/>\n";

    char buf[256];
    for (const ProjRect& r : rects) {
        const double px = (r.cx - r.rx - x0) * sx;
        const double py = (y1 - (r.cy + r.ry)) * sy;
        const double pw = 2.0 * r.rx * sx;
        const double ph = 2.0 * r.ry * sy;
        if (colored) {
            const double t = (std::log(std::max(r.weight, floor_w)) - log_floor) / log_span;
            std::snprintf(buf, sizeof(buf),
                          "<rect x=\"%.3f\" y=\"%.3f\" width=\"%.3f\" height=\"%.3f\" fill=\"%s\"/>\n",
                          px, py, pw, ph, hex_color(ramp(t)).c_str());
        } else {
            std::snprintf(buf, sizeof(buf),
                          "<rect x=\"%.3f\" y=\"%.3f\" width=\"%.3f\" height=\"%.3f\" fill=\"none\" "
                          "stroke=\"#bbbbbb\" stroke-width=\"0.5\"/>\n",
                          px, py, pw, ph);
        }
        os << buf;
    }
    os << "</svg>\n";
}

} // namespace qlattr
