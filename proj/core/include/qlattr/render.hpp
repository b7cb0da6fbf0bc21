#pragma once

#include <array>
#include <iosfwd>

#include "qlattr/io.hpp"

namespace qlattr {

struct RenderOptions {
    std::array<int, 2> axes = {0, 1};
    int width = 900;
    int height = 700;
};

/// Rasterize a covering (optionally with measure weights) as an SVG of leaf
/// rectangles projected onto two axes. Measure plots fill through a
/// blue -> green -> yellow ramp on a log scale floored at max * 1e-6;
/// covering-only plots draw light gray outlines. When the state dimension
/// exceeds two, measure weights of boxes that coincide in projection are
/// summed into a single rectangle.
void render_svg(std::ostream& os, const CoveringData& data, const RenderOptions& opts);

/// Number of <rect> elements render_svg will emit for this input.
std::size_t render_rect_count(const CoveringData& data, const RenderOptions& opts);

} // namespace qlattr
