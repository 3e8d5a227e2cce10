#pragma once

#include <span>
#include <string>
#include <vector>

#include "trajcast/core/types.hpp"

namespace trajcast::io {

// Minimal deterministic SVG emitter: fixed-precision coordinates, no
// timestamps, so byte-identical output for identical inputs (golden-file
// friendly). World y points up; the viewBox is fitted to the content.
class SvgPlot {
public:
    void polyline(std::span<const Vec2> pts, const std::string& color, double width,
                  bool dashed = false);
    void circle(Vec2 center, double r, const std::string& color);
    // covariance ellipse at 2 sigma
    void ellipse(Vec2 center, const Cov2& cov, const std::string& color);

    std::string render(int pixel_width, const std::string& comment) const;

    // qualitative palette keyed by latent mode index
    static std::string mode_color(int z);

private:
    struct Item {
        int kind;  // 0 polyline, 1 circle, 2 ellipse
        std::vector<Vec2> pts;
        std::string color;
        double width = 1.0, r = 1.0;
        Cov2 cov;
        bool dashed = false;
    };
    std::vector<Item> items_;
};

}  // namespace trajcast::io
