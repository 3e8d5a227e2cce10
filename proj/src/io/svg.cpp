#include "trajcast/io/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace trajcast::io {

namespace {
std::string f3(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3f", v);
    return buf;
}
}  // namespace

void SvgPlot::polyline(std::span<const Vec2> pts, const std::string& color, double width,
                       bool dashed) {
    Item it;
    it.kind = 0;
    it.pts.assign(pts.begin(), pts.end());
    it.color = color;
    it.width = width;
    it.dashed = dashed;
    items_.push_back(std::move(it));
}

void SvgPlot::circle(Vec2 center, double r, const std::string& color) {
    Item it;
    it.kind = 1;
    it.pts = {center};
    it.color = color;
    it.r = r;
    items_.push_back(std::move(it));
}

void SvgPlot::ellipse(Vec2 center, const Cov2& cov, const std::string& color) {
    Item it;
    it.kind = 2;
    it.pts = {center};
    it.color = color;
    it.cov = cov;
    items_.push_back(std::move(it));
}

std::string SvgPlot::mode_color(int z) {
    static const char* palette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
    return palette[z % 10];
}

std::string SvgPlot::render(int pixel_width, const std::string& comment) const {
    double min_x = 1e300, max_x = -1e300, min_y = 1e300, max_y = -1e300;
    for (const auto& it : items_) {
        for (const auto& p : it.pts) {
            min_x = std::min(min_x, p[0]);
            max_x = std::max(max_x, p[0]);
            min_y = std::min(min_y, p[1]);
            max_y = std::max(max_y, p[1]);
        }
    }
    if (items_.empty()) min_x = min_y = 0, max_x = max_y = 1;
    const double pad = 0.05 * std::max({max_x - min_x, max_y - min_y, 1.0});
    min_x -= pad;
    max_x += pad;
    min_y -= pad;
    max_y += pad;
    const double scale = pixel_width / (max_x - min_x);
    const int pixel_height = static_cast<int>(std::lround((max_y - min_y) * scale));
    auto X = [&](double x) { return (x - min_x) * scale; };
    auto Y = [&](double y) { return (max_y - y) * scale; };  // flip: world y up

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << pixel_width << "\" height=\""
       << pixel_height << "\" viewBox=\"0 0 " << pixel_width << " " << pixel_height << "\">\n";
    if (!comment.empty()) os << "<!-- " << comment << " -->\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    for (const auto& it : items_) {
        if (it.kind == 0) {
            os << "<polyline fill=\"none\" stroke=\"" << it.color << "\" stroke-width=\""
               << f3(it.width) << "\"";
            if (it.dashed) os << " stroke-dasharray=\"6 4\"";
            os << " points=\"";
            for (size_t i = 0; i < it.pts.size(); ++i) {
                if (i) os << " ";
                os << f3(X(it.pts[i][0])) << "," << f3(Y(it.pts[i][1]));
            }
            os << "\"/>\n";
        } else if (it.kind == 1) {
            os << "<circle cx=\"" << f3(X(it.pts[0][0])) << "\" cy=\"" << f3(Y(it.pts[0][1]))
               << "\" r=\"" << f3(it.r * scale) << "\" fill=\"" << it.color << "\"/>\n";
        } else {
            // eigendecomposition of the 2x2 covariance for the 2-sigma ellipse
            const double a = it.cov.xx, b = it.cov.xy, c = it.cov.yy;
            const double tr = a + c, det = a * c - b * b;
            const double disc = std::sqrt(std::max(tr * tr / 4 - det, 0.0));
            const double l1 = std::max(tr / 2 + disc, 0.0), l2 = std::max(tr / 2 - disc, 0.0);
            const double angle = 0.5 * std::atan2(2 * b, a - c);
            os << "<ellipse cx=\"" << f3(X(it.pts[0][0])) << "\" cy=\"" << f3(Y(it.pts[0][1]))
               << "\" rx=\"" << f3(2 * std::sqrt(l1) * scale) << "\" ry=\""
               << f3(2 * std::sqrt(l2) * scale) << "\" transform=\"rotate(" << f3(-angle * 180 / M_PI)
               << " " << f3(X(it.pts[0][0])) << " " << f3(Y(it.pts[0][1])) << ")\" fill=\"none\" "
               << "stroke=\"" << it.color << "\" stroke-width=\"1\" opacity=\"0.6\"/>\n";
        }
    }
    os << "</svg>\n";
    return os.str();
}

}  // namespace trajcast::io
