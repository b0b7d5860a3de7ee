#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <utility>

#include "meshmove/mesh.hpp"
#include "meshmove/mesh_io.hpp"

namespace meshmove {

namespace detail {

// Piecewise-linear blue -> teal -> yellow ramp, t in [0, 1].
inline std::string ramp_color(double t) {
    static constexpr std::array<std::array<double, 3>, 3> stops{{{59, 76, 192}, {42, 157, 143}, {253, 231, 37}}};
    t = std::clamp(std::isfinite(t) ? t : 0.0, 0.0, 1.0);
    const double s = t * 2.0;
    const int k = std::min(1, static_cast<int>(s));
    const double f = s - k;
    char buf[16];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", static_cast<int>(std::lround(stops[k][0] + f * (stops[k + 1][0] - stops[k][0]))),
                  static_cast<int>(std::lround(stops[k][1] + f * (stops[k + 1][1] - stops[k][1]))),
                  static_cast<int>(std::lround(stops[k][2] + f * (stops[k + 1][2] - stops[k][2]))));
    return buf;
}

} // namespace detail

/*
 * Mesh drawing: one <line> per distinct edge, optional per-element fill from
 * the mean nodal field value, and inverted or degenerate elements overlaid as
 * red polygons with class="inverted".
 */
inline std::string svg_document(const Mesh& mesh, const std::optional<std::string>& field = std::nullopt,
                                double size_px = 800.0) {
    Vec2 lo = mesh.num_nodes() ? mesh.node(0) : Vec2{0, 0}, hi = lo;
    for (const auto& p : mesh.nodes()) {
        lo = {std::min(lo.x, p.x), std::min(lo.y, p.y)};
        hi = {std::max(hi.x, p.x), std::max(hi.y, p.y)};
    }
    const double extent = std::max({hi.x - lo.x, hi.y - lo.y, 1e-300});
    const double margin = 10.0;
    const double scale = (size_px - 2.0 * margin) / extent;
    const double width = (hi.x - lo.x) * scale + 2.0 * margin;
    const double height = (hi.y - lo.y) * scale + 2.0 * margin;
    auto px = [&](const Vec2& p) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.3f,%.3f", margin + (p.x - lo.x) * scale, margin + (hi.y - p.y) * scale);
        return std::string(buf);
    };
    auto polygon = [&](const Triangle& t) {
        return px(mesh.node(t[0])) + " " + px(mesh.node(t[1])) + " " + px(mesh.node(t[2]));
    };

    std::string out;
    char head[256];
    std::snprintf(head, sizeof head,
                  "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.0f\" height=\"%.0f\" viewBox=\"0 0 %.3f %.3f\">\n",
                  std::ceil(width), std::ceil(height), width, height);
    out += head;
    out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

    if (field) {
        const auto& f = mesh.field(*field);
        double fmin = f.empty() ? 0.0 : *std::min_element(f.begin(), f.end());
        double fmax = f.empty() ? 0.0 : *std::max_element(f.begin(), f.end());
        const double span = fmax > fmin ? fmax - fmin : 1.0;
        out += "<g class=\"field\" stroke=\"none\">\n";
        for (const auto& t : mesh.elements()) {
            const double v = (f[t[0]] + f[t[1]] + f[t[2]]) / 3.0;
            out += "<polygon points=\"" + polygon(t) + "\" fill=\"" + detail::ramp_color((v - fmin) / span) + "\"/>\n";
        }
        out += "</g>\n";
    }

    std::set<std::pair<int, int>> edges;
    for (const auto& t : mesh.elements()) {
        for (int k = 0; k < 3; ++k) {
            const int a = t[k], b = t[(k + 1) % 3];
            edges.insert({std::min(a, b), std::max(a, b)});
        }
    }
    out += "<g class=\"edges\" stroke=\"#222222\" stroke-width=\"0.6\">\n";
    for (const auto& [a, b] : edges) {
        const auto pa = px(mesh.node(a)), pb = px(mesh.node(b));
        const auto ca = pa.find(','), cb = pb.find(',');
        out += "<line x1=\"" + pa.substr(0, ca) + "\" y1=\"" + pa.substr(ca + 1) + "\" x2=\"" + pb.substr(0, cb) +
               "\" y2=\"" + pb.substr(cb + 1) + "\"/>\n";
    }
    out += "</g>\n";

    for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
        if (mesh.element_area(static_cast<int>(e)) > 0.0) continue;
        out += "<polygon class=\"inverted\" points=\"" + polygon(mesh.elements()[e]) +
               "\" fill=\"#ff000066\" stroke=\"#ff0000\" stroke-width=\"2\"/>\n";
    }
    out += "</svg>\n";
    return out;
}

inline void render_svg(const Mesh& mesh, const std::optional<std::string>& field, const std::filesystem::path& out) {
    detail::write_text_file(out, svg_document(mesh, field));
}

} // namespace meshmove
