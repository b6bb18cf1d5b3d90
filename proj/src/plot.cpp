#include "deephedge/plot.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "deephedge/errors.hpp"
#include "text.hpp"

namespace deephedge {

namespace {

constexpr double kWidth = 720.0;
constexpr double kHeight = 420.0;
constexpr double kMarginLeft = 70.0;
constexpr double kMarginRight = 20.0;
constexpr double kMarginTop = 40.0;
constexpr double kMarginBottom = 50.0;

std::string coord(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", x);
    return buf;
}

std::string label(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3g", x);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

void open_svg(std::ostringstream& svg, const std::string& title) {
    svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
        << kHeight << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << "<text x=\"" << coord(kWidth / 2) << "\" y=\"24\" text-anchor=\"middle\" "
        << "font-family=\"sans-serif\" font-size=\"16\">" << escape(title) << "</text>\n";
}

void axes(std::ostringstream& svg, double x_lo, double x_hi, double y_lo, double y_hi) {
    const double x0 = kMarginLeft;
    const double x1 = kWidth - kMarginRight;
    const double y0 = kHeight - kMarginBottom;
    const double y1 = kMarginTop;
    svg << "<g stroke=\"black\" stroke-width=\"1\">"
        << "<line x1=\"" << coord(x0) << "\" y1=\"" << coord(y0) << "\" x2=\"" << coord(x1)
        << "\" y2=\"" << coord(y0) << "\"/>"
        << "<line x1=\"" << coord(x0) << "\" y1=\"" << coord(y0) << "\" x2=\"" << coord(x0)
        << "\" y2=\"" << coord(y1) << "\"/></g>\n";
    svg << "<g font-family=\"sans-serif\" font-size=\"11\">"
        << "<text x=\"" << coord(x0) << "\" y=\"" << coord(y0 + 16) << "\" text-anchor=\"start\">"
        << label(x_lo) << "</text>"
        << "<text x=\"" << coord(x1) << "\" y=\"" << coord(y0 + 16) << "\" text-anchor=\"end\">"
        << label(x_hi) << "</text>"
        << "<text x=\"" << coord(x0 - 6) << "\" y=\"" << coord(y0) << "\" text-anchor=\"end\">"
        << label(y_lo) << "</text>"
        << "<text x=\"" << coord(x0 - 6) << "\" y=\"" << coord(y1 + 4) << "\" text-anchor=\"end\">"
        << label(y_hi) << "</text></g>\n";
}

}  // namespace

std::string histogram_svg(const Histogram& h, const std::string& title) {
    if (h.counts.empty() || h.edges.size() != h.counts.size() + 1)
        throw EmptyInputError("histogram has no bins");
    const long peak = std::max(1L, *std::max_element(h.counts.begin(), h.counts.end()));
    const double plot_w = kWidth - kMarginLeft - kMarginRight;
    const double plot_h = kHeight - kMarginTop - kMarginBottom;
    const double bar_w = plot_w / static_cast<double>(h.counts.size());

    std::ostringstream svg;
    open_svg(svg, title);
    axes(svg, h.edges.front(), h.edges.back(), 0.0, static_cast<double>(peak));
    svg << "<g fill=\"steelblue\">\n";
    for (std::size_t i = 0; i < h.counts.size(); ++i) {
        const double bar_h = plot_h * static_cast<double>(h.counts[i]) / static_cast<double>(peak);
        svg << "<rect class=\"bar\" x=\"" << coord(kMarginLeft + bar_w * i) << "\" y=\""
            << coord(kMarginTop + plot_h - bar_h) << "\" width=\"" << coord(bar_w) << "\" height=\""
            << coord(bar_h) << "\" data-count=\"" << h.counts[i] << "\"/>\n";
    }
    svg << "</g>\n</svg>\n";
    return svg.str();
}

std::string line_svg(std::span<const double> values, const std::string& title) {
    if (values.empty()) throw EmptyInputError("nothing to plot");
    const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
    double lo = *lo_it;
    double hi = *hi_it;
    if (hi == lo) {
        lo -= 0.5;
        hi += 0.5;
    }
    const double plot_w = kWidth - kMarginLeft - kMarginRight;
    const double plot_h = kHeight - kMarginTop - kMarginBottom;
    const double span = values.size() > 1 ? static_cast<double>(values.size() - 1) : 1.0;

    std::ostringstream svg;
    open_svg(svg, title);
    axes(svg, 0.0, span, lo, hi);
    svg << "<path class=\"series\" fill=\"none\" stroke=\"firebrick\" stroke-width=\"1.5\" d=\"";
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double x = kMarginLeft + plot_w * static_cast<double>(i) / span;
        const double y = kMarginTop + plot_h * (hi - values[i]) / (hi - lo);
        svg << (i == 0 ? "M" : " L") << coord(x) << ',' << coord(y);
    }
    svg << "\" data-values=\"";
    for (std::size_t i = 0; i < values.size(); ++i)
        svg << (i == 0 ? "" : " ") << text::format_double(values[i]);
    svg << "\"/>\n</svg>\n";
    return svg.str();
}

}  // namespace deephedge
