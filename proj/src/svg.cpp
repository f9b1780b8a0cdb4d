#include "sslchrono/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace sslchrono {

namespace {

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

constexpr double kWidth = 640.0, kHeight = 440.0;
constexpr double kLeft = 62.0, kRight = 150.0, kTop = 30.0, kBottom = 52.0;

}  // namespace

std::string render_sweep_chart(const SweepResult& result) {
    std::set<int> size_set;
    for (const auto& c : result.cells) size_set.insert(c.n_adaptation);
    std::vector<int> sizes(size_set.begin(), size_set.end());
    if (sizes.empty()) value_error("cannot plot an empty sweep");

    double y_min = 1.0, y_max = 0.0;
    for (const auto& c : result.cells)
        if (c.ok && std::isfinite(c.auc_value)) {
            y_min = std::min(y_min, c.auc_value);
            y_max = std::max(y_max, c.auc_value);
        }
    if (y_min > y_max) {
        y_min = 0.0;
        y_max = 1.0;
    }
    y_min = std::clamp(std::floor((y_min - 0.05) * 10.0) / 10.0, 0.0, 0.9);
    y_max = std::clamp(std::ceil((y_max + 0.05) * 10.0) / 10.0, y_min + 0.1, 1.0);

    const double plot_w = kWidth - kLeft - kRight;
    const double plot_h = kHeight - kTop - kBottom;
    const double log_lo = std::log(static_cast<double>(sizes.front()));
    const double log_hi = std::log(static_cast<double>(sizes.back()));
    auto x_of = [&](int n) {
        if (sizes.size() == 1) return kLeft + plot_w / 2.0;
        return kLeft + plot_w * (std::log(static_cast<double>(n)) - log_lo) / (log_hi - log_lo);
    };
    auto y_of = [&](double auc) { return kTop + plot_h * (1.0 - (auc - y_min) / (y_max - y_min)); };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
        << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n";
    svg << "<rect x=\"0\" y=\"0\" width=\"" << kWidth << "\" height=\"" << kHeight
        << "\" fill=\"white\"/>\n";
    svg << "<rect class=\"frame\" x=\"" << num(kLeft) << "\" y=\"" << num(kTop) << "\" width=\""
        << num(plot_w) << "\" height=\"" << num(plot_h)
        << "\" fill=\"none\" stroke=\"#333\" stroke-width=\"1\"/>\n";

    for (double y = y_min; y <= y_max + 1e-9; y += 0.1) {
        const double py = y_of(y);
        svg << "<line class=\"ygrid\" x1=\"" << num(kLeft) << "\" y1=\"" << num(py) << "\" x2=\""
            << num(kLeft + plot_w) << "\" y2=\"" << num(py)
            << "\" stroke=\"#ddd\" stroke-width=\"0.5\"/>\n";
        svg << "<text x=\"" << num(kLeft - 8) << "\" y=\"" << num(py + 4)
            << "\" text-anchor=\"end\" font-size=\"12\" font-family=\"sans-serif\">";
        char lbl[16];
        std::snprintf(lbl, sizeof(lbl), "%.1f", y);
        svg << lbl << "</text>\n";
    }

    for (int n : sizes) {
        const double px = x_of(n);
        svg << "<line class=\"xtick\" x1=\"" << num(px) << "\" y1=\"" << num(kTop + plot_h)
            << "\" x2=\"" << num(px) << "\" y2=\"" << num(kTop + plot_h + 6)
            << "\" stroke=\"#333\" stroke-width=\"1\"/>\n";
        svg << "<text x=\"" << num(px) << "\" y=\"" << num(kTop + plot_h + 20)
            << "\" text-anchor=\"middle\" font-size=\"12\" font-family=\"sans-serif\">" << n
            << "</text>\n";
    }

    svg << "<text x=\"" << num(kLeft + plot_w / 2) << "\" y=\"" << num(kHeight - 14)
        << "\" text-anchor=\"middle\" font-size=\"13\" font-family=\"sans-serif\">adaptation "
           "participants (log scale)</text>\n";
    svg << "<text x=\"16\" y=\"" << num(kTop + plot_h / 2)
        << "\" text-anchor=\"middle\" font-size=\"13\" font-family=\"sans-serif\" "
           "transform=\"rotate(-90 16 "
        << num(kTop + plot_h / 2) << ")\">test AUC</text>\n";

    struct SeriesStyle {
        const char* tag;
        const char* color;
    };
    const SeriesStyle kSeries[] = {{"rhr", "#d62728"}, {"tib", "#1f77b4"}, {"cal", "#2ca02c"}};
    double legend_y = kTop + 12.0;
    for (const auto& s : kSeries) {
        std::string points;
        for (int n : sizes) {
            const SweepCell* cell = result.find(s.tag, n);
            if (!cell || !cell->ok || !std::isfinite(cell->auc_value)) continue;
            if (!points.empty()) points += ' ';
            points += num(x_of(n)) + "," + num(y_of(cell->auc_value));
        }
        if (points.empty()) continue;
        svg << "<polyline class=\"series\" fill=\"none\" stroke=\"" << s.color
            << "\" stroke-width=\"2\" points=\"" << points << "\"/>\n";
        svg << "<text x=\"" << num(kLeft + plot_w + 14) << "\" y=\"" << num(legend_y)
            << "\" font-size=\"12\" font-family=\"sans-serif\" fill=\"" << s.color << "\">" << s.tag
            << "</text>\n";
        legend_y += 18.0;
    }

    // Baseline drawn as a dashed path so the objective polylines stay
    // distinguishable by element type.
    {
        std::string d;
        for (int n : sizes) {
            const SweepCell* cell = result.find("random_init", n);
            if (!cell || !cell->ok || !std::isfinite(cell->auc_value)) continue;
            d += (d.empty() ? "M" : " L") + std::string(" ") + num(x_of(n)) + " " +
                 num(y_of(cell->auc_value));
        }
        if (!d.empty()) {
            svg << "<path class=\"baseline\" fill=\"none\" stroke=\"#777\" stroke-width=\"2\" "
                   "stroke-dasharray=\"6 4\" d=\""
                << d << "\"/>\n";
            svg << "<text x=\"" << num(kLeft + plot_w + 14) << "\" y=\"" << num(legend_y)
                << "\" font-size=\"12\" font-family=\"sans-serif\" fill=\"#777\">random init</text>\n";
        }
    }

    svg << "</svg>\n";
    return svg.str();
}

void write_sweep_chart(const std::string& path, const SweepResult& result) {
    std::ofstream out(path, std::ios::binary);
    if (!out) io_error("cannot write chart: " + path);
    const std::string svg = render_sweep_chart(result);
    out.write(svg.data(), static_cast<std::streamsize>(svg.size()));
}

}  // namespace sslchrono
