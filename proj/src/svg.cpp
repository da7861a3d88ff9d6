#include "nclab/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace nclab {

namespace {

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string tick_label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '<') out += "&lt;";
        else if (c == '>') out += "&gt;";
        else if (c == '&') out += "&amp;";
        else out += c;
    }
    return out;
}

struct Axis {
    bool log = false;
    double lo = 0.0;
    double hi = 1.0;

    double map(double v) const { return log ? std::log10(v) : v; }

    void fit(std::vector<double> values) {
        std::vector<double> m;
        for (double v : values) {
            if (!std::isfinite(v) || (log && v <= 0.0)) continue;
            m.push_back(map(v));
        }
        if (m.empty()) return;
        lo = *std::min_element(m.begin(), m.end());
        hi = *std::max_element(m.begin(), m.end());
        if (log) {
            lo = std::floor(lo);
            hi = std::ceil(hi);
            if (hi == lo) hi = lo + 1.0;
        } else {
            const double pad = hi > lo ? 0.05 * (hi - lo) : std::max(1e-12, 0.05 * std::abs(hi) + 1e-12);
            lo -= pad;
            hi += pad;
        }
    }

    std::vector<double> ticks() const {
        std::vector<double> t;
        if (log) {
            for (double d = lo; d <= hi + 1e-9; d += 1.0) t.push_back(d);
        } else {
            for (int i = 0; i <= 4; ++i) t.push_back(lo + (hi - lo) * i / 4.0);
        }
        return t;
    }
};

}  // namespace

std::string line_plot(const std::vector<PlotSeries>& series, const PlotOptions& opt) {
    const double left = 80, right = 150, top = 40, bottom = 60;
    const double pw = opt.width - left - right;
    const double ph = opt.height - top - bottom;

    Axis ax{opt.log_x}, ay{opt.log_y};
    std::vector<double> xs, ys;
    for (const auto& s : series)
        for (const auto& [x, y] : s.points) {
            xs.push_back(x);
            ys.push_back(y);
        }
    ax.fit(xs);
    ay.fit(ys);
    auto px = [&](double x) { return left + (ax.map(x) - ax.lo) / (ax.hi - ax.lo) * pw; };
    auto py = [&](double y) { return top + ph - (ay.map(y) - ay.lo) / (ay.hi - ay.lo) * ph; };
    auto usable = [&](double x, double y) {
        return std::isfinite(x) && std::isfinite(y) && !(ax.log && x <= 0.0) && !(ay.log && y <= 0.0);
    };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << opt.width << "\" height=\"" << opt.height
       << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << num(left + pw / 2) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">"
       << escape(opt.title) << "</text>\n";
    os << "<rect x=\"" << num(left) << "\" y=\"" << num(top) << "\" width=\"" << num(pw) << "\" height=\"" << num(ph)
       << "\" fill=\"none\" stroke=\"black\"/>\n";

    for (double t : ax.ticks()) {
        const double x = left + (t - ax.lo) / (ax.hi - ax.lo) * pw;
        os << "<line x1=\"" << num(x) << "\" y1=\"" << num(top) << "\" x2=\"" << num(x) << "\" y2=\""
           << num(top + ph) << "\" stroke=\"#dddddd\"/>\n";
        os << "<text x=\"" << num(x) << "\" y=\"" << num(top + ph + 18) << "\" text-anchor=\"middle\">"
           << (ax.log ? "1e" + tick_label(t) : tick_label(t)) << "</text>\n";
    }
    for (double t : ay.ticks()) {
        const double y = top + ph - (t - ay.lo) / (ay.hi - ay.lo) * ph;
        os << "<line x1=\"" << num(left) << "\" y1=\"" << num(y) << "\" x2=\"" << num(left + pw) << "\" y2=\""
           << num(y) << "\" stroke=\"#dddddd\"/>\n";
        os << "<text x=\"" << num(left - 6) << "\" y=\"" << num(y + 4) << "\" text-anchor=\"end\">"
           << (ay.log ? "1e" + tick_label(t) : tick_label(t)) << "</text>\n";
    }
    os << "<text x=\"" << num(left + pw / 2) << "\" y=\"" << num(opt.height - 15) << "\" text-anchor=\"middle\">"
       << escape(opt.x_label) << "</text>\n";
    os << "<text transform=\"translate(18," << num(top + ph / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
       << escape(opt.y_label) << "</text>\n";

    double legend_y = top + 10;
    for (const auto& s : series) {
        if (s.line) {
            os << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\" points=\"";
            for (const auto& [x, y] : s.points)
                if (usable(x, y)) os << num(px(x)) << "," << num(py(y)) << " ";
            os << "\"/>\n";
        }
        if (s.markers) {
            for (const auto& [x, y] : s.points)
                if (usable(x, y))
                    os << "<circle cx=\"" << num(px(x)) << "\" cy=\"" << num(py(y)) << "\" r=\"3\" fill=\"" << s.color
                       << "\"/>\n";
        }
        os << "<rect x=\"" << num(left + pw + 12) << "\" y=\"" << num(legend_y - 9) << "\" width=\"10\" height=\"10\" fill=\""
           << s.color << "\"/>\n";
        os << "<text x=\"" << num(left + pw + 28) << "\" y=\"" << num(legend_y) << "\">" << escape(s.label)
           << "</text>\n";
        legend_y += 18;
    }
    os << "</svg>\n";
    return os.str();
}

}  // namespace nclab
