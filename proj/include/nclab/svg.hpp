#pragma once

#include <string>
#include <utility>
#include <vector>

namespace nclab {

struct PlotSeries {
    std::string label;
    std::vector<std::pair<double, double>> points;
    std::string color = "#1f77b4";
    bool line = true;
    bool markers = true;
};

struct PlotOptions {
    std::string title;
    std::string x_label;
    std::string y_label;
    bool log_x = false;
    bool log_y = false;
    int width = 640;
    int height = 480;
};

// Self-contained SVG line plot. Log axes drop nonpositive points.
std::string line_plot(const std::vector<PlotSeries>& series, const PlotOptions& opt);

}  // namespace nclab
