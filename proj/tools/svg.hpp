#pragma once

#include <string>
#include <vector>

namespace tvrate::cli {

/// Minimal self-contained SVG line/scatter plot.
class SvgPlot {
public:
    struct Series {
        std::string label;
        std::string color;
        std::vector<double> x, y;
        bool markers = false;  ///< circles instead of a polyline
        bool dashed = false;
    };

    SvgPlot(std::string title, std::string x_label, std::string y_label);

    void set_log_axes(bool log_x, bool log_y);
    void add(Series s);
    void add_vertical_marker(double x);
    void add_note(std::string text);

    /// Renders the document. Deterministic for identical inputs.
    std::string render() const;

private:
    std::string title_, x_label_, y_label_;
    bool log_x_ = false, log_y_ = false;
    std::vector<Series> series_;
    std::vector<double> markers_;
    std::vector<std::string> notes_;
};

}  // namespace tvrate::cli
