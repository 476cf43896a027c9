#include "svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace tvrate::cli {

namespace {

constexpr double kWidth = 720, kHeight = 480;
constexpr double kLeft = 80, kRight = 30, kTop = 50, kBottom = 60;

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

struct Axis {
    bool log = false;
    double lo = 0.0, hi = 1.0;  // in transformed units

    double t(double v) const { return log ? std::log10(v) : v; }
};

Axis make_axis(const std::vector<double>& values, bool log) {
    Axis a;
    a.log = log;
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (double v : values) {
        if (!std::isfinite(v) || (log && !(v > 0.0))) continue;
        lo = std::min(lo, a.t(v));
        hi = std::max(hi, a.t(v));
    }
    if (!std::isfinite(lo)) lo = 0.0, hi = 1.0;
    if (hi - lo < 1e-12) lo -= 0.5, hi += 0.5;
    const double pad = 0.05 * (hi - lo);
    a.lo = lo - pad;
    a.hi = hi + pad;
    return a;
}

// Tick positions in transformed units, with their labels.
std::vector<std::pair<double, std::string>> ticks(const Axis& a) {
    std::vector<std::pair<double, std::string>> out;
    if (a.log) {
        const double span = a.hi - a.lo;
        const std::vector<double> mult = span < 1.5 ? std::vector<double>{1, 2, 5} : std::vector<double>{1};
        for (int e = static_cast<int>(std::floor(a.lo)); e <= static_cast<int>(std::ceil(a.hi)); ++e)
            for (double m : mult) {
                const double v = std::log10(m) + e;
                if (v >= a.lo && v <= a.hi) out.emplace_back(v, fmt("%g", m * std::pow(10.0, e)));
            }
        return out;
    }
    const double raw = (a.hi - a.lo) / 6.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {1.0, 2.0, 5.0, 10.0})
        if (m * mag >= raw) {
            step = m * mag;
            break;
        }
    for (double v = std::ceil(a.lo / step) * step; v <= a.hi + 1e-12 * step; v += step)
        out.emplace_back(v, fmt("%g", std::abs(v) < 1e-12 * step ? 0.0 : v));
    return out;
}

}  // namespace

SvgPlot::SvgPlot(std::string title, std::string x_label, std::string y_label)
    : title_(std::move(title)), x_label_(std::move(x_label)), y_label_(std::move(y_label)) {}

void SvgPlot::set_log_axes(bool log_x, bool log_y) {
    log_x_ = log_x;
    log_y_ = log_y;
}

void SvgPlot::add(Series s) {
    if (s.x.size() != s.y.size()) throw std::invalid_argument("SvgPlot: series x/y size mismatch");
    series_.push_back(std::move(s));
}

void SvgPlot::add_vertical_marker(double x) { markers_.push_back(x); }

void SvgPlot::add_note(std::string text) { notes_.push_back(std::move(text)); }

std::string SvgPlot::render() const {
    std::vector<double> xs, ys;
    for (const auto& s : series_) {
        xs.insert(xs.end(), s.x.begin(), s.x.end());
        ys.insert(ys.end(), s.y.begin(), s.y.end());
    }
    const Axis ax = make_axis(xs, log_x_), ay = make_axis(ys, log_y_);
    const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
    auto px = [&](double v) { return kLeft + (ax.t(v) - ax.lo) / (ax.hi - ax.lo) * pw; };
    auto py = [&](double v) { return kTop + ph - (ay.t(v) - ay.lo) / (ay.hi - ay.lo) * ph; };
    auto tx = [&](double t) { return kLeft + (t - ax.lo) / (ax.hi - ax.lo) * pw; };
    auto ty = [&](double t) { return kTop + ph - (t - ay.lo) / (ay.hi - ay.lo) * ph; };

    std::string o;
    o += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    o += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"720\" height=\"480\" viewBox=\"0 0 720 480\" "
         "font-family=\"sans-serif\" font-size=\"12\">\n";
    o += "<rect width=\"720\" height=\"480\" fill=\"white\"/>\n";
    o += "<text x=\"360\" y=\"28\" text-anchor=\"middle\" font-size=\"15\">" + escape(title_) + "</text>\n";
    o += "<rect x=\"" + fmt("%.2f", kLeft) + "\" y=\"" + fmt("%.2f", kTop) + "\" width=\"" + fmt("%.2f", pw) +
         "\" height=\"" + fmt("%.2f", ph) + "\" fill=\"none\" stroke=\"black\"/>\n";
    for (const auto& [t, label] : ticks(ax)) {
        const std::string x = fmt("%.2f", tx(t));
        o += "<line x1=\"" + x + "\" y1=\"" + fmt("%.2f", kTop + ph) + "\" x2=\"" + x + "\" y2=\"" +
             fmt("%.2f", kTop + ph + 5) + "\" stroke=\"black\"/>\n";
        o += "<text x=\"" + x + "\" y=\"" + fmt("%.2f", kTop + ph + 18) + "\" text-anchor=\"middle\">" +
             escape(label) + "</text>\n";
    }
    for (const auto& [t, label] : ticks(ay)) {
        const std::string y = fmt("%.2f", ty(t));
        o += "<line x1=\"" + fmt("%.2f", kLeft - 5) + "\" y1=\"" + y + "\" x2=\"" + fmt("%.2f", kLeft) + "\" y2=\"" +
             y + "\" stroke=\"black\"/>\n";
        o += "<text x=\"" + fmt("%.2f", kLeft - 8) + "\" y=\"" + fmt("%.2f", ty(t) + 4) + "\" text-anchor=\"end\">" +
             escape(label) + "</text>\n";
    }
    o += "<text x=\"" + fmt("%.2f", kLeft + pw / 2) + "\" y=\"" + fmt("%.2f", kHeight - 15) +
         "\" text-anchor=\"middle\">" + escape(x_label_) + "</text>\n";
    o += "<text x=\"18\" y=\"" + fmt("%.2f", kTop + ph / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 18 " +
         fmt("%.2f", kTop + ph / 2) + ")\">" + escape(y_label_) + "</text>\n";

    for (double m : markers_) {
        if (log_x_ && !(m > 0.0)) continue;
        const std::string x = fmt("%.2f", px(m));
        o += "<line x1=\"" + x + "\" y1=\"" + fmt("%.2f", kTop) + "\" x2=\"" + x + "\" y2=\"" + fmt("%.2f", kTop + ph) +
             "\" stroke=\"#999999\" stroke-dasharray=\"3,3\"/>\n";
    }

    o += "<g fill=\"none\" stroke-width=\"1.5\">\n";
    for (const auto& s : series_) {
        if (s.markers) {
            for (std::size_t i = 0; i < s.x.size(); ++i) {
                if ((log_x_ && !(s.x[i] > 0.0)) || (log_y_ && !(s.y[i] > 0.0))) continue;
                o += "<circle cx=\"" + fmt("%.2f", px(s.x[i])) + "\" cy=\"" + fmt("%.2f", py(s.y[i])) +
                     "\" r=\"3\" fill=\"" + s.color + "\" stroke=\"none\"/>\n";
            }
            continue;
        }
        o += "<polyline stroke=\"" + s.color + "\"";
        if (s.dashed) o += " stroke-dasharray=\"6,4\"";
        o += " points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if ((log_x_ && !(s.x[i] > 0.0)) || (log_y_ && !(s.y[i] > 0.0))) continue;
            o += fmt("%.2f", px(s.x[i])) + "," + fmt("%.2f", py(s.y[i])) + " ";
        }
        o += "\"/>\n";
    }
    o += "</g>\n";

    double ly = kTop + 16;
    for (const auto& s : series_) {
        if (s.label.empty()) continue;
        const double lx = kLeft + pw - 190;
        o += "<rect x=\"" + fmt("%.2f", lx) + "\" y=\"" + fmt("%.2f", ly - 8) + "\" width=\"14\" height=\"4\" fill=\"" +
             s.color + "\"/>\n";
        o += "<text x=\"" + fmt("%.2f", lx + 20) + "\" y=\"" + fmt("%.2f", ly - 2) + "\">" + escape(s.label) + "</text>\n";
        ly += 16;
    }
    double ny = kTop + 18;
    for (const auto& note : notes_) {
        o += "<text x=\"" + fmt("%.2f", kLeft + 10) + "\" y=\"" + fmt("%.2f", ny) + "\">" + escape(note) + "</text>\n";
        ny += 16;
    }
    o += "</svg>\n";
    return o;
}

}  // namespace tvrate::cli
