#include "fprobe/svg.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>

#include "fprobe/error.hpp"
#include "fprobe/report.hpp"

namespace fprobe::svg {

namespace {

constexpr double kMarginLeft = 70.0;
constexpr double kMarginRight = 20.0;
constexpr double kMarginTop = 40.0;
constexpr double kMarginBottom = 50.0;

constexpr std::array<std::string_view, 10> kPalette = {
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string escape(std::string_view text) {
  std::string out;
  for (char c : text) {
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

// Coordinates are rounded to 1e-6 px so output is stable and compact.
std::string coord(double v) {
  return format_double(std::round(v * 1e6) / 1e6);
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void finish() {
    if (!std::isfinite(lo)) lo = 0.0, hi = 1.0;
    if (hi == lo) {
      const double pad = lo == 0.0 ? 1.0 : std::abs(lo) * 0.5;
      lo -= pad;
      hi += pad;
    }
  }
};

class Canvas {
 public:
  Canvas(const ChartOptions& options, Range x, Range y) : opt_(options), x_(x), y_(y) {
    x_.finish();
    y_.finish();
    plot_w_ = opt_.width - kMarginLeft - kMarginRight;
    plot_h_ = opt_.height - kMarginTop - kMarginBottom;
    if (plot_w_ <= 0 || plot_h_ <= 0) throw DomainError("chart too small for its margins");
    out_ << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << coord(opt_.width)
         << "\" height=\"" << coord(opt_.height) << "\" viewBox=\"0 0 " << coord(opt_.width)
         << ' ' << coord(opt_.height) << "\">\n";
    if (!opt_.manifest.empty()) out_ << "<!-- manifest=" << escape(opt_.manifest) << " -->\n";
    out_ << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  }

  double px(double x) const { return kMarginLeft + (x - x_.lo) / (x_.hi - x_.lo) * plot_w_; }
  double py(double y) const {
    return kMarginTop + plot_h_ - (y - y_.lo) / (y_.hi - y_.lo) * plot_h_;
  }
  const Range& y_range() const { return y_; }

  void axes(bool numeric_x) {
    const double x0 = kMarginLeft, y0 = kMarginTop + plot_h_;
    out_ << "<g stroke=\"black\" stroke-width=\"1\">\n"
         << "<line x1=\"" << coord(x0) << "\" y1=\"" << coord(y0) << "\" x2=\""
         << coord(x0 + plot_w_) << "\" y2=\"" << coord(y0) << "\"/>\n"
         << "<line x1=\"" << coord(x0) << "\" y1=\"" << coord(kMarginTop) << "\" x2=\""
         << coord(x0) << "\" y2=\"" << coord(y0) << "\"/>\n</g>\n";
    out_ << "<g font-family=\"sans-serif\" font-size=\"11\">\n";
    for (int i = 0; i <= 4; ++i) {
      const double t = i / 4.0;
      const double yv = y_.lo + t * (y_.hi - y_.lo);
      out_ << "<text x=\"" << coord(x0 - 6) << "\" y=\"" << coord(py(yv) + 4)
           << "\" text-anchor=\"end\">" << tick(yv) << "</text>\n";
      if (numeric_x) {
        const double xv = x_.lo + t * (x_.hi - x_.lo);
        out_ << "<text x=\"" << coord(px(xv)) << "\" y=\"" << coord(y0 + 16)
             << "\" text-anchor=\"middle\">" << tick(xv) << "</text>\n";
      }
    }
    out_ << "<text x=\"" << coord(kMarginLeft + plot_w_ / 2) << "\" y=\""
         << coord(opt_.height - 10) << "\" text-anchor=\"middle\">" << escape(opt_.x_label)
         << "</text>\n"
         << "<text x=\"14\" y=\"" << coord(kMarginTop + plot_h_ / 2)
         << "\" text-anchor=\"middle\" transform=\"rotate(-90 14 "
         << coord(kMarginTop + plot_h_ / 2) << ")\">" << escape(opt_.y_label) << "</text>\n"
         << "<text x=\"" << coord(opt_.width / 2) << "\" y=\"22\" text-anchor=\"middle\" "
         << "font-size=\"14\">" << escape(opt_.title) << "</text>\n</g>\n";
  }

  void legend(const std::vector<Series>& series) {
    if (series.size() < 2) return;
    out_ << "<g font-family=\"sans-serif\" font-size=\"11\">\n";
    for (std::size_t i = 0; i < series.size(); ++i) {
      const double y = kMarginTop + 12.0 * static_cast<double>(i) + 6;
      const double x = kMarginLeft + plot_w_ - 110;
      out_ << "<rect x=\"" << coord(x) << "\" y=\"" << coord(y - 8) << "\" width=\"8\" "
           << "height=\"8\" fill=\"" << color(i) << "\"/>\n<text x=\"" << coord(x + 12)
           << "\" y=\"" << coord(y) << "\">" << escape(series[i].name) << "</text>\n";
    }
    out_ << "</g>\n";
  }

  std::ostringstream& body() { return out_; }

  std::string finish() {
    out_ << "</svg>\n";
    return out_.str();
  }

  static std::string_view color(std::size_t i) { return kPalette[i % kPalette.size()]; }

 private:
  static std::string tick(double v) {
    std::ostringstream s;
    s.precision(3);
    s << v;
    return s.str();
  }

  ChartOptions opt_;
  Range x_, y_;
  double plot_w_ = 0.0, plot_h_ = 0.0;
  std::ostringstream out_;
};

void check_series(const std::vector<Series>& series) {
  for (const auto& s : series) {
    if (s.x.size() != s.y.size()) {
      throw DomainError("series '" + s.name + "' has mismatched x/y lengths");
    }
  }
}

}  // namespace

std::string line_chart(const std::vector<Series>& series, const ChartOptions& options) {
  check_series(series);
  Range x, y;
  for (const auto& s : series) {
    for (double v : s.x) x.add(v);
    for (double v : s.y) y.add(v);
  }
  Canvas canvas(options, x, y);
  canvas.axes(true);
  for (std::size_t i = 0; i < series.size(); ++i) {
    auto& out = canvas.body();
    out << "<polyline fill=\"none\" stroke=\"" << Canvas::color(i)
        << "\" stroke-width=\"1.2\" points=\"";
    for (std::size_t k = 0; k < series[i].x.size(); ++k) {
      if (!std::isfinite(series[i].x[k]) || !std::isfinite(series[i].y[k])) continue;
      out << coord(canvas.px(series[i].x[k])) << ',' << coord(canvas.py(series[i].y[k])) << ' ';
    }
    out << "\"/>\n";
  }
  canvas.legend(series);
  return canvas.finish();
}

std::string bar_chart(const std::vector<std::string>& labels, const std::vector<double>& values,
                      const ChartOptions& options) {
  if (labels.size() != values.size()) throw DomainError("bar chart labels/values mismatch");
  Range x, y;
  x.add(0.0);
  x.add(static_cast<double>(std::max<std::size_t>(labels.size(), 1)));
  y.add(0.0);
  for (double v : values) y.add(v);
  Canvas canvas(options, x, y);
  canvas.axes(false);
  auto& out = canvas.body();
  const double zero = canvas.py(0.0);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double left = canvas.px(static_cast<double>(i) + 0.15);
    const double right = canvas.px(static_cast<double>(i) + 0.85);
    const double top = std::isfinite(values[i]) ? canvas.py(values[i]) : zero;
    out << "<rect x=\"" << coord(left) << "\" y=\"" << coord(std::min(top, zero))
        << "\" width=\"" << coord(right - left) << "\" height=\"" << coord(std::abs(zero - top))
        << "\" fill=\"" << Canvas::color(i) << "\"/>\n"
        << "<text x=\"" << coord((left + right) / 2) << "\" y=\""
        << coord(canvas.py(canvas.y_range().lo) + 16)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
        << escape(labels[i]) << "</text>\n";
  }
  return canvas.finish();
}

std::string scatter_chart(const std::vector<Series>& series, const ChartOptions& options) {
  check_series(series);
  Range x, y;
  for (const auto& s : series) {
    for (double v : s.x) x.add(v);
    for (double v : s.y) y.add(v);
  }
  Canvas canvas(options, x, y);
  canvas.axes(true);
  auto& out = canvas.body();
  for (std::size_t i = 0; i < series.size(); ++i) {
    out << "<g fill=\"" << Canvas::color(i) << "\" fill-opacity=\"0.7\">\n";
    for (std::size_t k = 0; k < series[i].x.size(); ++k) {
      if (!std::isfinite(series[i].x[k]) || !std::isfinite(series[i].y[k])) continue;
      out << "<circle cx=\"" << coord(canvas.px(series[i].x[k])) << "\" cy=\""
          << coord(canvas.py(series[i].y[k])) << "\" r=\"2.5\"/>\n";
    }
    out << "</g>\n";
  }
  canvas.legend(series);
  return canvas.finish();
}

}  // namespace fprobe::svg
