#include "marlns/plot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace marlns {

namespace {

constexpr double kWidth = 640.0;
constexpr double kPanelHeight = 300.0;
constexpr double kMarginL = 70.0, kMarginR = 20.0, kMarginT = 30.0, kMarginB = 40.0;

std::string num(double v) {
    std::ostringstream os;
    os.precision(4);
    os << v;
    return os.str();
}

void axis(std::ostringstream& svg, double x0, double y0, double x1, double y1,
          const std::string& title, double vmin, double vmax, double hmin, double hmax) {
    svg << "<rect x='" << x0 << "' y='" << y1 << "' width='" << x1 - x0 << "' height='"
        << y0 - y1 << "' fill='none' stroke='#888'/>\n";
    svg << "<text x='" << (x0 + x1) / 2 << "' y='" << y1 - 8
        << "' text-anchor='middle' font-size='13'>" << title << "</text>\n";
    svg << "<text x='" << x0 - 6 << "' y='" << y0 << "' text-anchor='end' font-size='10'>"
        << num(vmin) << "</text>\n";
    svg << "<text x='" << x0 - 6 << "' y='" << y1 + 10 << "' text-anchor='end' font-size='10'>"
        << num(vmax) << "</text>\n";
    svg << "<text x='" << x0 << "' y='" << y0 + 14 << "' text-anchor='middle' font-size='10'>"
        << num(hmin) << "</text>\n";
    svg << "<text x='" << x1 << "' y='" << y0 + 14 << "' text-anchor='middle' font-size='10'>"
        << num(hmax) << "</text>\n";
}

}  // namespace

void write_run_svg(const RunMetrics& metrics, const std::string& path) {
    const auto& rows = metrics.rows;
    std::ostringstream svg;
    const double total_h = 2 * kPanelHeight;
    svg << "<svg xmlns='http://www.w3.org/2000/svg' width='" << kWidth << "' height='" << total_h
        << "' viewBox='0 0 " << kWidth << " " << total_h << "'>\n";
    svg << "<rect width='100%' height='100%' fill='white'/>\n";

    if (!rows.empty()) {
        // panel 1: learning curve
        double mmin = rows[0].eval_metric, mmax = rows[0].eval_metric;
        for (const auto& r : rows) {
            mmin = std::min(mmin, r.eval_metric);
            mmax = std::max(mmax, r.eval_metric);
        }
        if (mmax - mmin < 1e-12) {
            mmax += 1.0;
            mmin -= 1.0;
        }
        const double smax = static_cast<double>(rows.back().env_steps);
        const double x0 = kMarginL, x1 = kWidth - kMarginR;
        const double y0 = kPanelHeight - kMarginB, y1 = kMarginT;
        axis(svg, x0, y0, x1, y1, "eval metric vs env steps", mmin, mmax, 0.0, smax);
        svg << "<polyline fill='none' stroke='#1f77b4' stroke-width='2' points='";
        for (const auto& r : rows) {
            const double px = x0 + (x1 - x0) * static_cast<double>(r.env_steps) / smax;
            const double py = y0 - (y0 - y1) * (r.eval_metric - mmin) / (mmax - mmin);
            svg << px << "," << py << " ";
        }
        svg << "'/>\n";

        // panel 2: time breakdown per iteration (sampling below, updating above)
        double tmax = 0.0;
        for (const auto& r : rows) tmax = std::max(tmax, r.sampling_time_s + r.updating_time_s);
        if (tmax <= 0.0) tmax = 1.0;
        const double oy = kPanelHeight;
        const double by0 = oy + kPanelHeight - kMarginB, by1 = oy + kMarginT;
        axis(svg, x0, by0, x1, by1, "sampling (blue) / updating (orange) seconds per iteration",
             0.0, tmax, 1.0, static_cast<double>(rows.size()));
        const double slot = (x1 - x0) / static_cast<double>(rows.size());
        const double bar = slot * 0.6;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const double bx = x0 + slot * (static_cast<double>(i) + 0.2);
            const double hs = (by0 - by1) * rows[i].sampling_time_s / tmax;
            const double hu = (by0 - by1) * rows[i].updating_time_s / tmax;
            svg << "<rect x='" << bx << "' y='" << by0 - hs << "' width='" << bar << "' height='"
                << hs << "' fill='#1f77b4'/>\n";
            svg << "<rect x='" << bx << "' y='" << by0 - hs - hu << "' width='" << bar
                << "' height='" << hu << "' fill='#ff7f0e'/>\n";
        }
    } else {
        svg << "<text x='" << kWidth / 2 << "' y='" << total_h / 2
            << "' text-anchor='middle' font-size='14'>no iterations recorded</text>\n";
    }
    svg << "</svg>\n";

    std::ofstream f(path);
    if (!f) throw std::runtime_error("write_run_svg: cannot open " + path);
    f << svg.str();
    if (!f) throw std::runtime_error("write_run_svg: write failed for " + path);
}

}  // namespace marlns
