#include "plot.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "expand/image_io.hpp"
#include "expand/metrics.hpp"

namespace expand::tools {

std::vector<Curve> load_curves(const std::filesystem::path& runs, int window) {
    std::vector<std::filesystem::path> algo_dirs;
    for (const auto& e : std::filesystem::directory_iterator(runs)) {
        if (e.is_directory()) algo_dirs.push_back(e.path());
    }
    std::sort(algo_dirs.begin(), algo_dirs.end());

    std::vector<Curve> curves;
    for (const auto& dir : algo_dirs) {
        std::vector<std::vector<double>> averaged;
        std::vector<std::vector<double>> steps;
        for (const auto& e : std::filesystem::directory_iterator(dir)) {
            const auto file = e.path() / "metrics.jsonl";
            if (!std::filesystem::exists(file)) continue;
            const auto episodes = read_metrics_jsonl(file);
            if (episodes.empty()) continue;
            std::vector<double> returns, total;
            for (const auto& m : episodes) {
                returns.push_back(m.episode_return);
                total.push_back(static_cast<double>(m.total_steps));
            }
            averaged.push_back(running_average(returns, window));
            steps.push_back(std::move(total));
        }
        if (averaged.empty()) continue;
        const auto curve = aggregate_seeds(averaged);
        const auto x = aggregate_seeds(steps);
        curves.push_back({dir.filename().string(), x.mean, curve.mean, curve.sem});
    }
    return curves;
}

void write_csv(const std::filesystem::path& path, const std::vector<Curve>& curves) {
    std::ostringstream out;
    out << "algo,episode,mean_steps,mean_return,sem_return\n";
    out << std::setprecision(10);
    for (const auto& c : curves) {
        for (std::size_t i = 0; i < c.mean.size(); ++i) {
            out << c.label << ',' << i + 1 << ',' << c.x[i] << ',' << c.mean[i] << ',' << c.sem[i] << '\n';
        }
    }
    write_file(path, out.str());
}

void write_svg(const std::filesystem::path& path, const std::vector<Curve>& curves, const std::string& title) {
    constexpr double kW = 800, kH = 480, kLeft = 70, kRight = 200, kTop = 40, kBottom = 50;
    constexpr std::array<const char*, 9> kColors{"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                                 "#8c564b", "#e377c2", "#7f7f7f", "#17becf"};
    double x_max = 1.0, y_min = 0.0, y_max = 1.0;
    for (const auto& c : curves) {
        for (std::size_t i = 0; i < c.mean.size(); ++i) {
            x_max = std::max(x_max, c.x[i]);
            y_min = std::min(y_min, c.mean[i] - c.sem[i]);
            y_max = std::max(y_max, c.mean[i] + c.sem[i]);
        }
    }
    const double pw = kW - kLeft - kRight, ph = kH - kTop - kBottom;
    auto sx = [&](double v) { return kLeft + v / x_max * pw; };
    auto sy = [&](double v) { return kTop + (y_max - v) / (y_max - y_min) * ph; };

    std::ostringstream o;
    o << std::fixed << std::setprecision(1);
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH << "\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << kLeft << "\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\">" << title << "</text>\n";
    o << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int t = 0; t <= 4; ++t) {
        const double xv = x_max * t / 4.0, yv = y_min + (y_max - y_min) * t / 4.0;
        o << "<text x=\"" << sx(xv) << "\" y=\"" << kH - kBottom + 18
          << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">" << std::setprecision(0) << xv
          << std::setprecision(1) << "</text>\n";
        o << "<text x=\"" << kLeft - 6 << "\" y=\"" << sy(yv) + 4
          << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">" << std::setprecision(2) << yv
          << std::setprecision(1) << "</text>\n";
    }
    o << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kH - 10
      << "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">environment steps</text>\n";
    o << "<text x=\"16\" y=\"" << kTop + ph / 2 << "\" font-family=\"sans-serif\" font-size=\"12\" "
      << "transform=\"rotate(-90 16 " << kTop + ph / 2 << ")\" text-anchor=\"middle\">running-average return</text>\n";

    for (std::size_t k = 0; k < curves.size(); ++k) {
        const auto& c = curves[k];
        const char* color = kColors[k % kColors.size()];
        std::ostringstream band, line;
        band << std::fixed << std::setprecision(1);
        line << std::fixed << std::setprecision(1);
        for (std::size_t i = 0; i < c.mean.size(); ++i) band << sx(c.x[i]) << ',' << sy(c.mean[i] + c.sem[i]) << ' ';
        for (std::size_t i = c.mean.size(); i-- > 0;) band << sx(c.x[i]) << ',' << sy(c.mean[i] - c.sem[i]) << ' ';
        for (std::size_t i = 0; i < c.mean.size(); ++i) line << sx(c.x[i]) << ',' << sy(c.mean[i]) << ' ';
        o << "<polygon points=\"" << band.str() << "\" fill=\"" << color << "\" fill-opacity=\"0.2\" stroke=\"none\"/>\n";
        o << "<polyline points=\"" << line.str() << "\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\"/>\n";
        const double ly = kTop + 16 + 18 * static_cast<double>(k);
        o << "<line x1=\"" << kW - kRight + 12 << "\" y1=\"" << ly << "\" x2=\"" << kW - kRight + 32 << "\" y2=\"" << ly
          << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
        o << "<text x=\"" << kW - kRight + 38 << "\" y=\"" << ly + 4 << "\" font-family=\"sans-serif\" font-size=\"12\">"
          << c.label << "</text>\n";
    }
    o << "</svg>\n";
    write_file(path, o.str());
}

}  // namespace expand::tools
