#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace expand::tools {

struct Curve {
    std::string label;
    std::vector<double> x;  // mean environment steps at each episode
    std::vector<double> mean;
    std::vector<double> sem;
};

/// Running-average return curves (mean and standard error over seeds) for
/// every algorithm directory under `runs`.
std::vector<Curve> load_curves(const std::filesystem::path& runs, int window);

void write_csv(const std::filesystem::path& path, const std::vector<Curve>& curves);
void write_svg(const std::filesystem::path& path, const std::vector<Curve>& curves, const std::string& title);

}  // namespace expand::tools
