#include "expand/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace expand {

void to_json(nlohmann::json& j, const EpisodeMetrics& m) {
    j = nlohmann::json{{"episode", m.episode},
                       {"steps", m.steps},
                       {"total_steps", m.total_steps},
                       {"return", m.episode_return},
                       {"epsilon", m.epsilon},
                       {"dqn_loss", m.dqn_loss},
                       {"advantage_loss", m.advantage_loss},
                       {"invariance_loss", m.invariance_loss},
                       {"explanation_loss", m.explanation_loss},
                       {"updates", m.updates},
                       {"new_feedback", m.new_feedback},
                       {"feedback_records", m.feedback_records},
                       {"wall_clock", m.wall_clock}};
}

void from_json(const nlohmann::json& j, EpisodeMetrics& m) {
    j.at("episode").get_to(m.episode);
    j.at("steps").get_to(m.steps);
    j.at("total_steps").get_to(m.total_steps);
    j.at("return").get_to(m.episode_return);
    j.at("epsilon").get_to(m.epsilon);
    j.at("dqn_loss").get_to(m.dqn_loss);
    j.at("advantage_loss").get_to(m.advantage_loss);
    j.at("invariance_loss").get_to(m.invariance_loss);
    j.at("explanation_loss").get_to(m.explanation_loss);
    j.at("updates").get_to(m.updates);
    j.at("new_feedback").get_to(m.new_feedback);
    j.at("feedback_records").get_to(m.feedback_records);
    j.at("wall_clock").get_to(m.wall_clock);
}

std::vector<EpisodeMetrics> read_metrics_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open metrics file " + path.string());
    }
    std::vector<EpisodeMetrics> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        out.push_back(nlohmann::json::parse(line).get<EpisodeMetrics>());
    }
    return out;
}

std::vector<double> running_average(std::span<const double> values, int window) {
    if (window < 1) {
        throw std::invalid_argument("running_average window must be >= 1");
    }
    std::vector<double> out(values.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        sum += values[i];
        if (i >= static_cast<std::size_t>(window)) sum -= values[i - static_cast<std::size_t>(window)];
        const auto n = std::min<std::size_t>(i + 1, static_cast<std::size_t>(window));
        out[i] = sum / static_cast<double>(n);
    }
    return out;
}

SeedCurve aggregate_seeds(std::span<const std::vector<double>> runs) {
    SeedCurve curve;
    std::size_t length = 0;
    for (const auto& r : runs) length = std::max(length, r.size());
    curve.mean.assign(length, 0.0);
    curve.sem.assign(length, 0.0);
    std::vector<double> column;
    for (std::size_t i = 0; i < length; ++i) {
        column.clear();
        for (const auto& r : runs) {
            if (!r.empty()) column.push_back(i < r.size() ? r[i] : r.back());
        }
        if (column.empty()) continue;
        const double n = static_cast<double>(column.size());
        double mean = 0.0;
        for (double v : column) mean += v;
        mean /= n;
        curve.mean[i] = mean;
        if (column.size() > 1) {
            double ss = 0.0;
            for (double v : column) ss += (v - mean) * (v - mean);
            curve.sem[i] = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
        }
    }
    return curve;
}

std::optional<long> steps_to_threshold(std::span<const EpisodeMetrics> episodes, double threshold, int window) {
    std::vector<double> returns;
    returns.reserve(episodes.size());
    for (const auto& e : episodes) returns.push_back(e.episode_return);
    const auto avg = running_average(returns, window);
    for (std::size_t i = static_cast<std::size_t>(window) - 1; i < avg.size(); ++i) {
        if (avg[i] >= threshold) return episodes[i].total_steps;
    }
    return std::nullopt;
}

}  // namespace expand
