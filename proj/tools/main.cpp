#include <ATen/Parallel.h>

#include <cstdlib>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "expand/feedback_service.hpp"
#include "expand/image_io.hpp"
#include "expand/log.hpp"
#include "expand/orchestrator.hpp"
#include "plot.hpp"

namespace {

constexpr int kDefaultServicePort = 8642;

int service_port() {
    if (const char* env = std::getenv("EXPAND_SERVICE_PORT")) {
        return std::stoi(env);
    }
    return kDefaultServicePort;
}

struct TrainArgs {
    std::optional<std::string> algo;
    std::optional<std::string> env;
    std::optional<int> episodes;
    int seeds = 0;
    std::uint64_t first_seed = 0;
    std::optional<std::string> feedback;
    std::string config;
    std::optional<std::string> out;
    int threads = 1;
    std::optional<double> stop_at;
    std::optional<long> max_steps;
    bool no_checkpoints = false;
};

int train(const TrainArgs& a) {
    at::set_num_threads(a.threads);
    expand::RunConfig config;
    if (!a.config.empty()) config = expand::load_run_config(a.config);
    if (a.algo) config.agent.algo = expand::parse_algo(*a.algo);
    if (a.env) config.env = *a.env;
    if (a.episodes) config.episodes = *a.episodes;
    if (a.feedback) config.feedback = expand::parse_feedback_source(*a.feedback);
    if (a.out) config.out_dir = *a.out;
    if (a.seeds > 0) {
        config.seeds.clear();
        for (int i = 0; i < a.seeds; ++i) config.seeds.push_back(a.first_seed + static_cast<std::uint64_t>(i));
    } else if (a.first_seed != 0) {
        config.seeds = {a.first_seed};
    }
    if (a.stop_at) config.stop_at_running_return = *a.stop_at;
    if (a.max_steps) config.max_total_steps = *a.max_steps;
    if (a.no_checkpoints) config.write_checkpoints = false;
    config.validate();

    std::vector<expand::RunResult> results;
    if (config.feedback == expand::FeedbackSource::kHuman) {
        expand::ServiceOptions options;
        options.session_budget = std::chrono::duration<double>(config.human_session_timeout);
        options.taxi = config.taxi;
        expand::FeedbackService service(nullptr, options);
        service.start("127.0.0.1", service_port());
        expand::HumanProvider provider(service);
        results = expand::run_seeds(config, &provider);
    } else {
        results = expand::run_seeds(config);
    }

    nlohmann::json summary = nlohmann::json::array();
    for (std::size_t i = 0; i < results.size(); ++i) {
        const auto& r = results[i];
        summary.push_back({{"seed", config.seeds[i]},
                           {"episodes", r.episodes.size()},
                           {"total_steps", r.total_steps},
                           {"steps_to_threshold", r.steps_to_threshold ? nlohmann::json(*r.steps_to_threshold)
                                                                       : nlohmann::json(nullptr)}});
    }
    std::cout << summary.dump(2) << '\n';
    return 0;
}

int summarize(const std::string& runs, double threshold, bool as_json, bool finished_only) {
    const auto summaries = expand::summarize_sweep(runs, threshold, finished_only);
    if (as_json) {
        nlohmann::json out = nlohmann::json::array();
        for (const auto& s : summaries) {
            nlohmann::json per_seed = nlohmann::json::array();
            for (const auto& v : s.per_seed) per_seed.push_back(v ? nlohmann::json(*v) : nlohmann::json(nullptr));
            out.push_back({{"algo", s.algo},
                           {"seeds", s.seeds},
                           {"reached", s.reached},
                           {"mean_steps", s.mean_steps},
                           {"sem_steps", s.sem_steps},
                           {"per_seed", per_seed},
                           {"total_steps", s.total_steps}});
        }
        std::cout << out.dump(2) << '\n';
        return 0;
    }
    std::cout << expand::log::format("{}  {}  {}  {}\n", "algo                     ", "seeds", "reached",
                                     "mean steps to threshold (+- sem)");
    for (const auto& s : summaries) {
        std::string name = s.algo;
        name.resize(std::max<std::size_t>(name.size(), 25), ' ');
        std::cout << expand::log::format("{}  {}      {}        {:.0f} +- {:.0f}\n", name, s.seeds, s.reached,
                                         s.mean_steps, s.sem_steps);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Saliency-guided feedback learning on Pixel-Taxi"};
    app.require_subcommand(1);

    TrainArgs targs;
    auto* train_cmd = app.add_subcommand("train", "Train one algorithm over one or more seeds");
    train_cmd->add_option("--algo", targs.algo, "Algorithm id")
        ->check(CLI::IsMember({"expand", "expand-no-invariance", "expand-no-aug-advantage", "dqn-feedback", "ex-agil",
                               "attention-align", "aug-crop", "aug-blur", "dqn-only"}));
    train_cmd->add_option("--env", targs.env, "Environment (pixel-taxi)");
    train_cmd->add_option("--episodes", targs.episodes, "Total episodes per seed")->check(CLI::PositiveNumber);
    train_cmd->add_option("--seeds", targs.seeds, "Number of seeds, starting at --first-seed")->check(CLI::NonNegativeNumber);
    train_cmd->add_option("--first-seed", targs.first_seed, "First seed");
    train_cmd->add_option("--feedback", targs.feedback, "Feedback source")->check(CLI::IsMember({"oracle", "human"}));
    train_cmd->add_option("--config", targs.config, "Config file (key = value)")->check(CLI::ExistingFile);
    train_cmd->add_option("--out", targs.out, "Output directory");
    train_cmd->add_option("--threads", targs.threads, "Intra-op threads")->check(CLI::PositiveNumber);
    train_cmd->add_option("--stop-at", targs.stop_at, "Stop once the 20-episode running return reaches this value");
    train_cmd->add_option("--max-steps", targs.max_steps, "Cap on environment steps per seed");
    train_cmd->add_flag("--no-checkpoints", targs.no_checkpoints, "Skip checkpoint files");

    std::string runs_dir, plot_out = "plots";
    int window = 20;
    auto* plot_cmd = app.add_subcommand("plot", "Learning curves (CSV and SVG) from metrics JSONL");
    plot_cmd->add_option("runs", runs_dir, "Sweep directory (<runs>/<algo>/seed*/metrics.jsonl)")
        ->required()
        ->check(CLI::ExistingDirectory);
    plot_cmd->add_option("--out", plot_out, "Output directory");
    plot_cmd->add_option("--window", window, "Running-average window")->check(CLI::PositiveNumber);

    double threshold = 0.9;
    bool as_json = false;
    auto* summarize_cmd = app.add_subcommand("summarize", "Steps to threshold per algorithm");
    summarize_cmd->add_option("runs", runs_dir, "Sweep directory")->required()->check(CLI::ExistingDirectory);
    summarize_cmd->add_option("--threshold", threshold, "Running-average return threshold");
    summarize_cmd->add_flag("--json", as_json, "Machine-readable output");
    bool finished_only = false;
    summarize_cmd->add_flag("--finished-only", finished_only, "Skip seed runs without a done marker");

    std::uint64_t render_seed = 0;
    std::string render_out = "frame.png";
    auto* render_cmd = app.add_subcommand("render", "Write the first Pixel-Taxi frame for a seed as PNG");
    render_cmd->add_option("--seed", render_seed, "Layout seed");
    render_cmd->add_option("--out", render_out, "PNG path");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*train_cmd) return train(targs);
        if (*plot_cmd) {
            const auto curves = expand::tools::load_curves(runs_dir, window);
            expand::tools::write_csv(std::filesystem::path(plot_out) / "learning_curves.csv", curves);
            expand::tools::write_svg(std::filesystem::path(plot_out) / "learning_curves.svg", curves,
                                     "Pixel-Taxi, running average over " + std::to_string(window) + " episodes");
            std::cout << "wrote " << curves.size() << " curves to " << plot_out << '\n';
            return 0;
        }
        if (*summarize_cmd) return summarize(runs_dir, threshold, as_json, finished_only);
        if (*render_cmd) {
            expand::taxi::PixelTaxiEnv env({});
            expand::write_file(render_out, expand::encode_png(env.reset(render_seed)));
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
