#include "expand/run_config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

namespace expand {

std::string_view feedback_source_name(FeedbackSource s) { return s == FeedbackSource::kHuman ? "human" : "oracle"; }

FeedbackSource parse_feedback_source(std::string_view name) {
    if (name == "oracle") return FeedbackSource::kOracle;
    if (name == "human") return FeedbackSource::kHuman;
    throw std::invalid_argument("feedback source must be 'oracle' or 'human', got '" + std::string(name) + "'");
}

int RunConfig::effective_feedback_frequency() const {
    if (feedback_frequency > 0) {
        return feedback_frequency;
    }
    return feedback == FeedbackSource::kHuman ? 10 : 4;
}

std::size_t RunConfig::effective_learning_starts() const {
    return learning_starts > 0 ? learning_starts : static_cast<std::size_t>(agent.dqn.batch_size);
}

void RunConfig::validate() const {
    if (env != "pixel-taxi") {
        throw std::invalid_argument("unsupported environment '" + env + "' (only pixel-taxi is built in)");
    }
    taxi.validate();
    if (episodes < 1) throw std::invalid_argument("episodes must be >= 1");
    if (feedback_frequency < 0) throw std::invalid_argument("feedback_frequency must be >= 1 (or 0 for the default)");
    if (update_interval < 1) throw std::invalid_argument("update_interval must be >= 1");
    if (seeds.empty()) throw std::invalid_argument("at least one seed is required");
    if (epsilon.epsilon < epsilon.floor || epsilon.epsilon > 1.0 || epsilon.floor < 0.0) {
        throw std::invalid_argument("epsilon must lie in [epsilon_floor, 1]");
    }
    if (agent.dqn.batch_size < 1 || agent.feedback_batch_size < 1) throw std::invalid_argument("batch sizes must be >= 1");
    if (agent.dqn.n_step < 1) throw std::invalid_argument("multi_step must be >= 1");
    if (agent.dqn.replay_capacity < 1 || feedback_buffer_size < 1) throw std::invalid_argument("buffer sizes must be >= 1");
    if (!(agent.advantage_margin > 0.0)) throw std::invalid_argument("advantage_loss_margin must be positive");
    if (agent.loss_weights.advantage < 0.0 || agent.loss_weights.invariance < 0.0 || agent.explanation_weight < 0.0) {
        throw std::invalid_argument("loss weights must be nonnegative");
    }
    if (oracle_density <= 0.0 || oracle_density > 1.0) throw std::invalid_argument("oracle_density must be in (0, 1]");
    (void)preset_bank(agent.augmentation_preset);
}

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::string unquote(const std::string& v) {
    if (v.size() >= 2 && (v.front() == '"' || v.front() == '\'') && v.back() == v.front()) {
        return v.substr(1, v.size() - 2);
    }
    return v;
}

// Strips a trailing comment that is not inside quotes.
std::string strip_comment(std::string_view line) {
    char quote = 0;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quote) {
            if (c == quote) quote = 0;
        } else if (c == '"' || c == '\'') {
            quote = c;
        } else if (c == '#') {
            return std::string(line.substr(0, i));
        }
    }
    return std::string(line);
}

template <typename T>
T parse_number(const std::string& key, const std::string& v) {
    T out{};
    const auto* end = v.data() + v.size();
    const auto [ptr, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc() || ptr != end) {
        throw std::invalid_argument("config key '" + key + "': '" + v + "' is not a valid number");
    }
    return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true") return true;
    if (v == "false") return false;
    throw std::invalid_argument("config key '" + key + "': expected true or false");
}

std::vector<std::string> parse_list(const std::string& key, const std::string& v) {
    if (v.size() < 2 || v.front() != '[' || v.back() != ']') {
        throw std::invalid_argument("config key '" + key + "': expected a [list]");
    }
    std::vector<std::string> items;
    std::stringstream ss(v.substr(1, v.size() - 2));
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto t = unquote(trim(item));
        if (!t.empty()) items.push_back(t);
    }
    return items;
}

using Setter = std::function<void(RunConfig&, const std::string& key, const std::string& value)>;

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = [] {
        std::map<std::string, Setter> t;
        auto dbl = [](auto member) {
            return [member](RunConfig& c, const std::string& k, const std::string& v) {
                member(c) = parse_number<double>(k, v);
            };
        };
        auto integer = [](auto member) {
            return [member](RunConfig& c, const std::string& k, const std::string& v) {
                member(c) = parse_number<std::remove_reference_t<decltype(member(c))>>(k, v);
            };
        };
        t["algo"] = [](RunConfig& c, const std::string&, const std::string& v) { c.agent.algo = parse_algo(v); };
        t["env"] = [](RunConfig& c, const std::string&, const std::string& v) { c.env = v; };
        t["feedback"] = [](RunConfig& c, const std::string&, const std::string& v) {
            c.feedback = parse_feedback_source(v);
        };
        t["out_dir"] = [](RunConfig& c, const std::string&, const std::string& v) { c.out_dir = v; };
        t["augmentation_preset"] = [](RunConfig& c, const std::string&, const std::string& v) {
            c.agent.augmentation_preset = v;
        };
        t["seeds"] = [](RunConfig& c, const std::string& k, const std::string& v) {
            c.seeds.clear();
            for (const auto& s : parse_list(k, v)) c.seeds.push_back(parse_number<std::uint64_t>(k, s));
        };
        t["conv_channels"] = [](RunConfig& c, const std::string& k, const std::string& v) {
            const auto items = parse_list(k, v);
            if (items.size() != 3) throw std::invalid_argument("conv_channels needs three entries");
            for (std::size_t i = 0; i < 3; ++i) c.agent.network.channels[i] = parse_number<int>(k, items[i]);
        };
        t["write_checkpoints"] = [](RunConfig& c, const std::string& k, const std::string& v) {
            c.write_checkpoints = parse_bool(k, v);
        };
        t["randomize_taxi"] = [](RunConfig& c, const std::string& k, const std::string& v) {
            c.taxi.randomize_taxi = parse_bool(k, v);
        };
        t["randomize_destination"] = [](RunConfig& c, const std::string& k, const std::string& v) {
            c.taxi.randomize_destination = parse_bool(k, v);
        };

        t["episodes"] = integer([](RunConfig& c) -> int& { return c.episodes; });
        t["feedback_frequency"] = integer([](RunConfig& c) -> int& { return c.feedback_frequency; });
        t["update_interval"] = integer([](RunConfig& c) -> int& { return c.update_interval; });
        t["batch_size"] = integer([](RunConfig& c) -> int& { return c.agent.dqn.batch_size; });
        t["feedback_batch_size"] = integer([](RunConfig& c) -> int& { return c.agent.feedback_batch_size; });
        t["multi_step"] = integer([](RunConfig& c) -> int& { return c.agent.dqn.n_step; });
        t["replay_buffer_size"] = integer([](RunConfig& c) -> std::size_t& { return c.agent.dqn.replay_capacity; });
        t["feedback_buffer_size"] = integer([](RunConfig& c) -> std::size_t& { return c.feedback_buffer_size; });
        t["learning_starts"] = integer([](RunConfig& c) -> std::size_t& { return c.learning_starts; });
        t["hidden_units"] = integer([](RunConfig& c) -> int& { return c.agent.network.hidden; });
        t["agnostic_augmentations"] = integer([](RunConfig& c) -> int& { return c.agent.agnostic_augmentations; });
        t["grid_size"] = integer([](RunConfig& c) -> int& { return c.taxi.grid_size; });
        t["n_passengers"] = integer([](RunConfig& c) -> int& { return c.taxi.n_passengers; });
        t["max_steps"] = integer([](RunConfig& c) -> int& { return c.taxi.max_steps; });
        t["cell_px"] = integer([](RunConfig& c) -> int& { return c.taxi.cell_px; });
        t["checkpoint_every"] = integer([](RunConfig& c) -> int& { return c.checkpoint_every; });
        t["max_total_steps"] = integer([](RunConfig& c) -> long& { return c.max_total_steps; });

        t["discount_factor"] = dbl([](RunConfig& c) -> double& { return c.agent.dqn.gamma; });
        t["learning_rate"] = dbl([](RunConfig& c) -> double& { return c.agent.dqn.learning_rate; });
        t["prioritized_replay_alpha"] = dbl([](RunConfig& c) -> double& { return c.agent.dqn.alpha; });
        t["prioritized_replay_beta"] = dbl([](RunConfig& c) -> double& { return c.agent.dqn.beta; });
        t["priority_epsilon"] = dbl([](RunConfig& c) -> double& { return c.agent.dqn.priority_epsilon; });
        t["soft_update_tau"] = dbl([](RunConfig& c) -> double& { return c.agent.dqn.tau; });
        t["advantage_loss_margin"] = dbl([](RunConfig& c) -> double& { return c.agent.advantage_margin; });
        t["lambda_advantage"] = dbl([](RunConfig& c) -> double& { return c.agent.loss_weights.advantage; });
        t["lambda_invariance"] = dbl([](RunConfig& c) -> double& { return c.agent.loss_weights.invariance; });
        t["explanation_weight"] = dbl([](RunConfig& c) -> double& { return c.agent.explanation_weight; });
        t["epsilon_start"] = dbl([](RunConfig& c) -> double& { return c.epsilon.epsilon; });
        t["epsilon_floor"] = dbl([](RunConfig& c) -> double& { return c.epsilon.floor; });
        t["epsilon_decay"] = dbl([](RunConfig& c) -> double& { return c.epsilon.decay; });
        t["oracle_density"] = dbl([](RunConfig& c) -> double& { return c.oracle_density; });
        t["human_session_timeout"] = dbl([](RunConfig& c) -> double& { return c.human_session_timeout; });
        t["stop_at_running_return"] = dbl([](RunConfig& c) -> double& { return c.stop_at_running_return; });
        return t;
    }();
    return table;
}

}  // namespace

RunConfig parse_run_config(std::string_view text, RunConfig base) {
    std::istringstream in{std::string(text)};
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto line = trim(strip_comment(raw));
        if (line.empty() || line.front() == '[') {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument("config line " + std::to_string(line_no) + ": expected key = value");
        }
        const auto key = trim(std::string_view(line).substr(0, eq));
        const auto value = unquote(trim(std::string_view(line).substr(eq + 1)));
        const auto it = setters().find(key);
        if (it == setters().end()) {
            throw std::invalid_argument("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
        }
        it->second(base, key, value);
    }
    return base;
}

RunConfig load_run_config(const std::filesystem::path& path, RunConfig base) {
    std::ifstream in(path);
    if (!in) {
        throw std::invalid_argument("cannot open config file " + path.string());
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_run_config(ss.str(), std::move(base));
}

std::string to_config_text(const RunConfig& c) {
    std::ostringstream o;
    o.precision(17);
    auto b = [](bool v) { return v ? "true" : "false"; };
    o << "algo = \"" << algo_name(c.agent.algo) << "\"\n";
    o << "env = \"" << c.env << "\"\n";
    o << "feedback = \"" << feedback_source_name(c.feedback) << "\"\n";
    o << "episodes = " << c.episodes << "\n";
    o << "feedback_frequency = " << c.feedback_frequency << "\n";
    o << "update_interval = " << c.update_interval << "\n";
    o << "seeds = [";
    for (std::size_t i = 0; i < c.seeds.size(); ++i) o << (i ? ", " : "") << c.seeds[i];
    o << "]\n";
    o << "\n[network]\n";
    o << "conv_channels = [" << c.agent.network.channels[0] << ", " << c.agent.network.channels[1] << ", "
      << c.agent.network.channels[2] << "]\n";
    o << "hidden_units = " << c.agent.network.hidden << "\n";
    o << "\n[dqn]\n";
    o << "discount_factor = " << c.agent.dqn.gamma << "\n";
    o << "multi_step = " << c.agent.dqn.n_step << "\n";
    o << "learning_rate = " << c.agent.dqn.learning_rate << "\n";
    o << "soft_update_tau = " << c.agent.dqn.tau << "\n";
    o << "batch_size = " << c.agent.dqn.batch_size << "\n";
    o << "prioritized_replay_alpha = " << c.agent.dqn.alpha << "\n";
    o << "prioritized_replay_beta = " << c.agent.dqn.beta << "\n";
    o << "priority_epsilon = " << c.agent.dqn.priority_epsilon << "\n";
    o << "replay_buffer_size = " << c.agent.dqn.replay_capacity << "\n";
    o << "learning_starts = " << c.learning_starts << "\n";
    o << "epsilon_start = " << c.epsilon.epsilon << "\n";
    o << "epsilon_floor = " << c.epsilon.floor << "\n";
    o << "epsilon_decay = " << c.epsilon.decay << "\n";
    o << "\n[feedback]\n";
    o << "feedback_buffer_size = " << c.feedback_buffer_size << "\n";
    o << "feedback_batch_size = " << c.agent.feedback_batch_size << "\n";
    o << "advantage_loss_margin = " << c.agent.advantage_margin << "\n";
    o << "lambda_advantage = " << c.agent.loss_weights.advantage << "\n";
    o << "lambda_invariance = " << c.agent.loss_weights.invariance << "\n";
    o << "explanation_weight = " << c.agent.explanation_weight << "\n";
    o << "augmentation_preset = \"" << c.agent.augmentation_preset << "\"\n";
    o << "agnostic_augmentations = " << c.agent.agnostic_augmentations << "\n";
    o << "oracle_density = " << c.oracle_density << "\n";
    o << "human_session_timeout = " << c.human_session_timeout << "\n";
    o << "\n[env]\n";
    o << "grid_size = " << c.taxi.grid_size << "\n";
    o << "n_passengers = " << c.taxi.n_passengers << "\n";
    o << "max_steps = " << c.taxi.max_steps << "\n";
    o << "cell_px = " << c.taxi.cell_px << "\n";
    o << "randomize_taxi = " << b(c.taxi.randomize_taxi) << "\n";
    o << "randomize_destination = " << b(c.taxi.randomize_destination) << "\n";
    o << "\n[run]\n";
    o << "checkpoint_every = " << c.checkpoint_every << "\n";
    o << "write_checkpoints = " << b(c.write_checkpoints) << "\n";
    o << "stop_at_running_return = " << c.stop_at_running_return << "\n";
    o << "max_total_steps = " << c.max_total_steps << "\n";
    o << "out_dir = \"" << c.out_dir << "\"\n";
    return o.str();
}

}  // namespace expand
