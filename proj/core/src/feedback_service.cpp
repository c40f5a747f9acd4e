#include "expand/feedback_service.hpp"

#include <cmath>
#include <stdexcept>

#include <httplib.h>

#include "expand/image_io.hpp"
#include "expand/log.hpp"

namespace expand {

using nlohmann::json;

void to_json(json& j, const BoundingBox& b) { j = json{{"x", b.x}, {"y", b.y}, {"w", b.w}, {"h", b.h}}; }

BoundingBox box_from_json(const json& j) {
    if (!j.is_object()) {
        throw std::invalid_argument("box: expected an object with x, y, w, h");
    }
    BoundingBox b;
    for (const auto& [name, field] : {std::pair{"x", &b.x}, {"y", &b.y}, {"w", &b.w}, {"h", &b.h}}) {
        const auto it = j.find(name);
        if (it == j.end()) {
            throw std::invalid_argument(std::string(name) + ": missing");
        }
        if (!it->is_number_integer()) {
            throw std::invalid_argument(std::string(name) + ": expected an integer");
        }
        *field = it->get<int>();
    }
    if (const auto problem = validate_box(b)) {
        throw std::invalid_argument(*problem);
    }
    return b;
}

namespace {

double round_ms(double t) { return std::round(t * 1000.0) / 1000.0; }

double epoch_now() {
    return std::chrono::duration<double>(std::chrono::system_clock::now().time_since_epoch()).count();
}

}  // namespace

json record_to_json(const FeedbackRecord& r) {
    return json{{"frame_index", r.frame_index}, {"label", r.label},
                {"boxes", r.boxes},             {"action", r.action},
                {"timestamp", round_ms(r.timestamp)}, {"source", r.source}};
}

FeedbackRecord record_from_json(const json& j) {
    FeedbackRecord r;
    j.at("frame_index").get_to(r.frame_index);
    j.at("label").get_to(r.label);
    if (r.label != kGoodLabel && r.label != kBadLabel) {
        throw std::invalid_argument("label: must be +1 or -1");
    }
    j.at("action").get_to(r.action);
    r.timestamp = round_ms(j.at("timestamp").get<double>());
    j.at("source").get_to(r.source);
    const auto& boxes = j.at("boxes");
    for (std::size_t i = 0; i < boxes.size(); ++i) {
        try {
            r.boxes.push_back(box_from_json(boxes[i]));
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument("boxes[" + std::to_string(i) + "]." + e.what());
        }
    }
    return r;
}

namespace {

constexpr std::array<std::string_view, taxi::kPassengerPalette.size()> kPassengerNames{"red", "blue", "yellow", "green",
                                                                                       "magenta"};

}  // namespace

BoxSuggestion suggest_boxes(const RawFrame& frame, const taxi::TaxiConfig& config, int frame_index) {
    BoxSuggestion out;
    out.frame_index = frame_index;
    const int px = config.cell_px;
    for (int cy = 0; cy < config.grid_size; ++cy) {
        for (int cx = 0; cx < config.grid_size; ++cx) {
            bool destination = false;
            bool taxi_here = false;
            std::array<bool, taxi::kPassengerPalette.size()> passengers{};
            for (int y = cy * px; y < (cy + 1) * px && y < frame.height; ++y) {
                for (int x = cx * px; x < (cx + 1) * px && x < frame.width; ++x) {
                    const auto c = frame.pixel(x, y);
                    if (c == taxi::kDestinationBlack) destination = true;
                    if (c == taxi::kTaxiGray) taxi_here = true;
                    for (std::size_t p = 0; p < passengers.size(); ++p) {
                        if (c == taxi::kPassengerPalette[p]) passengers[p] = true;
                    }
                }
            }
            const auto box = taxi::cell_box(config, {cx, cy});
            if (taxi_here) out.boxes.push_back({"taxi", box});
            if (destination) out.boxes.push_back({"destination", box});
            // A dot inside the taxi is the carried passenger and belongs to the taxi.
            if (!taxi_here) {
                for (std::size_t p = 0; p < passengers.size(); ++p) {
                    if (passengers[p]) out.boxes.push_back({"passenger-" + std::string(kPassengerNames[p]), box});
                }
            }
        }
    }
    return out;
}

std::string_view session_status_name(SessionStatus s) {
    switch (s) {
        case SessionStatus::kOpen: return "open";
        case SessionStatus::kFinished: return "finished";
        case SessionStatus::kTimedOut: return "timed-out";
    }
    return "unknown";
}

namespace {

ServiceReply json_reply(int status, const json& body) { return {status, "application/json", body.dump()}; }

ServiceReply error_reply(int status, std::string message, std::string field = {}) {
    json body{{"error", std::move(message)}};
    if (!field.empty()) body["field"] = std::move(field);
    return json_reply(status, body);
}

}  // namespace

FeedbackService::FeedbackService(FeedbackBuffer* sink, ServiceOptions options)
    : sink_(sink), options_(std::move(options)) {}

FeedbackService::~FeedbackService() { stop(); }

std::string FeedbackService::open_session(SessionTrajectory trajectory) {
    if (trajectory.frames.empty()) {
        throw std::invalid_argument("open_session: trajectory is empty");
    }
    if (trajectory.actions.size() != trajectory.frames.size() ||
        (!trajectory.steps.empty() && trajectory.steps.size() != trajectory.frames.size())) {
        throw std::invalid_argument("open_session: frames, actions and steps must have equal length");
    }
    if (trajectory.action_names.empty()) {
        for (int a : trajectory.actions) {
            trajectory.action_names.emplace_back(taxi::action_name(static_cast<taxi::Action>(a)));
        }
    }
    std::lock_guard lock(mutex_);
    if (!current_.empty()) {
        if (auto* open = find(current_)) expire_locked(*open);
    }
    if (!current_.empty()) {
        throw std::logic_error("open_session: session " + current_ + " is still open");
    }
    auto s = std::make_unique<Session>();
    s->id = std::to_string(next_id_++);
    for (std::size_t i = 0; i < trajectory.frames.size(); ++i) {
        s->suggestions.push_back(suggest_boxes(trajectory.frames[i], options_.taxi, static_cast<int>(i)));
    }
    s->trajectory = std::move(trajectory);
    const auto budget = std::chrono::duration_cast<std::chrono::steady_clock::duration>(options_.session_budget);
    s->deadline = std::chrono::steady_clock::now() + budget;
    s->deadline_epoch = epoch_now() + options_.session_budget.count();
    current_ = s->id;
    const auto id = s->id;
    sessions_[id] = std::move(s);
    changed_.notify_all();
    return id;
}

FeedbackService::Session* FeedbackService::find(const std::string& id) {
    const auto it = sessions_.find(id);
    return it == sessions_.end() ? nullptr : it->second.get();
}

void FeedbackService::expire_locked(Session& s) {
    if (s.status == SessionStatus::kOpen && std::chrono::steady_clock::now() >= s.deadline) {
        s.status = SessionStatus::kTimedOut;
        if (current_ == s.id) current_.clear();
        log::warn("annotation session {} timed out with {} signals; no feedback recorded", s.id, s.signals.size());
        changed_.notify_all();
    }
}

namespace {

json session_json(const std::string& id, SessionStatus status, const SessionTrajectory& t, double deadline) {
    json frames = json::array();
    for (std::size_t i = 0; i < t.frames.size(); ++i) {
        frames.push_back("/session/" + id + "/frames/" + std::to_string(i));
    }
    return json{{"id", id},
                {"status", session_status_name(status)},
                {"steps", t.frames.size()},
                {"actions", t.actions},
                {"action_names", t.action_names},
                {"frames", frames},
                {"suggestions", "/session/" + id + "/suggestions"},
                {"deadline", round_ms(deadline)}};
}

}  // namespace

ServiceReply FeedbackService::get_current() {
    std::lock_guard lock(mutex_);
    if (!current_.empty()) {
        if (auto* s = find(current_)) expire_locked(*s);
    }
    if (current_.empty()) return error_reply(404, "no open session");
    const auto& s = *find(current_);
    return json_reply(200, session_json(s.id, s.status, s.trajectory, s.deadline_epoch));
}

ServiceReply FeedbackService::get_session(const std::string& id) {
    std::lock_guard lock(mutex_);
    auto* s = find(id);
    if (!s) return error_reply(404, "unknown session " + id);
    expire_locked(*s);
    return json_reply(200, session_json(s->id, s->status, s->trajectory, s->deadline_epoch));
}

ServiceReply FeedbackService::get_frame(const std::string& id, int index) {
    std::lock_guard lock(mutex_);
    auto* s = find(id);
    if (!s) return error_reply(404, "unknown session " + id);
    if (index < 0 || index >= static_cast<int>(s->trajectory.frames.size())) {
        return error_reply(404, "frame index out of range", "index");
    }
    return {200, "image/png", encode_png(s->trajectory.frames[static_cast<std::size_t>(index)])};
}

ServiceReply FeedbackService::get_suggestions(const std::string& id) {
    std::lock_guard lock(mutex_);
    auto* s = find(id);
    if (!s) return error_reply(404, "unknown session " + id);
    json out = json::array();
    for (const auto& sug : s->suggestions) {
        json boxes = json::array();
        for (const auto& tb : sug.boxes) {
            json b = tb.box;
            b["entity"] = tb.entity;
            boxes.push_back(std::move(b));
        }
        out.push_back({{"frame_index", sug.frame_index}, {"boxes", std::move(boxes)}});
    }
    return json_reply(200, out);
}

ServiceReply FeedbackService::post_signal(const std::string& id, const std::string& body) {
    json j;
    try {
        j = json::parse(body);
    } catch (const json::parse_error& e) {
        return error_reply(400, std::string("malformed JSON: ") + e.what(), "body");
    }
    if (!j.is_object()) return error_reply(400, "expected a JSON object", "body");

    const auto key_it = j.find("key");
    if (key_it == j.end() || !key_it->is_string()) return error_reply(400, "missing key (A, S or D)", "key");
    const auto key = key_it->get<std::string>();
    if (key != "A" && key != "S" && key != "D") return error_reply(400, "key must be A, S or D", "key");

    const auto ts_it = j.find("timestamp");
    if (ts_it == j.end() || !ts_it->is_number()) return error_reply(400, "timestamp must be a number", "timestamp");

    HumanSignal signal;
    signal.timestamp = round_ms(ts_it->get<double>());
    signal.label = key == "A" ? kGoodLabel : kBadLabel;
    if (const auto it = j.find("boxes"); it != j.end()) {
        if (!it->is_array()) return error_reply(400, "boxes must be an array", "boxes");
        for (std::size_t i = 0; i < it->size(); ++i) {
            try {
                signal.boxes.push_back(box_from_json((*it)[i]));
            } catch (const std::invalid_argument& e) {
                const std::string what = e.what();
                const auto field = "boxes[" + std::to_string(i) + "]." + what.substr(0, what.find(':'));
                return error_reply(400, what, field);
            }
        }
    }

    std::lock_guard lock(mutex_);
    auto* s = find(id);
    if (!s) return error_reply(404, "unknown session " + id);
    expire_locked(*s);
    if (s->status != SessionStatus::kOpen) {
        return error_reply(409, "session " + id + " is " + std::string(session_status_name(s->status)));
    }

    std::vector<DisplayEvent> events;
    if (const auto it = j.find("display_log"); it != j.end()) {
        if (!it->is_array()) return error_reply(400, "display_log must be an array", "display_log");
        const int frames = static_cast<int>(s->trajectory.frames.size());
        for (std::size_t i = 0; i < it->size(); ++i) {
            const auto& e = (*it)[i];
            const auto field = "display_log[" + std::to_string(i) + "]";
            if (!e.is_object() || !e.contains("frame_index") || !e["frame_index"].is_number_integer()) {
                return error_reply(400, "frame_index must be an integer", field + ".frame_index");
            }
            if (!e.contains("time") || !e["time"].is_number()) {
                return error_reply(400, "time must be a number", field + ".time");
            }
            const int index = e["frame_index"].get<int>();
            if (index < 0 || index >= frames) return error_reply(400, "frame_index out of range", field + ".frame_index");
            events.push_back({index, e["time"].get<double>()});
        }
    }
    s->display_log.insert(s->display_log.end(), events.begin(), events.end());
    const bool kept = key != "D";
    if (kept) s->signals.push_back(std::move(signal));
    return json_reply(200, json{{"accepted", kept}, {"signals", s->signals.size()}});
}

ServiceReply FeedbackService::finish_locked(Session& s) {
    if (s.status == SessionStatus::kTimedOut) {
        return error_reply(409, "session " + s.id + " timed out");
    }
    if (s.status == SessionStatus::kOpen) {
        std::vector<QueriedStep> steps = s.trajectory.steps;
        if (steps.empty()) {
            steps.resize(s.trajectory.frames.size());
            for (std::size_t i = 0; i < steps.size(); ++i) steps[i].action = s.trajectory.actions[i];
        }
        s.produced = apply_credit_window(s.signals, s.display_log, steps, options_.window);
        if (sink_) sink_->store_all(s.produced);
        s.status = SessionStatus::kFinished;
        if (current_ == s.id) current_.clear();
        changed_.notify_all();
    }
    return json_reply(200, json{{"status", session_status_name(s.status)}, {"records", s.produced.size()}});
}

ServiceReply FeedbackService::post_finish(const std::string& id) {
    std::lock_guard lock(mutex_);
    auto* s = find(id);
    if (!s) return error_reply(404, "unknown session " + id);
    expire_locked(*s);
    return finish_locked(*s);
}

SessionStatus FeedbackService::wait(const std::string& id) {
    std::unique_lock lock(mutex_);
    auto* s = find(id);
    if (!s) throw std::invalid_argument("unknown session " + id);
    changed_.wait_until(lock, s->deadline, [&] { return s->status != SessionStatus::kOpen; });
    expire_locked(*s);
    return s->status;
}

SessionStatus FeedbackService::status(const std::string& id) {
    std::lock_guard lock(mutex_);
    auto* s = find(id);
    if (!s) throw std::invalid_argument("unknown session " + id);
    expire_locked(*s);
    return s->status;
}

std::vector<FeedbackRecord> FeedbackService::records(const std::string& id) {
    std::lock_guard lock(mutex_);
    auto* s = find(id);
    if (!s) throw std::invalid_argument("unknown session " + id);
    return s->produced;
}

int FeedbackService::start(const std::string& host, int port) {
    if (server_) throw std::logic_error("feedback service already started");
    server_ = std::make_unique<httplib::Server>();
    auto send = [](httplib::Response& res, const ServiceReply& r) {
        res.status = r.status;
        res.set_header("Access-Control-Allow-Origin", "*");
        res.set_content(r.body, r.content_type);
    };
    server_->Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) {
        res.set_header("Access-Control-Allow-Origin", "*");
        res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
        res.set_header("Access-Control-Allow-Headers", "Content-Type");
        res.status = 204;
    });
    server_->Get("/session/current", [this, send](const httplib::Request&, httplib::Response& res) {
        send(res, get_current());
    });
    server_->Get(R"(/session/([^/]+)/frames/(\d+))", [this, send](const httplib::Request& req, httplib::Response& res) {
        send(res, get_frame(req.matches[1], std::stoi(req.matches[2])));
    });
    server_->Get(R"(/session/([^/]+)/suggestions)", [this, send](const httplib::Request& req, httplib::Response& res) {
        send(res, get_suggestions(req.matches[1]));
    });
    server_->Get(R"(/session/([^/]+))", [this, send](const httplib::Request& req, httplib::Response& res) {
        send(res, get_session(req.matches[1]));
    });
    server_->Post(R"(/session/([^/]+)/signal)", [this, send](const httplib::Request& req, httplib::Response& res) {
        send(res, post_signal(req.matches[1], req.body));
    });
    server_->Post(R"(/session/([^/]+)/finish)", [this, send](const httplib::Request& req, httplib::Response& res) {
        send(res, post_finish(req.matches[1]));
    });

    int bound = port;
    if (port == 0) {
        bound = server_->bind_to_any_port(host);
    } else if (!server_->bind_to_port(host, port)) {
        bound = -1;
    }
    if (bound < 0) {
        server_.reset();
        throw std::runtime_error("feedback service cannot bind " + host + ":" + std::to_string(port));
    }
    server_thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
    log::info("feedback service listening on {}:{}", host, bound);
    return bound;
}

void FeedbackService::stop() {
    if (!server_) return;
    server_->stop();
    if (server_thread_.joinable()) server_thread_.join();
    server_.reset();
}

std::vector<FeedbackRecord> HumanProvider::query(const taxi::TaxiConfig& config,
                                                 const std::vector<oracle::TrajectoryStep>& trajectory, int episode) {
    SessionTrajectory t;
    for (const auto& step : trajectory) {
        t.frames.push_back(taxi::render(config, step.env_state));
        t.actions.push_back(step.action);
        t.action_names.emplace_back(taxi::action_name(static_cast<taxi::Action>(step.action)));
        t.steps.push_back({step.state, step.action});
    }
    const auto id = service_.open_session(std::move(t));
    log::info("episode {}: waiting for annotation session {}", episode, id);
    if (service_.wait(id) != SessionStatus::kFinished) {
        log::warn("episode {}: annotation session {} timed out, continuing without new feedback", episode, id);
        return {};
    }
    return service_.records(id);
}

}  // namespace expand
