#pragma once

#include <chrono>
#include <condition_variable>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "expand/feedback.hpp"
#include "expand/orchestrator.hpp"
#include "expand/pixel_taxi.hpp"

namespace httplib {
class Server;
}

namespace expand {

// Wire schema shared with the annotation UI.
void to_json(nlohmann::json& j, const BoundingBox& b);
/// Validates; throws std::invalid_argument naming the offending field.
BoundingBox box_from_json(const nlohmann::json& j);

/// {frame_index, label, boxes, action, timestamp, source}
nlohmann::json record_to_json(const FeedbackRecord& r);
/// Parses the wire fields (the state is not on the wire).
FeedbackRecord record_from_json(const nlohmann::json& j);

struct TaggedBox {
    std::string entity;  // "taxi", "destination", "passenger-red", ...
    BoundingBox box;
    bool operator==(const TaggedBox&) const = default;
};

struct BoxSuggestion {
    int frame_index = 0;
    std::vector<TaggedBox> boxes;
};

/// Exact-colour template matching over the taxi palette; one cell-aligned box
/// per entity and cell. Unknown colours are ignored.
BoxSuggestion suggest_boxes(const RawFrame& frame, const taxi::TaxiConfig& config = {}, int frame_index = 0);

enum class SessionStatus { kOpen, kFinished, kTimedOut };
std::string_view session_status_name(SessionStatus s);

struct SessionTrajectory {
    std::vector<RawFrame> frames;
    std::vector<int> actions;
    std::vector<std::string> action_names;
    std::vector<QueriedStep> steps;
};

struct ServiceReply {
    int status = 200;
    std::string content_type = "application/json";
    std::string body;
};

struct ServiceOptions {
    std::chrono::duration<double> session_budget{300.0};
    CreditWindow window;
    taxi::TaxiConfig taxi;
};

/// Annotation sessions over JSON/HTTP. Handlers are plain member functions
/// returning ServiceReply so they can be driven without a socket; start()
/// exposes them over HTTP:
///   GET  /session/current
///   GET  /session/{id}
///   GET  /session/{id}/frames/{i}     (PNG)
///   GET  /session/{id}/suggestions
///   POST /session/{id}/signal
///   POST /session/{id}/finish
/// One session is open at a time. Finishing runs the credit window and
/// appends the resulting records to the sink buffer exactly once.
class FeedbackService {
public:
    FeedbackService(FeedbackBuffer* sink, ServiceOptions options = {});
    ~FeedbackService();

    FeedbackService(const FeedbackService&) = delete;
    FeedbackService& operator=(const FeedbackService&) = delete;

    /// Throws std::logic_error while another session is open, and
    /// std::invalid_argument for an empty trajectory.
    std::string open_session(SessionTrajectory trajectory);

    ServiceReply get_current();
    ServiceReply get_session(const std::string& id);
    ServiceReply get_frame(const std::string& id, int index);
    ServiceReply get_suggestions(const std::string& id);
    ServiceReply post_signal(const std::string& id, const std::string& body);
    ServiceReply post_finish(const std::string& id);

    /// Blocks until the session is finished or its budget runs out.
    SessionStatus wait(const std::string& id);
    SessionStatus status(const std::string& id);
    /// Records produced when the session finished (empty otherwise).
    std::vector<FeedbackRecord> records(const std::string& id);

    /// Serves on host:port in a background thread; port 0 picks a free one.
    /// Returns the bound port.
    int start(const std::string& host = "127.0.0.1", int port = 0);
    void stop();

private:
    struct Session {
        std::string id;
        SessionTrajectory trajectory;
        std::vector<BoxSuggestion> suggestions;
        std::vector<HumanSignal> signals;
        std::vector<DisplayEvent> display_log;
        std::vector<FeedbackRecord> produced;
        SessionStatus status = SessionStatus::kOpen;
        std::chrono::steady_clock::time_point deadline;
        double deadline_epoch = 0.0;
    };

    Session* find(const std::string& id);
    void expire_locked(Session& s);
    ServiceReply finish_locked(Session& s);

    FeedbackBuffer* sink_;
    ServiceOptions options_;
    std::mutex mutex_;
    std::condition_variable changed_;
    std::map<std::string, std::unique_ptr<Session>> sessions_;
    std::string current_;
    int next_id_ = 1;

    std::unique_ptr<httplib::Server> server_;
    std::thread server_thread_;
};

/// Queries a human through the service: opens a session for the trajectory
/// and blocks until it finishes or times out. The records are returned to the
/// caller, so a service used this way should have no sink of its own.
class HumanProvider final : public FeedbackProvider {
public:
    explicit HumanProvider(FeedbackService& service) : service_(service) {}
    std::vector<FeedbackRecord> query(const taxi::TaxiConfig& config,
                                      const std::vector<oracle::TrajectoryStep>& trajectory, int episode) override;

private:
    FeedbackService& service_;
};

}  // namespace expand
