#pragma once

#include <atomic>
#include <functional>
#include <memory>
#include <mutex>
#include <thread>

#include "ppe/config.hpp"
#include "ppe/gate.hpp"

namespace httplib {
class Server;
}

namespace ppe {

// HTTP+JSON airlock service.
//   POST /v1/sessions                 -> {"session_id"}
//   POST /v1/sessions/{id}/frames     (PNG/JPEG body)
//                                     -> {state, per_class_present, missing, identity}
//   GET  /v1/sessions/{id}            -> {state, history}
//   POST /v1/sessions/{id}/events     {"type": "InnerDoorClosed"|"Reset"|"Timeout"}
// Audit records are appended as JSON lines under the configured log
// directory; frame pixels are never written anywhere.
class GateService {
public:
    explicit GateService(const Config& config);
    ~GateService();

    GateService(const GateService&) = delete;
    GateService& operator=(const GateService&) = delete;

    // Blocks until stop(); returns false if the port cannot be bound.
    bool run();
    // Starts run() on a background thread and waits for readiness.
    bool start_background();
    void stop();

    int port() const { return port_; }

    // Test seam: replaces the wall clock (seconds, monotonic).
    void set_clock(std::function<double()> clock) { clock_ = std::move(clock); }

private:
    struct SessionSlot;

    std::shared_ptr<GateSession> find_session(const std::string& id);
    void append_audit(const GateSession& session);

    std::unique_ptr<httplib::Server> server_;
    std::unique_ptr<DetectorBackend> person_backend_;
    std::unique_ptr<DetectorBackend> ppe_backend_;
    UnknownIdentityProvider identity_;
    PipelineConfig pipeline_config_;
    GatePolicy policy_;
    int port_ = 8080;
    std::filesystem::path log_dir_;
    std::function<double()> clock_;

    std::mutex sessions_mutex_;
    std::map<std::string, std::shared_ptr<GateSession>> sessions_;
    std::atomic<std::uint64_t> next_session_id_{1};
    std::mutex audit_mutex_;
    std::thread server_thread_;
};

} // namespace ppe
