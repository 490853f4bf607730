#include "ppe/gate_service.hpp"

#include <chrono>
#include <fstream>

#include <httplib.h>
#include <json.hpp>

#include "ppe/errors.hpp"
#include "ppe/imageio.hpp"

using nlohmann::json;

namespace ppe {

namespace {

double wall_seconds() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

json class_set_to_json(const std::set<PpeClass>& classes) {
    json out = json::array();
    for (const PpeClass cls : classes) {
        out.push_back(std::string(class_name(cls)));
    }
    return out;
}

json audit_to_json(const AuditRecord& record) {
    return {{"timestamp", record.timestamp},
            {"from", record.state_from},
            {"event", record.event},
            {"to", record.state_to},
            {"detail", record.detail}};
}

void send_error(httplib::Response& res, int status, const std::string& message) {
    res.status = status;
    res.set_content(json{{"error", message}}.dump(), "application/json");
}

} // namespace

GateService::GateService(const Config& config) {
    person_backend_ = make_backend(config.get_or("pipeline.person_backend", "fullframe"));
    const auto ppe_spec = config.get("pipeline.ppe_backend");
    if (!ppe_spec) {
        throw ConfigError("gate service: pipeline.ppe_backend is required");
    }
    ppe_backend_ = make_backend(*ppe_spec);
    pipeline_config_ = pipeline_config_from(config);
    policy_ = gate_policy_from(config);
    pipeline_config_.required = policy_.required;
    port_ = config.get_int("server.port", 8080);
    log_dir_ = config.get_or("server.log_dir", "gate_logs");
    clock_ = wall_seconds;

    std::filesystem::create_directories(log_dir_);
    server_ = std::make_unique<httplib::Server>();

    server_->Post("/v1/sessions", [this](const httplib::Request&,
                                         httplib::Response& res) {
        const std::string id = "s" + std::to_string(next_session_id_++);
        {
            std::lock_guard lock(sessions_mutex_);
            sessions_[id] = std::make_shared<GateSession>(id, policy_);
        }
        res.status = 201;
        res.set_content(json{{"session_id", id}}.dump(), "application/json");
    });

    server_->Post(R"(/v1/sessions/([^/]+)/frames)", [this](const httplib::Request& req,
                                                           httplib::Response& res) {
        const auto session = find_session(req.matches[1]);
        if (!session) {
            send_error(res, 404, "unknown session");
            return;
        }
        FrameAssessment assessment;
        try {
            Image frame = decode_image(std::span(
                reinterpret_cast<const std::uint8_t*>(req.body.data()),
                req.body.size()));
            assessment = handle_frame(*session, std::move(frame), session->id(),
                                      *person_backend_, *ppe_backend_,
                                      pipeline_config_, identity_, clock_());
        } catch (const FormatError& e) {
            send_error(res, 400, e.what());
            return;
        } catch (const Error& e) {
            send_error(res, 500, e.what());
            return;
        }
        std::set<PpeClass> present;
        for (const PpeClass cls : assessment.decision.required) {
            if (!assessment.decision.missing.count(cls)) {
                present.insert(cls);
            }
        }
        json body{{"state", std::string(gate_state_name(assessment.state_after))},
                  {"person_found", assessment.person_found},
                  {"per_class_present", class_set_to_json(present)},
                  {"missing", class_set_to_json(assessment.decision.missing)},
                  {"identity", assessment.identity.subject_id.value_or("unknown")}};
        append_audit(*session);
        res.set_content(body.dump(), "application/json");
    });

    server_->Get(R"(/v1/sessions/([^/]+))", [this](const httplib::Request& req,
                                                   httplib::Response& res) {
        const auto session = find_session(req.matches[1]);
        if (!session) {
            send_error(res, 404, "unknown session");
            return;
        }
        json history = json::array();
        for (const auto& record : session->session_log()) {
            history.push_back(audit_to_json(record));
        }
        json body{{"state", std::string(gate_state_name(session->state().kind))},
                  {"history", history}};
        res.set_content(body.dump(), "application/json");
    });

    server_->Post(R"(/v1/sessions/([^/]+)/events)", [this](const httplib::Request& req,
                                                           httplib::Response& res) {
        const auto session = find_session(req.matches[1]);
        if (!session) {
            send_error(res, 404, "unknown session");
            return;
        }
        GateEvent event;
        try {
            const json body = json::parse(req.body);
            const std::string type = body.at("type").get<std::string>();
            if (type == "InnerDoorClosed") {
                event.type = GateEvent::Type::InnerDoorClosed;
            } else if (type == "Reset") {
                event.type = GateEvent::Type::Reset;
            } else if (type == "Timeout") {
                event.type = GateEvent::Type::Timeout;
            } else {
                send_error(res, 400, "unknown event type: " + type);
                return;
            }
        } catch (const json::exception& e) {
            send_error(res, 400, std::string("bad event body: ") + e.what());
            return;
        }
        const StepResult result = session->apply(event, clock_());
        append_audit(*session);
        res.set_content(
            json{{"state", std::string(gate_state_name(result.state.kind))}}.dump(),
            "application/json");
    });
}

GateService::~GateService() {
    stop();
}

std::shared_ptr<GateSession> GateService::find_session(const std::string& id) {
    std::lock_guard lock(sessions_mutex_);
    const auto it = sessions_.find(id);
    return it == sessions_.end() ? nullptr : it->second;
}

void GateService::append_audit(const GateSession& session) {
    std::lock_guard lock(audit_mutex_);
    std::ofstream out(log_dir_ / "audit.log", std::ios::app);
    const auto log = session.session_log();
    if (!log.empty()) {
        json record = audit_to_json(log.back());
        record["session"] = session.id();
        out << record.dump() << "\n";
    }
}

bool GateService::run() {
    return server_->listen("0.0.0.0", port_);
}

bool GateService::start_background() {
    server_thread_ = std::thread([this] { server_->listen("0.0.0.0", port_); });
    server_->wait_until_ready();
    return server_->is_running();
}

void GateService::stop() {
    if (server_) {
        server_->stop();
    }
    if (server_thread_.joinable()) {
        server_thread_.join();
    }
}

} // namespace ppe
