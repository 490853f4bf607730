#include "ppe/gate.hpp"

#include <algorithm>

#include "ppe/errors.hpp"

namespace ppe {

namespace {

std::string class_list(const std::set<PpeClass>& classes) {
    std::string out;
    for (const PpeClass cls : classes) {
        out += out.empty() ? std::string(class_name(cls))
                           : "," + std::string(class_name(cls));
    }
    return out;
}

GateAction warning(std::string message) {
    return {GateAction::Type::Warning, {}, std::move(message)};
}

} // namespace

std::string_view gate_state_name(GateStateKind kind) {
    switch (kind) {
    case GateStateKind::Idle: return "Idle";
    case GateStateKind::Checking: return "Checking";
    case GateStateKind::Granted: return "Granted";
    case GateStateKind::Denied: return "Denied";
    case GateStateKind::Cooldown: return "Cooldown";
    }
    return "?";
}

std::string_view gate_event_name(GateEvent::Type type) {
    switch (type) {
    case GateEvent::Type::PersonDetected: return "PersonDetected";
    case GateEvent::Type::FrameAssessed: return "FrameAssessed";
    case GateEvent::Type::Timeout: return "Timeout";
    case GateEvent::Type::InnerDoorClosed: return "InnerDoorClosed";
    case GateEvent::Type::Reset: return "Reset";
    }
    return "?";
}

StepResult step(const GateState& state, const GateEvent& event,
                const GatePolicy& policy, double now) {
    if (now < state.last_event_time) {
        throw Error("gate clock regression");
    }
    StepResult result{state, {}};
    result.state.last_event_time = now;

    if (event.type == GateEvent::Type::Reset) {
        result.state = GateState{};
        result.state.last_event_time = now;
        return result;
    }

    switch (state.kind) {
    case GateStateKind::Idle:
        if (event.type == GateEvent::Type::PersonDetected) {
            result.state.kind = GateStateKind::Checking;
            result.state.streak = 0;
            result.state.deadline = now + policy.check_timeout;
            result.state.deny_reason.clear();
            result.state.last_missing.clear();
        } else {
            result.actions.push_back(warning("ignored event in Idle"));
        }
        break;

    case GateStateKind::Checking: {
        // The deadline expires the check regardless of which event lands.
        if (now >= state.deadline) {
            result.state.kind = GateStateKind::Denied;
            result.state.deny_reason = "timeout";
            result.actions.push_back({GateAction::Type::SignalDeny,
                                      state.last_missing, "timeout"});
            break;
        }
        if (event.type == GateEvent::Type::FrameAssessed) {
            const bool authorized =
                event.identity.authorized || policy.allow_anonymous;
            if (event.decision.compliant && authorized) {
                ++result.state.streak;
                if (result.state.streak >= policy.frames_required) {
                    result.state.kind = GateStateKind::Granted;
                    result.state.subject =
                        event.identity.subject_id.value_or("anonymous");
                    result.actions.push_back(
                        {GateAction::Type::UnlockInnerDoor, {}, ""});
                }
            } else {
                result.state.streak = 0;
                result.state.last_missing = event.decision.missing;
            }
        } else if (event.type == GateEvent::Type::Timeout) {
            // Timeout event ahead of the deadline is a no-op.
            result.actions.push_back(warning("timeout event before deadline"));
        } else {
            result.actions.push_back(warning("ignored event in Checking"));
        }
        break;
    }

    case GateStateKind::Granted:
        if (event.type == GateEvent::Type::InnerDoorClosed) {
            result.state = GateState{};
            result.state.kind = GateStateKind::Cooldown;
            result.state.cooldown_until = now + policy.cooldown;
            result.state.last_event_time = now;
        } else {
            result.actions.push_back(warning("ignored event in Granted"));
        }
        break;

    case GateStateKind::Denied:
        if (event.type == GateEvent::Type::Timeout ||
            event.type == GateEvent::Type::InnerDoorClosed) {
            result.state = GateState{};
            result.state.kind = GateStateKind::Cooldown;
            result.state.cooldown_until = now + policy.cooldown;
            result.state.last_event_time = now;
        } else {
            result.actions.push_back(warning("ignored event in Denied"));
        }
        break;

    case GateStateKind::Cooldown:
        if (now >= state.cooldown_until) {
            result.state = GateState{};
            result.state.last_event_time = now;
            // A person arriving right after cooldown starts a new check.
            if (event.type == GateEvent::Type::PersonDetected) {
                result.state.kind = GateStateKind::Checking;
                result.state.deadline = now + policy.check_timeout;
            }
        } else {
            result.actions.push_back(warning("ignored event in Cooldown"));
        }
        break;
    }
    return result;
}

StepResult GateSession::apply(const GateEvent& event, double now) {
    std::lock_guard lock(mutex_);
    const GateStateKind from = state_.kind;
    StepResult result = step(state_, event, policy_, now);
    state_ = result.state;

    AuditRecord record;
    record.timestamp = now;
    record.state_from = gate_state_name(from);
    record.event = gate_event_name(event.type);
    record.state_to = gate_state_name(state_.kind);
    if (event.type == GateEvent::Type::FrameAssessed) {
        record.detail = event.decision.compliant
                            ? "compliant"
                            : "missing=" + class_list(event.decision.missing);
        record.detail += event.identity.subject_id
                             ? ";subject=" + *event.identity.subject_id
                             : ";subject=unknown";
    }
    for (const auto& action : result.actions) {
        if (action.type == GateAction::Type::UnlockInnerDoor) {
            record.detail += ";action=UnlockInnerDoor";
        } else if (action.type == GateAction::Type::SignalDeny) {
            record.detail += ";action=SignalDeny(" + class_list(action.missing) + ")";
        }
    }
    log_.push_back(std::move(record));
    return result;
}

GateState GateSession::state() const {
    std::lock_guard lock(mutex_);
    return state_;
}

std::vector<AuditRecord> GateSession::session_log() const {
    std::lock_guard lock(mutex_);
    return log_;
}

FrameAssessment handle_frame(GateSession& session, Image frame,
                             const std::string& image_id,
                             DetectorBackend& person_backend,
                             DetectorBackend& ppe_backend,
                             const PipelineConfig& pipeline_config,
                             IdentityProvider& identity, double now) {
    FrameAssessment assessment;

    FrameResult frame_result;
    IdentityClaim claim;
    {
        // Frame pixels live only inside this scope.
        const Image local = std::move(frame);
        frame_result = process_frame(local, image_id, person_backend,
                                     ppe_backend, pipeline_config);
        if (!frame_result.persons.empty()) {
            const auto primary = std::max_element(
                frame_result.persons.begin(), frame_result.persons.end(),
                [](const PersonResult& a, const PersonResult& b) {
                    return a.person_box.area() < b.person_box.area();
                });
            claim = identity.identify(local, primary->person_box);
            assessment.person_found = true;
            assessment.decision = primary->decision;
        }
    }

    if (!assessment.person_found) {
        assessment.state_after = session.state().kind;
        return assessment;
    }

    assessment.identity = claim;
    if (session.state().kind == GateStateKind::Idle) {
        session.apply({GateEvent::Type::PersonDetected, {}, {}}, now);
    }
    GateEvent event;
    event.type = GateEvent::Type::FrameAssessed;
    event.decision = assessment.decision;
    event.identity = claim;
    const StepResult result = session.apply(event, now);
    assessment.state_after = result.state.kind;
    assessment.actions = result.actions;
    return assessment;
}

} // namespace ppe
