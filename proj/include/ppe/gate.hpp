#pragma once

#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "ppe/pipeline.hpp"

namespace ppe {

enum class GateStateKind { Idle, Checking, Granted, Denied, Cooldown };

std::string_view gate_state_name(GateStateKind kind);

struct GateState {
    GateStateKind kind = GateStateKind::Idle;
    int streak = 0;                 // consecutive compliant+authorized frames
    double deadline = 0.0;          // Checking expiry (seconds)
    double cooldown_until = 0.0;    // Cooldown expiry (seconds)
    std::string subject;            // granted subject id
    std::string deny_reason;
    std::set<PpeClass> last_missing;
    double last_event_time = 0.0;
};

struct IdentityClaim {
    std::optional<std::string> subject_id; // nullopt = Unknown
    bool authorized = false;
};

struct GateEvent {
    enum class Type { PersonDetected, FrameAssessed, Timeout, InnerDoorClosed, Reset };
    Type type = Type::PersonDetected;
    ComplianceDecision decision; // FrameAssessed only
    IdentityClaim identity;      // FrameAssessed only
};

std::string_view gate_event_name(GateEvent::Type type);

struct GatePolicy {
    std::set<PpeClass> required = {PpeClass::Hardhat, PpeClass::SafetyVest,
                                   PpeClass::SafetyGloves,
                                   PpeClass::SafetyGlasses,
                                   PpeClass::HearingProtection};
    int frames_required = 1;   // K consecutive compliant+authorized frames
    double check_timeout = 15.0;
    bool allow_anonymous = false;
    double cooldown = 3.0;
};

struct GateAction {
    enum class Type { UnlockInnerDoor, SignalDeny, Warning };
    Type type = Type::Warning;
    std::set<PpeClass> missing; // SignalDeny
    std::string message;        // Warning
};

struct StepResult {
    GateState state;
    std::vector<GateAction> actions;
};

// Total transition function: every (state, event) pair either transitions
// or is a logged no-op. Throws Error on clock regression.
StepResult step(const GateState& state, const GateEvent& event,
                const GatePolicy& policy, double now);

struct AuditRecord {
    double timestamp = 0.0;
    std::string state_from;
    std::string event;
    std::string state_to;
    std::string detail; // class names / reasons, never imagery
};

class IdentityProvider {
public:
    virtual ~IdentityProvider() = default;
    virtual IdentityClaim identify(const Image& frame,
                                   const BoundingBox& person_box) = 0;
};

// Ships with the artifact: face recognition is an external concern, so
// every subject is Unknown and unauthorized.
class UnknownIdentityProvider : public IdentityProvider {
public:
    IdentityClaim identify(const Image&, const BoundingBox&) override {
        return {std::nullopt, false};
    }
};

// One airlock session: a state machine plus its audit trail. Events are
// applied strictly serially under the session lock.
class GateSession {
public:
    GateSession(std::string id, GatePolicy policy)
        : id_(std::move(id)), policy_(std::move(policy)) {}

    StepResult apply(const GateEvent& event, double now);

    const std::string& id() const { return id_; }
    GateState state() const;
    const GatePolicy& policy() const { return policy_; }
    std::vector<AuditRecord> session_log() const;

private:
    std::string id_;
    GatePolicy policy_;
    GateState state_;
    std::vector<AuditRecord> log_;
    mutable std::mutex mutex_;
};

struct FrameAssessment {
    bool person_found = false;
    ComplianceDecision decision;
    IdentityClaim identity;
    GateStateKind state_after = GateStateKind::Idle;
    std::vector<GateAction> actions;
};

// Run the detection pipeline on a frame and feed the verdict for the
// primary person into the session. The frame buffer is released before
// this returns and is never persisted.
FrameAssessment handle_frame(GateSession& session, Image frame,
                             const std::string& image_id,
                             DetectorBackend& person_backend,
                             DetectorBackend& ppe_backend,
                             const PipelineConfig& pipeline_config,
                             IdentityProvider& identity, double now);

} // namespace ppe
