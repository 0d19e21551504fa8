#pragma once

// Vehicle-mounted relay mobility: random-waypoint motion and the handover / RLF state
// machine driven by per-slot ideal SNR measurements.
//
// Timers are integer microseconds so slot-exact behaviour does not depend on
// floating-point accumulation.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <ostream>
#include <string_view>
#include <vector>

#include "iabsim/config.hpp"
#include "iabsim/geometry.hpp"
#include "iabsim/rng.hpp"
#include "iabsim/topology.hpp"

namespace iabsim::mobility {

using Micros = std::chrono::microseconds;

struct WaypointState {
    Vec2 position;
    Vec2 waypoint;
    double speed_mps = 120.0 / 3.6;
};

inline constexpr double kmph_to_mps(double v) { return v / 3.6; }

/// Moves speed*dt toward the waypoint; on arrival snaps to it and draws the next one
/// (zero pause time).
template <typename Region>
WaypointState step_waypoint(WaypointState s, double dt_s, rng::Stream& rng, const Region& region) {
    const double dx = s.waypoint.x - s.position.x;
    const double dy = s.waypoint.y - s.position.y;
    const double dist = std::hypot(dx, dy);
    const double step = s.speed_mps * dt_s;
    if (dist <= step) {
        s.position = s.waypoint;
        s.waypoint = region.sample(rng);
    } else {
        s.position.x += dx / dist * step;
        s.position.y += dy / dist * step;
    }
    return s;
}

enum class FsmState { Connected, TttRunning, Preparing, Executing, RlfPending, RlfRecovery };

inline std::string_view to_string(FsmState s) {
    switch (s) {
        case FsmState::Connected: return "connected";
        case FsmState::TttRunning: return "ttt_running";
        case FsmState::Preparing: return "preparing";
        case FsmState::Executing: return "executing";
        case FsmState::RlfPending: return "rlf_pending";
        case FsmState::RlfRecovery: return "rlf_recovery";
    }
    return "?";
}

enum class EventKind { TttStart, HoPrep, HoExec, HoSuccess, HoFail, Rlf, Recovered };

inline std::string_view to_string(EventKind e) {
    switch (e) {
        case EventKind::TttStart: return "TTT_START";
        case EventKind::HoPrep: return "HO_PREP";
        case EventKind::HoExec: return "HO_EXEC";
        case EventKind::HoSuccess: return "HO_SUCCESS";
        case EventKind::HoFail: return "HO_FAIL";
        case EventKind::Rlf: return "RLF";
        case EventKind::Recovered: return "RECOVERED";
    }
    return "?";
}

struct Event {
    EventKind kind;
    NodeId serving = kNoNode;
    NodeId target = kNoNode;
    double snr_db = 0.0;
};

struct FsmCounters {
    std::int64_t handover_attempts = 0;
    std::int64_t handover_failures = 0;
    std::int64_t handover_successes = 0;
    std::int64_t outage_slots = 0;
    std::int64_t donor_crossings = 0;
    std::int64_t rlf_count = 0;
    std::int64_t onboard_handovers = 0;
};

/// RlfPending is not entered by this machine: the RLF window runs inside the
/// connected-family states and is reported through rlf_window_elapsed.
struct HandoverFsm {
    FsmState state = FsmState::RlfRecovery;  // searching until the first attachment
    NodeId serving = kNoNode;
    NodeId target_bs = kNoNode;  // set while preparing or executing
    HandoverKind kind = HandoverKind::InterDu;
    Micros ttt_elapsed{0};
    Micros phase_elapsed{0};  // preparation or execution timer
    Micros rlf_window_elapsed{0};
    Micros recovery_elapsed{0};
    FsmCounters counters;

    bool connected_family() const {
        return state == FsmState::Connected || state == FsmState::TttRunning || state == FsmState::Preparing ||
               state == FsmState::Executing;
    }
    bool rlf_window_running() const { return rlf_window_elapsed.count() > 0; }
};

struct Timers {
    double a3_offset_db = 3.0;
    Micros ttt{80000};
    Micros prep_inter_du{20000}, prep_inter_cu{40000};
    Micros exec_inter_du{25000}, exec_inter_cu{50000};
    double rlf_enter_snr_db = 2.0;
    double rlf_exit_snr_db = 5.0;
    Micros rlf_window{1000000};
    Micros recovery_time{100000};

    static Timers from(const MobilityTimers& t) {
        Timers o;
        o.a3_offset_db = t.a3_offset_db;
        o.ttt = t.ttt;
        o.prep_inter_du = t.prep_inter_du;
        o.prep_inter_cu = t.prep_inter_cu;
        o.exec_inter_du = t.exec_inter_du;
        o.exec_inter_cu = t.exec_inter_cu;
        o.rlf_enter_snr_db = t.rlf_enter_snr_db;
        o.rlf_exit_snr_db = t.rlf_exit_snr_db;
        o.rlf_window = t.rlf_window;
        o.recovery_time = t.recovery_time;
        return o;
    }

    Micros prep(HandoverKind k) const { return k == HandoverKind::InterDu ? prep_inter_du : prep_inter_cu; }
    Micros exec(HandoverKind k) const { return k == HandoverKind::InterDu ? exec_inter_du : exec_inter_cu; }
};

/// A3 entry check with time-to-trigger. The condition must hold continuously; on the
/// slot where the TTT expires the FSM moves to Preparing toward `best_target`.
inline void evaluate_a3(HandoverFsm& fsm, double serving_snr_db, NodeId best_target, double best_target_snr_db,
                        Micros dt, const Timers& t, const TopologyGraph* topo, std::vector<Event>* events = nullptr) {
    if (fsm.state != FsmState::Connected && fsm.state != FsmState::TttRunning) return;
    const bool condition = best_target != kNoNode && best_target_snr_db >= serving_snr_db + t.a3_offset_db;
    if (!condition) {
        fsm.state = FsmState::Connected;
        fsm.ttt_elapsed = Micros{0};
        return;
    }
    if (fsm.state == FsmState::Connected) {
        fsm.state = FsmState::TttRunning;
        fsm.ttt_elapsed = Micros{0};
        if (events) events->push_back({EventKind::TttStart, fsm.serving, best_target, serving_snr_db});
    }
    fsm.ttt_elapsed += dt;
    if (fsm.ttt_elapsed >= t.ttt) {
        fsm.state = FsmState::Preparing;
        fsm.ttt_elapsed = Micros{0};
        fsm.target_bs = best_target;
        fsm.kind = topo ? classify_handover(*topo, fsm.serving, best_target) : HandoverKind::InterDu;
        fsm.phase_elapsed = Micros{0};
        ++fsm.counters.handover_attempts;
        if (events) events->push_back({EventKind::HoPrep, fsm.serving, best_target, serving_snr_db});
    }
}

/// RLF window: starts below the enter threshold, keeps running through the 2-5 dB band,
/// resets at or above the exit threshold. Returns true when RLF is declared this slot;
/// a declaration during preparation or execution counts as a handover failure.
inline bool evaluate_rlf(HandoverFsm& fsm, double serving_snr_db, Micros dt, const Timers& t,
                         std::vector<Event>* events = nullptr) {
    if (!fsm.connected_family()) return false;
    if (serving_snr_db >= t.rlf_exit_snr_db) {
        fsm.rlf_window_elapsed = Micros{0};
        return false;
    }
    if (!fsm.rlf_window_running() && serving_snr_db >= t.rlf_enter_snr_db) return false;
    fsm.rlf_window_elapsed += dt;
    if (fsm.rlf_window_elapsed < t.rlf_window) return false;

    if (fsm.state == FsmState::Preparing || fsm.state == FsmState::Executing) {
        ++fsm.counters.handover_failures;
        if (events) events->push_back({EventKind::HoFail, fsm.serving, fsm.target_bs, serving_snr_db});
    }
    ++fsm.counters.rlf_count;
    if (events) events->push_back({EventKind::Rlf, fsm.serving, kNoNode, serving_snr_db});
    fsm.state = FsmState::RlfRecovery;
    fsm.serving = kNoNode;
    fsm.target_bs = kNoNode;
    fsm.ttt_elapsed = fsm.phase_elapsed = fsm.rlf_window_elapsed = fsm.recovery_elapsed = Micros{0};
    return true;
}

struct HandoverOutcome {
    bool completed = false;
    bool anchor_changed = false;
};

/// Preparation then execution timers. `target_legal` false aborts the handover
/// (counted as a failure) and returns to Connected on the source.
inline HandoverOutcome advance_handover(HandoverFsm& fsm, Micros dt, double serving_snr_db, const Timers& t,
                                        const TopologyGraph* topo, bool target_legal = true,
                                        std::vector<Event>* events = nullptr) {
    HandoverOutcome out;
    if (fsm.state != FsmState::Preparing && fsm.state != FsmState::Executing) return out;
    const NodeId target = fsm.target_bs;
    if (!target_legal || target == kNoNode) {
        ++fsm.counters.handover_failures;
        if (events) events->push_back({EventKind::HoFail, fsm.serving, target, serving_snr_db});
        fsm.state = FsmState::Connected;
        fsm.target_bs = kNoNode;
        fsm.phase_elapsed = Micros{0};
        return out;
    }
    fsm.phase_elapsed += dt;
    if (fsm.state == FsmState::Preparing) {
        if (fsm.phase_elapsed >= t.prep(fsm.kind)) {
            fsm.state = FsmState::Executing;
            fsm.phase_elapsed = Micros{0};
            if (events) events->push_back({EventKind::HoExec, fsm.serving, target, serving_snr_db});
        }
        return out;
    }
    if (fsm.phase_elapsed >= t.exec(fsm.kind)) {
        out.completed = true;
        if (topo) {
            out.anchor_changed = topo->cu_owner.at(static_cast<std::size_t>(fsm.serving)) !=
                                 topo->cu_owner.at(static_cast<std::size_t>(target));
        }
        if (out.anchor_changed) ++fsm.counters.donor_crossings;
        ++fsm.counters.handover_successes;
        if (events) events->push_back({EventKind::HoSuccess, fsm.serving, target, serving_snr_db});
        fsm.serving = target;
        fsm.target_bs = kNoNode;
        fsm.state = FsmState::Connected;
        fsm.phase_elapsed = fsm.ttt_elapsed = fsm.rlf_window_elapsed = Micros{0};
    }
    return out;
}

/// Recovery countdown; once elapsed, attaches to `best` if there is one, otherwise keeps
/// searching every slot. Returns true on re-attachment.
inline bool advance_recovery(HandoverFsm& fsm, Micros dt, NodeId best, double best_snr_db, const Timers& t,
                             std::vector<Event>* events = nullptr) {
    if (fsm.state != FsmState::RlfRecovery) return false;
    if (fsm.recovery_elapsed < t.recovery_time) fsm.recovery_elapsed += dt;
    if (fsm.recovery_elapsed < t.recovery_time || best == kNoNode) return false;
    fsm.state = FsmState::Connected;
    fsm.serving = best;
    fsm.target_bs = kNoNode;
    fsm.ttt_elapsed = fsm.phase_elapsed = fsm.rlf_window_elapsed = fsm.recovery_elapsed = Micros{0};
    if (events) events->push_back({EventKind::Recovered, kNoNode, best, best_snr_db});
    return true;
}

/// Ideal per-slot measurements: SNR per BS id, -inf for cells that are not legal.
using SnrView = std::span<const double>;

inline double snr_of(SnrView snr, NodeId id) {
    if (id < 0 || static_cast<std::size_t>(id) >= snr.size()) return -std::numeric_limits<double>::infinity();
    return snr[static_cast<std::size_t>(id)];
}

/// Strongest legal cell, optionally excluding one; ties go to the lowest id.
inline NodeId strongest(SnrView snr, NodeId exclude = kNoNode) {
    NodeId best = kNoNode;
    for (std::size_t i = 0; i < snr.size(); ++i) {
        const auto id = static_cast<NodeId>(i);
        if (id == exclude || !std::isfinite(snr[i])) continue;
        if (best == kNoNode || snr[i] > snr[static_cast<std::size_t>(best)]) best = id;
    }
    return best;
}

/// One slot of the state machine, in this order: recovery, RLF check, then either A3
/// evaluation or handover progress. Outage is judged on the state at the end of the
/// slot: recovering, or the serving cell below the RLF enter threshold.
inline bool step(HandoverFsm& fsm, SnrView snr, Micros dt, const Timers& t, const TopologyGraph* topo, ArchMode mode,
                 int n_onboard, std::vector<Event>* events = nullptr) {
    if (fsm.state == FsmState::RlfRecovery) {
        const NodeId best = strongest(snr);
        advance_recovery(fsm, dt, best, snr_of(snr, best), t, events);
    } else {
        const double serving_snr = snr_of(snr, fsm.serving);
        if (!evaluate_rlf(fsm, serving_snr, dt, t, events)) {
            if (fsm.state == FsmState::Connected || fsm.state == FsmState::TttRunning) {
                const NodeId other = strongest(snr, fsm.serving);
                evaluate_a3(fsm, serving_snr, other, snr_of(snr, other), dt, t, topo, events);
            } else {
                const bool legal = std::isfinite(snr_of(snr, fsm.target_bs));
                const auto o = advance_handover(fsm, dt, serving_snr, t, topo, legal, events);
                if (o.completed) {
                    fsm.counters.onboard_handovers += onboard_handover_count(mode, o.anchor_changed, n_onboard);
                }
            }
        }
    }
    const bool outage = fsm.state == FsmState::RlfRecovery || snr_of(snr, fsm.serving) < t.rlf_enter_snr_db;
    if (outage) ++fsm.counters.outage_slots;
    return outage;
}

struct MobilityMetrics {
    double outage_rate_pct = 0.0;
    double hfr_pct = 0.0;
};

inline MobilityMetrics outage_and_hfr(const FsmCounters& c, std::int64_t total_slots) {
    if (total_slots <= 0) throw std::invalid_argument("total_slots must be > 0");
    MobilityMetrics m;
    m.outage_rate_pct = static_cast<double>(c.outage_slots) / static_cast<double>(total_slots) * 100.0;
    m.hfr_pct = c.handover_attempts == 0
                    ? 0.0
                    : static_cast<double>(c.handover_failures) / static_cast<double>(c.handover_attempts) * 100.0;
    return m;
}

}  // namespace iabsim::mobility
