#ifndef HILL_INTEGRATE_HPP
#define HILL_INTEGRATE_HPP

// Adaptive trajectory integration with dense-output event detection,
// regularized time near the collision singularity, fate classification, and
// the ejection / one-pass / threshold experiments.

#include <cstdint>
#include <functional>
#include <ostream>
#include <vector>

#include "hill/linear.hpp"
#include "hill/model.hpp"
#include "hill/report.hpp"

namespace hill {

struct IntegratorConfig {
    double rel_tol = 1e-10;
    double abs_tol = 1e-12;
    double h_max = 1.0;
    double t_max = 200.0;
    double r_collision = 1e-7;
    double r_escape = 0.0;  // 0 selects 50 q0
    double energy_drift_cap = 1e-6;  // relative, conditioning-aware near collision
    double sample_dt = 0.0;          // 0: record accepted steps only

    double escape_radius(const ModelParams& p) const {
        return r_escape > 0.0 ? r_escape : 50.0 * p.q0;
    }
    void validate(const ModelParams& p) const;
};

enum class EventKind { WZeroCrossing, BallExit, BallEntry, Collision, Escape, LocalMinOfDq };
const char* to_string(EventKind kind);

struct Event {
    EventKind kind;
    double time;
    SymplecticState state;
    double aux;  // W slope, d_Q value, ball radius, or I-dot depending on kind
};

enum class RunStatus { ReachedTMax, TerminatedByEvent, EnergyDriftExceeded, StepUnderflow };
const char* to_string(RunStatus status);

struct TrajectorySample {
    double t;
    SymplecticState state;
};

struct Trajectory {
    RunStatus status = RunStatus::ReachedTMax;
    double t_end = 0.0;
    SymplecticState final_state{};
    std::vector<TrajectorySample> samples;
    std::vector<Event> events;
    double max_energy_drift = 0.0;  // relative, where well-conditioned
    double min_radius = 0.0, max_radius = 0.0;
    double max_dq = 0.0;  // tracked when d_Q events are active
    long long steps_accepted = 0, steps_rejected = 0;

    bool has(EventKind kind) const;
    const Event* first(EventKind kind) const;
};

// Optional event tracking. d_Q-based events need basis + calibration.
struct EventRequest {
    bool w_crossings = false;
    double ball_radius = 0.0;  // > 0 enables BallExit/BallEntry on d_Q
    bool stop_at_ball_exit = false;
    bool local_min_dq = false;
    const SymplecticBasis* basis = nullptr;
    const Calibration* cal = nullptr;
};

// Integrates from s0 over [0, cfg.t_max] (or backward when backward=true).
// Near the singularity (r < 1e3 r_collision) time is reparameterized by
// dt = r^((alpha+2)/2) dtau so the approach is resolved at finite cost.
Trajectory integrate(const ModelParams& p, const SymplecticState& s0,
                     const IntegratorConfig& cfg, const EventRequest& ev = {},
                     bool backward = false);

enum class FateTag { Collision, GlobalBounded, GlobalEscape, Trapped, Undetermined };
const char* to_string(FateTag tag);

enum class PredictionId { None, CollisionBelowGround, GlobalBelowGround,
                          ThresholdCollapseOrGround, ThresholdGlobal };
const char* to_string(PredictionId id);

struct Fate {
    FateTag tag = FateTag::Undetermined;
    double t_terminal = 0.0;
    PredictionId predicted = PredictionId::None;
    bool matches_prediction = true;  // vacuously true without a prediction
    double e0 = 0.0, w0 = 0.0, k0 = 0.0;
    Trajectory trajectory;
};

// Evaluates E, W, K at s0, attaches the applicable prediction, integrates,
// and reports the observed fate. basis/cal may be null; trapping is then not
// distinguished from bounded motion.
Fate classify_fate(const ModelParams& p, const SymplecticBasis* basis,
                   const Calibration* cal, const SymplecticState& s0,
                   const IntegratorConfig& cfg);

// Single-orbit invariance audit: no W sign change along the trajectory, and
// K < 0 throughout for strong-potential inner-region runs.
Report invariance_audit(const ModelParams& p, const SymplecticState& s0,
                        const IntegratorConfig& cfg);

struct EjectionResult {
    Report report;
    double slope = 0.0;          // fitted growth rate of d_Q
    double c_star = 1.0;         // sign claims certified beyond c_star * d_Q(0)
    double t_star = 0.0;         // d_Q monotone beyond t_star * d_Q(0)
    double exit_time = 0.0;
    SymplecticState exit_state{};
};

// Seeds lambda_+(0) = sign * R (lambda_- = gamma = 0), integrates until
// d_Q = delta_x, fits the growth rate, and audits the exit signs of K and W.
EjectionResult ejection_experiment(const ModelParams& p, const SymplecticBasis& basis,
                                   const Calibration& cal, double r_seed, int sign,
                                   const IntegratorConfig& cfg, bool backward = false);

// Runs ejection for both signs and a ladder of seeds, storing measured
// C*, T* into the calibration.
Report measure_ejection_constants(const ModelParams& p, const SymplecticBasis& basis,
                                  Calibration& cal, const IntegratorConfig& cfg);

// Ensemble one-pass audit: members ejected with sign -1 must never re-enter
// the (R + R^2) ball and must end in collision; sign +1 outcomes are
// tallied as evidence only.
Report one_pass_experiment(const ModelParams& p, const SymplecticBasis& basis,
                           const Calibration& cal, double eps, double r_ball,
                           int ensemble, const IntegratorConfig& cfg, std::uint64_t seed);

// Energy-threshold ensemble: initial data projected onto E = E*; inner-region
// members must collide or approach the ground states, outer ones stay global.
Report threshold_experiment(const ModelParams& p, const SymplecticBasis& basis,
                            const Calibration& cal, int ensemble,
                            const IntegratorConfig& cfg, std::uint64_t seed);

// CSV writers. Columns: t,x,y,px,py,E,W,K,I,dq (17 significant digits).
void write_trajectory_csv(std::ostream& os, const ModelParams& p,
                          const SymplecticBasis* basis, const Calibration* cal,
                          const Trajectory& traj);
void write_events_csv(std::ostream& os, const std::vector<Event>& events);

}  // namespace hill

#endif
