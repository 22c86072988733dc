#include "hill/integrate.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "hill/rng.hpp"

namespace hill {

void IntegratorConfig::validate(const ModelParams& p) const {
    if (rel_tol <= 0 || abs_tol <= 0 || h_max <= 0 || t_max <= 0 ||
        r_collision <= 0 || energy_drift_cap <= 0 || sample_dt < 0)
        throw std::invalid_argument("integrator config values must be positive");
    if (!(r_collision < p.q0 && p.q0 < escape_radius(p)))
        throw std::invalid_argument("need r_collision < q0 < r_escape");
}

const char* to_string(EventKind kind) {
    switch (kind) {
        case EventKind::WZeroCrossing: return "w_zero";
        case EventKind::BallExit: return "ball_exit";
        case EventKind::BallEntry: return "ball_entry";
        case EventKind::Collision: return "collision";
        case EventKind::Escape: return "escape";
        case EventKind::LocalMinOfDq: return "dq_local_min";
    }
    return "?";
}

const char* to_string(RunStatus status) {
    switch (status) {
        case RunStatus::ReachedTMax: return "reached_t_max";
        case RunStatus::TerminatedByEvent: return "terminated_by_event";
        case RunStatus::EnergyDriftExceeded: return "energy_drift_exceeded";
        case RunStatus::StepUnderflow: return "step_underflow";
    }
    return "?";
}

const char* to_string(FateTag tag) {
    switch (tag) {
        case FateTag::Collision: return "collision";
        case FateTag::GlobalBounded: return "global-bounded";
        case FateTag::GlobalEscape: return "global-escape";
        case FateTag::Trapped: return "trapped";
        case FateTag::Undetermined: return "undetermined";
    }
    return "?";
}

const char* to_string(PredictionId id) {
    switch (id) {
        case PredictionId::None: return "none";
        case PredictionId::CollisionBelowGround: return "collision-below-ground";
        case PredictionId::GlobalBelowGround: return "global-below-ground";
        case PredictionId::ThresholdCollapseOrGround: return "threshold-collapse-or-ground";
        case PredictionId::ThresholdGlobal: return "threshold-global";
    }
    return "?";
}

bool Trajectory::has(EventKind kind) const { return first(kind) != nullptr; }

const Event* Trajectory::first(EventKind kind) const {
    for (const auto& e : events)
        if (e.kind == kind) return &e;
    return nullptr;
}

namespace {

using StateVec = std::array<double, 5>;  // (x, y, px, py, physical time)

inline SymplecticState state_of(const StateVec& z) { return {z[0], z[1], z[2], z[3]}; }

// Dormand-Prince 5(4) with the standard quartic continuous extension.
struct Dopri5 {
    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                            a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33,
                            a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                            a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                            b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                            e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
    static constexpr double d1 = -12715105075.0 / 11282082432.0;
    static constexpr double d3 = 87487479700.0 / 32700410799.0;
    static constexpr double d4 = -10690763975.0 / 1880347072.0;
    static constexpr double d5 = 701980252875.0 / 199316789632.0;
    static constexpr double d6 = -1453857185.0 / 822651844.0;
    static constexpr double d7 = 69997945.0 / 29380423.0;

    StateVec k1, k2, k3, k4, k5, k6, k7;
    std::array<StateVec, 5> cont;  // dense coefficients of the last accepted step

    // One trial step of size h from z with derivative k1 already evaluated.
    // Returns the scaled error norm; writes the candidate end state.
    template <typename Rhs>
    double step(const Rhs& rhs, const StateVec& z, double h, double atol, double rtol,
                StateVec& out) {
        StateVec w;
        for (int i = 0; i < 5; ++i) w[i] = z[i] + h * a21 * k1[i];
        rhs(w, k2);
        for (int i = 0; i < 5; ++i) w[i] = z[i] + h * (a31 * k1[i] + a32 * k2[i]);
        rhs(w, k3);
        for (int i = 0; i < 5; ++i)
            w[i] = z[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
        rhs(w, k4);
        for (int i = 0; i < 5; ++i)
            w[i] = z[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
        rhs(w, k5);
        for (int i = 0; i < 5; ++i)
            w[i] = z[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] +
                               a65 * k5[i]);
        rhs(w, k6);
        for (int i = 0; i < 5; ++i)
            out[i] = z[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] +
                                 b6 * k6[i]);
        rhs(out, k7);

        double err = 0.0;
        for (int i = 0; i < 5; ++i) {
            const double ei = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] +
                                   e6 * k6[i] + e7 * k7[i]);
            const double sc = atol + rtol * std::max(std::abs(z[i]), std::abs(out[i]));
            err += (ei / sc) * (ei / sc);
        }
        return std::sqrt(err / 5.0);
    }

    void prepare_dense(const StateVec& z, const StateVec& zn, double h) {
        for (int i = 0; i < 5; ++i) {
            const double ydiff = zn[i] - z[i];
            const double bspl = h * k1[i] - ydiff;
            cont[0][i] = z[i];
            cont[1][i] = ydiff;
            cont[2][i] = bspl;
            cont[3][i] = ydiff - h * k7[i] - bspl;
            cont[4][i] = h * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] +
                              d6 * k6[i] + d7 * k7[i]);
        }
    }

    // Interpolant on the last accepted step, theta in [0, 1].
    StateVec eval(double theta) const {
        StateVec u;
        const double t1 = 1.0 - theta;
        for (int i = 0; i < 5; ++i)
            u[i] = cont[0][i] +
                   theta * (cont[1][i] +
                            t1 * (cont[2][i] + theta * (cont[3][i] + t1 * cont[4][i])));
        return u;
    }
};

struct EventFn {
    EventKind kind;
    int direction;  // +1 up-crossings, -1 down-crossings, 0 both
    bool terminal;
    std::function<double(const SymplecticState&)> value;
};

struct Driver {
    const ModelParams& p;
    const IntegratorConfig& cfg;
    const EventRequest& ev;
    double dir;  // +1 forward, -1 backward in physical time
    bool sundman = false;
    double sundman_on, sundman_off;

    Driver(const ModelParams& p_, const IntegratorConfig& cfg_, const EventRequest& ev_,
           bool backward)
        : p(p_), cfg(cfg_), ev(ev_), dir(backward ? -1.0 : 1.0) {
        sundman_on = 1e3 * cfg.r_collision;
        sundman_off = 2.5e3 * cfg.r_collision;
    }

    double time_scale(const SymplecticState& s) const {
        if (!sundman) return 1.0;
        return std::pow(std::hypot(s.x, s.y), 0.5 * (p.alpha + 2.0));
    }

    void rhs(const StateVec& z, StateVec& dz) const {
        const SymplecticState s = state_of(z);
        const SymplecticDeriv f = vector_field(p, s);
        const double g = dir * time_scale(s);
        dz = {g * f.dx, g * f.dy, g * f.dpx, g * f.dpy, g};
    }
};

double initial_step(const Driver& drv, const StateVec& z0, double atol, double rtol,
                    double h_max) {
    StateVec f0, z1;
    drv.rhs(z0, f0);
    double d0 = 0, d1 = 0;
    for (int i = 0; i < 5; ++i) {
        const double sc = atol + rtol * std::abs(z0[i]);
        d0 += (z0[i] / sc) * (z0[i] / sc);
        d1 += (f0[i] / sc) * (f0[i] / sc);
    }
    d0 = std::sqrt(d0 / 5);
    d1 = std::sqrt(d1 / 5);
    double h = (d0 < 1e-10 || d1 < 1e-10) ? 1e-6 : 0.01 * d0 / d1;
    h = std::min(h, h_max);
    for (int i = 0; i < 5; ++i) z1[i] = z0[i] + h * f0[i];
    StateVec f2;
    drv.rhs(z1, f2);
    double d2 = 0;
    for (int i = 0; i < 5; ++i) {
        const double sc = atol + rtol * std::abs(z0[i]);
        d2 += ((f2[i] - f0[i]) / sc) * ((f2[i] - f0[i]) / sc);
    }
    d2 = std::sqrt(d2 / 5) / h;
    const double dm = std::max(d1, d2);
    const double h1 = (dm <= 1e-15) ? std::max(1e-6, h * 1e-3)
                                    : std::pow(0.01 / dm, 0.2);
    return std::min({100.0 * h, h1, h_max});
}

}  // namespace

Trajectory integrate(const ModelParams& p, const SymplecticState& s0,
                     const IntegratorConfig& cfg, const EventRequest& ev,
                     bool backward) {
    cfg.validate(p);
    if (std::hypot(s0.x, s0.y) == 0.0)
        throw std::domain_error("initial state at the collision singularity");
    if ((ev.ball_radius > 0.0 || ev.local_min_dq) && !(ev.basis && ev.cal))
        throw std::invalid_argument("d_Q events need basis and calibration");

    Driver drv(p, cfg, ev, backward);
    const double r_escape = cfg.escape_radius(p);

    std::vector<EventFn> fns;
    fns.push_back({EventKind::Collision, -1, true, [&](const SymplecticState& s) {
                       return std::hypot(s.x, s.y) - cfg.r_collision;
                   }});
    fns.push_back({EventKind::Escape, +1, true, [&](const SymplecticState& s) {
                       return std::hypot(s.x, s.y) - r_escape;
                   }});
    if (ev.w_crossings)
        fns.push_back({EventKind::WZeroCrossing, 0, false, [&](const SymplecticState& s) {
                           return scaling_w(p, s.x, s.y);
                       }});
    auto dq_of = [&](const SymplecticState& s) {
        return distance_dq(*ev.basis, p, *ev.cal, s).d_q;
    };
    if (ev.ball_radius > 0.0) {
        fns.push_back({EventKind::BallExit, +1, ev.stop_at_ball_exit,
                       [&, r = ev.ball_radius](const SymplecticState& s) {
                           return dq_of(s) - r;
                       }});
        fns.push_back({EventKind::BallEntry, -1, false,
                       [&, r = ev.ball_radius](const SymplecticState& s) {
                           return dq_of(s) - r;
                       }});
    }

    Trajectory traj;
    const double e0 = energy(p, s0);
    traj.min_radius = traj.max_radius = std::hypot(s0.x, s0.y);
    if (ev.basis && ev.cal) traj.max_dq = dq_of(s0);

    StateVec z{s0.x, s0.y, s0.px, s0.py, 0.0};
    const double t_end = drv.dir * cfg.t_max;

    traj.samples.push_back({0.0, s0});
    double next_sample = cfg.sample_dt > 0 ? cfg.sample_dt : 0.0;

    Dopri5 stepper;
    drv.rhs(z, stepper.k1);
    double h = initial_step(drv, z, cfg.abs_tol, cfg.rel_tol, cfg.h_max);

    std::vector<double> gv(fns.size());
    for (size_t i = 0; i < fns.size(); ++i) gv[i] = fns[i].value(state_of(z));

    // Near the singularity E is a difference of huge terms and its absolute
    // error grows like rel_tol * conditioning; drift is monitored and policed
    // only where the evaluation is well-conditioned, with an allowance for
    // damage already picked up in deep-well passes.
    double cond_max = 0.0;
    auto record_drift = [&](const SymplecticState& s) {
        const double u = s.px + s.y, v = s.py - s.x;
        const double kin = 0.5 * (u * u + v * v);
        const double pot = effective_potential(p, s.x, s.y);
        const double cond = std::abs(kin) + std::abs(pot);
        cond_max = std::max(cond_max, cond);
        const double e = kin + pot;
        const double scale = std::max(std::abs(e0), 1e-30);
        if (cond > 20.0 * scale) return true;
        const double rel = std::abs(e - e0) / scale;
        traj.max_energy_drift = std::max(traj.max_energy_drift, rel);
        return std::abs(e - e0) <=
               cfg.energy_drift_cap * scale + 1e3 * cfg.rel_tol * cond_max;
    };

    double prev_dq_slope = 0.0;
    bool have_prev_slope = false;

    auto finish = [&](RunStatus st, double t, const SymplecticState& s) {
        traj.status = st;
        traj.t_end = t;
        traj.final_state = s;
        if (traj.samples.empty() || traj.samples.back().t != t)
            traj.samples.push_back({t, s});
    };

    long long guard = 0;
    const long long guard_max = 50'000'000;
    while (true) {
        if (++guard > guard_max) {
            finish(RunStatus::StepUnderflow, z[4], state_of(z));
            return traj;
        }
        if (std::abs(h) < 1e-14) {
            finish(RunStatus::StepUnderflow, z[4], state_of(z));
            return traj;
        }

        StateVec zn;
        const double err = stepper.step([&](const StateVec& y, StateVec& dy) { drv.rhs(y, dy); },
                                        z, h, cfg.abs_tol, cfg.rel_tol, zn);
        if (err > 1.0) {
            ++traj.steps_rejected;
            h *= std::max(0.2, 0.9 * std::pow(err, -0.2));
            drv.rhs(z, stepper.k1);  // k-stages clobbered
            continue;
        }
        ++traj.steps_accepted;
        stepper.prepare_dense(z, zn, h);

        // truncate at the requested horizon
        double theta_end = 1.0;
        bool finishing = false;
        if (drv.dir * zn[4] >= drv.dir * t_end) {
            double lo = 0.0, hi = 1.0;
            for (int it = 0; it < 80; ++it) {
                const double mid = 0.5 * (lo + hi);
                (drv.dir * stepper.eval(mid)[4] < drv.dir * t_end ? lo : hi) = mid;
            }
            theta_end = hi;
            zn = stepper.eval(theta_end);
            zn[4] = t_end;
            finishing = true;
        }

        // event crossings inside (0, theta_end]
        struct Hit {
            double theta;
            size_t fn;
        };
        std::vector<Hit> hits;
        std::vector<double> gn(fns.size());
        for (size_t i = 0; i < fns.size(); ++i) {
            gn[i] = fns[i].value(state_of(zn));
            const bool up = gv[i] < 0.0 && gn[i] >= 0.0;
            const bool down = gv[i] > 0.0 && gn[i] <= 0.0;
            const int want = fns[i].direction;
            if ((want >= 0 && up) || (want <= 0 && down)) {
                double lo = 0.0, hi = theta_end;
                double flo = gv[i];
                for (int it = 0; it < 80 && (hi - lo) > 1e-15; ++it) {
                    const double mid = 0.5 * (lo + hi);
                    const double fm = fns[i].value(state_of(stepper.eval(mid)));
                    if ((fm < 0.0) == (flo < 0.0)) {
                        lo = mid;
                        flo = fm;
                    } else {
                        hi = mid;
                    }
                }
                hits.push_back({hi, i});
            }
        }
        std::sort(hits.begin(), hits.end(), [&](const Hit& a, const Hit& b) {
            if (a.theta != b.theta) return a.theta < b.theta;
            return fns[a.fn].kind < fns[b.fn].kind;  // enum order = priority
        });

        bool terminated = false;
        for (const Hit& hit : hits) {
            const StateVec ze = stepper.eval(hit.theta);
            const SymplecticState se = state_of(ze);
            const EventFn& fn = fns[hit.fn];
            double aux = 0.0;
            switch (fn.kind) {
                case EventKind::Collision: {
                    const Inertia in = moment_of_inertia(se);
                    if (in.i_dot >= 0.0) continue;  // grazing pass, not a collision
                    const double spd = std::hypot(se.px + se.y, se.py - se.x);
                    const double vloc = effective_potential(p, se.x, se.y);
                    if (spd < 0.9 * std::sqrt(std::max(2.0 * (e0 - vloc), 0.0))) continue;
                    aux = in.i_dot;
                    break;
                }
                case EventKind::Escape:
                    aux = moment_of_inertia(se).i_dot;
                    break;
                case EventKind::WZeroCrossing: {
                    double wx, wy;
                    scaling_w_gradient(p, se.x, se.y, wx, wy);
                    aux = wx * (se.px + se.y) + wy * (se.py - se.x);  // dW/dt
                    break;
                }
                case EventKind::BallExit:
                case EventKind::BallEntry:
                    aux = ev.ball_radius;
                    break;
                default:
                    break;
            }
            traj.events.push_back({fn.kind, ze[4], se, aux});
            if (fn.terminal) {
                finish(RunStatus::TerminatedByEvent, ze[4], se);
                terminated = true;
                break;
            }
        }
        if (terminated) return traj;

        // local minima of d_Q inside the step
        if (ev.local_min_dq) {
            const double dq0 = dq_of(state_of(stepper.eval(0.0)));
            const double dq1 = dq_of(state_of(stepper.eval(theta_end)));
            const double eps_th = 1e-3 * theta_end;
            const double s_in = dq_of(state_of(stepper.eval(eps_th))) - dq0;
            const double s_out = dq1 - dq_of(state_of(stepper.eval(theta_end - eps_th)));
            if (have_prev_slope && prev_dq_slope < 0.0 && s_in > 0.0) {
                traj.events.push_back({EventKind::LocalMinOfDq, z[4], state_of(z), dq0});
            } else if (s_in < 0.0 && s_out > 0.0) {
                double a = 0.0, b = theta_end;  // golden-section on the interpolant
                const double gr = 0.6180339887498949;
                double c1 = b - gr * (b - a), c2 = a + gr * (b - a);
                double f1 = dq_of(state_of(stepper.eval(c1)));
                double f2 = dq_of(state_of(stepper.eval(c2)));
                for (int it = 0; it < 60; ++it) {
                    if (f1 < f2) {
                        b = c2; c2 = c1; f2 = f1;
                        c1 = b - gr * (b - a);
                        f1 = dq_of(state_of(stepper.eval(c1)));
                    } else {
                        a = c1; c1 = c2; f1 = f2;
                        c2 = a + gr * (b - a);
                        f2 = dq_of(state_of(stepper.eval(c2)));
                    }
                }
                const StateVec zm = stepper.eval(0.5 * (a + b));
                traj.events.push_back(
                    {EventKind::LocalMinOfDq, zm[4], state_of(zm), std::min(f1, f2)});
            }
            prev_dq_slope = s_out;
            have_prev_slope = true;
        }

        // uniform-time samples via the interpolant
        if (cfg.sample_dt > 0) {
            while (drv.dir * zn[4] >= next_sample - 1e-14) {
                const double target = drv.dir * next_sample;
                double lo = 0.0, hi = theta_end;
                for (int it = 0; it < 80 && (hi - lo) > 1e-15; ++it) {
                    const double mid = 0.5 * (lo + hi);
                    (drv.dir * stepper.eval(mid)[4] < drv.dir * target ? lo : hi) = mid;
                }
                const StateVec zs = stepper.eval(hi);
                traj.samples.push_back({target, state_of(zs)});
                next_sample += cfg.sample_dt;
                if (next_sample > cfg.t_max + 0.5 * cfg.sample_dt) break;
            }
        } else {
            traj.samples.push_back({zn[4], state_of(zn)});
        }

        const SymplecticState sn = state_of(zn);
        const double rn = std::hypot(sn.x, sn.y);
        traj.min_radius = std::min(traj.min_radius, rn);
        traj.max_radius = std::max(traj.max_radius, rn);
        if (ev.basis && ev.cal) traj.max_dq = std::max(traj.max_dq, dq_of(sn));

        if (!record_drift(sn)) {
            finish(RunStatus::EnergyDriftExceeded, zn[4], sn);
            return traj;
        }
        if (finishing) {
            finish(RunStatus::ReachedTMax, zn[4], sn);
            return traj;
        }

        // step advance + controller
        z = zn;
        gv = gn;
        const double fac = std::min(5.0, std::max(0.2, 0.9 * std::pow(std::max(err, 1e-10), -0.2)));
        h = std::min(h * fac, cfg.h_max);

        // switch the time variable near / away from the singularity
        if (!drv.sundman && rn < drv.sundman_on) {
            h /= std::pow(rn, 0.5 * (p.alpha + 2.0));
            drv.sundman = true;
        } else if (drv.sundman && rn > drv.sundman_off) {
            h *= std::pow(rn, 0.5 * (p.alpha + 2.0));
            drv.sundman = false;
        }
        drv.rhs(z, stepper.k1);
    }
}

Fate classify_fate(const ModelParams& p, const SymplecticBasis* basis,
                   const Calibration* cal, const SymplecticState& s0,
                   const IntegratorConfig& cfg) {
    Fate fate;
    fate.e0 = energy(p, s0);
    fate.w0 = scaling_w(p, s0.x, s0.y);
    fate.k0 = virial_k(p, s0);

    const double tol_e = 1e-10 * std::max(1.0, std::abs(p.e_star));
    if (fate.e0 < p.e_star - tol_e) {
        if (fate.w0 > 0.0)
            fate.predicted = PredictionId::GlobalBelowGround;
        else if (p.strong)
            fate.predicted = PredictionId::CollisionBelowGround;
    } else if (std::abs(fate.e0 - p.e_star) <= tol_e && p.strong) {
        fate.predicted = (fate.w0 > 0.0) ? PredictionId::ThresholdGlobal
                                         : PredictionId::ThresholdCollapseOrGround;
    }

    EventRequest ev;
    ev.w_crossings = true;
    double trap_radius = 0.0;
    if (basis && cal && cal->delta_e > 0.0) {
        ev.basis = basis;
        ev.cal = cal;
        const double r = cal->delta_e / 10.0;
        trap_radius = r + r * r;
        ev.ball_radius = trap_radius;
    }
    fate.trajectory = integrate(p, s0, cfg, ev);
    const Trajectory& tr = fate.trajectory;
    fate.t_terminal = tr.t_end;

    if (const Event* c = tr.first(EventKind::Collision)) {
        fate.tag = FateTag::Collision;
        fate.t_terminal = c->time;
    } else if (const Event* e = tr.first(EventKind::Escape)) {
        fate.tag = FateTag::GlobalEscape;
        fate.t_terminal = e->time;
    } else if (tr.status == RunStatus::ReachedTMax) {
        if (trap_radius > 0.0 && tr.max_dq < trap_radius)
            fate.tag = FateTag::Trapped;
        else if (tr.max_radius < cfg.escape_radius(p))
            fate.tag = FateTag::GlobalBounded;
        else
            fate.tag = FateTag::Undetermined;
    } else {
        fate.tag = FateTag::Undetermined;
    }

    switch (fate.predicted) {
        case PredictionId::CollisionBelowGround:
            fate.matches_prediction = fate.tag == FateTag::Collision;
            break;
        case PredictionId::GlobalBelowGround:
        case PredictionId::ThresholdGlobal:
            fate.matches_prediction =
                fate.tag == FateTag::GlobalBounded || fate.tag == FateTag::GlobalEscape;
            break;
        case PredictionId::ThresholdCollapseOrGround:
            fate.matches_prediction =
                fate.tag == FateTag::Collision || fate.tag == FateTag::Trapped;
            break;
        case PredictionId::None:
            fate.matches_prediction = true;
            break;
    }
    return fate;
}

Report invariance_audit(const ModelParams& p, const SymplecticState& s0,
                        const IntegratorConfig& cfg) {
    Report rep;
    const double e0 = energy(p, s0);
    const double w0 = scaling_w(p, s0.x, s0.y);
    rep.set("e0", e0);
    rep.set("w0", w0);
    rep.set("k0", virial_k(p, s0));

    IntegratorConfig c = cfg;
    if (c.sample_dt == 0.0) c.sample_dt = 0.05;
    EventRequest ev;
    ev.w_crossings = true;
    const Trajectory tr = integrate(p, s0, c, ev);

    int w_crossings = 0;
    for (const auto& e : tr.events)
        if (e.kind == EventKind::WZeroCrossing) ++w_crossings;
    rep.set("w_crossings", w_crossings);
    rep.set("status", std::string(to_string(tr.status)));
    rep.set("t_end", tr.t_end);
    rep.check("w_sign_invariant", w_crossings == 0);

    if (p.strong && e0 < p.e_star && w0 <= 0.0) {
        double max_k = -std::numeric_limits<double>::infinity();
        for (const auto& s : tr.samples) max_k = std::max(max_k, virial_k(p, s.state));
        rep.set("max_k_along_orbit", max_k);
        rep.check("k_negative_throughout", max_k < 0.0);
        rep.check("collides", tr.has(EventKind::Collision));
    }
    return rep;
}

namespace {

double fit_log_slope(const std::vector<double>& t, const std::vector<double>& d) {
    // least-squares slope of log d against t
    const size_t n = t.size();
    double st = 0, sd = 0, stt = 0, std_ = 0;
    for (size_t i = 0; i < n; ++i) {
        const double ld = std::log(d[i]);
        st += t[i];
        sd += ld;
        stt += t[i] * t[i];
        std_ += t[i] * ld;
    }
    const double denom = n * stt - st * st;
    return (n * std_ - st * sd) / denom;
}

}  // namespace

EjectionResult ejection_experiment(const ModelParams& p, const SymplecticBasis& basis,
                                   const Calibration& cal, double r_seed, int sign,
                                   const IntegratorConfig& cfg, bool backward) {
    if (cal.delta_x <= 0.0) throw std::invalid_argument("calibration missing delta_x");
    if (!(r_seed > 0.0 && r_seed <= cal.delta_x))
        throw std::invalid_argument("seed must satisfy 0 < R <= delta_x");

    EjectionResult res;
    Report& rep = res.report;
    rep.set("suite", std::string("ejection"));
    rep.set("alpha", p.alpha);
    rep.set("r_seed", r_seed);
    rep.set("sign", sign);
    rep.set("backward", backward);

    const Vec4 x0 = static_cast<double>(sign) * r_seed * basis.xi_plus;
    const SymplecticState psi0 = to_state(to_vec(ground_state_tilde(p, +1)) + x0);

    IntegratorConfig c = cfg;
    c.t_max = 40.0;
    c.sample_dt = std::min(0.002, 0.2 / basis.k);
    EventRequest ev;
    ev.basis = &basis;
    ev.cal = &cal;
    ev.ball_radius = cal.delta_x;
    ev.stop_at_ball_exit = true;

    const Trajectory tr = integrate(p, psi0, c, ev, backward);
    const Event* exit = tr.first(EventKind::BallExit);
    if (!rep.check("reached_delta_x", exit != nullptr)) return res;
    res.exit_time = exit->time;
    res.exit_state = exit->state;
    rep.set("exit_time", exit->time);

    std::vector<double> ts, ds;
    ts.reserve(tr.samples.size());
    for (const auto& s : tr.samples) {
        const double at = std::abs(s.t);
        if (at > std::abs(exit->time)) break;
        ts.push_back(at);
        ds.push_back(distance_dq(basis, p, cal, s.state).d_q);
    }
    const double d0 = ds.front();
    rep.set("dq_initial", d0);

    // growth window: clear of the seed scale and of the exit boundary; for
    // backward runs the stable component grows only after an initial dip
    size_t start = 0;
    if (backward) {
        start = static_cast<size_t>(std::min_element(ds.begin(), ds.end()) - ds.begin());
    }
    std::vector<double> ft, fd;
    const double floor_d = backward ? std::max(4.0 * ds[start], cal.delta_x * 1e-3)
                                    : 4.0 * d0;
    for (size_t i = start; i < ds.size(); ++i) {
        if (ds[i] >= floor_d && ds[i] <= cal.delta_x / 1.3) {
            ft.push_back(ts[i]);
            fd.push_back(ds[i]);
        }
    }
    if (!rep.check("growth_window_populated", ft.size() >= 8)) return res;
    res.slope = fit_log_slope(ft, fd);
    rep.set("growth_rate", res.slope);
    rep.set("growth_rate_over_k", res.slope / basis.k);
    rep.check("growth_rate_within_5pct", std::abs(res.slope / basis.k - 1.0) <= 0.05);

    // transverse components stay quadratically small in the seed
    double worst_ratio = 0.0;
    const double denom = r_seed + std::pow(r_seed, 1.5);
    for (const auto& s : tr.samples) {
        if (std::abs(s.t) > std::abs(exit->time)) break;
        const Decomposition d = decompose_sigma(basis, p, s.state, +1);
        const double lm = backward ? std::abs(d.lambda_plus) : std::abs(d.lambda_minus);
        worst_ratio = std::max(worst_ratio, (lm + d.gamma.norm()) / denom);
    }
    rep.set("transverse_ratio", worst_ratio);
    rep.check("transverse_bounded", worst_ratio <= 10.0);

    // sign claims: measure the largest growth ratio at which K or W still has
    // the wrong sign, and audit the signs at exit
    double c_star = 1.0;
    double t_mono = 0.0;
    for (size_t i = 0; i < ds.size(); ++i) {
        const SymplecticState& s = tr.samples[i].state;
        const double kv = virial_k(p, s);
        const double wv = scaling_w(p, s.x, s.y);
        if (sign * kv <= 0.0 || sign * wv <= 0.0)
            c_star = std::max(c_star, ds[i] / d0);
        if (i > 0 && ds[i] < ds[i - 1]) t_mono = ts[i];
    }
    res.c_star = c_star;
    res.t_star = t_mono / d0;
    rep.set("c_star", res.c_star);
    rep.set("t_star", res.t_star);

    const double k_exit = virial_k(p, exit->state);
    const double w_exit = scaling_w(p, exit->state.x, exit->state.y);
    rep.set("k_exit", k_exit);
    rep.set("w_exit", w_exit);
    rep.check("k_sign_at_exit", sign * k_exit > 0.0);
    rep.check("w_sign_at_exit", sign * w_exit > 0.0);
    return res;
}

Report measure_ejection_constants(const ModelParams& p, const SymplecticBasis& basis,
                                  Calibration& cal, const IntegratorConfig& cfg) {
    Report rep;
    rep.set("suite", std::string("ejection-constants"));
    double c_star = 1.0, t_star = 0.0;
    int idx = 0;
    for (double r : {1e-3, 1e-4}) {
        for (int sign : {+1, -1}) {
            const EjectionResult res = ejection_experiment(p, basis, cal, r, sign, cfg);
            c_star = std::max(c_star, res.c_star);
            t_star = std::max(t_star, res.t_star);
            rep.set("run" + std::to_string(idx) + ".ok", res.report.ok());
            if (!res.report.ok()) rep.check("run" + std::to_string(idx), false);
            ++idx;
        }
    }
    cal.c_star = c_star;
    cal.t_star = t_star;
    rep.set("c_star", c_star);
    rep.set("t_star", t_star);
    rep.set("delta_s", cal.delta_s());
    return rep;
}

Report one_pass_experiment(const ModelParams& p, const SymplecticBasis& basis,
                           const Calibration& cal, double eps, double r_ball,
                           int ensemble, const IntegratorConfig& cfg, std::uint64_t seed) {
    Report rep;
    rep.set("suite", std::string("onepass"));
    rep.set("alpha", p.alpha);
    rep.set("eps", eps);
    rep.set("r_ball", r_ball);
    rep.set("ensemble", ensemble);
    rep.set("seed", static_cast<long long>(seed));
    if (!(2.0 * eps < r_ball && r_ball + r_ball * r_ball < cal.delta_x))
        throw std::invalid_argument("need 2 eps < R and R + R^2 < delta_x");

    const double ball = r_ball + r_ball * r_ball;
    const Vec4 q = to_vec(ground_state_tilde(p, +1));
    Rng rng(seed, 21);

    int n_minus = 0, n_minus_return = 0, n_minus_collide = 0;
    int n_plus = 0, n_plus_return = 0, n_plus_escape = 0, n_plus_collide = 0;
    int n_undetermined = 0, n_never_exit = 0;

    for (int member = 0; member < ensemble; ++member) {
        // seed inside the R-ball, dominated by the unstable mode, filtered to
        // the energy window
        SymplecticState psi0;
        bool found = false;
        for (int tries = 0; tries < 400 && !found; ++tries) {
            const double u = rng.uniform(0.3, 0.8);
            const double rho = u * r_ball / std::sqrt(0.5 * basis.k);
            const int sgn = (member % 2 == 0) ? +1 : -1;
            const double lm = 0.05 * rho * rng.uniform(-1.0, 1.0);
            const double ga = 0.05 * rho * rng.uniform(-1.0, 1.0);
            const double gb = 0.05 * rho * rng.uniform(-1.0, 1.0);
            const Vec4 x = sgn * rho * basis.xi_plus + lm * basis.xi_minus +
                           ga * basis.eta1 + gb * basis.eta2;
            const SymplecticState cand = to_state(q + x);
            if (energy(p, cand) >= p.e_star + eps * eps) continue;
            if (distance_dq(basis, p, cal, cand).d_q >= r_ball) continue;
            psi0 = cand;
            found = true;
        }
        if (!found) {
            ++n_undetermined;
            continue;
        }

        EventRequest ev;
        ev.basis = &basis;
        ev.cal = &cal;
        ev.ball_radius = ball;
        const Trajectory tr = integrate(p, psi0, cfg, ev);

        const Event* exit = tr.first(EventKind::BallExit);
        if (!exit) {
            ++n_never_exit;
            continue;
        }
        const Decomposition d = decompose(basis, p, exit->state);
        const int s_exit = d.lambda1 >= 0.0 ? +1 : -1;

        bool returned = false;
        for (const auto& e : tr.events)
            if (e.kind == EventKind::BallEntry && e.time > exit->time) returned = true;
        const bool collided = tr.has(EventKind::Collision);
        const bool escaped = tr.has(EventKind::Escape);

        if (s_exit < 0) {
            ++n_minus;
            if (returned) ++n_minus_return;
            if (collided) ++n_minus_collide;
        } else {
            ++n_plus;
            if (returned) ++n_plus_return;
            if (escaped) ++n_plus_escape;
            if (collided) ++n_plus_collide;
        }
    }

    rep.set("minus.count", n_minus);
    rep.set("minus.returns", n_minus_return);
    rep.set("minus.collisions", n_minus_collide);
    rep.set("plus.count", n_plus);
    rep.set("plus.returns", n_plus_return);
    rep.set("plus.escapes", n_plus_escape);
    rep.set("plus.collisions", n_plus_collide);
    rep.set("undetermined", n_undetermined);
    rep.set("never_exited", n_never_exit);

    rep.check("ensemble_exits", n_never_exit == 0 && n_undetermined == 0);
    rep.check("minus_populated", n_minus > 0);
    rep.check("minus_no_return", n_minus_return == 0);
    rep.check("minus_all_collide", n_minus_collide == n_minus);
    // the positive side is recorded as evidence only (conjectured no-return)
    rep.set("plus.no_return_rate",
            n_plus > 0 ? 1.0 - static_cast<double>(n_plus_return) / n_plus : 0.0);

    // Trapped control: the equilibrium stays inside the ball for as long as
    // rounding allows. The stored equilibrium is off the true one by ~1e-15,
    // which the unstable rate amplifies as e^(k t); certify up to that horizon.
    EventRequest ev;
    ev.basis = &basis;
    ev.cal = &cal;
    ev.ball_radius = ball;
    IntegratorConfig c = cfg;
    const double lyapunov_horizon = 0.8 * std::log(ball / 1e-14) / basis.k;
    c.t_max = std::min(cfg.t_max, lyapunov_horizon);
    const Trajectory ctrl = integrate(p, ground_state_tilde(p, +1), c, ev);
    rep.set("trapped_control_horizon", c.t_max);
    rep.check("trapped_control", !ctrl.has(EventKind::BallExit) &&
                                     ctrl.status == RunStatus::ReachedTMax);
    return rep;
}

Report threshold_experiment(const ModelParams& p, const SymplecticBasis& basis,
                            const Calibration& cal, int ensemble,
                            const IntegratorConfig& cfg, std::uint64_t seed) {
    Report rep;
    rep.set("suite", std::string("threshold"));
    rep.set("alpha", p.alpha);
    rep.set("ensemble", ensemble);
    rep.set("seed", static_cast<long long>(seed));

    Rng rng(seed, 31);
    const double tol_e = 1e-12 * std::abs(p.e_star);

    // project a position onto the E = E* level by solving the speed
    auto project = [&](double x, double y, double dir_angle) {
        const double v = effective_potential(p, x, y);
        const double s = std::sqrt(2.0 * (p.e_star - v));
        const CartesianState c{x, y, s * std::cos(dir_angle), s * std::sin(dir_angle)};
        return to_symplectic(c);
    };

    int inner_collide = 0, inner_ground = 0, inner_other = 0;
    const int n_inner = ensemble;
    for (int i = 0; i < n_inner; ++i) {
        double x, y;
        for (;;) {
            x = rng.uniform(-p.q0, p.q0);
            y = rng.uniform(-p.q0, p.q0);
            const double r = std::hypot(x, y);
            if (r < 0.05 || r > 0.95 * p.q0) continue;
            if (scaling_w(p, x, y) >= 0.0) continue;
            if (effective_potential(p, x, y) > p.e_star - 0.1) continue;
            break;
        }
        const SymplecticState s0 = project(x, y, rng.uniform(0.0, 2.0 * M_PI));
        if (std::abs(energy(p, s0) - p.e_star) > tol_e) {
            ++inner_other;
            continue;
        }
        IntegratorConfig c = cfg;
        c.sample_dt = 0.05;
        const Trajectory tr = integrate(p, s0, c, {});
        if (tr.has(EventKind::Collision)) {
            ++inner_collide;
        } else if (tr.status == RunStatus::ReachedTMax) {
            double min_dq_tail = std::numeric_limits<double>::infinity();
            const size_t tail = tr.samples.size() - tr.samples.size() / 5;
            for (size_t j = tail; j < tr.samples.size(); ++j)
                min_dq_tail = std::min(
                    min_dq_tail, distance_dq(basis, p, cal, tr.samples[j].state).d_q);
            if (min_dq_tail < 1e-4)
                ++inner_ground;
            else
                ++inner_other;
        } else {
            ++inner_other;
        }
    }
    rep.set("inner.count", n_inner);
    rep.set("inner.collisions", inner_collide);
    rep.set("inner.ground_approach", inner_ground);
    rep.set("inner.other", inner_other);
    rep.check("inner_no_third_behavior", inner_other == 0);

    // near-stable-manifold seed: run the contracted direction backward out of
    // the neighborhood, project onto the level, then flow forward
    {
        const double rho = 1e-6;
        const Vec4 x0 = -rho * basis.xi_minus;
        const SymplecticState psi_b = to_state(to_vec(ground_state_tilde(p, +1)) + x0);
        IntegratorConfig cb = cfg;
        cb.t_max = 40.0;
        EventRequest evb;
        evb.basis = &basis;
        evb.cal = &cal;
        evb.ball_radius = cal.delta_x;
        evb.stop_at_ball_exit = true;
        const Trajectory back = integrate(p, psi_b, cb, evb, true);
        const Event* far = back.first(EventKind::BallExit);
        bool approached = false;
        double min_dq = std::numeric_limits<double>::infinity();
        if (far) {
            const CartesianState c = to_cartesian(far->state);
            const double v = effective_potential(p, c.x, c.y);
            const double spd = std::hypot(c.vx, c.vy);
            const double target = std::sqrt(2.0 * (p.e_star - v));
            const CartesianState proj{c.x, c.y, c.vx * target / spd, c.vy * target / spd};
            IntegratorConfig cf = cfg;
            cf.t_max = 2.5 * std::abs(far->time);
            cf.sample_dt = 0.01;
            const Trajectory fwd = integrate(p, to_symplectic(proj), cf, {});
            for (const auto& s : fwd.samples)
                min_dq = std::min(min_dq, distance_dq(basis, p, cal, s.state).d_q);
            approached = min_dq < 1e-4;
        }
        rep.set("stable_manifold.min_dq", min_dq);
        rep.check("stable_manifold_approach", approached);
    }

    // outer region at the threshold energy: global, radius bounded below
    int outer_collide = 0;
    double outer_min_r = std::numeric_limits<double>::infinity();
    const int n_outer = std::max(ensemble / 4, 5);
    for (int i = 0; i < n_outer; ++i) {
        double x, y;
        for (;;) {
            x = rng.uniform(1.05 * p.q0, 3.0 * p.q0) * (rng.unit() < 0.5 ? -1.0 : 1.0);
            y = rng.uniform(-p.q0, p.q0);
            if (scaling_w(p, x, y) <= 0.0) continue;
            if (effective_potential(p, x, y) > p.e_star - 0.1) continue;
            break;
        }
        const SymplecticState s0 = project(x, y, rng.uniform(0.0, 2.0 * M_PI));
        const Trajectory tr = integrate(p, s0, cfg, {});
        if (tr.has(EventKind::Collision)) ++outer_collide;
        outer_min_r = std::min(outer_min_r, tr.min_radius);
    }
    rep.set("outer.count", n_outer);
    rep.set("outer.collisions", outer_collide);
    rep.set("outer.min_radius", outer_min_r);
    rep.check("outer_global", outer_collide == 0);
    rep.check("outer_away_from_origin", outer_min_r > 1e-2);
    return rep;
}

void write_trajectory_csv(std::ostream& os, const ModelParams& p,
                          const SymplecticBasis* basis, const Calibration* cal,
                          const Trajectory& traj) {
    os << "t,x,y,px,py,E,W,K,I,dq\n";
    for (const auto& s : traj.samples) {
        const SymplecticState& st = s.state;
        const double dq = (basis && cal && cal->delta_e > 0)
                              ? distance_dq(*basis, p, *cal, st).d_q
                              : std::numeric_limits<double>::quiet_NaN();
        os << format_double(s.t) << ',' << format_double(st.x) << ','
           << format_double(st.y) << ',' << format_double(st.px) << ','
           << format_double(st.py) << ',' << format_double(energy(p, st)) << ','
           << format_double(scaling_w(p, st.x, st.y)) << ','
           << format_double(virial_k(p, st)) << ','
           << format_double(moment_of_inertia(st).i) << ',' << format_double(dq) << '\n';
    }
}

void write_events_csv(std::ostream& os, const std::vector<Event>& events) {
    os << "kind,t,x,y,px,py,aux\n";
    for (const auto& e : events) {
        os << to_string(e.kind) << ',' << format_double(e.time) << ','
           << format_double(e.state.x) << ',' << format_double(e.state.y) << ','
           << format_double(e.state.px) << ',' << format_double(e.state.py) << ','
           << format_double(e.aux) << '\n';
    }
}

}  // namespace hill
