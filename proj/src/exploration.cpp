#include "haptest/exploration.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <sstream>
#include <thread>

#include "haptest/errors.hpp"

namespace haptest {

namespace {

constexpr double kMaxHoldPenetration = 0.03;   // m, sliding reference clamp
constexpr double kHoldStiffnessFloor = 200.0;  // N/m
constexpr double kHoldSlewRate = 0.05;         // m/s, sliding reference slew

std::string trial_context(const SurfaceSpec& surface, ActionKind kind,
                          int trial_index, std::uint64_t seed) {
    std::ostringstream os;
    os << "object " << surface.label << " " << action_name(kind) << " trial "
       << trial_index << " seed " << seed;
    return os.str();
}

int series_length(double duration, double dt) {
    const int n = static_cast<int>(std::llround(duration / dt));
    if (n <= 0) throw DataError("action duration yields an empty series");
    return n;
}

/// Common tracked loop: measure, estimate, control against a per-step
/// reference, integrate. `reference` may depend on the current estimate.
TrialRecord run_tracked(const SurfaceSpec& surface, ActionKind kind,
                        double duration,
                        const std::function<Reference(double, const DekfState&)>& reference,
                        const RobotParams& params, const TrialConfig& cfg,
                        std::uint64_t seed, int trial_index,
                        const SimState& initial) {
    const int n = series_length(duration, params.dt);
    NoiseSource rng(seed);
    DekfState d = cfg.estimator.make(params);

    TrialRecord rec;
    rec.label = surface.label;
    rec.action = kind;
    rec.trial_index = trial_index;
    rec.seed = seed;
    rec.reserve(static_cast<std::size_t>(n));

    SimState s = initial;
    ControlForces u{};
    // Control-view smoothing of the tangential estimates: the tangential
    // reference is a ramp, so the controller needs no bandwidth there, and
    // feeding it raw estimate noise through kp/kd would dither the sliding
    // velocity around zero and flip the real Coulomb friction direction.
    constexpr double kCtlPosSmoothing = 0.05;
    constexpr double kCtlVelSmoothing = 0.5;
    double x_par_ctl = initial.x_par;
    double v_par_ctl = initial.v_par;
    for (int k = 0; k < n; ++k) {
        const ForceSample f = contact_force(s, surface);
        const Measurement z = measure(s, f, params, rng);
        d = predict_state(d, u, params);
        d = update_state(d, z.x_perp, z.x_par);
        d = update_viscoelastic(d, z.f_perp);
        rec.push_row(s, z, f, d);

        x_par_ctl += kCtlPosSmoothing * (d.xi_hat(2) - x_par_ctl);
        v_par_ctl += kCtlVelSmoothing * (d.xi_hat(3) - v_par_ctl);
        DekfState control_view = d;
        control_view.xi_hat(2) = x_par_ctl;
        control_view.xi_hat(3) = v_par_ctl;
        u = pd_with_feedforward(cfg.controller, control_view, reference(s.t, d),
                               std::max(0.0, z.f_perp));
        s = integrate(s, u, f, surface.rest_position(), params, rng);
    }
    return rec;
}

TrialRecord run_indentation(const SurfaceSpec& surface, const ActionSpec& action,
                            const RobotParams& params, const TrialConfig& cfg,
                            std::uint64_t seed, int trial_index) {
    const double a = action.amplitude;
    const double w = action.frequency;
    const double c = action.offset;
    auto ref = [a, w, c](double t, const DekfState&) {
        Reference r;
        r.x_perp = c + a * std::sin(w * t);
        r.v_perp = a * w * std::cos(w * t);
        return r;
    };
    SimState s0;
    s0.x_perp = c;            // on-reference start
    s0.v_perp = a * w;
    s0.in_contact = s0.x_perp > surface.rest_position();
    return run_tracked(surface, ActionKind::Indentation, action.duration, ref,
                       params, cfg, seed, trial_index, s0);
}

TrialRecord run_sliding(const SurfaceSpec& surface, const ActionSpec& action,
                        const RobotParams& params, const TrialConfig& cfg,
                        std::uint64_t seed, int trial_index) {
    // The normal hold is position-based: command the penetration that yields
    // hold_force under the current stiffness estimate, slew-limited so the
    // reference does not jump as the estimate converges.
    const double hold = action.hold_force;
    const double speed = action.slide_speed;
    const double max_step = kHoldSlewRate * params.dt;
    double ref_perp = std::numeric_limits<double>::quiet_NaN();
    auto ref = [hold, speed, max_step, ref_perp](double t, const DekfState& d) mutable {
        const double pen = std::clamp(
            hold / std::max(d.stiffness_hat(), kHoldStiffnessFloor), 0.0,
            kMaxHoldPenetration);
        const double target = d.estimated_rest_position() + pen;
        if (std::isnan(ref_perp))
            ref_perp = target;
        else
            ref_perp += std::clamp(target - ref_perp, -max_step, max_step);
        Reference r;
        r.x_perp = ref_perp;
        r.x_par = speed * t;
        r.v_par = speed;
        return r;
    };
    SimState s0;
    s0.x_perp = surface.rest_position() + hold / surface.stiffness;
    s0.in_contact = true;
    return run_tracked(surface, ActionKind::Sliding, action.duration, ref,
                       params, cfg, seed, trial_index, s0);
}

TrialRecord run_tapping(const SurfaceSpec& surface, const ActionSpec& action,
                        const RobotParams& params, const TrialConfig& cfg,
                        std::uint64_t seed, int trial_index) {
    // Ballistic tap with a light decoupled fingertip: no actuation and no
    // motor noise, so the impact impulse balance is exact.
    RobotParams tap = params;
    tap.m_perp = action.tap_mass;
    tap.m_par = action.tap_mass;
    tap.q_process.setZero();

    const int n = series_length(action.duration, tap.dt);
    NoiseSource rng(seed);
    DekfState d = cfg.estimator.make(tap);

    TrialRecord rec;
    rec.label = surface.label;
    rec.action = ActionKind::Tapping;
    rec.trial_index = trial_index;
    rec.seed = seed;
    rec.reserve(static_cast<std::size_t>(n));

    TapContact contact(surface);
    SimState s;
    s.x_perp = surface.rest_position() - action.start_height;
    s.v_perp = action.approach_speed;

    const ControlForces u{};  // unactuated throughout
    for (int k = 0; k < n; ++k) {
        const ForceSample f = contact.force(s);
        const Measurement z = measure(s, f, tap, rng);
        d = predict_state(d, u, tap);
        d = update_state(d, z.x_perp, z.x_par);
        d = update_viscoelastic(d, z.f_perp);
        rec.push_row(s, z, f, d);

        s = integrate(s, u, f, contact.rest_position(), tap, rng);
        contact.observe(s);
    }

    std::vector<ImpactSample> stream(rec.size());
    for (std::size_t i = 0; i < rec.size(); ++i)
        stream[i] = {rec.t[i], rec.f_perp_meas[i], rec.xi_hat[1][i]};
    const ImpactWindow w = detect_impact(stream, action.impact_threshold);
    rec.psi_hat = estimate_restitution(w, tap).value;
    return rec;
}

}  // namespace

const char* action_name(ActionKind kind) {
    switch (kind) {
        case ActionKind::Tapping: return "tapping";
        case ActionKind::Indentation: return "indentation";
        case ActionKind::Sliding: return "sliding";
    }
    return "unknown";
}

ActionKind action_from_name(const std::string& name) {
    if (name == "tapping") return ActionKind::Tapping;
    if (name == "indentation") return ActionKind::Indentation;
    if (name == "sliding") return ActionKind::Sliding;
    throw DataError("unknown action name: " + name);
}

ActionSpec ActionSpec::tapping() {
    ActionSpec a;
    a.kind = ActionKind::Tapping;
    a.duration = 0.9;
    return a;
}

ActionSpec ActionSpec::indentation() {
    ActionSpec a;
    a.kind = ActionKind::Indentation;
    a.duration = 20.0;
    return a;
}

ActionSpec ActionSpec::sliding() {
    ActionSpec a;
    a.kind = ActionKind::Sliding;
    a.duration = 10.0;
    return a;
}

void ActionSpec::validate() const {
    if (!(duration > 0)) throw ConfigError("action duration must be > 0");
    switch (kind) {
        case ActionKind::Indentation:
            if (amplitude < 0 || frequency <= 0)
                throw ConfigError("indentation amplitude/frequency invalid");
            break;
        case ActionKind::Sliding:
            if (hold_force <= 0 || slide_speed <= 0)
                throw ConfigError("sliding hold_force/speed must be > 0");
            break;
        case ActionKind::Tapping:
            if (approach_speed <= 0 || start_height <= 0 || tap_mass <= 0 ||
                impact_threshold <= 0)
                throw ConfigError("tapping parameters must be > 0");
            break;
    }
}

std::vector<ActionSpec> default_actions() {
    return {ActionSpec::tapping(), ActionSpec::indentation(),
            ActionSpec::sliding()};
}

void TrialRecord::reserve(std::size_t n) {
    t.reserve(n);
    x_perp_true.reserve(n);
    x_par_true.reserve(n);
    x_perp_meas.reserve(n);
    x_par_meas.reserve(n);
    f_perp_meas.reserve(n);
    f_par_true.reserve(n);
    for (auto& v : xi_hat) v.reserve(n);
    for (auto& v : theta_hat) v.reserve(n);
}

void TrialRecord::push_row(const SimState& s, const Measurement& z,
                           const ForceSample& f, const DekfState& d) {
    t.push_back(s.t);
    x_perp_true.push_back(s.x_perp);
    x_par_true.push_back(s.x_par);
    x_perp_meas.push_back(z.x_perp);
    x_par_meas.push_back(z.x_par);
    f_perp_meas.push_back(z.f_perp);
    f_par_true.push_back(f.f_par);
    for (int i = 0; i < 5; ++i) xi_hat[i].push_back(d.xi_hat(i));
    for (int i = 0; i < 3; ++i) theta_hat[i].push_back(d.theta_hat(i));
}

double TrialRecord::mean_tail(const std::vector<double>& series,
                              double window_s) const {
    if (t.empty() || series.size() != t.size())
        throw DataError("trial series empty or inconsistent");
    const double dt = t.size() > 1 ? t[1] - t[0] : 0.0;
    const auto count = static_cast<std::size_t>(std::llround(window_s / dt));
    if (count == 0 || count > series.size())
        throw DataError("averaging window exceeds the trial length");
    double sum = 0.0;
    for (std::size_t i = series.size() - count; i < series.size(); ++i)
        sum += series[i];
    return sum / static_cast<double>(count);
}

const SurfaceSpec& Catalog::by_label(int label) const {
    for (const auto& o : objects)
        if (o.label == label) return o;
    throw DataError("catalog has no object with label " + std::to_string(label));
}

void Catalog::validate() const {
    for (const auto& o : objects) {
        o.validate();
        for (const auto& p : objects) {
            if (&o == &p) continue;
            if (o.label == p.label)
                throw ConfigError("catalog labels must be unique");
            if (o.f0 == p.f0 && o.stiffness == p.stiffness &&
                o.viscosity == p.viscosity && o.friction == p.friction &&
                o.restitution == p.restitution)
                throw ConfigError("catalog parameter tuples must be distinct");
        }
    }
}

Catalog default_catalog() {
    auto make = [](int label, double k, double dv, double mu, double psi) {
        SurfaceSpec s;
        s.label = label;
        s.f0 = 1.0;
        s.stiffness = k;
        s.viscosity = dv;
        s.friction = mu;
        s.restitution = psi;
        return s;
    };
    Catalog c;
    // Hard group (stiffness >= 800 N/m). Labels 2 and 3 differ only in
    // restitution; several friction values repeat across the catalog.
    c.objects = {
        make(1, 1000, 10, 0.50, 0.60),  // reference stiff-and-smooth surface
        make(2, 900, 12, 0.60, 0.20),
        make(3, 900, 12, 0.60, 0.55),
        make(4, 1500, 8, 0.35, 0.45),
        make(5, 2000, 5, 0.20, 0.70),
        make(6, 1200, 20, 0.90, 0.30),
        make(7, 800, 15, 1.10, 0.50),
        make(8, 1500, 25, 0.70, 0.15),
        make(9, 1000, 30, 0.20, 0.35),
        make(10, 2000, 18, 0.50, 0.25),
        // Soft group (stiffness <= 600 N/m); 12 and 13 differ only in
        // restitution.
        make(11, 500, 30, 1.25, 0.25),  // reference soft-and-rough surface
        make(12, 450, 18, 0.80, 0.20),
        make(13, 450, 18, 0.80, 0.60),
        make(14, 200, 5, 0.40, 0.65),
        make(15, 300, 40, 1.40, 0.10),
        make(16, 600, 10, 0.30, 0.40),
        make(17, 350, 25, 1.00, 0.55),
        make(18, 550, 35, 0.60, 0.15),
        make(19, 250, 12, 1.25, 0.45),
        make(20, 600, 22, 0.90, 0.30),
    };
    c.validate();
    return c;
}

TrialRecord run_trial(const SurfaceSpec& surface, const ActionSpec& action,
                      const RobotParams& params, const TrialConfig& cfg,
                      std::uint64_t seed, int trial_index) {
    surface.validate();
    action.validate();
    params.validate();
    cfg.controller.validate();
    try {
        switch (action.kind) {
            case ActionKind::Tapping:
                return run_tapping(surface, action, params, cfg, seed, trial_index);
            case ActionKind::Indentation:
                return run_indentation(surface, action, params, cfg, seed, trial_index);
            case ActionKind::Sliding:
                return run_sliding(surface, action, params, cfg, seed, trial_index);
        }
        throw DataError("unhandled action kind");
    } catch (const Error& e) {
        throw Error(trial_context(surface, action.kind, trial_index, seed) +
                    ": " + e.what());
    }
}

TrialRecord run_custom_trial(const SurfaceSpec& surface, const Trajectory& traj,
                             double duration, const RobotParams& params,
                             const TrialConfig& cfg, std::uint64_t seed,
                             ActionKind kind, int trial_index) {
    const Reference r0 = traj(0.0);
    SimState s0;
    s0.x_perp = r0.x_perp;
    s0.v_perp = r0.v_perp;
    s0.x_par = r0.x_par;
    s0.v_par = r0.v_par;
    s0.in_contact = s0.x_perp > surface.rest_position();
    auto ref = [&traj](double t, const DekfState&) { return traj(t); };
    try {
        return run_tracked(surface, kind, duration, ref, params, cfg, seed,
                           trial_index, s0);
    } catch (const Error& e) {
        throw Error(trial_context(surface, kind, trial_index, seed) + ": " +
                    e.what());
    }
}

CampaignSummary run_campaign(const Catalog& catalog,
                             const std::vector<ActionSpec>& actions,
                             const RobotParams& params, const TrialConfig& cfg,
                             int trials_per_pair, std::uint64_t seed,
                             const TrialSink& sink, int jobs) {
    catalog.validate();
    if (trials_per_pair <= 0)
        throw ConfigError("campaign.trials_per_pair must be > 0");
    if (jobs <= 0)
        jobs = std::max(1u, std::thread::hardware_concurrency());

    struct Task {
        const SurfaceSpec* surface;
        const ActionSpec* action;
        std::size_t action_index;
        int trial_index;
    };
    std::vector<Task> tasks;
    tasks.reserve(catalog.objects.size() * actions.size() *
                  static_cast<std::size_t>(trials_per_pair));
    for (const auto& object : catalog.objects)
        for (int trial = 0; trial < trials_per_pair; ++trial)
            for (std::size_t ai = 0; ai < actions.size(); ++ai)
                tasks.push_back({&object, &actions[ai], ai, trial});

    CampaignSummary summary;
    summary.total = static_cast<int>(tasks.size());

    // Batched execution keeps memory bounded while the sink still sees
    // records in task order regardless of the worker count.
    const std::size_t batch = static_cast<std::size_t>(jobs) * 4;
    for (std::size_t base = 0; base < tasks.size(); base += batch) {
        const std::size_t end = std::min(tasks.size(), base + batch);
        std::vector<std::future<TrialRecord>> futures;
        futures.reserve(end - base);
        for (std::size_t i = base; i < end; ++i) {
            const Task task = tasks[i];
            const std::uint64_t trial_seed =
                mix_seed(seed, static_cast<std::uint64_t>(task.surface->label),
                         task.action_index,
                         static_cast<std::uint64_t>(task.trial_index));
            futures.push_back(std::async(
                std::launch::async, [task, trial_seed, &params, &cfg] {
                    return run_trial(*task.surface, *task.action, params, cfg,
                                     trial_seed, task.trial_index);
                }));
        }
        for (auto& fut : futures) {
            try {
                const TrialRecord rec = fut.get();
                if (sink) sink(rec);
            } catch (const Error& e) {
                ++summary.failed;
                summary.failures.emplace_back(e.what());
            }
        }
    }

    if (summary.failed * 100 > summary.total) {
        std::ostringstream os;
        os << "campaign failed: " << summary.failed << "/" << summary.total
           << " trials errored; first: "
           << (summary.failures.empty() ? "?" : summary.failures.front());
        throw Error(os.str());
    }
    return summary;
}

}  // namespace haptest
