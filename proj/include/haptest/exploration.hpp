#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "haptest/control.hpp"
#include "haptest/estimation.hpp"
#include "haptest/sim.hpp"

namespace haptest {

enum class ActionKind { Tapping, Indentation, Sliding };

const char* action_name(ActionKind kind);
ActionKind action_from_name(const std::string& name);

struct ActionSpec {
    ActionKind kind = ActionKind::Indentation;
    double duration = 20.0;  // s

    // Indentation: x_perp_ref = offset + amplitude * sin(frequency * t).
    double amplitude = 0.01;  // m
    double frequency = 8.0;   // rad/s
    double offset = 0.01;     // m

    // Sliding: constant tangential speed with a force-informed normal hold.
    double slide_speed = 0.04;  // m/s
    double hold_force = 4.0;    // N

    // Tapping: a light decoupled fingertip drifts onto the surface and
    // bounces ballistically; no actuation, hence no motor noise.
    double approach_speed = 0.1;    // m/s
    double start_height = 0.04;     // m above the surface rest position
    double tap_mass = 0.004;        // kg
    double impact_threshold = 0.05; // N

    static ActionSpec tapping();
    static ActionSpec indentation();
    static ActionSpec sliding();

    void validate() const;
};

/// The three exploration actions in canonical order.
std::vector<ActionSpec> default_actions();

struct TrialRecord {
    int label = 0;
    ActionKind action = ActionKind::Indentation;
    int trial_index = 0;
    std::uint64_t seed = 0;

    // 1 kHz series, equal lengths.
    std::vector<double> t;
    std::vector<double> x_perp_true, x_par_true;
    std::vector<double> x_perp_meas, x_par_meas;
    std::vector<double> f_perp_meas, f_par_true;
    std::array<std::vector<double>, 5> xi_hat;
    std::array<std::vector<double>, 3> theta_hat;

    std::optional<double> psi_hat;  // tapping only

    std::size_t size() const { return t.size(); }
    void reserve(std::size_t n);
    void push_row(const SimState& s, const Measurement& z, const ForceSample& f,
                  const DekfState& d);

    /// Mean of a series over the trailing window; throws DataError if the
    /// window exceeds the trial length.
    double mean_tail(const std::vector<double>& series, double window_s) const;
};

struct Catalog {
    std::vector<SurfaceSpec> objects;

    const SurfaceSpec& by_label(int label) const;
    void validate() const;
};

/// Twenty synthetic objects: labels 1-10 hard (stiffness >= 800 N/m), 11-20
/// soft (<= 600 N/m). Entries 1 and 11 are the two reference surfaces used
/// for estimator validation. Several pairs share stiffness/viscosity and
/// differ only in restitution or friction, so no single property separates
/// the whole catalog.
Catalog default_catalog();

struct TrialConfig {
    ControllerConfig controller;  // gains; the action supplies the reference
    EstimatorTuning estimator;
};

/// Simulates one (surface, action) run at 1 kHz: simulation, estimation and
/// control wired together; tapping also detects the impact and estimates the
/// coefficient of restitution. Errors carry the trial context.
TrialRecord run_trial(const SurfaceSpec& surface, const ActionSpec& action,
                      const RobotParams& params, const TrialConfig& cfg,
                      std::uint64_t seed, int trial_index = 0);

/// Tracked run with an arbitrary reference trajectory (used for estimator
/// validation sweeps that combine indentation and sliding).
TrialRecord run_custom_trial(const SurfaceSpec& surface, const Trajectory& traj,
                             double duration, const RobotParams& params,
                             const TrialConfig& cfg, std::uint64_t seed,
                             ActionKind kind = ActionKind::Indentation,
                             int trial_index = 0);

using TrialSink = std::function<void(const TrialRecord&)>;

struct CampaignSummary {
    int total = 0;
    int failed = 0;
    std::vector<std::string> failures;
};

/// Runs objects x actions x trials_per_pair trials, deterministic per seed
/// and independent of the worker count. Records are delivered to the sink in
/// a fixed order: object, then trial index, then action, so the sink sees
/// each (object, trial) tuple contiguously. Throws if more than 1% of trials
/// fail; individual failures are collected in the summary.
CampaignSummary run_campaign(const Catalog& catalog,
                             const std::vector<ActionSpec>& actions,
                             const RobotParams& params, const TrialConfig& cfg,
                             int trials_per_pair, std::uint64_t seed,
                             const TrialSink& sink, int jobs = 0);

}  // namespace haptest
