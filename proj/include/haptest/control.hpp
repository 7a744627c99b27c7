#pragma once

#include <functional>

#include "haptest/estimation.hpp"
#include "haptest/sim.hpp"

namespace haptest {

/// Reference point with analytic velocity.
struct Reference {
    double x_perp = 0;
    double x_par = 0;
    double v_perp = 0;
    double v_par = 0;
};

using Trajectory = std::function<Reference(double t)>;

struct ControllerConfig {
    double kp = 1000.0;     // N/m
    double kd = 200.0;      // N s/m
    double sat_limit = 50;  // N, per-axis clamp
    Trajectory reference;

    void validate() const;
};

/// Feedforward force compensation plus PD feedback, saturated per axis.
/// The feedforward cancels the estimated interaction force felt by the
/// finger: +F_perp_hat on the normal axis (the surface pushes out with
/// -F_perp_hat) and +sign(reference sliding)*mu_hat*F_perp_hat tangentially
/// (friction opposes the commanded sliding).
ControlForces pd_with_feedforward(const ControllerConfig& cfg,
                                  const DekfState& estimate,
                                  const Reference& r);

/// pd_with_feedforward() with the normal feedforward taken from the given
/// force (typically the current measured sample) instead of the fitted
/// prediction; removes the one-step model lag at contact transitions.
ControlForces pd_with_feedforward(const ControllerConfig& cfg,
                                  const DekfState& estimate,
                                  const Reference& r, double f_feedforward);

/// pd_with_feedforward() at the configured trajectory's reference for time t.
ControlForces control_step(const ControllerConfig& cfg,
                           const DekfState& estimate, double t);

}  // namespace haptest
