#include "haptest/control.hpp"

#include <algorithm>
#include <cmath>

#include "haptest/errors.hpp"


namespace haptest {

namespace {

double saturate(double u, double limit) {
    return std::clamp(u, -limit, limit);
}

double sliding_sign(double v) {
    if (v > kSlidingDeadband) return 1.0;
    if (v < -kSlidingDeadband) return -1.0;
    return 0.0;
}

}  // namespace

void ControllerConfig::validate() const {
    if (kp < 0 || kd < 0) throw ConfigError("controller gains must be >= 0");
    if (!(sat_limit > 0)) throw ConfigError("controller.sat_limit must be > 0");
}

ControlForces pd_with_feedforward(const ControllerConfig& cfg,
                                  const DekfState& estimate,
                                  const Reference& r) {
    const double e_perp = estimate.xi_hat(0) - r.x_perp;
    const double ed_perp = estimate.xi_hat(1) - r.v_perp;
    const double e_par = estimate.xi_hat(2) - r.x_par;
    const double ed_par = estimate.xi_hat(3) - r.v_par;

    const double f_hat = estimate.f_perp_hat;
    const double f_par_hat =
        sliding_sign(r.v_par) * estimate.mu_hat() * f_hat;

    ControlForces u;
    u.u_perp = saturate(f_hat - cfg.kp * e_perp - cfg.kd * ed_perp, cfg.sat_limit);
    u.u_par = saturate(f_par_hat - cfg.kp * e_par - cfg.kd * ed_par, cfg.sat_limit);
    return u;
}

ControlForces control_step(const ControllerConfig& cfg,
                           const DekfState& estimate, double t) {
    return pd_with_feedforward(cfg, estimate, cfg.reference(t));
}

}  // namespace haptest
