#include "haptest/sim.hpp"

#include <cmath>
#include <sstream>

#include "haptest/errors.hpp"

namespace haptest {

namespace {

double sliding_sign(double v) {
    if (v > kSlidingDeadband) return 1.0;
    if (v < -kSlidingDeadband) return -1.0;
    return 0.0;
}

std::string describe(const SimState& s) {
    std::ostringstream os;
    os << "t=" << s.t << " x_perp=" << s.x_perp << " v_perp=" << s.v_perp
       << " x_par=" << s.x_par << " v_par=" << s.v_par;
    return os.str();
}

}  // namespace

Eigen::Matrix<double, 5, 5> RobotParams::default_q_process() {
    Eigen::Matrix<double, 5, 5> q = Eigen::Matrix<double, 5, 5>::Zero();
    q(1, 1) = 2.5e-3;
    q(3, 3) = 2.5e-3;
    return q;
}

void RobotParams::validate() const {
    if (!(m_perp > 0)) throw ConfigError("robot.m_perp must be > 0");
    if (!(m_par > 0)) throw ConfigError("robot.m_par must be > 0");
    if (!(dt > 0)) throw ConfigError("robot.dt must be > 0");
    if (!q_process.isApprox(q_process.transpose(), 1e-12))
        throw ConfigError("robot.q_process must be symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 5, 5>> eig(q_process);
    if (eig.eigenvalues().minCoeff() < -1e-9)
        throw ConfigError("robot.q_process must be positive semi-definite");
    if (r_meas_pos < 0) throw ConfigError("robot.r_meas_pos must be >= 0");
    if (r_meas_force < 0) throw ConfigError("robot.r_meas_force must be >= 0");
}

void SurfaceSpec::validate() const {
    if (!(stiffness > 0)) throw ConfigError("surface.stiffness must be > 0");
    if (viscosity < 0) throw ConfigError("surface.viscosity must be >= 0");
    if (friction < 0) throw ConfigError("surface.friction must be >= 0");
    if (restitution < 0 || restitution > 1)
        throw ConfigError("surface.restitution must be in [0, 1]");
}

bool SimState::finite() const {
    return std::isfinite(x_perp) && std::isfinite(v_perp) &&
           std::isfinite(x_par) && std::isfinite(v_par) && std::isfinite(t);
}

ForceSample contact_force(const SimState& state, const SurfaceSpec& surface) {
    ForceSample f;
    f.t = state.t;
    if (state.x_perp <= surface.rest_position()) return f;
    f.f_perp = std::max(0.0, surface.f0 + surface.stiffness * state.x_perp +
                                 surface.viscosity * state.v_perp);
    f.f_par = -sliding_sign(state.v_par) * surface.friction * f.f_perp;
    return f;
}

SimState integrate(const SimState& state, const ControlForces& u,
                   const ForceSample& force, double contact_rest_position,
                   const RobotParams& params, NoiseSource& rng) {
    const double w_perp = rng.gaussian(params.force_noise_std_perp());
    const double w_par = rng.gaussian(params.force_noise_std_par());

    SimState next = state;
    next.v_perp += params.dt * (u.u_perp - force.f_perp + w_perp) / params.m_perp;
    next.v_par += params.dt * (u.u_par + force.f_par + w_par) / params.m_par;
    next.x_perp += params.dt * next.v_perp;
    next.x_par += params.dt * next.v_par;
    next.t = state.t + params.dt;
    next.in_contact = next.x_perp > contact_rest_position;
    if (!next.finite())
        throw SimulationDiverged("simulation diverged at " + describe(next));
    return next;
}

SimState step(const SimState& state, const ControlForces& u,
              const SurfaceSpec& surface, const RobotParams& params,
              NoiseSource& rng) {
    return integrate(state, u, contact_force(state, surface),
                     surface.rest_position(), params, rng);
}

Measurement measure(const SimState& state, const ForceSample& force,
                    const RobotParams& params, NoiseSource& rng) {
    Measurement m;
    m.x_perp = state.x_perp + rng.gaussian(std::sqrt(params.r_meas_pos));
    m.x_par = state.x_par + rng.gaussian(std::sqrt(params.r_meas_pos));
    m.f_perp = force.f_perp + rng.gaussian(std::sqrt(params.r_meas_force));
    m.t = state.t;
    return m;
}

TapContact::TapContact(const SurfaceSpec& surface)
    : surface_(surface), rest_eff_(surface.rest_position()) {}

ForceSample TapContact::force(const SimState& state) const {
    ForceSample f;
    f.t = state.t;
    if (state.x_perp <= rest_eff_) return f;
    f.f_perp = surface_.stiffness * (state.x_perp - rest_eff_);
    f.f_par = -sliding_sign(state.v_par) * surface_.friction * f.f_perp;
    return f;
}

void TapContact::observe(const SimState& state) {
    const bool penetrated = state.x_perp > rest_eff_;
    if (!penetrated) {
        // Surface stays dented within a trial; a fresh episode may yield again.
        yielded_ = false;
        was_approaching_ = false;
        return;
    }
    if (!yielded_ && was_approaching_ && state.v_perp <= 0.0) {
        // Maximum deformation: the rest position yields so the unloading
        // spring stores restitution^2 of the stored energy.
        rest_eff_ = state.x_perp - surface_.restitution * (state.x_perp - rest_eff_);
        yielded_ = true;
    }
    was_approaching_ = state.v_perp > 0.0;
}

}  // namespace haptest
