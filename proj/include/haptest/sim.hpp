#pragma once

#include <Eigen/Dense>

#include "haptest/rng.hpp"

// Two-axis point-mass fingertip pressing on a compliant surface.
//
// Axis convention: the normal coordinate x_perp increases INTO the surface,
// so penetration is x_perp - rest_position and "above the surface" means
// x_perp < rest_position. f_perp is the compressive contact force (>= 0,
// what a fingertip force sensor reads); the finger feels -f_perp along the
// normal axis. f_par is the signed tangential force on the finger and
// opposes sliding.

namespace haptest {

/// Friction is cut off below this sliding speed to avoid sign chatter.
inline constexpr double kSlidingDeadband = 1e-6;  // m/s

struct RobotParams {
    double m_perp = 1.0;  // kg
    double m_par = 1.0;   // kg
    double dt = 1e-3;     // s

    /// Motor-noise covariance in the 5-state layout [x_perp v_perp x_par
    /// v_par mu]; only the velocity rows act, as force noise (N^2).
    Eigen::Matrix<double, 5, 5> q_process = default_q_process();

    double r_meas_pos = 4e-4;    // m^2, per axis
    double r_meas_force = 4e-4;  // N^2

    static Eigen::Matrix<double, 5, 5> default_q_process();

    double force_noise_std_perp() const { return std::sqrt(std::max(0.0, q_process(1, 1))); }
    double force_noise_std_par() const { return std::sqrt(std::max(0.0, q_process(3, 3))); }

    /// Throws ConfigError on non-positive masses/dt or an asymmetric /
    /// indefinite noise covariance.
    void validate() const;
};

struct SurfaceSpec {
    double f0 = 1.0;          // N, rest force; f0 = -stiffness * rest position
    double stiffness = 1000;  // N/m
    double viscosity = 10;    // N s/m
    double friction = 0.5;    // Coulomb coefficient
    double restitution = 0.6; // impulse ratio in [0, 1]
    int label = 0;

    double rest_position() const { return -f0 / stiffness; }

    void validate() const;
};

struct SimState {
    double x_perp = 0;
    double v_perp = 0;
    double x_par = 0;
    double v_par = 0;
    double t = 0;
    bool in_contact = false;

    bool finite() const;
};

struct ForceSample {
    double f_perp = 0;  // N, compressive, >= 0
    double f_par = 0;   // N, signed, opposes sliding
    double t = 0;
};

struct ControlForces {
    double u_perp = 0;  // N
    double u_par = 0;   // N
};

struct Measurement {
    double x_perp = 0;
    double x_par = 0;
    double f_perp = 0;
    double t = 0;
};

/// Spring-damper normal force with Coulomb friction. Zero when the finger is
/// above the rest position; clamped at zero so the surface never pulls.
ForceSample contact_force(const SimState& state, const SurfaceSpec& surface);

/// Semi-implicit Euler update with the given interaction force: velocities
/// first (control + contact + motor noise), then positions with the new
/// velocities. Throws SimulationDiverged if the result is non-finite.
SimState integrate(const SimState& state, const ControlForces& u,
                   const ForceSample& force, double contact_rest_position,
                   const RobotParams& params, NoiseSource& rng);

/// integrate() with the plain surface contact law.
SimState step(const SimState& state, const ControlForces& u,
              const SurfaceSpec& surface, const RobotParams& params,
              NoiseSource& rng);

/// Noisy observation of the two positions and the normal force. Velocities
/// and the tangential force are not observable.
Measurement measure(const SimState& state, const ForceSample& force,
                    const RobotParams& params, NoiseSource& rng);

/// Contact response used by the tapping action: an elastic spring whose rest
/// position yields plastically at maximum deformation, leaving the
/// restoration impulse `restitution` times the deformation impulse. The
/// linear dashpot does not act at impact rates, so tap forces are purely
/// elastic.
class TapContact {
public:
    explicit TapContact(const SurfaceSpec& surface);

    ForceSample force(const SimState& state) const;
    double rest_position() const { return rest_eff_; }

    /// Advances the plastic state; call once per step with the post-step
    /// state. Yield happens at the deformation/restoration turnover.
    void observe(const SimState& state);

private:
    SurfaceSpec surface_;
    double rest_eff_;
    bool yielded_ = false;
    bool was_approaching_ = false;
};

}  // namespace haptest
