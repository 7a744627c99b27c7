#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "haptest/sim.hpp"

// Dual extended Kalman filter. Estimator 1 tracks the augmented state
// [x_perp, v_perp, x_par, v_par, mu] from position measurements, treating the
// normal force predicted by estimator 2 as an exogenous input. Estimator 2
// tracks the viscoelastic parameters [f0, stiffness, viscosity] as a random
// walk observed through the measured normal force.

namespace haptest {

/// Viscoelastic updates run only when contact carries information: either the
/// estimated penetration is positive or the measured force clears this gate.
inline constexpr double kContactForceGate = 0.05;  // N

struct DekfState {
    Eigen::Matrix<double, 5, 1> xi_hat = Eigen::Matrix<double, 5, 1>::Zero();
    Eigen::Matrix<double, 5, 5> p_xi = Eigen::Matrix<double, 5, 5>::Identity();
    Eigen::Vector3d theta_hat = Eigen::Vector3d::Zero();
    Eigen::Matrix3d p_theta = Eigen::Matrix3d::Identity();

    Eigen::Matrix<double, 5, 5> q_xi = Eigen::Matrix<double, 5, 5>::Zero();
    Eigen::Matrix3d q_theta = Eigen::Matrix3d::Zero();
    Eigen::Matrix2d r_xi = Eigen::Matrix2d::Identity();
    double r_theta = 4e-4;

    /// Last predicted normal force (>= 0, zero out of estimated contact);
    /// feeds the state prediction and the controller feedforward.
    double f_perp_hat = 0;

    /// Running quality of the force fit: EMAs of |innovation| and |measured
    /// force| over contact samples. The friction channel stays decoupled
    /// until the fit error is small relative to the observed force, because
    /// a junk force prediction would collapse the friction covariance around
    /// a junk estimate.
    double fit_error_ema = 1e3;
    double force_ema = 0;
    /// Latched once friction_ready() first holds; the tangential covariance
    /// block is reinitialized to p_engage_reset at that instant.
    bool friction_engaged = false;
    double p_engage_reset = 10.0;
    int engaged_steps = 0;

    /// Most recent measured normal force (clamped at zero); carries the
    /// friction channel, whose regressor must not share the fitted force's
    /// correlated errors.
    double last_f_meas = 0;

    /// Normalized tangential-innovation bias. A well-modelled filter keeps
    /// it near zero; a sustained offset means the friction/velocity beliefs
    /// are overconfident and their covariance gets reopened.
    double tang_innov_bias = 0;

    double mu_hat() const { return xi_hat(4); }
    double stiffness_hat() const { return theta_hat(1); }
    bool friction_ready() const {
        return fit_error_ema < 0.1 + 0.05 * force_ema;
    }

    /// Believed surface rest position, -f0_hat/stiffness_hat, guarded against
    /// degenerate parameter estimates and clamped to the workspace scale.
    double estimated_rest_position() const;
    bool estimated_contact() const;
};

/// Filter tuning; make() instantiates the initial DekfState for a robot.
struct EstimatorTuning {
    double p_xi0 = 10.0;
    double p_theta0 = 5.0;

    /// Diagonal of Q_xi. Negative velocity entries mean "derive from the
    /// robot's motor-noise level": ((dt * sigma_force) / m)^2.
    Eigen::Matrix<double, 5, 1> q_xi_diag{
        {1e-12}, {-1.0}, {1e-12}, {-1.0}, {1e-9}};

    Eigen::Vector3d q_theta_diag{1e-6, 1e-4, 1e-6};
    double r_xi = 4e-4;
    double r_theta = 4e-4;
    Eigen::Vector3d theta0{0.0, 100.0, 1.0};
    double mu0 = 0.1;

    DekfState make(const RobotParams& robot) const;
    void validate() const;
};

/// Time update with the point-mass interaction model. The covariance uses the
/// same block-sparse linearization as the model: double integrators per axis,
/// a friction coupling of v_par to mu, and a random walk for mu.
DekfState predict_state(const DekfState& d, const ControlForces& u,
                        const RobotParams& params);

/// Measurement update from the two position readings (Joseph form).
DekfState update_state(const DekfState& d, double x_perp_meas,
                       double x_par_meas);

/// Viscoelastic parameter update from the measured normal force. Frozen out
/// of contact (a zero-force sample carries no information); refreshes
/// f_perp_hat either way.
DekfState update_viscoelastic(const DekfState& d, double f_perp_meas);

/// Smallest eigenvalue of a symmetric covariance; PSD check hook for tests.
double min_eigenvalue(const Eigen::Ref<const Eigen::MatrixXd>& m);

// --- Impact estimation -----------------------------------------------------

struct ImpactSample {
    double t = 0;
    double f_perp = 0;      // measured normal force
    double v_perp_hat = 0;  // estimated normal velocity
};

struct ImpactWindow {
    double t_minus = 0;  // 0.01 s before contact onset
    double t_zero = 0;   // maximum deformation (normal velocity reversal)
    double t_plus = 0;   // 0.01 s after contact onset
    std::vector<ImpactSample> force_trace;  // samples covering [t_minus, t_plus]
    double v_at_t0 = 0;
    double v_at_tminus = 0;
};

inline constexpr double kImpactHalfWindow = 0.01;  // s

/// Finds the first impact in a tapping stream. Contact onset is the first of
/// two consecutive samples above the force threshold (one sample alone can be
/// sensor noise); t_zero is the first subsequent non-positive estimated
/// normal velocity. Throws NoImpact when no such bracket exists.
ImpactWindow detect_impact(std::span<const ImpactSample> stream,
                           double force_threshold = 0.05);

struct RestitutionEstimate {
    double value = 0;  // clamped to [0, 1.5]
    double raw = 0;
    bool clipped = false;  // true when the raw ratio exceeded 1
};

/// Impulse-ratio coefficient of restitution: the trapezoidal restoration
/// impulse over [t_zero, t_plus] divided by m_perp * (v(t0) + v(t-)).
/// Throws DegenerateImpact when the deformation momentum vanishes.
RestitutionEstimate estimate_restitution(const ImpactWindow& w,
                                         const RobotParams& params);

}  // namespace haptest
