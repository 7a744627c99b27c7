#include "haptest/estimation.hpp"

#include <algorithm>
#include <cmath>

#include "haptest/errors.hpp"




namespace haptest {

namespace {

constexpr double kStiffnessFloor = 1.0;       // N/m, guards -f0/kappa
constexpr double kRestPositionLimit = 0.05;   // m, workspace scale
constexpr double kMuEngagePrior = 0.25;       // friction prior at engagement
constexpr double kMuVarianceFloor = 1e-5;     // keeps the friction gain alive

double sliding_sign(double v) {
    if (v > kSlidingDeadband) return 1.0;
    if (v < -kSlidingDeadband) return -1.0;
    return 0.0;
}

template <typename M>
void symmetrize(M& p) {
    p = 0.5 * (p + p.transpose()).eval();
}

bool finite(const Eigen::Ref<const Eigen::MatrixXd>& m) {
    return m.allFinite();
}

}  // namespace

double DekfState::estimated_rest_position() const {
    const double k = std::max(theta_hat(1), kStiffnessFloor);
    return std::clamp(-theta_hat(0) / k, -kRestPositionLimit, kRestPositionLimit);
}

bool DekfState::estimated_contact() const {
    return xi_hat(0) > estimated_rest_position();
}

void EstimatorTuning::validate() const {
    if (!(p_xi0 > 0) || !(p_theta0 > 0))
        throw ConfigError("estimator initial covariances must be > 0");
    if (!(r_xi > 0) || !(r_theta > 0))
        throw ConfigError("estimator measurement noise must be > 0");
    for (int i = 0; i < 3; ++i)
        if (q_theta_diag(i) < 0)
            throw ConfigError("estimator.q_theta entries must be >= 0");
    // Negative q_xi velocity entries are the "derive from robot" marker.
    if (q_xi_diag(0) < 0 || q_xi_diag(2) < 0 || q_xi_diag(4) < 0)
        throw ConfigError("estimator.q_xi position/mu entries must be >= 0");
}

DekfState EstimatorTuning::make(const RobotParams& robot) const {
    DekfState d;
    d.xi_hat.setZero();
    d.xi_hat(4) = mu0;
    d.p_xi = p_xi0 * Eigen::Matrix<double, 5, 5>::Identity();
    d.theta_hat = theta0;
    d.p_theta = p_theta0 * Eigen::Matrix3d::Identity();

    Eigen::Matrix<double, 5, 1> q = q_xi_diag;
    if (q(1) < 0)
        q(1) = std::pow(robot.dt * robot.force_noise_std_perp() / robot.m_perp, 2) + 1e-12;
    if (q(3) < 0)
        q(3) = std::pow(robot.dt * robot.force_noise_std_par() / robot.m_par, 2) + 1e-12;
    d.q_xi = q.asDiagonal();
    d.q_theta = q_theta_diag.asDiagonal();
    d.r_xi = r_xi * Eigen::Matrix2d::Identity();
    d.r_theta = r_theta;
    d.f_perp_hat = 0.0;
    d.p_engage_reset = p_xi0;
    return d;
}

DekfState predict_state(const DekfState& d, const ControlForces& u,
                        const RobotParams& params) {
    const double dt = params.dt;
    // Normal force from the fitted interaction law at the current estimates,
    // clamped at zero; out of contact the fit extrapolates negative so the
    // clamp switches it off without a hard gate.
    const double f = std::max(
        0.0, d.theta_hat(0) + d.theta_hat(1) * d.xi_hat(0) +
                 d.theta_hat(2) * d.xi_hat(1));
    const double mu = d.xi_hat(4);

    DekfState n = d;

    // The friction channel engages once the force fit is trustworthy; until
    // then the tangential axis runs friction-free. At the switch the
    // tangential block is reinitialized: positions re-acquire quickly so
    // their variance opens wide, the velocity stays tight so the first
    // innovations charge the friction estimate instead of the collinear
    // velocity, and the friction prior is capped at the parameter's physical
    // scale so a handful of noisy samples cannot slam it.
    if (!d.friction_engaged && d.friction_ready()) {
        n.friction_engaged = true;
        for (int i : {2, 3, 4}) {
            n.p_xi.row(i).setZero();
            n.p_xi.col(i).setZero();
        }
        n.p_xi(2, 2) = n.p_engage_reset;
        n.p_xi(3, 3) = 0.01 * n.p_engage_reset;
        n.p_xi(4, 4) = std::min(d.p_xi(4, 4), kMuEngagePrior);
    }
    const bool engaged = n.friction_engaged;

    // Friction is modelled for forward sliding (the exploration actions
    // always command a non-negative tangential rate); a signed model would
    // flip with the noisy velocity estimate during transients and scramble
    // the friction updates. It rides on the measured normal force, whose
    // error is white, rather than the fitted force, whose error is
    // correlated with the motion and would bias the estimate at speed.
    const double f_fric = engaged ? d.last_f_meas : 0.0;

    // Mean propagation mirrors the plant's semi-implicit integrator
    // (velocities first, positions with the new velocities); an explicit
    // position step would leave a force-correlated residue in the
    // innovations that the friction estimate chases.
    n.xi_hat(1) = d.xi_hat(1) + dt * (u.u_perp - f) / params.m_perp;
    n.xi_hat(0) = d.xi_hat(0) + dt * n.xi_hat(1);
    n.xi_hat(3) = d.xi_hat(3) + dt * (u.u_par - mu * f_fric) / params.m_par;
    n.xi_hat(2) = d.xi_hat(2) + dt * n.xi_hat(3);
    // mu follows a random walk.

    Eigen::Matrix<double, 5, 5> a = Eigen::Matrix<double, 5, 5>::Identity();
    a(0, 1) = dt;
    a(2, 3) = dt;
    a(3, 4) = -dt * f_fric / params.m_par;
    a(2, 4) = -dt * dt * f_fric / params.m_par;
    n.p_xi = a * n.p_xi * a.transpose() + d.q_xi;
    if (engaged) {
        // The friction prediction inherits the force-fit residual; counting
        // it as tangential process noise keeps the covariance honest.
        const double friction_err =
            std::abs(mu) * std::min(d.fit_error_ema, f_fric);
        n.p_xi(3, 3) += std::pow(dt * friction_err / params.m_par, 2);

        // The friction variance keeps a floor so the gain stays alive, and
        // reopens further while a sustained tangential innovation offset
        // shows the filter has become overconfident in the v_par/mu pair.
        n.engaged_steps = d.engaged_steps + 1;
        n.p_xi(4, 4) = std::max(n.p_xi(4, 4), kMuVarianceFloor);
        if (std::abs(d.tang_innov_bias) > 0.15) {
            n.p_xi(3, 3) *= 1.05;
            n.p_xi(4, 4) *= 1.05;
        }
    }
    symmetrize(n.p_xi);

    n.f_perp_hat = f;
    if (!n.xi_hat.allFinite() || !finite(n.p_xi))
        throw EstimatorDiverged("state prediction diverged");
    return n;
}

DekfState update_state(const DekfState& d, double x_perp_meas,
                       double x_par_meas) {
    Eigen::Matrix<double, 2, 5> c = Eigen::Matrix<double, 2, 5>::Zero();
    c(0, 0) = 1.0;
    c(1, 2) = 1.0;

    const Eigen::Matrix2d s = c * d.p_xi * c.transpose() + d.r_xi;
    const double det = s(0, 0) * s(1, 1) - s(0, 1) * s(1, 0);
    if (!std::isfinite(det) || std::abs(det) < 1e-300)
        throw SingularUpdate("innovation covariance is not invertible");
    Eigen::Matrix2d s_inv;
    s_inv << s(1, 1), -s(0, 1), -s(1, 0), s(0, 0);
    s_inv /= det;

    const Eigen::Matrix<double, 5, 2> k = d.p_xi * c.transpose() * s_inv;
    Eigen::Vector2d innovation(x_perp_meas - d.xi_hat(0),
                               x_par_meas - d.xi_hat(2));

    DekfState n = d;
    n.xi_hat = d.xi_hat + k * innovation;
    const Eigen::Matrix<double, 5, 5> ikc =
        Eigen::Matrix<double, 5, 5>::Identity() - k * c;
    n.p_xi = ikc * d.p_xi * ikc.transpose() + k * d.r_xi * k.transpose();
    symmetrize(n.p_xi);

    constexpr double kBiasEmaRate = 0.01;
    n.tang_innov_bias = (1.0 - kBiasEmaRate) * d.tang_innov_bias +
                        kBiasEmaRate * innovation(1) / std::sqrt(s(1, 1));

    if (!n.xi_hat.allFinite() || !finite(n.p_xi))
        throw EstimatorDiverged("state update diverged");
    return n;
}

DekfState update_viscoelastic(const DekfState& d, double f_perp_meas) {
    // A sample carries viscoelastic information when either the sensor sees
    // contact or the state estimate claims penetration; the latter keeps the
    // genuine near-zero-force grazing samples that anchor the low end of the
    // force regression.
    const bool measured_contact = f_perp_meas > kContactForceGate;
    const bool informative = measured_contact || d.estimated_contact();

    DekfState n = d;
    n.last_f_meas = std::max(0.0, f_perp_meas);
    Eigen::RowVector3d c(1.0, d.xi_hat(0), d.xi_hat(1));
    if (informative) {
        n.p_theta = d.p_theta + d.q_theta;
        const double s = (c * n.p_theta * c.transpose())(0) + d.r_theta;
        const Eigen::Vector3d k = n.p_theta * c.transpose() / s;
        const double innovation = f_perp_meas - (c * d.theta_hat)(0);
        constexpr double kEmaRate = 0.02;
        n.fit_error_ema = (1.0 - kEmaRate) * d.fit_error_ema +
                          kEmaRate * std::abs(innovation);
        n.force_ema = (1.0 - kEmaRate) * d.force_ema +
                      kEmaRate * std::abs(f_perp_meas);
        n.theta_hat = d.theta_hat + k * innovation;
        const Eigen::Matrix3d ikc = Eigen::Matrix3d::Identity() - k * c;
        n.p_theta = ikc * n.p_theta * ikc.transpose() + k * d.r_theta * k.transpose();
        symmetrize(n.p_theta);
    }

    // The predicted force is the fitted law clamped at zero; out of contact
    // the fit extrapolates negative, so the clamp alone switches it off
    // smoothly instead of a hard gate that kicks the state prediction at
    // every contact transition.
    n.f_perp_hat = std::max(0.0, (c * n.theta_hat)(0));
    if (!n.theta_hat.allFinite() || !finite(n.p_theta) || !std::isfinite(n.f_perp_hat))
        throw EstimatorDiverged("viscoelastic update diverged");
    return n;
}

double min_eigenvalue(const Eigen::Ref<const Eigen::MatrixXd>& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
    return eig.eigenvalues().minCoeff();
}

ImpactWindow detect_impact(std::span<const ImpactSample> stream,
                           double force_threshold) {
    if (stream.size() < 3) throw NoImpact("stream too short for impact detection");

    std::size_t onset = stream.size();
    for (std::size_t i = 0; i + 1 < stream.size(); ++i) {
        if (stream[i].f_perp > force_threshold &&
            stream[i + 1].f_perp > force_threshold) {
            onset = i;
            break;
        }
    }
    if (onset == stream.size())
        throw NoImpact("no contact force above threshold");

    const double t_onset = stream[onset].t;
    const double t_minus = t_onset - kImpactHalfWindow;
    const double t_plus = t_onset + kImpactHalfWindow;
    if (t_minus < stream.front().t || t_plus > stream.back().t)
        throw NoImpact("impact window extends outside the recorded action");

    std::size_t zero = stream.size();
    for (std::size_t i = onset + 1; i < stream.size() && stream[i].t <= t_plus; ++i) {
        if (stream[i].v_perp_hat <= 0.0) {
            zero = i;
            break;
        }
    }
    if (zero == stream.size())
        throw NoImpact("no velocity reversal inside the impact window");

    ImpactWindow w;
    w.t_minus = t_minus;
    w.t_zero = stream[zero].t;
    w.t_plus = t_plus;
    w.v_at_t0 = stream[zero].v_perp_hat;
    w.v_at_tminus = 0.0;
    double best = std::numeric_limits<double>::max();
    for (const auto& s : stream) {
        if (s.t >= t_minus && s.t <= t_plus) w.force_trace.push_back(s);
        const double dist = std::abs(s.t - t_minus);
        if (dist < best) {
            best = dist;
            w.v_at_tminus = s.v_perp_hat;
        }
    }
    return w;
}

RestitutionEstimate estimate_restitution(const ImpactWindow& w,
                                         const RobotParams& params) {
    const double denom = params.m_perp * (w.v_at_t0 + w.v_at_tminus);
    if (std::abs(denom) < 1e-9)
        throw DegenerateImpact("deformation impulse below 1e-9");

    // Trapezoidal restoration impulse over [t_zero, t_plus].
    double impulse = 0.0;
    for (std::size_t i = 0; i + 1 < w.force_trace.size(); ++i) {
        const auto& a = w.force_trace[i];
        const auto& b = w.force_trace[i + 1];
        if (b.t <= w.t_zero || a.t >= w.t_plus) continue;
        impulse += 0.5 * (a.f_perp + b.f_perp) * (b.t - a.t);
    }

    RestitutionEstimate est;
    est.raw = std::abs(impulse / denom);
    est.clipped = est.raw > 1.0;
    est.value = std::clamp(est.raw, 0.0, 1.5);
    return est;
}

}  // namespace haptest
