// Scratch calibration harness; not part of the build.
#include <cmath>
#include <cstdio>

#include "haptest/config.hpp"
#include "haptest/errors.hpp"
#include "haptest/control.hpp"

#ifndef MU_FLOOR
#define MU_FLOOR 0.0
#endif
#ifndef ORACLE_MEAS
#define ORACLE_MEAS 0
#endif
#include "haptest/exploration.hpp"

using namespace haptest;

static Trajectory validation_traj() {
    return [](double t) {
        Reference r;
        r.x_perp = 0.012 * std::sin(15.0 * t);
        r.v_perp = 0.012 * 15.0 * std::cos(15.0 * t);
        r.x_par = 0.01 * t;
        r.v_par = 0.01;
        return r;
    };
}

static double mean_range(const std::vector<double>& v, const std::vector<double>& t,
                         double t0, double t1) {
    double s = 0; int n = 0;
    for (size_t i = 0; i < v.size(); ++i)
        if (t[i] >= t0 && t[i] <= t1) { s += v[i]; ++n; }
    return s / n;
}

int main(int argc, char** argv) {
    ExperimentConfig cfg = default_config();
    const Catalog cat = default_catalog();

    if (argc > 1 && std::string(argv[1]) == "tap") {
        for (const auto& s : cat.objects) {
            ActionSpec tap = ActionSpec::tapping();
            for (int trial = 0; trial < 5; ++trial) {
                try {
                    TrialRecord rec = run_trial(s, tap, cfg.robot, cfg.trial_config(),
                                                mix_seed(1, s.label, 0, trial), trial);
                    std::printf("obj %2d kappa %6.0f d %4.0f psi %.2f -> psi_hat %.4f\n",
                                s.label, s.stiffness, s.viscosity, s.restitution,
                                rec.psi_hat.value_or(-1));
                } catch (const Error& e) {
                    std::printf("obj %2d FAILED: %s\n", s.label, e.what());
                }
            }
        }
        return 0;
    }

    if (argc > 1 && std::string(argv[1]) == "slide") {
        for (const auto& s : cat.objects) {
            ActionSpec sl = ActionSpec::sliding();
            TrialRecord rec = run_trial(s, sl, cfg.robot, cfg.trial_config(),
                                        mix_seed(1, s.label, 2, 0), 0);
            const double mu = rec.mean_tail(rec.xi_hat[4], 2.0);
            std::printf("obj %2d mu %.2f -> mu_hat %.4f (err %+.1f%%)\n", s.label,
                        s.friction, mu, 100 * (mu - s.friction) / s.friction);
        }
        return 0;
    }

    if (argc > 1 && std::string(argv[1]) == "indent") {
        for (const auto& s : cat.objects) {
            ActionSpec in = ActionSpec::indentation();
            TrialRecord rec = run_trial(s, in, cfg.robot, cfg.trial_config(),
                                        mix_seed(1, s.label, 1, 0), 0);
            const double k = rec.mean_tail(rec.theta_hat[1], 2.0);
            const double d = rec.mean_tail(rec.theta_hat[2], 2.0);
            std::printf("obj %2d kappa %6.0f -> %8.2f (%+5.1f%%)  d %4.0f -> %6.2f (%+5.1f%%)\n",
                        s.label, s.stiffness, k, 100 * (k - s.stiffness) / s.stiffness,
                        s.viscosity, d, 100 * (d - s.viscosity) / s.viscosity);
        }
        return 0;
    }


    if (argc > 1 && std::string(argv[1]) == "trace") {
        const int which = argc > 2 ? atoi(argv[2]) : 1;
        const SurfaceSpec s = cat.by_label(which);
        TrialRecord rec = run_custom_trial(s, validation_traj(), 20.0, cfg.robot,
                                           cfg.trial_config(), 42);
        // per-0.5s bucket: rms of x_perp estimation error in/out of contact
        const double x0 = s.rest_position();
        for (double t0 = 0; t0 < 20.0; t0 += 2.0) {
            double ein = 0, eout = 0; int nin = 0, nout = 0;
            double emu = 0;
            for (size_t i = 0; i < rec.t.size(); ++i) {
                if (rec.t[i] < t0 || rec.t[i] >= t0 + 2.0) continue;
                const double err = rec.xi_hat[0][i] - rec.x_perp_true[i];
                if (rec.x_perp_true[i] > x0) { ein += err*err; ++nin; }
                else { eout += err*err; ++nout; }
                emu = rec.xi_hat[4][i];
            }
            std::printf("t %4.1f  xerr_in %7.4f mm (n=%d)  xerr_out %7.4f mm (n=%d)  mu %.3f  kappa %.1f  d %.2f  f0 %.2f\n",
                        t0, 1000*std::sqrt(ein/std::max(nin,1)), nin,
                        1000*std::sqrt(eout/std::max(nout,1)), nout, emu,
                        rec.theta_hat[1].empty()?0:rec.theta_hat[1][std::min(rec.t.size()-1, size_t((t0+2.0)*1000-1))],
                        rec.theta_hat[2][std::min(rec.t.size()-1, size_t((t0+2.0)*1000-1))],
                        rec.theta_hat[0][std::min(rec.t.size()-1, size_t((t0+2.0)*1000-1))]);
        }
        return 0;
    }





    if (argc > 1 && std::string(argv[1]) == "oracle") {
        // Filter clone with the friction channel driven by the true force.
        const int label = argc > 2 ? atoi(argv[2]) : 11;
        const SurfaceSpec s = cat.by_label(label);
        NoiseSource rng(42);
        RobotParams rp = cfg.robot;
        TrialConfig tc = cfg.trial_config();
        DekfState d = tc.estimator.make(rp);
        Trajectory traj = validation_traj();
        const Reference r0 = traj(0.0);
        SimState st; st.x_perp = r0.x_perp; st.v_perp = r0.v_perp;
        ControlForces u{};
        const double dt = rp.dt;
        long vstats_n = 0, vstats_neg = 0; double vstats_mean = 0, vstats_m2 = 0;
        for (int k = 0; k < 20000; ++k) {
            const ForceSample f = contact_force(st, s);
            Measurement z = measure(st, f, rp, rng);
#if CLEAN_MEAS
            z.x_perp = st.x_perp; z.x_par = st.x_par; z.f_perp = f.f_perp;
#endif
            // prediction with oracle friction force
            {
                const double fhat = std::max(0.0, d.theta_hat(0) + d.theta_hat(1)*d.xi_hat(0) + d.theta_hat(2)*d.xi_hat(1));
                const double ffric = ORACLE_MEAS ? std::max(0.0, z.f_perp) : f.f_perp;
                (void)0;
                DekfState n = d;
                bool engaged = d.friction_engaged || d.friction_ready();
                if (!d.friction_engaged && engaged) {
                    n.friction_engaged = true;
                    for (int i : {2,3}) { n.p_xi.row(i).setZero(); n.p_xi.col(i).setZero(); }
                    n.p_xi(2,2) = 10.0; n.p_xi(3,3) = 0.1;
                }
                n.xi_hat(0) = d.xi_hat(0) + dt*d.xi_hat(1);
                n.xi_hat(1) = d.xi_hat(1) + dt*(u.u_perp - fhat)/rp.m_perp;
                n.xi_hat(2) = d.xi_hat(2) + dt*d.xi_hat(3);
                n.xi_hat(3) = d.xi_hat(3) + dt*(u.u_par - (engaged ? d.xi_hat(4)*ffric : 0.0))/rp.m_par;
                Eigen::Matrix<double,5,5> a = Eigen::Matrix<double,5,5>::Identity();
                a(0,1) = dt; a(2,3) = dt;
                a(3,4) = engaged ? -dt*ffric/rp.m_par : 0.0;
                n.p_xi = a*n.p_xi*a.transpose() + d.q_xi;
                if (engaged && n.p_xi(4,4) < MU_FLOOR) n.p_xi(4,4) = MU_FLOOR;
                n.p_xi = 0.5*(n.p_xi + n.p_xi.transpose()).eval();
                n.f_perp_hat = fhat;
                d = n;
            }
            d = update_state(d, z.x_perp, z.x_par);
            d = update_viscoelastic(d, z.f_perp);
            if (k >= 2000) {
                vstats_n++; vstats_mean += st.v_par;
                if (st.v_par < 0) vstats_neg++;
                vstats_m2 += st.v_par * st.v_par;
            }
            if (k < 2500 ? (k % 100 == 0) : ((k+1) % 4000 == 0)) {
                Eigen::Matrix<double, 2, 5> C = Eigen::Matrix<double, 2, 5>::Zero();
                C(0,0) = 1; C(1,2) = 1;
                Eigen::Matrix2d S = C * d.p_xi * C.transpose() + d.r_xi;
                Eigen::Matrix<double, 5, 2> K = d.p_xi * C.transpose() * S.inverse();
                std::printf("t %6.3f mu %+7.3f P44 %8.2e K41 %+9.2e dxpar %+8.5f dvpar %+8.5f innov %+8.5f eng %d\n",
                            st.t, d.xi_hat(4), d.p_xi(4,4), K(4,1),
                            d.xi_hat(2) - st.x_par, d.xi_hat(3) - st.v_par,
                            z.x_par - d.xi_hat(2), int(d.friction_engaged));
            }
            u = pd_with_feedforward(tc.controller, d, traj(st.t));
            st = integrate(st, u, f, s.rest_position(), rp, rng);
        }
        std::printf("v_par true: mean %.4f std %.4f frac<0 %.3f\n",
                    vstats_mean / vstats_n,
                    std::sqrt(vstats_m2 / vstats_n - std::pow(vstats_mean / vstats_n, 2)),
                    double(vstats_neg) / vstats_n);
        return 0;
    }

    if (argc > 1 && std::string(argv[1]) == "mutrace") {
        const int label = argc > 2 ? atoi(argv[2]) : 11;
        const bool deep = argc > 3 && std::string(argv[3]) == "deep";
        const SurfaceSpec s = cat.by_label(label);
        Trajectory traj = deep ? Trajectory([](double t) {
            Reference r;
            r.x_perp = 0.014 + 0.012 * std::sin(15.0 * t);
            r.v_perp = 0.012 * 15.0 * std::cos(15.0 * t);
            r.x_par = 0.01 * t; r.v_par = 0.01;
            return r;
        }) : validation_traj();
        // Replicate the trial loop manually so internals can be printed.
        NoiseSource rng(42);
        RobotParams rp = cfg.robot;
        if (argc > 4 && std::string(argv[4]) == "nomeas") rp.r_meas_pos = 0.0;
        if (argc > 4 && std::string(argv[4]) == "noproc") rp.q_process.setZero();
        TrialConfig tc = cfg.trial_config();
        DekfState d = tc.estimator.make(rp);
        const Reference r0 = traj(0.0);
        SimState st; st.x_perp = r0.x_perp; st.v_perp = r0.v_perp;
        st.x_par = r0.x_par; st.v_par = r0.v_par;
        ControlForces u{};
        double sum_f = 0, sum_fhat = 0, sum_dv = 0, sum_dx = 0; int n = 0;
        long vn = 0, vneg = 0; double vm = 0, vm2 = 0;
        double x_par_ctl = 0, v_par_ctl = 0;
        for (int k = 0; k < 20000; ++k) {
            const ForceSample f = contact_force(st, s);
            const Measurement z = measure(st, f, rp, rng);
            d = predict_state(d, u, rp);
            d = update_state(d, z.x_perp, z.x_par);
            d = update_viscoelastic(d, z.f_perp);
            if (f.f_perp > 0.05) {
                sum_f += f.f_perp; sum_fhat += d.f_perp_hat;
                sum_dv += d.xi_hat(3) - st.v_par;
                sum_dx += d.xi_hat(2) - st.x_par;
                ++n;
            }
            if ((k + 1) % 2000 == 0) {
                // post-predict gain structure for the mu row
                Eigen::Matrix<double, 2, 5> C = Eigen::Matrix<double, 2, 5>::Zero();
                C(0, 0) = 1; C(1, 2) = 1;
                Eigen::Matrix2d S = C * d.p_xi * C.transpose() + d.r_xi;
                Eigen::Matrix<double, 5, 2> K = d.p_xi * C.transpose() * S.inverse();
                std::printf("t %4.1f mu %6.3f P44 %8.2e P24 %+9.2e P34 %+9.2e K40 %+9.2e K41 %+9.2e fhat/f %6.3f dv %+8.5f dx %+8.5f eng %d\n",
                            st.t, d.xi_hat(4), d.p_xi(4, 4), d.p_xi(2, 4), d.p_xi(3, 4),
                            K(4, 0), K(4, 1),
                            sum_fhat / std::max(sum_f, 1e-9), sum_dv / std::max(n, 1),
                            sum_dx / std::max(n, 1), int(d.friction_engaged));
                sum_f = sum_fhat = sum_dv = sum_dx = 0; n = 0;
            }
            x_par_ctl += 0.05 * (d.xi_hat(2) - x_par_ctl);
            v_par_ctl += 0.5 * (d.xi_hat(3) - v_par_ctl);
            DekfState cv = d;
            cv.xi_hat(2) = x_par_ctl;
            cv.xi_hat(3) = v_par_ctl;
            u = pd_with_feedforward(tc.controller, cv, traj(st.t));
            st = integrate(st, u, f, s.rest_position(), rp, rng);
            if (st.t > 2.0) {
                ++vn; vm += st.v_par; vm2 += st.v_par * st.v_par;
                if (st.v_par < 0) ++vneg;
            }
        }
        std::printf("v_par: mean %.4f std %.4f frac<0 %.3f\n", vm / vn,
                    std::sqrt(vm2 / vn - vm * vm / vn / vn), double(vneg) / vn);
        return 0;
    }

    if (argc > 1 && std::string(argv[1]) == "deep") {
        // Sustained-contact variant: same sinusoid raised fully into contact.
        auto deep_traj = []() {
            return Trajectory([](double t) {
                Reference r;
                r.x_perp = 0.014 + 0.012 * std::sin(15.0 * t);
                r.v_perp = 0.012 * 15.0 * std::cos(15.0 * t);
                r.x_par = 0.01 * t;
                r.v_par = 0.01;
                return r;
            });
        };
        for (int which = 0; which < 2; ++which) {
            const SurfaceSpec s = which == 0 ? cat.by_label(1) : cat.by_label(11);
            TrialRecord rec = run_custom_trial(s, deep_traj(), 20.0, cfg.robot,
                                               cfg.trial_config(), 42);
            const double k = mean_range(rec.theta_hat[1], rec.t, 10, 20);
            const double d = mean_range(rec.theta_hat[2], rec.t, 10, 20);
            const double mu = mean_range(rec.xi_hat[4], rec.t, 10, 20);
            double rms = 0, berr = 0; int n = 0;
            for (size_t i = 0; i < rec.t.size(); ++i) {
                if (rec.t[i] < 5) continue;
                const double ref = 0.014 + 0.012 * std::sin(15.0 * rec.t[i]);
                rms += std::pow(rec.x_perp_true[i] - ref, 2);
                berr += rec.xi_hat[0][i] - rec.x_perp_true[i];
                ++n;
            }
            std::printf("deep %s: k %+6.1f%% d %+6.1f%% mu %+6.1f%% rms %.5f bias %.4f f0 %.2f\n",
                        which == 0 ? "stiff" : "soft ",
                        100 * (k - s.stiffness) / s.stiffness,
                        100 * (d - s.viscosity) / s.viscosity,
                        100 * (mu - s.friction) / s.friction,
                        std::sqrt(rms / n), berr / n,
                        mean_range(rec.theta_hat[0], rec.t, 10, 20));
        }
        return 0;
    }

    if (argc > 1 && std::string(argv[1]) == "mu") {
        for (double qmu : {1e-8, 1e-7, 1e-6})
            for (double qvmult : {1.0}) {
                ExperimentConfig c2 = cfg;
                const double qv = std::pow(c2.robot.dt * 0.05 / c2.robot.m_par, 2);
                c2.estimator.q_xi_diag << 1e-12, -1.0, 1e-12, qv * qvmult, qmu;
                double lo1 = 1e9, hi1 = -1e9, lo2 = 1e9, hi2 = -1e9;
                for (int seed = 0; seed < 6; ++seed) {
                    for (int which = 0; which < 2; ++which) {
                        const SurfaceSpec s = which == 0 ? cat.by_label(1) : cat.by_label(11);
                        TrialRecord rec = run_custom_trial(s, validation_traj(), 20.0,
                                                           c2.robot, c2.trial_config(),
                                                           200 + seed);
                        const double mu = mean_range(rec.xi_hat[4], rec.t, 10, 20);
                        const double e = 100 * (mu - s.friction) / s.friction;
                        if (which == 0) { lo1 = std::min(lo1, e); hi1 = std::max(hi1, e); }
                        else { lo2 = std::min(lo2, e); hi2 = std::max(hi2, e); }
                    }
                }
                std::printf("qmu %.0e qvpar x%3.0f: stiff [%+6.1f,%+6.1f] soft [%+6.1f,%+6.1f]\n",
                            qmu, qvmult, lo1, hi1, lo2, hi2);
            }
        return 0;
    }

    if (argc > 1 && std::string(argv[1]) == "tune2") {
        for (double qpos : {1e-12, 1e-9, 3e-8, 3e-7})
            for (double qmu : {1e-8, 1e-7}) {
                ExperimentConfig c2 = cfg;
                c2.estimator.q_xi_diag << qpos, -1.0, qpos, -1.0, qmu;
                std::printf("qpos %.0e qmu %.0e:\n", qpos, qmu);
                for (int which = 0; which < 2; ++which) {
                    const SurfaceSpec s = which == 0 ? cat.by_label(1) : cat.by_label(11);
                    double ek[9], ed[9], em[9], er[9];
                    for (int seed = 0; seed < 4; ++seed) {
                        TrialRecord rec = run_custom_trial(s, validation_traj(), 20.0,
                                                           c2.robot, c2.trial_config(),
                                                           100 + seed);
                        const double k = mean_range(rec.theta_hat[1], rec.t, 10, 20);
                        const double d = mean_range(rec.theta_hat[2], rec.t, 10, 20);
                        const double mu = mean_range(rec.xi_hat[4], rec.t, 10, 20);
                        double rms = 0; int n = 0;
                        for (size_t i = 0; i < rec.t.size(); ++i) {
                            if (rec.t[i] < 5) continue;
                            const double ref = 0.012 * std::sin(15.0 * rec.t[i]);
                            rms += std::pow(rec.x_perp_true[i] - ref, 2); ++n;
                        }
                        ek[seed] = 100 * (k - s.stiffness) / s.stiffness;
                        ed[seed] = 100 * (d - s.viscosity) / s.viscosity;
                        em[seed] = 100 * (mu - s.friction) / s.friction;
                        er[seed] = std::sqrt(rms / n);
                    }
                    auto rng = [&](double* v) {
                        double lo = v[0], hi = v[0];
                        for (int i = 1; i < 4; ++i) { lo = std::min(lo, v[i]); hi = std::max(hi, v[i]); }
                        std::printf("[%+6.1f,%+6.1f]", lo, hi);
                    };
                    std::printf("  %s: k ", which == 0 ? "stiff" : "soft ");
                    rng(ek); std::printf("  d "); rng(ed); std::printf("  mu "); rng(em);
                    std::printf("  rms %.5f\n", er[0]);
                }
            }
        return 0;
    }

    if (argc > 1 && std::string(argv[1]) == "sweep") {
        for (double qv : {2.5e-9, 1e-7, 1e-6, 1e-5})
            for (double qmu : {1e-8, 1e-7, 1e-6, 1e-5}) {
                ExperimentConfig c2 = cfg;
                c2.estimator.q_xi_diag << 1e-12, qv, 1e-12, qv, qmu;
                std::printf("qv %.1e qmu %.1e:\n", qv, qmu);
                for (int which = 0; which < 2; ++which) {
                    const SurfaceSpec s = which == 0 ? cat.by_label(1) : cat.by_label(11);
                    TrialRecord rec = run_custom_trial(s, validation_traj(), 20.0,
                                                       c2.robot, c2.trial_config(),
                                                       42 + which);
                    const double k = mean_range(rec.theta_hat[1], rec.t, 10, 20);
                    const double d = mean_range(rec.theta_hat[2], rec.t, 10, 20);
                    const double mu = mean_range(rec.xi_hat[4], rec.t, 10, 20);
                    double rms = 0; int n = 0;
                    for (size_t i = 0; i < rec.t.size(); ++i) {
                        if (rec.t[i] < 5) continue;
                        const double ref = 0.012 * std::sin(15.0 * rec.t[i]);
                        rms += std::pow(rec.x_perp_true[i] - ref, 2); ++n;
                    }
                    rms = std::sqrt(rms / n);
                    std::printf("  %s: k %+6.1f%%  d %+6.1f%%  mu %+6.1f%%  rms %.5f\n",
                                which == 0 ? "stiff" : "soft ",
                                100 * (k - s.stiffness) / s.stiffness,
                                100 * (d - s.viscosity) / s.viscosity,
                                100 * (mu - s.friction) / s.friction, rms);
                }
            }
        return 0;
    }

    // Validation sweep on the two reference surfaces.
    for (int which = 0; which < 2; ++which) {
        const SurfaceSpec s = which == 0 ? cat.by_label(1) : cat.by_label(11);
        TrialRecord rec = run_custom_trial(s, validation_traj(), 20.0, cfg.robot,
                                           cfg.trial_config(), 42 + which);
        const double k = mean_range(rec.theta_hat[1], rec.t, 10, 20);
        const double d = mean_range(rec.theta_hat[2], rec.t, 10, 20);
        const double mu = mean_range(rec.xi_hat[4], rec.t, 10, 20);
        // Tracking RMS over [5, 20] on the normal axis.
        double rms = 0; int n = 0;
        for (size_t i = 0; i < rec.t.size(); ++i) {
            if (rec.t[i] < 5) continue;
            const double ref = 0.012 * std::sin(15.0 * rec.t[i]);
            rms += std::pow(rec.x_perp_true[i] - ref, 2);
            ++n;
        }
        rms = std::sqrt(rms / n);
        std::printf("%s: kappa %8.2f/%.0f (%+5.1f%%)  d %6.2f/%.0f (%+5.1f%%)  mu %.4f/%.2f (%+5.1f%%)  rms %.5f m\n",
                    which == 0 ? "stiff" : "soft ", k, s.stiffness,
                    100 * (k - s.stiffness) / s.stiffness, d, s.viscosity,
                    100 * (d - s.viscosity) / s.viscosity, mu, s.friction,
                    100 * (mu - s.friction) / s.friction, rms);
    }
    return 0;
}
