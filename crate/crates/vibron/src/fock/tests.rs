// Copyright 2026 vibron-lab contributors
// SPDX-License-Identifier: Apache-2.0

use super::*;
use crate::gaussian::{self, CorrelatorState};
use proptest::prelude::*;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn cooled_mode(gamma: f64, nbar: f64, n_max: usize) -> FockSystem {
    let mut s = FockSystem::new(vec![ModeSpec { site: 0, n_max }], vec![]);
    s.add_hamiltonian(Operator::n(0) * 3.0);
    s.add_cooling(0, &ReservoirParams::from_rates(gamma, nbar).unwrap());
    s
}

fn two_mode(j: C64, gamma: f64, nbar: f64, n_max: usize) -> FockSystem {
    let modes = vec![ModeSpec { site: 0, n_max }, ModeSpec { site: 1, n_max }];
    let mut s = FockSystem::new(modes, vec![]);
    s.add_hamiltonian(Operator::n(0) * 0.4 + Operator::n(1) * -0.2 + Operator::hopping(0, 1, j));
    s.add_cooling(0, &ReservoirParams::from_rates(gamma, nbar).unwrap());
    s
}

#[test]
fn operator_matrices() {
    let s = FockSystem::new(vec![ModeSpec { site: 0, n_max: 3 }], vec![0]);
    let a = s.matrix(&Operator::a(0)).to_dense();
    let ad = s.matrix(&Operator::adag(0)).to_dense();
    assert!((a.adjoint() - &ad).norm() < 1e-15);
    let n = s.matrix(&Operator::n(0)).to_dense();
    assert!((&ad * &a - &n).norm() < 1e-14);
    // spin up is index 0 and the spin is the least significant digit
    let sz = s.matrix(&Operator::sz(0)).to_dense();
    assert_eq!(sz[(0, 0)], c(1.0, 0.0));
    assert_eq!(sz[(1, 1)], c(-1.0, 0.0));
    let sp = s.matrix(&Operator::sp(0)).to_dense();
    assert_eq!(sp[(0, 1)], c(1.0, 0.0));
    let sy = s.matrix(&Operator::sy(0)).to_dense();
    let sx = s.matrix(&Operator::sx(0)).to_dense();
    let comm = &sx * &sy - &sy * &sx;
    assert!((comm - sz * c(0.0, 2.0)).norm() < 1e-14);
    assert_eq!(s.basis_index(&[2], &[false]).unwrap(), 5);
}

#[test]
fn validation_guards() {
    let big = FockSystem::new(vec![ModeSpec { site: 0, n_max: 63 }; 3], vec![]);
    assert!(matches!(big.validate(), Err(Error::DimensionGuard { dim: 262144, .. })));
    let mut s = FockSystem::new(vec![ModeSpec { site: 0, n_max: 2 }; 2], vec![]);
    s.add_hamiltonian(Operator::adag(0) * Operator::a(1));
    assert!(s.validate().is_err());
    let mut s = FockSystem::new(vec![ModeSpec { site: 0, n_max: 0 }], vec![]);
    assert!(s.validate().is_err());
    s.modes[0].n_max = 1;
    s.add_hamiltonian(Operator::sz(0));
    assert!(s.validate().is_err());
}

#[test]
fn idle_system_is_frozen() {
    let s = FockSystem::new(vec![ModeSpec { site: 0, n_max: 3 }], vec![0]);
    let mut rho0 = s.thermal_state(&[0.7], &[true]).unwrap();
    rho0.rho[(0, 2)] = c(0.05, 0.02);
    rho0.rho[(2, 0)] = c(0.05, -0.02);
    let tr = lindblad_evolve(&s, &rho0, &[0.0, 1.0, 5.0]).unwrap();
    for st in &tr.states {
        assert!((&st.rho - &rho0.rho).norm() < 1e-15);
    }
}

#[test]
fn cooling_relaxes_to_reservoir_occupation() {
    let (gamma, nbar) = (0.8, 0.4);
    let s = cooled_mode(gamma, nbar, 45);
    let rho0 = s.thermal_state(&[1.5], &[]).unwrap();
    let n0 = expectation(&s, &rho0, &Operator::n(0)).re;
    let times: Vec<f64> = (0..=10).map(|k| k as f64 * 0.3).collect();
    let obs = lindblad_observe(&s, &rho0, &times, &[Operator::n(0)]).unwrap();
    for (t, n) in times.iter().zip(obs.series(0)) {
        let exact = nbar + (n0 - nbar) * (-2.0 * gamma * t).exp();
        assert!((n - exact).abs() < 1e-6, "t={t} n={n} exact={exact}");
    }
    assert!(obs.max_trace_drift < 1e-8);
}

#[test]
fn steady_state_is_thermal() {
    let nbar = 1.5;
    let s = cooled_mode(1.0, nbar, 40);
    let rho = steady_state_dm(&s).unwrap();
    rho.validate().unwrap();
    let q = nbar / (nbar + 1.0);
    for k in 0..10 {
        let p = q.powi(k as i32) / (nbar + 1.0);
        assert!((rho.rho[(k, k)].re - p).abs() < 1e-7, "k={k}");
    }
}

#[test]
fn steady_state_rejects_degenerate() {
    let mut s = FockSystem::new(vec![ModeSpec { site: 0, n_max: 3 }], vec![]);
    s.add_hamiltonian(Operator::n(0));
    assert!(matches!(steady_state_dm(&s), Err(Error::DegenerateSteadyState { .. })));
}

#[test]
fn number_noise_of_a_cooled_mode() {
    let (gamma, nbar) = (0.5, 0.6);
    let s = cooled_mode(gamma, nbar, 40);
    let r = regression_spectrum(&s, &Operator::n(0), SpectrumMethod::Direct).unwrap();
    assert!((r.mean - nbar).abs() < 1e-8);
    let oracle = (nbar * nbar + nbar) / (2.0 * gamma);
    assert!((r.noise0 - oracle).abs() < 1e-6 * oracle, "{} vs {oracle}", r.noise0);
    let id = regression_spectrum(&s, &Operator::identity(), SpectrumMethod::Direct).unwrap();
    assert!((id.mean - 1.0).abs() < 1e-12 && id.noise0.abs() < 1e-12);
}

#[test]
fn regression_routes_agree() {
    let s = two_mode(c(0.7, 0.3), 0.9, 0.5, 10);
    let op = Operator::hopping(0, 1, c(0.0, -1.0));
    let d = regression_spectrum(&s, &op, SpectrumMethod::Direct).unwrap();
    let t = regression_spectrum(&s, &op, SpectrumMethod::TimeIntegration).unwrap();
    assert!((d.s0 - t.s0).norm() < 5e-3 * d.s0.norm(), "{:?} vs {:?}", d.s0, t.s0);
    let dn = regression_spectrum(&s, &Operator::n(1), SpectrumMethod::Direct).unwrap();
    let tn = regression_spectrum(&s, &Operator::n(1), SpectrumMethod::TimeIntegration).unwrap();
    assert!((dn.s0 - tn.s0).norm() < 5e-3 * dn.s0.norm());
}

#[test]
fn regression_reports_undamped_correlator() {
    // the spin is decoupled from the cooled mode, so its sigma^x fluctuations never decay
    let mut s = FockSystem::new(vec![ModeSpec { site: 0, n_max: 2 }], vec![0]);
    s.add_cooling(0, &ReservoirParams::from_rates(1.0, 0.2).unwrap());
    s.add_hamiltonian(Operator::sz(0) * 0.3);
    assert!(steady_state_dm(&s).is_err());
}

#[test]
fn gaussian_equivalence_small() {
    let s = two_mode(c(0.6, -0.25), 0.7, 0.3, 12);
    let gen = s.to_gaussian().unwrap();
    let rho0 = s.thermal_state(&[0.1, 0.5], &[]).unwrap();
    let times: Vec<f64> = (0..=8).map(|k| k as f64 * 0.5).collect();
    let obs_ops: Vec<Operator> = (0..2)
        .flat_map(|i| (0..2).map(move |j| Operator::adag(i) * Operator::a(j)))
        .collect();
    let fock = lindblad_observe(&s, &rho0, &times, &obs_ops).unwrap();
    let c0 = CorrelatorState::diagonal(&[0.1, 0.5]);
    let gauss = gaussian::evolve_at(&gen, &c0, &times).unwrap();
    for (k, g) in gauss.iter().enumerate() {
        for i in 0..2 {
            for j in 0..2 {
                let f = fock.values[k][2 * i + j];
                assert!((f - g.cmat[(i, j)]).norm() < 2e-4, "t={} ({i},{j}) {f} vs {}", times[k], g.cmat[(i, j)]);
            }
        }
    }
}

#[test]
fn gaussian_mapping_matches_edge_builder() {
    let r = ReservoirParams::from_lambdas(c(0.3, 0.1), c(1.1, -0.2));
    let tb = crate::chain::TightBinding::from_parts(
        vec![1.0, 1.3],
        CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.2, 0.0), c(0.2, 0.0), c(0.0, 0.0)]),
    )
    .unwrap();
    let mut res = gaussian::Reservoirs::new();
    res.insert(0, r.clone());
    let edge = gaussian::build_edge_generator(&tb, &res).unwrap();
    let mut s = FockSystem::new(vec![ModeSpec { site: 0, n_max: 2 }, ModeSpec { site: 1, n_max: 2 }], vec![]);
    s.add_hamiltonian(Operator::n(0) * 1.0 + Operator::n(1) * 1.3 + Operator::hopping(0, 1, c(0.2, 0.0)));
    s.add_cooling(0, &r);
    let g = s.to_gaussian().unwrap();
    assert!((&g.wmat - &edge.wmat).norm() < 1e-15);
    assert!((&g.kmat - &edge.kmat).norm() < 1e-15);
    assert!((g.a_matrix() - edge.a_matrix()).norm() - 0.0 < 1e-12 + (edge.frame_freq * 2f64.sqrt()));
}

#[test]
fn sector_and_full_space_agree() {
    let s = two_mode(c(0.4, 0.2), 1.0, 0.3, 3);
    let full = Liouvillian::new(&s, false).unwrap();
    let sec = Liouvillian::new(&s, true).unwrap();
    assert!(sec.is_sector() && !full.is_sector() && sec.len() < full.len());
    let a = full.steady_vector().map(|x| full.unvectorize(&x)).unwrap();
    let b = sec.steady_vector().map(|x| sec.unvectorize(&x)).unwrap();
    assert!((a - b).norm() < 1e-10);
}

#[test]
fn large_sector_uses_iterative_solver() {
    // sector dimension above the dense limit
    let s = two_mode(c(0.5, 0.0), 1.0, 0.2, 14);
    let l = Liouvillian::new(&s, true).unwrap();
    assert!(l.len() > 1024);
    let rho = steady_state_dm(&s).unwrap();
    let gen = s.to_gaussian().unwrap();
    let cs = gaussian::steady_state(&gen).unwrap();
    let n1 = expectation(&s, &rho, &Operator::n(1)).re;
    assert!((n1 - cs.cmat[(1, 1)].re).abs() < 1e-6, "{n1} vs {}", cs.cmat[(1, 1)].re);
}

#[test]
fn ramsey_on_vacuum_has_no_decay() {
    let mut s = FockSystem::new(vec![ModeSpec { site: 0, n_max: 4 }], vec![]);
    s.add_cooling(0, &ReservoirParams::from_rates(1.0, 0.0).unwrap());
    let times: Vec<f64> = (0..60).map(|k| k as f64 * 0.1).collect();
    let opts = RamseyOptions { probe_site: 0, window: RamseyWindow::Grid(times) };
    let r = ramsey_probe(&s, 0.05, &Operator::n(0), &opts).unwrap();
    assert!(r.sx.iter().all(|v| (v - 1.0).abs() < 1e-9));
    let f = r.fit.unwrap();
    assert!(f.a.abs() < 1e-6 && f.b.abs() < 1e-6, "{f:?}");
}

#[test]
fn ramsey_matches_regression_in_weak_coupling() {
    let (gamma, nbar) = (1.0, 2.0);
    let s = cooled_mode(gamma, nbar, 45);
    let lambda = 0.02;
    let opts = RamseyOptions { probe_site: 0, window: RamseyWindow::Auto { points: 200, max_time: 1e5 } };
    let r = ramsey_probe(&s, lambda, &Operator::n(0), &opts).unwrap();
    let reg = regression_spectrum(&s, &Operator::n(0), SpectrumMethod::Direct).unwrap();
    let mean = r.mean.unwrap();
    let noise = r.noise0.unwrap();
    assert!((mean - nbar).abs() < 0.02 * nbar, "mean {mean}");
    assert!((noise - reg.noise0).abs() < 0.1 * reg.noise0, "noise {noise} vs {}", reg.noise0);
    // negative coupling flips the precession sign only
    let r2 = ramsey_probe(&s, -lambda, &Operator::n(0), &opts).unwrap();
    assert!((r2.mean.unwrap() - mean).abs() < 1e-6 * mean);
}

#[test]
fn switch_on_off_and_zero_drive() {
    let on = switch_scenario(&SwitchParams::default()).unwrap();
    assert!(on.max_right_population > 0.9, "{}", on.max_right_population);
    assert!(on.max_population_diff < 0.05, "{}", on.max_population_diff);
    assert!(on.norm_drift < 1e-6);
    let off = switch_scenario(&SwitchParams { spin_up: false, ..Default::default() }).unwrap();
    assert!(off.max_right_population < 1e-3, "{}", off.max_right_population);
    assert!(on.max_right_population / off.max_right_population > 1e3);
    let idle = switch_scenario(&SwitchParams { zeta: 0.0, ..Default::default() }).unwrap();
    assert!(idle.max_right_population < 1e-3);
}

#[test]
fn switch_pulses() {
    let base = switch_scenario(&SwitchParams::default()).unwrap();
    let w = base.window;
    assert!(switch_scenario(&SwitchParams { pulse_times: vec![1.5 * w], ..Default::default() }).is_err());
    // switching off after a quarter of the window freezes the transfer
    let p = switch_scenario(&SwitchParams { pulse_times: vec![0.25 * w], ..Default::default() }).unwrap();
    let k = p.times.iter().position(|&t| t > 0.3 * w).unwrap();
    let frozen = p.exact[k];
    let last = *p.exact.last().unwrap();
    for i in 0..3 {
        assert!((frozen[i] - last[i]).abs() < 5e-3);
    }
    assert!(p.max_population_diff < 0.05);
}

#[test]
fn current_probe_terms() {
    let p = current_probe_setup(&CurrentProbeParams::new(0.0)).unwrap();
    assert_eq!(p.coupling, 0.0);
    let tb = super::probes::tests_support::chain();
    let j1 = crate::bessel::bessel_j(1, std::f64::consts::PI).unwrap();
    assert!((p.tunneling[0].norm() - tb.j(0, 1) * j1).abs() < 1e-9 * tb.j(0, 1));
    assert!(p.tunneling[0].re == 0.0);
    let mut bad = CurrentProbeParams::new(0.05);
    bad.phase1 = 0.0;
    match current_probe_setup(&bad) {
        Err(Error::Constraint(msg)) => assert!(msg.contains("phase1")),
        other => panic!("{other:?}"),
    }
}

#[test]
fn current_probe_effective_model() {
    let params = CurrentProbeParams::new(0.1);
    let probe = current_probe_setup(&params).unwrap();
    let g = probe.tunneling[0].norm();
    let t_final = 2.0 * std::f64::consts::PI / (2f64.sqrt() * g);
    let (_, ex, ef) = current_probe_exact(&params, t_final, 60).unwrap();
    for (a, b) in ex.iter().zip(&ef) {
        for i in 0..5 {
            assert!((a[i] - b[i]).abs() < 0.05, "{a:?} vs {b:?}");
        }
    }
}

#[test]
fn fano_matches_gaussian_route() {
    let modes: Vec<ModeSpec> = (0..3).map(|s| ModeSpec { site: s, n_max: 9 }).collect();
    let mut s = FockSystem::new(modes, vec![]);
    s.add_hamiltonian(Operator::hopping(0, 1, c(0.3, 0.0)) + Operator::hopping(1, 2, c(0.3, 0.0)));
    s.add_cooling(0, &ReservoirParams::from_rates(1.0, 0.4).unwrap());
    s.add_cooling(2, &ReservoirParams::from_rates(1.0, 0.05).unwrap());
    let f = fano_factor(&s, 1).unwrap();
    let gen = s.to_gaussian().unwrap();
    let cs = gaussian::steady_state(&gen).unwrap();
    let (noise, fg) = gaussian::fano_factor(&gen, &cs, 1).unwrap();
    assert!((f.mean - noise.mean).abs() < 1e-3 * noise.mean.abs(), "{} vs {}", f.mean, noise.mean);
    assert!((f.fano.unwrap() - fg).abs() < 1e-2 * fg, "{:?} vs {fg}", f.fano);
}

#[test]
fn fano_rejects_zero_current() {
    let modes: Vec<ModeSpec> = (0..3).map(|s| ModeSpec { site: s, n_max: 3 }).collect();
    let mut s = FockSystem::new(modes, vec![]);
    s.add_hamiltonian(Operator::hopping(0, 1, c(0.3, 0.0)) + Operator::hopping(1, 2, c(0.3, 0.0)));
    s.add_cooling(0, &ReservoirParams::from_rates(1.0, 0.2).unwrap());
    s.add_cooling(2, &ReservoirParams::from_rates(1.0, 0.2).unwrap());
    assert!(matches!(fano_factor(&s, 1), Err(Error::ZeroCurrent)));
}

#[test]
fn fano_grows_with_left_occupation() {
    let mut last = 0.0;
    // far from equilibrium: an empty right reservoir
    for nl in [0.1, 0.3, 0.6] {
        let modes: Vec<ModeSpec> = (0..3).map(|s| ModeSpec { site: s, n_max: 6 }).collect();
        let mut s = FockSystem::new(modes, vec![]);
        s.add_hamiltonian(Operator::hopping(0, 1, c(0.3, 0.0)) + Operator::hopping(1, 2, c(0.3, 0.0)));
        s.add_cooling(0, &ReservoirParams::from_rates(1.0, nl).unwrap());
        s.add_cooling(2, &ReservoirParams::from_rates(1.0, 0.0).unwrap());
        let f = fano_factor(&s, 1).unwrap().fano.unwrap();
        assert!(f > last, "{nl}: {f}");
        last = f;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn trajectories_stay_physical(jr in -1.0f64..1.0, ji in -1.0f64..1.0, nbar in 0.0f64..1.0, nu in 0.5f64..3.0) {
        let modes = vec![ModeSpec { site: 0, n_max: 3 }, ModeSpec { site: 1, n_max: 3 }];
        let mut s = FockSystem::new(modes, vec![1]);
        s.add_hamiltonian(Operator::hopping(0, 1, c(jr, ji)) + Operator::sz(0) * Operator::n(1) * 0.3);
        s.add_drive(Operator::n(1) * 0.8, nu, 0.2);
        s.add_dissipator(c(0.2, 0.0), Operator::sm(0), Operator::sp(0));
        s.add_cooling(0, &ReservoirParams::from_rates(0.6, nbar).unwrap());
        let mut rho0 = s.thermal_state(&[0.5, 0.3], &[true]).unwrap();
        // put the spin in |+>
        let sx = s.matrix(&Operator::sx(0)).to_dense();
        rho0.rho = (&rho0.rho + &sx * &rho0.rho + &rho0.rho * &sx + &sx * &rho0.rho * &sx) * c(0.5, 0.0);
        let tr = lindblad_evolve(&s, &rho0, &[0.5, 1.0, 2.0]).unwrap();
        prop_assert!(tr.max_trace_drift < 1e-8);
        for st in &tr.states {
            prop_assert!(st.validate().is_ok());
        }
    }

    #[test]
    fn purity_conserved_without_dissipation(jr in -1.0f64..1.0, ji in -1.0f64..1.0, nu in 0.5f64..3.0) {
        let modes = vec![ModeSpec { site: 0, n_max: 2 }, ModeSpec { site: 1, n_max: 2 }];
        let mut s = FockSystem::new(modes, vec![0]);
        s.add_hamiltonian(Operator::hopping(0, 1, c(jr, ji)) + Operator::sz(0) * Operator::n(0));
        s.add_drive(Operator::sz(0) * Operator::n(1) * 1.3, nu, 0.0);
        let mut rho0 = s.product_state(&[1, 1], &[true]).unwrap();
        let p0 = rho0.purity();
        rho0.time = 0.0;
        let tr = lindblad_evolve(&s, &rho0, &[1.0, 3.0]).unwrap();
        for st in &tr.states {
            prop_assert!((st.purity() - p0).abs() < 1e-8);
        }
    }
}
