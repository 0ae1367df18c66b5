use homoclinic_core::homoclinic::{seed_unstable, verify_reversibility};
use homoclinic_core::integrate::{
    find_crossings, integrate, integrate_fixed, integrate_with, Flow, EVENT_TOL,
};
use homoclinic_core::sysdef::{hamiltonian, reversal};
use homoclinic_core::{KnownSolution, NonlinearitySpec, Params, ShotConfig, State, StepControl, Trajectory};
use rand::{rngs::StdRng, Rng, SeedableRng};

/// Observed convergence order from errors at successively halved steps.
fn observed_orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

#[test]
fn fixed_step_order_is_five() {
    // exact sech^2 orbit from x = -3 to x = 0
    let ks = KnownSolution::sech2();
    let p = &ks.params_star;
    let start = ks.state(-3.0);
    let exact = ks.state(0.0);
    let errors: Vec<f64> = [30, 60, 120, 240]
        .iter()
        .map(|&n| integrate_fixed(start, p, (-3.0, 0.0), n).max_abs_diff(&exact))
        .collect();
    let orders = observed_orders(&errors);
    for o in &orders {
        assert!(*o >= 4.5, "orders {orders:?}, errors {errors:?}");
    }
}

#[test]
fn adaptive_error_tracks_tolerance() {
    // endpoint error against the closed form over a tolerance ladder; error per
    // step count must fall like a fifth-order method
    let ks = KnownSolution::sech();
    let p = &ks.params_star;
    let start = ks.state(-4.0);
    let exact = ks.state(0.0);
    let mut pts = Vec::new();
    for tol in [1e-6, 1e-7, 1e-8, 1e-9, 1e-10] {
        let ctrl = StepControl { h_max: 10.0, ..StepControl::with_tolerance(tol) };
        let tr = integrate(start, p, (-4.0, 0.0), &ctrl).unwrap();
        let err = tr.last().unwrap().1.max_abs_diff(&exact);
        pts.push(((tr.len() - 1) as f64, err));
    }
    // least-squares slope of log(err) against log(steps)
    let n = pts.len() as f64;
    let xs: Vec<f64> = pts.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let order = -sxy / sxx;
    assert!(order >= 4.5, "observed order {order}, points {pts:?}");
}

#[test]
fn linear_regime_growth() {
    let p = Params::new(-3.75, 3.0, NonlinearitySpec::sech2_family()).unwrap();
    let seed = seed_unstable(&p, &ShotConfig::default()).unwrap();
    let tr = integrate(seed, &p, (0.0, 6.0), &StepControl::default()).unwrap();
    let mut checked = 0;
    for &(t, s) in tr.nodes() {
        if s.norm() < 1e-4 {
            assert!((s.norm() / (1e-7 * (2.0 * t).exp()) - 1.0).abs() < 0.01);
            checked += 1;
        }
    }
    assert!(checked > 10);
    // p_u = -c/lambda u stays negative in the linear regime
    let linear: Vec<_> = tr.nodes().iter().filter(|(_, s)| s.norm() < 1e-4).collect();
    assert!(linear.iter().all(|(_, s)| s.p_u < 0.0));
}

#[test]
fn exact_orbit_crossing_at_symmetry_time() {
    let ks = KnownSolution::sech2();
    let p = &ks.params_star;
    // cubic Hermite through exact samples, offset so no node sits at x = 0
    let samples: Vec<(f64, State)> = (0..=1000)
        .map(|i| {
            let x = -5.0 + 0.01 * i as f64 + 0.003;
            (x, ks.state(x))
        })
        .collect();
    let tr = Trajectory::from_samples(&samples, p);
    let sym = tr
        .events
        .iter()
        .find(|c| c.t.abs() < 0.05)
        .expect("crossing near x = 0");
    assert!(sym.t.abs() < 1e-6, "t = {}", sym.t);
    assert!(sym.s.v.abs() < 1e-6);

    // same orbit by integration from the exact state at x = -5
    let tr = integrate(ks.state(-5.0), p, (-5.0, 1.0), &StepControl::default()).unwrap();
    let sym = tr.events.iter().find(|c| c.t.abs() < 0.05).expect("crossing");
    assert!(sym.t.abs() < 1e-8 && sym.s.v.abs() < 1e-8, "{sym:?}");
}

#[test]
fn event_states_lie_on_section() {
    let p = Params::new(-3.75, 3.0, NonlinearitySpec::sech2_family()).unwrap();
    let mut rng = StdRng::seed_from_u64(7);
    let mut total = 0;
    for _ in 0..20 {
        let s0 = State::new(
            rng.random_range(-0.3..0.3),
            rng.random_range(-0.3..0.3),
            rng.random_range(-0.3..0.3),
            rng.random_range(-0.3..0.3),
        );
        let mut events = Vec::new();
        let _ = integrate_with(s0, &p, (0.0, 20.0), &StepControl::default(), |seg, ev| {
            if let Some(ev) = ev {
                events.push(*ev);
            }
            if State::from_array(seg.y1).norm() > 10.0 {
                Flow::Stop
            } else {
                Flow::Continue
            }
        });
        for ev in &events {
            assert!(ev.s.p_u.abs() <= EVENT_TOL);
        }
        total += events.len();
    }
    assert!(total > 0);
}

#[test]
fn energy_drift_over_fifty_units() {
    let ctrl = StepControl::default();
    let mut rng = StdRng::seed_from_u64(11);
    for ks in KnownSolution::registry() {
        let p = &ks.params_star;
        let mut starts = vec![seed_unstable(p, &ShotConfig::default()).unwrap(), ks.state(-8.0)];
        for _ in 0..10 {
            starts.push(State::new(
                rng.random_range(-0.5..0.5),
                rng.random_range(-0.5..0.5),
                rng.random_range(-0.5..0.5),
                rng.random_range(-0.5..0.5),
            ));
        }
        for s0 in starts {
            let h0 = hamiltonian(&s0, p);
            let mut drift: f64 = 0.0;
            integrate_with(s0, p, (0.0, 50.0), &ctrl, |seg, _| {
                let s = State::from_array(seg.y1);
                if s.norm() > 10.0 {
                    return Flow::Stop;
                }
                drift = drift.max((hamiltonian(&s, p) - h0).abs());
                Flow::Continue
            })
            .unwrap();
            assert!(drift <= 1e-9, "{}: drift {drift:e} from {s0:?}", ks.name);
        }
    }
}

#[test]
fn reversibility_conjugacy_random_states() {
    let ctrl = StepControl::default();
    let mut rng = StdRng::seed_from_u64(3);
    for ks in KnownSolution::registry() {
        let p = &ks.params_star;
        // box shrunk by the unstable growth over the horizon
        let (lambda, _) = homoclinic_core::spectral::unstable_eigenpair(p).unwrap();
        let r = 0.5 * (-5.0 * lambda).exp();
        let mut accepted = 0;
        for _ in 0..1000 {
            if accepted == 50 {
                break;
            }
            let s = State::new(
                rng.random_range(-r..r),
                rng.random_range(-r..r),
                rng.random_range(-r..r),
                rng.random_range(-r..r),
            );
            // only orbits that stay bounded both ways
            let bounded = |span| {
                integrate(s, p, span, &ctrl)
                    .map(|tr| tr.nodes().iter().all(|(_, x)| x.norm() <= 10.0))
                    .unwrap_or(false)
            };
            if !(bounded((0.0, 5.0)) && bounded((0.0, -5.0))) {
                continue;
            }
            accepted += 1;
            let d = verify_reversibility(p, &s, 5.0, &ctrl).unwrap();
            assert!(d <= 1e-8, "defect {d:e}");
        }
        assert_eq!(accepted, 50, "{}", ks.name);
    }
}

#[test]
fn chi_start_is_time_symmetric() {
    // xi(0) in chi implies xi(t) = Q xi(-t)
    let p = Params::new(0.3, 1.0, NonlinearitySpec::sech_family()).unwrap();
    let ctrl = StepControl::default();
    let s = State::new(0.4, 0.0, 0.0, -0.2);
    let fwd = integrate(s, &p, (0.0, 3.0), &ctrl).unwrap().last().unwrap().1;
    let back = integrate(s, &p, (0.0, -3.0), &ctrl).unwrap().last().unwrap().1;
    assert!((fwd - reversal(&back)).norm() <= 1e-8);
}

#[test]
fn find_crossings_respects_max_count() {
    let p = Params::new(0.0, 1.0, NonlinearitySpec::sech_family()).unwrap();
    let tr = integrate(State::new(0.01, 0.0, 0.0, -0.01), &p, (0.0, 12.0), &StepControl::default())
        .unwrap();
    assert!(tr.events.len() >= 3);
    assert_eq!(find_crossings(&tr, 2), tr.events[..2].to_vec());
    assert!(find_crossings(&tr, 0).is_empty());
}
