mod common;

use common::scalar_system;
use delaymem::base::{HistoryFunction, MemoryKernel};
use delaymem::forward::{fundamental_solution, mild_solution_check, simulate_forward, Control, ControlMap};
use delaymem::linalg::{Mat, Vector};
use delaymem::rng::random_instance;
use delaymem::Error;
use proptest::prelude::*;

#[test]
fn fundamental_solution_matches_matrix_exponential_without_delay() {
    let dt = 1e-3;
    for seed in 0..5 {
        let mut sys = random_instance(4, 2, seed).sys;
        sys.a1 = Mat::zeros(4, 4);
        sys.m = MemoryKernel::zero(4);
        let g = sys.grid(dt).unwrap();
        let fs = fundamental_solution(&sys, &g).unwrap();
        for k in (0..=g.n_steps).step_by(50) {
            let t = g.time(k as isize);
            let exact = (&sys.a * t).exp();
            let dev = (fs.at(k as isize) - exact).amax();
            assert!(dev <= 5e-3, "seed {seed} t {t}: {dev}");
        }
    }
}

#[test]
fn scalar_delay_fundamental_solution_is_one_plus_ramp() {
    // y' = y(t-1): S = 1 on [0, 1], 1 + (t - 1) on [1, 2]
    let dt = 1.0 / 2000.0;
    let sys = scalar_system(0.0, 1.0, 1.0, 2.0, dt, 0.0);
    let g = sys.grid(dt).unwrap();
    let fs = fundamental_solution(&sys, &g).unwrap();
    let worst = (0..=g.n_steps)
        .map(|k| {
            let t = g.time(k as isize);
            (fs.at(k as isize)[(0, 0)] - (1.0 + (t - 1.0).max(0.0))).abs()
        })
        .fold(0.0, f64::max);
    assert!(worst <= 1e-3, "{worst}");
}

#[test]
fn method_of_steps_reaches_two() {
    let dt = 1e-3;
    // the horizon must exceed h, so run past t = 1 and read the node there
    let sys = scalar_system(0.0, 1.0, 1.0, 1.5, dt, 1.0);
    let g = sys.grid(dt).unwrap();
    let tr = simulate_forward(&sys, &Control::zeros(&g, 1), &g).unwrap();
    let k = g.index_of(1.0).unwrap();
    assert!((tr.node(k)[0] - 2.0).abs() <= 1e-6);
}

#[test]
fn history_before_zero_is_replayed() {
    let dt = 0.01;
    let sys = random_instance(2, 1, 4).sys;
    let g = sys.grid(dt).unwrap();
    let tr = simulate_forward(&sys, &Control::zeros(&g, 1), &g).unwrap();
    for k in -(g.delay_steps as isize)..=0 {
        let phi = sys.history.eval(g.time(k)).unwrap();
        assert!((tr.node(k) - phi).amax() < 1e-15);
    }
}

#[test]
fn mild_solution_agrees_with_stepping() {
    let dt = 1.0 / 400.0;
    let inst = random_instance(3, 2, 11);
    let sys = inst
        .sys
        .with_history(HistoryFunction::point(Vector::from_vec(vec![0.3, -0.2, 0.5]), 0.1, dt).unwrap());
    let g = sys.grid(dt).unwrap();
    let u = inst.control(&g);
    let dev = mild_solution_check(&sys, &u, &g).unwrap();
    assert!(dev < 2e-2, "{dev}");
}

#[test]
fn sampled_control_map_must_cover_grid() {
    let dt = 0.01;
    let mut sys = scalar_system(-1.0, 0.0, 0.1, 1.0, dt, 1.0);
    sys.b = ControlMap::Sampled(vec![Mat::identity(1, 1); 7]);
    let g = sys.grid(dt).unwrap();
    assert!(matches!(simulate_forward(&sys, &Control::zeros(&g, 1), &g), Err(Error::Grid(_))));
}

#[test]
fn control_length_is_checked() {
    let dt = 0.01;
    let sys = scalar_system(-1.0, 0.0, 0.1, 1.0, dt, 1.0);
    let g = sys.grid(dt).unwrap();
    let short = Control { values: vec![Vector::zeros(1); 5] };
    assert!(simulate_forward(&sys, &short, &g).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn solution_is_linear_in_history_and_control(seed in 0u64..1000, alpha in -2.0f64..2.0, beta in -2.0f64..2.0) {
        let dt = 0.02;
        let inst = random_instance(3, 2, seed);
        let g = inst.sys.grid(dt).unwrap();
        let u = inst.control(&g);
        let v = Control::from_fn(&g, |t| Vector::from_vec(vec![t.cos(), (2.0 * t).sin()]));
        let sys2 = inst.sys.with_history(HistoryFunction::from_fn(3, 0.1, 0.1 / 320.0, |th| {
            Vector::from_vec(vec![th, 1.0, -th * th])
        }).unwrap());
        let y1 = simulate_forward(&inst.sys, &u, &g).unwrap();
        let y2 = simulate_forward(&sys2, &v, &g).unwrap();
        let hist = HistoryFunction::from_fn(3, 0.1, 0.1 / 320.0, |th| {
            inst.sys.history.eval(th).unwrap() * alpha + sys2.history.eval(th).unwrap() * beta
        }).unwrap();
        let combo = simulate_forward(&inst.sys.with_history(hist), &u.scaled(alpha).add_scaled(beta, &v), &g).unwrap();
        for k in 0..=g.n_steps as isize {
            let expect = y1.node(k) * alpha + y2.node(k) * beta;
            prop_assert!((combo.node(k) - &expect).amax() <= 1e-10 * (1.0 + expect.amax()));
        }
    }
}
