mod common;

use common::scalar_system;
use delaymem::adjoint::{adjoint_time_derivative_residual, simulate_adjoint};
use delaymem::base::MemoryKernel;
use delaymem::linalg::{Mat, Vector};
use delaymem::rng::random_instance;
use delaymem::Error;

#[test]
fn last_delay_window_is_a_plain_exponential() {
    // with no memory, w(t + h) vanishes on (T - h, T] and w = e^{a (T - t)} w_T there
    let dt = 1e-4;
    let a = -0.7;
    let sys = scalar_system(a, 0.9, 0.1, 1.0, dt, 0.0);
    let g = sys.grid(dt).unwrap();
    let w_t = Vector::from_element(1, 1.5);
    let adj = simulate_adjoint(&sys, &w_t, &Vector::zeros(1), &g).unwrap();
    let n = g.n_steps as isize;
    for k in (n - g.delay_steps as isize + 1..=n).step_by(100) {
        let t = g.time(k);
        let exact = 1.5 * (a * (1.0 - t)).exp();
        assert!((adj.w(k).unwrap()[0] - exact).abs() < 1e-4, "t {t}: {} vs {exact}", adj.w(k).unwrap()[0]);
    }
    assert_eq!(adj.w(n).unwrap()[0], 1.5);
}

#[test]
fn zero_terminal_data_gives_zero_adjoint() {
    let inst = random_instance(3, 2, 2);
    let g = inst.sys.grid(0.01).unwrap();
    let adj = simulate_adjoint(&inst.sys, &Vector::zeros(3), &Vector::zeros(3), &g).unwrap();
    assert_eq!(adj.observation_energy(), 0.0);
    assert!((0..=g.n_steps as isize).all(|k| adj.w(k).unwrap().amax() == 0.0));
}

#[test]
fn adjoint_is_linear_in_terminal_data() {
    let inst = random_instance(3, 2, 9);
    let g = inst.sys.grid(0.01).unwrap();
    let a = simulate_adjoint(&inst.sys, &inst.w_t, &Vector::zeros(3), &g).unwrap();
    let b = simulate_adjoint(&inst.sys, &Vector::zeros(3), &inst.z_t, &g).unwrap();
    let c = simulate_adjoint(&inst.sys, &(inst.w_t.clone() * 2.0), &(inst.z_t.clone() * -3.0), &g).unwrap();
    for k in 0..=g.n_steps as isize {
        let expect = a.w(k).unwrap() * 2.0 - b.w(k).unwrap() * 3.0;
        assert!((c.w(k).unwrap() - expect).amax() < 1e-12);
    }
}

#[test]
fn differentiated_system_residual_is_first_order() {
    let inst = random_instance(3, 2, 4);
    let res: Vec<f64> = [0.01, 0.005, 0.0025]
        .iter()
        .map(|&dt| {
            let g = inst.sys.grid(dt).unwrap();
            let adj = simulate_adjoint(&inst.sys, &inst.w_t, &inst.z_t, &g).unwrap();
            adjoint_time_derivative_residual(&inst.sys, &adj).unwrap()
        })
        .collect();
    for w in res.windows(2) {
        let ratio = w[0] / w[1];
        assert!((1.7..=2.3).contains(&ratio), "{res:?}");
    }
}

#[test]
fn sampled_kernels_have_no_analytic_derivative() {
    let dt = 0.01;
    let mut sys = scalar_system(-1.0, 0.0, 0.1, 1.0, dt, 1.0);
    sys.m_tilde = MemoryKernel::sampled(0.35, vec![Mat::from_element(1, 1, 1.0); 4]).unwrap();
    let g = sys.grid(dt).unwrap();
    let adj = simulate_adjoint(&sys, &Vector::from_element(1, 1.0), &Vector::from_element(1, 1.0), &g).unwrap();
    assert!(matches!(
        adjoint_time_derivative_residual(&sys, &adj),
        Err(Error::UnsupportedKernel(_))
    ));
}

#[test]
fn continuation_exists_when_kernels_reach_past_horizon() {
    let inst = random_instance(2, 1, 1);
    let g = inst.sys.grid(0.01).unwrap();
    let adj = simulate_adjoint(&inst.sys, &inst.w_t, &inst.z_t, &g).unwrap();
    assert!(adj.has_continuation());
    assert!(adj.w(-(g.delay_steps as isize)).is_some());
}
