//! One line per acceptance criterion. Run with
//! `cargo test --release --test acceptance -- --nocapture` to watch progress; the
//! PASS/FAIL lines go straight to stderr and show up either way.

mod common;

use std::f64::consts::PI;
use std::io::Write;
use std::time::Instant;

use common::{brute_force_rank, scalar_system};
use delaymem::base::MemoryKernel;
use delaymem::carleman::{functional_ih, functional_io, weight_g, PsiProfile, SpaceTimeField, WeightSpec};
use delaymem::duality::duality_residual;
use delaymem::forward::{fundamental_solution, simulate_forward, Control};
use delaymem::heat::{
    build_heat_system, eigenfunction, laplacian_eigenvalues, run_experiment, sine_coefficients, spectral_apply,
    spectral_truncation, x_grid, HeatConfig, HeatControl, HistoryProfile, MovingRegion,
};
use delaymem::linalg::Mat;
use delaymem::observability::{extended_kalman_matrix, kalman_rank_extended, observability_gramian};
use delaymem::rng::{random_instance, InstanceRng};
use delaymem::synthesis::{
    gradient_check, scalar_memory_instance, synthesize_control, ConditionSet, SynthesisConfig,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn report(id: &str, title: &str, o: &Outcome) {
    let tag = if o.pass { "PASS" } else { "FAIL" };
    let line = format!("[{tag}] {id} {title}: {}\n", o.detail);
    // bypass the test harness capture so the summary always reaches the log
    let _ = std::io::stderr().write_all(line.as_bytes());
}

fn ac1_duality() -> Outcome {
    let start = Instant::now();
    let mut worst_res: f64 = 0.0;
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for seed in 0..10 {
        let inst = random_instance(3, 3, seed);
        let res = |dt: f64| {
            let g = inst.sys.grid(dt).unwrap();
            let u = inst.control(&g);
            duality_residual(&inst.sys, &u, &inst.w_t, &inst.z_t, 0.0, inst.sys.t_end, &g)
                .unwrap()
                .residual
        };
        let (coarse, fine) = (res(1.0 / 200.0), res(1.0 / 400.0));
        worst_res = worst_res.max(fine);
        lo = lo.min(coarse / fine);
        hi = hi.max(coarse / fine);
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst_res <= 1e-3 && lo >= 1.7 && hi <= 2.3 && secs < 60.0,
        format!("max residual {worst_res:.3e}, ratios [{lo:.3}, {hi:.3}], {secs:.1} s"),
    )
}

fn ac2_fundamental() -> Outcome {
    let dt = 1e-3;
    let mut worst: f64 = 0.0;
    for seed in 0..5 {
        let mut sys = random_instance(4, 2, seed).sys;
        sys.a1 = Mat::zeros(4, 4);
        sys.m = MemoryKernel::zero(4);
        let g = sys.grid(dt).unwrap();
        let fs = fundamental_solution(&sys, &g).unwrap();
        for k in 0..=g.n_steps {
            let t = g.time(k as isize);
            worst = worst.max((fs.at(k as isize) - (&sys.a * t).exp()).amax());
        }
    }
    let sdt = 1.0 / 2000.0;
    let sys = scalar_system(0.0, 1.0, 1.0, 2.0, sdt, 0.0);
    let g = sys.grid(sdt).unwrap();
    let fs = fundamental_solution(&sys, &g).unwrap();
    let scalar = (0..=g.n_steps)
        .map(|k| {
            let t = g.time(k as isize);
            (fs.at(k as isize)[(0, 0)] - (1.0 + (t - 1.0).max(0.0))).abs()
        })
        .fold(0.0, f64::max);
    outcome(
        worst <= 5e-3 && scalar <= 1e-3,
        format!("expm deviation {worst:.3e}, scalar ramp deviation {scalar:.3e} (dt 1/2000)"),
    )
}

fn ac3_method_of_steps() -> Outcome {
    let dt = 1e-3;
    let sys = scalar_system(0.0, 1.0, 1.0, 1.5, dt, 1.0);
    let g = sys.grid(dt).unwrap();
    let tr = simulate_forward(&sys, &Control::zeros(&g, 1), &g).unwrap();
    let y1 = tr.node(g.index_of(1.0).unwrap())[0];
    outcome((y1 - 2.0).abs() <= 1e-6, format!("y(1) = {y1:.12}"))
}

fn psd_gap(m: &Mat) -> f64 {
    let lmin = m.clone().symmetric_eigenvalues().min();
    (-lmin).max(0.0)
}

fn ac4_gramian() -> Outcome {
    let dt = 0.01;
    let mut sym_worst: f64 = 0.0;
    let mut psd_worst: f64 = 0.0;
    let mut nest_worst: f64 = 0.0;
    for seed in 0..5 {
        let inst = random_instance(3, 2, seed);
        let g = inst.sys.grid(dt).unwrap();
        let full = observability_gramian(&inst.sys, &g).unwrap().gramian;
        let scale = full.amax();
        sym_worst = sym_worst.max((&full - full.transpose()).amax() / scale);
        psd_worst = psd_worst.max(psd_gap(&full) / scale);
        let mut sub = inst.sys.clone();
        sub.b = inst.sys.b.select_columns(&[1]);
        let part = observability_gramian(&sub, &g).unwrap().gramian;
        sym_worst = sym_worst.max((&part - part.transpose()).amax() / part.amax());
        psd_worst = psd_worst.max(psd_gap(&part) / part.amax());
        nest_worst = nest_worst.max(psd_gap(&(&full - &part)) / scale);
    }
    outcome(
        sym_worst <= 1e-10 && psd_worst <= 1e-10 && nest_worst <= 1e-10,
        format!("asymmetry {sym_worst:.1e}, negativity {psd_worst:.1e}, nesting {nest_worst:.1e}"),
    )
}

fn ac5_kalman() -> Outcome {
    let one = |v: f64| Mat::from_element(1, 1, v);
    let a = Mat::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
    let b = Mat::from_row_slice(2, 1, &[0.0, 1.0]);
    let cases = [
        ("rank 2", one(0.0), one(1.0), one(1.0), one(1.0), 2usize),
        ("B = 0", a.clone(), Mat::identity(2, 2), Mat::identity(2, 2), Mat::zeros(2, 1), 0),
        ("M~ = 0", a.clone(), Mat::identity(2, 2), Mat::zeros(2, 2), b, 2),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, a, g, mt, b, expect) in cases {
        let r = kalman_rank_extended(&a, &g, &mt, &b).unwrap();
        let brute = brute_force_rank(&extended_kalman_matrix(&a, &g, &mt, &b).unwrap());
        pass &= r.rank == brute && r.rank == expect;
        parts.push(format!("{name}: {}/{} (brute {brute})", r.rank, r.dim));
    }
    let k = extended_kalman_matrix(&one(0.0), &one(1.0), &one(1.0), &one(1.0)).unwrap();
    pass &= k == Mat::identity(2, 2);
    outcome(pass, parts.join(", "))
}

fn ac6_gradient() -> Outcome {
    let dt = 0.01;
    let mut worst: f64 = 0.0;
    let cfg = SynthesisConfig { rho: 50.0, ..Default::default() };
    let systems = [
        scalar_memory_instance(dt).unwrap(),
        spectral_truncation(3, sine_coefficients(3), 0.1, 1.0, dt).unwrap(),
        random_instance(3, 2, 4).sys,
    ];
    for (i, sys) in systems.iter().enumerate() {
        let g = sys.grid(dt).unwrap();
        let m = sys.n_controls();
        let u0 = Control::from_fn(&g, |t| {
            delaymem::linalg::Vector::from_fn(m, |j, _| ((j + 1) as f64 * 2.0 * t + i as f64).sin())
        });
        worst = worst.max(gradient_check(sys, &g, &cfg, &u0, 5, i as u64).unwrap());
    }
    outcome(worst <= 1e-6, format!("max relative error {worst:.3e} over 3 systems x 5 directions"))
}

fn ac7_synthesis() -> Outcome {
    let start = Instant::now();
    let dt = 1.0 / 400.0;
    let cfg = SynthesisConfig::default();
    let mut pass = true;
    let mut parts = Vec::new();
    let systems = [
        ("scalar", scalar_memory_instance(dt).unwrap()),
        ("spectral n=5", spectral_truncation(5, sine_coefficients(5), 0.1, 1.0, dt).unwrap()),
    ];
    for (name, sys) in systems {
        let g = sys.grid(dt).unwrap();
        let r = synthesize_control(&sys, &g, &cfg).unwrap();
        let rep = r.report;
        let reduction = r.baseline.res_a / rep.res_a.max(f64::MIN_POSITIVE);
        pass &= rep.res_a <= 1e-3 && rep.res_b <= 1e-3 && rep.res_c <= 1e-3 && reduction >= 10.0;
        parts.push(format!(
            "{name}: res ({:.1e}, {:.1e}, {:.1e}), |y(T)| reduced {reduction:.1e}x",
            rep.res_a, rep.res_b, rep.res_c
        ));
    }
    let secs = start.elapsed().as_secs_f64();
    pass &= secs < 300.0;
    parts.push(format!("{secs:.1} s"));
    outcome(pass, parts.join("; "))
}

fn ac8_experiment() -> Outcome {
    let cfg = HeatConfig::experiment();
    let explicit = run_experiment(&cfg).unwrap();
    let mut surface = Vec::new();
    explicit.write_field_csv(&mut surface).unwrap();
    let rows = String::from_utf8(surface).unwrap().lines().count() - 1;
    let expect_rows = explicit.trajectory.samples.len() * (cfg.nx + 2);
    let m = explicit.metrics();

    let synth = |conditions: ConditionSet| {
        let c = HeatConfig {
            control: HeatControl::Synthesized,
            synthesis: SynthesisConfig { conditions, max_outer: 16, max_inner: 5000, ..Default::default() },
            ..HeatConfig::experiment()
        };
        run_experiment(&c).unwrap().report
    };
    let all = synth(ConditionSet::ALL);
    let two = synth(ConditionSet::STATE_AND_MEMORY);
    let ratio = two.res_c / all.res_c.max(f64::MIN_POSITIVE);
    outcome(
        rows == expect_rows && m.final_l2.is_finite() && ratio >= 100.0,
        format!(
            "explicit run |y(T)| {:.3}, surface rows {rows}; res_c (a,b) {:.3e} vs all {:.3e}, ratio {ratio:.1}",
            m.final_l2, two.res_c, all.res_c
        ),
    )
}

fn ac9_spectral() -> Outcome {
    let eig = laplacian_eigenvalues(50);
    let eig_worst = (1..=5)
        .map(|n| ((eig[n - 1] + (n * n) as f64) / (n * n) as f64).abs())
        .fold(0.0, f64::max);
    let mut cfg = HeatConfig::experiment();
    let xs = x_grid(cfg.nx);
    let mut rng = InstanceRng::new(9);
    let profile = (1..=5).fold(delaymem::linalg::Vector::zeros(cfg.nx), |acc, n| {
        acc + eigenfunction(n, &xs) * rng.uniform(-1.0, 1.0)
    });
    cfg.history = HistoryProfile::Samples { values: profile.iter().copied().collect() };
    let mut sys = build_heat_system(&cfg).unwrap();
    sys.a1 = Mat::zeros(cfg.nx, cfg.nx);
    sys.m = MemoryKernel::zero(cfg.nx);
    sys.m_tilde = MemoryKernel::zero(cfg.nx);
    let g = cfg.grid().unwrap();
    let tr = simulate_forward(&sys, &Control::zeros(&g, cfg.nx), &g).unwrap();
    let cross = (0..=g.n_steps)
        .step_by(10)
        .map(|k| {
            let exact = spectral_apply(&profile, g.time(k as isize), cfg.nx).unwrap();
            (tr.node(k as isize) - exact).amax()
        })
        .fold(0.0, f64::max);
    outcome(
        eig_worst <= 0.02 && cross <= 2e-2,
        format!("eigenvalue error {:.2}%, semigroup cross-check {cross:.3e}", eig_worst * 100.0),
    )
}

fn ac10_carleman() -> Outcome {
    let t_end = 1.0;
    let delta = 0.2;
    let mut exact = true;
    for i in 0..=20 {
        let t = delta + (t_end / 2.0 - delta) * i as f64 / 20.0;
        exact &= weight_g(t, delta, t_end).unwrap() == 1.0;
        let s = (delta / 2.0) * (i as f64 + 0.5) / 21.0;
        exact &= (weight_g(s, delta, t_end).unwrap() - 1.0 / s).abs() <= 1e-12 / s;
    }
    let mut sym: f64 = 0.0;
    for i in 1..=20 {
        let t = t_end * i as f64 / 21.0;
        sym = sym.max((weight_g(t, delta, t_end).unwrap() - weight_g(t_end - t, delta, t_end).unwrap()).abs());
    }
    let mut rng = InstanceRng::new(10);
    let mut min_val = f64::INFINITY;
    for _ in 0..20 {
        let amps: Vec<f64> = (0..4).map(|_| rng.normal()).collect();
        let p = SpaceTimeField::from_fn(0.0, 0.02, 51, 0.0, PI / 30.0, 31, |t, x| {
            amps[0] * x.sin() + amps[1] * (2.0 * x).cos() * t + amps[2] * (5.0 * t).sin() * x + amps[3]
        });
        let spec = WeightSpec {
            delta,
            lambda: rng.uniform(0.0, 3.0),
            s: rng.uniform(0.5, 4.0),
            t_end,
            psi: PsiProfile::default_for(MovingRegion::sweep(0.5, t_end)),
        };
        let ih = functional_ih(&p, 0.1, &spec).unwrap();
        let io = functional_io(&p, &spec).unwrap();
        min_val = min_val.min(ih.total).min(io).min(ih.laplacian).min(ih.zero_order);
    }
    outcome(
        exact && sym <= 1e-12 && min_val >= 0.0,
        format!("piecewise values exact: {exact}, symmetry gap {sym:.1e}, smallest functional {min_val:.3e}"),
    )
}

#[test]
fn acceptance() {
    let criteria: [(&str, &str, fn() -> Outcome); 10] = [
        ("AC1", "duality identity", ac1_duality),
        ("AC2", "fundamental solution", ac2_fundamental),
        ("AC3", "method of steps", ac3_method_of_steps),
        ("AC4", "Gramian properties", ac4_gramian),
        ("AC5", "extended Kalman rank", ac5_kalman),
        ("AC6", "gradient check", ac6_gradient),
        ("AC7", "control synthesis", ac7_synthesis),
        ("AC8", "heat experiment", ac8_experiment),
        ("AC9", "spectral oracle", ac9_spectral),
        ("AC10", "Carleman weights", ac10_carleman),
    ];
    let mut failed = Vec::new();
    for (id, title, f) in criteria {
        let o = f();
        report(id, title, &o);
        if !o.pass {
            failed.push(id);
        }
    }
    assert!(failed.is_empty(), "failed: {failed:?}");
}
