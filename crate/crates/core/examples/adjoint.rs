//! Backward adjoint solve and the consistency of its differentiated form.
//!
//! `cargo run --release --example adjoint`

use delaymem::adjoint::{adjoint_time_derivative_residual, simulate_adjoint};
use delaymem::rng::random_instance;

fn main() -> delaymem::Result<()> {
    let inst = random_instance(3, 2, 4);
    for dt in [0.01, 0.005, 0.0025] {
        let grid = inst.sys.grid(dt)?;
        let adj = simulate_adjoint(&inst.sys, &inst.w_t, &inst.z_t, &grid)?;
        let res = adjoint_time_derivative_residual(&inst.sys, &adj)?;
        println!(
            "dt = {dt:<7} |w(0)| = {:.6}  int |B^T w|^2 = {:.6}  derivative residual = {res:.3e}",
            adj.w(0).map_or(0.0, |w| w.norm()),
            adj.observation_energy()
        );
    }
    Ok(())
}
