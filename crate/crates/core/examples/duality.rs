//! The forward/adjoint pairing closes at first order in dt.
//!
//! `cargo run --release --example duality`

use delaymem::duality::duality_residual;
use delaymem::rng::random_instance;

fn main() -> delaymem::Result<()> {
    let inst = random_instance(3, 2, 0);
    let t_end = inst.sys.t_end;
    let mut prev: Option<f64> = None;
    for level in 0..5 {
        let dt = 0.02 / f64::from(1 << level);
        let grid = inst.sys.grid(dt)?;
        let u = inst.control(&grid);
        let r = duality_residual(&inst.sys, &u, &inst.w_t, &inst.z_t, 0.0, t_end, &grid)?;
        let ratio = prev.map_or(String::new(), |p| format!("  ratio {:.3}", p / r.residual));
        println!("dt = {dt:<8} residual = {:.3e}{ratio}", r.residual);
        prev = Some(r.residual);
    }
    Ok(())
}
