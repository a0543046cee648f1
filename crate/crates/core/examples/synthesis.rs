//! Steer the scalar pure-memory system to rest and print the terminal residuals.
//!
//! `cargo run --release --example synthesis`

use delaymem::synthesis::{scalar_memory_instance, synthesize_control, SynthesisConfig};

fn main() -> delaymem::Result<()> {
    let dt = 1.0 / 400.0;
    let sys = scalar_memory_instance(dt)?;
    let grid = sys.grid(dt)?;
    let r = synthesize_control(&sys, &grid, &SynthesisConfig::default())?;

    let b = r.baseline;
    println!("uncontrolled: res_a {:.3e}  res_b {:.3e}  res_c {:.3e}", b.res_a, b.res_b, b.res_c);
    let c = r.report;
    println!("controlled:   res_a {:.3e}  res_b {:.3e}  res_c {:.3e}", c.res_a, c.res_b, c.res_c);
    println!(
        "converged {} at rho = {:.0e} after {} inner iterations, |u|_L2 = {:.4}",
        r.converged,
        r.final_rho,
        r.log.len(),
        r.control.l2_norm_sq(dt).sqrt()
    );
    Ok(())
}
