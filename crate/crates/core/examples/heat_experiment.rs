//! The heat equation with delay and memory under the sweeping control region.
//! Writes `field.csv` and `norms.csv` into the current directory.
//!
//! `cargo run --release --example heat_experiment`

use std::fs::File;

use delaymem::heat::{run_experiment, HeatConfig};

fn main() -> delaymem::Result<()> {
    let cfg = HeatConfig::experiment();
    let r = run_experiment(&cfg)?;
    let m = r.metrics();
    println!("|y(T)|_L2            = {:.4}", m.final_l2);
    println!("memory residual      = {:.4}", m.memory_residual);
    println!("sup on [T - h, T]    = {:.4}", m.window_sup);
    println!("|u|_L2(Q)            = {:.4e}", m.control_l2);
    r.write_field_csv(File::create("field.csv")?)?;
    r.write_norms_csv(File::create("norms.csv")?)?;
    Ok(())
}
