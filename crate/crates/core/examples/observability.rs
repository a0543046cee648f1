//! Gramian spectrum, observability constant and rank diagnostics.
//!
//! `cargo run --release --example observability`

use delaymem::base::MemoryKernel;
use delaymem::heat::{sine_coefficients, spectral_truncation};
use delaymem::observability::{kalman_rank_for_system, observability_gramian, unique_continuation_probe};
use delaymem::linalg::Mat;
use delaymem::rng::random_instance;

fn main() -> delaymem::Result<()> {
    let inst = random_instance(3, 2, 2);
    let grid = inst.sys.grid(0.01)?;
    let rep = observability_gramian(&inst.sys, &grid)?;
    println!("eigenvalues: {:?}", rep.eigenvalues);
    println!("K = {:?}, verdict = {:?}", rep.constant_k, rep.verdict);

    let spectral = spectral_truncation(5, sine_coefficients(5), 0.1, 1.0, 0.01)?;
    let grid = spectral.grid(0.01)?;
    let probe = unique_continuation_probe(&spectral, &grid, 64, 0)?;
    println!("spectral truncation: worst probe ratio {:.3e}", probe.worst_ratio);
    // the truncation carries e^{-t} kernels; freeze them at t = 0 for the constant-kernel test
    let mut frozen = spectral.clone();
    frozen.m = MemoryKernel::constant(Mat::identity(5, 5))?;
    frozen.m_tilde = frozen.m.clone();
    if let Some(r) = kalman_rank_for_system(&frozen)? {
        println!("frozen-kernel extended Kalman rank {}/{}", r.rank, r.dim);
    }
    Ok(())
}
