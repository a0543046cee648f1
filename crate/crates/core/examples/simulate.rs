//! Forward solve of a random delay/memory system and of its fundamental solution.
//!
//! `cargo run --release --example simulate`

use delaymem::forward::{fundamental_solution, simulate_forward};
use delaymem::rng::random_instance;

fn main() -> delaymem::Result<()> {
    let inst = random_instance(3, 2, 7);
    let grid = inst.sys.grid(1.0 / 400.0)?;
    let u = inst.control(&grid);

    let traj = simulate_forward(&inst.sys, &u, &grid)?;
    for k in (0..=grid.n_steps).step_by(80) {
        let y = traj.node(k as isize);
        println!("t = {:.3}  |y| = {:.6}", grid.time(k as isize), y.norm());
    }

    let fs = fundamental_solution(&inst.sys, &grid)?;
    println!("sup |S(t)| on [0, T] = {:.4}", fs.bound);
    Ok(())
}
