//! Carleman weights and the weighted functionals on a sampled field.
//!
//! `cargo run --release --example carleman_weights`

use std::f64::consts::PI;

use delaymem::carleman::{eval_weights, functional_ih, functional_io, PsiProfile, SpaceTimeField, WeightSpec};
use delaymem::heat::MovingRegion;

fn main() -> delaymem::Result<()> {
    let spec = WeightSpec {
        delta: 0.2,
        lambda: 1.0,
        s: 2.0,
        t_end: 1.0,
        psi: PsiProfile::default_for(MovingRegion::sweep(0.5, 1.0)),
    };
    for t in [0.01, 0.05, 0.2, 0.5, 0.95] {
        let (phi, theta) = eval_weights(&spec, t, PI / 2.0)?;
        println!("t = {t:<5} phi = {phi:.4}  theta = {theta:.4}");
    }

    let p = SpaceTimeField::from_fn(0.0, 0.01, 101, 0.0, PI / 40.0, 41, |t, x| (-t).exp() * x.sin());
    let ih = functional_ih(&p, 0.1, &spec)?;
    println!("I_H = {:.4e} ({ih:?})", ih.total);
    println!("I_O = {:.4e}", functional_io(&p, &spec)?);
    Ok(())
}
