//! The multiplicative adversary SDP at fixed `c`, and the sweep over `c`.

use advbound::bounds::{adv, madv_fixed_c, madv_sweep, SweepOptions};
use advbound::gram::{build_gram_set, FiniteFunction, SigmaChoice};

fn main() -> advbound::Result<()> {
    let id = build_gram_set(&FiniteFunction::builtin("ID:1")?)?;
    for c in [1.1, 1.5, 2.0, 4.0] {
        let r = madv_fixed_c(&id.f, &id.deltas, c)?;
        println!("ID:1  c = {c:<4} madv = {:.9}", r.value);
    }

    for spec in ["OR:2", "PARITY:2"] {
        let gs = build_gram_set(&FiniteFunction::builtin(spec)?)?;
        let sigma = gs.sigma(SigmaChoice::F)?;
        let a = adv(sigma, &gs.deltas, 42)?;
        let s = madv_sweep(sigma, &gs.deltas, &SweepOptions::default())?;
        println!(
            "{spec:<9} adv = {:.6}  sweep = {:.6} at c = {:.6}  adv/2 = {:.6}",
            a.value,
            s.value,
            s.c.unwrap_or(f64::NAN),
            a.value / 2.0
        );
    }
    Ok(())
}
