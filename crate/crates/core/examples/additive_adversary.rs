//! The additive adversary bound with its dual certificate, and the
//! `Γ∘F = 0` variant that brackets it within a factor of two.

use advbound::bounds::{adv, adv_pm};
use advbound::gram::{build_gram_set, FiniteFunction, SigmaChoice};

fn main() -> advbound::Result<()> {
    println!(
        "{:<10} {:>8} {:>12} {:>12} {:>12} {:>12}",
        "function", "sigma", "adv", "certificate", "adv_pm", "status"
    );
    for spec in ["OR:2", "AND:2", "PARITY:2", "ID:2", "EQ:2", "MAJ:3"] {
        let gs = build_gram_set(&FiniteFunction::builtin(spec)?)?;
        for choice in [SigmaChoice::F, SigmaChoice::SigmaF] {
            let sigma = gs.sigma(choice)?;
            let a = adv(sigma, &gs.deltas, 42)?;
            let pm = adv_pm(sigma, &gs.f, &gs.deltas, 42)?;
            println!(
                "{spec:<10} {:>8} {:>12.6} {:>12.6} {:>12.6} {:>12?}",
                choice.label(),
                a.value,
                a.upper.unwrap_or(f64::NAN),
                pm.value,
                a.status
            );
        }
    }
    Ok(())
}
