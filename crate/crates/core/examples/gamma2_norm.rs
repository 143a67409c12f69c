//! γ2 of `J - F` for a few builtins, with the primal SDP value and the
//! dual lower bound side by side.

use advbound::bounds::gamma2;
use advbound::gram::{build_gram_set, FiniteFunction};
use advbound::matlin::random::{gaussian_matrix, rng};

fn main() -> advbound::Result<()> {
    println!("{:<10} {:>12} {:>12} {:>10}", "function", "primal", "dual", "status");
    for spec in ["OR:2", "AND:2", "PARITY:2", "MAJ:3", "EQ:3"] {
        let gs = build_gram_set(&FiniteFunction::builtin(spec)?)?;
        let r = gamma2(gs.j_minus(&gs.f)?.matrix(), 42)?;
        println!(
            "{spec:<10} {:>12.8} {:>12.8} {:>10?}",
            r.upper.unwrap_or(r.value),
            r.lower.unwrap_or(f64::NAN),
            r.status
        );
    }

    let a = gaussian_matrix(4, 5, false, &mut rng(7));
    let r = gamma2(&a, 7)?;
    println!("random complex 4x5: gamma2 = {:.8} (gap {:.2e})", r.value, r.gap);
    Ok(())
}
