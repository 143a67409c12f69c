//! Turns an additive adversary witness into a multiplicative one and
//! checks that its k-fold tensor power stays feasible with the same `c`.

use advbound::gram::{build_gram_set, tensor_instance, FiniteFunction, SigmaChoice};
use advbound::witness::{build_mult_witness, normalize_witness, tensor_witness_check, StructuredTarget};

fn main() -> advbound::Result<()> {
    let gs = build_gram_set(&FiniteFunction::builtin("OR:2")?)?;
    let choice = SigmaChoice::F;
    let (target, report) = StructuredTarget::compute(gs.sigma(choice)?, &gs.deltas, 42)?;
    let aw = report.additive().expect("adv reports carry an additive witness");
    println!(
        "adv = {:.6}, gamma2(J - sigma) = {:.6}, d = {:.6}, lambda = {}",
        target.adv, target.g2, target.d, target.lambda
    );

    let nw = normalize_witness(aw, &target, &gs.deltas)?;
    let gamma = 1.0 / (target.d * target.lambda);
    let bundle = build_mult_witness(&nw.gamma_prime, &target, &gs.deltas, gamma)?;
    println!(
        "gamma = {gamma:.6}, c = {:.6}, bundle value = {:.6}",
        bundle.c, bundle.value
    );
    for c in &bundle.checks {
        println!(
            "  {:<28} slack {:+.3e} {}",
            c.name,
            c.slack,
            if c.passed { "ok" } else { "FAIL" }
        );
    }

    for k in 1..=2 {
        let t = tensor_witness_check(&bundle, &tensor_instance(&gs, choice, k)?)?;
        println!(
            "k = {k}: dim {}, objective {:.9} (expected {:.9}), min LMI slack {:+.3e}, {}",
            t.dim,
            t.objective,
            t.expected_objective,
            t.min_lmi_slack(),
            if t.passed() { "ok" } else { "FAIL" }
        );
    }
    Ok(())
}
