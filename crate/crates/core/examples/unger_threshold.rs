//! Exhaustive tail check of the sign-moment lemma and the threshold bound
//! it feeds.

use advbound::dpt::{threshold_tail, unger_check, DptParams, JointSignDistribution};

fn main() -> advbound::Result<()> {
    let fair = JointSignDistribution::product(&[0.0; 4])?;
    let r = unger_check(&fair, 1.0, 0.0, 1.0)?;
    println!("fair coins k=4: tail {} bound {}", r.tail, r.bound);

    let mixed = JointSignDistribution::mixture(&[
        (0.5, JointSignDistribution::product(&[0.3, -0.1, 0.2, 0.0, 0.25, 0.1])?),
        (0.5, JointSignDistribution::product(&[-0.2, 0.3, 0.1, 0.3, 0.0, -0.3])?),
    ])?;
    let r = unger_check(&mixed, 1.0, 0.3, 0.6)?;
    println!(
        "mixture k=6: hypothesis {} tail {:.6} bound {:.6}",
        r.hypothesis_holds(),
        r.tail,
        r.bound
    );

    for mu in [0.8, 0.9, 1.0] {
        let p = DptParams {
            cap_k: 10,
            mu,
            ..DptParams::new(10, 0.25)
        };
        let (tail, corollary) = threshold_tail(&p)?;
        println!("k=10 K=10 delta=0.25 mu={mu}: tail {tail:.6} (mu = 1 form {corollary:.6})");
    }
    Ok(())
}
