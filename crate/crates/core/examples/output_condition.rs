//! Two ways to measure how well one vector family can be turned into
//! another: the best contraction alignment (an SDP) and the minimized
//! vector-masked fidelity. They agree; the γ2 sandwich brackets the error.

use advbound::matlin::random::rng;
use advbound::outcond::{best_alignment, gamma2_error_sandwich, min_vec_fidelity, random_pair};

fn main() -> advbound::Result<()> {
    let mut g = rng(11);
    for (count, dim, real) in [(3, 2, true), (4, 3, false), (5, 4, false)] {
        let pair = random_pair(count, dim, real, &mut g);
        let a = best_alignment(&pair)?;
        let f = min_vec_fidelity(&pair.rho(), &pair.sigma(), 11)?;
        println!(
            "count {count} dim {dim} real {real:<5}  alignment {:.6}  fidelity {:.6}  dilation defect {:.1e}",
            a.value, f.value, a.unitary_defect
        );
    }

    let pair = random_pair(4, 3, false, &mut g);
    let s = gamma2_error_sandwich(&pair, 11)?;
    println!(
        "error {:.6}: {:.6} <= gamma2(rho - sigma)/2 = {:.6} <= {:.6}",
        s.epsilon, s.lhs, s.mid, s.rhs
    );
    Ok(())
}
