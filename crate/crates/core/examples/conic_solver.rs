//! The dense conic solver on a small SDP: the minimum eigenvalue of a
//! symmetric matrix as `min Tr(CX)` over density matrices, with the
//! certificate checked independently.

use advbound::conic::{solve, verify_certificate, ConicProgram, LinExpr, Sense, SolveOptions};

fn main() -> advbound::Result<()> {
    let c = [[2.0, -1.0, 0.0], [-1.0, 2.0, -1.0], [0.0, -1.0, 2.0]];
    let mut p = ConicProgram::new(Sense::Minimize);
    let x = p.add_psd(3);
    let mut obj = LinExpr::new();
    let mut trace = LinExpr::new();
    for r in 0..3 {
        trace.push_psd(x, r, r, 1.0);
        for col in r..3 {
            obj.push_psd(x, r, col, if r == col { c[r][r] } else { 2.0 * c[r][col] });
        }
    }
    p.set_objective(obj);
    p.constrain(trace, 1.0);

    let opts = SolveOptions::default();
    let sol = solve(&p, &opts)?;
    println!(
        "status {:?}, primal {:.10}, dual {:.10}, exact {:.10}",
        sol.status,
        sol.primal_value,
        sol.dual_value,
        2.0 - 2f64.sqrt()
    );
    let cert = verify_certificate(&p, &sol, &opts)?;
    println!(
        "certified {} (gap {:.2e}, {} iterations)",
        cert.certified, cert.gap, sol.iterations
    );
    Ok(())
}
