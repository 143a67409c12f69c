//! Direct product, XOR and error-conversion calculators on a small grid.

use advbound::dpt::{
    error_convert, phase_sdpt_bound, product_sigma_bound, sdpt_bounds, xor_bounds, DptParams, ErrorMode,
};

fn main() -> advbound::Result<()> {
    let adv = 2f64.sqrt();
    println!(
        "{:>3} {:>6} {:>12} {:>12} {:>12} {:>14}",
        "k", "delta", "sdpt", "xor", "phase", "product_sigma"
    );
    for k in [1, 4, 16] {
        for delta in [2.0 / 3.0, 0.8, 1.0] {
            let p = DptParams {
                gamma: 1.0 / (delta * adv),
                d: adv,
                lambda: 2.0,
                ..DptParams::new(k, delta)
            };
            let (s, _) = sdpt_bounds(&p, adv, None)?;
            let (x, _) = xor_bounds(&p, adv, None)?;
            let (ph, _) = phase_sdpt_bound(&p, adv)?;
            let ps = product_sigma_bound(&p)?;
            println!(
                "{k:>3} {delta:>6.3} {s:>12.6} {x:>12.6} {:>12.6} {:>14.6}",
                ph.value, ps.value
            );
        }
    }

    for mode in [
        ErrorMode::CoherentToNoncoherentTarget,
        ErrorMode::PhaseUpper,
        ErrorMode::PhaseLower,
    ] {
        println!("{mode:?}(0.1) = {:.6}", error_convert(mode, 0.1)?);
    }
    Ok(())
}
