//! Locating a step's ground energy with a probe-frequency sweep, then
//! reading the ground-state overlap off a short Rabi record.

use std::f64::consts::FRAC_PI_2;

use qrt_core::qrt::{estimate_overlap_from_rabi, frequency_sweep, CellPartition, LevelHamiltonian, StepPlan};

fn main() -> qrt_core::Result<()> {
    // Price chain, step 2: |A(20)| = 25108 -> |A(10)| = 12532 out of 40401
    let part = CellPartition::chain(40401, &[25108, 12532], None)?;
    let prev = LevelHamiltonian { m: 25108, prefix: part.prefix_for(25108)? };
    let cur = LevelHamiltonian { m: 12532, prefix: part.prefix_for(12532)? };
    let plan = StepPlan::analytic(2, &part, prev, cur)?;

    let c = 1e-3;
    let centre = plan.e0_cur - plan.e0_prev;
    let omegas: Vec<f64> = (0..61).map(|k| centre + c * (k as f64 - 30.0) / 3.0).collect();
    let sweep = frequency_sweep(&part, &prev, &cur, plan.e0_prev, c, &omegas, FRAC_PI_2 / c)?;
    for (w, p) in sweep.omegas.iter().zip(&sweep.populations).step_by(3) {
        println!("{w:+.6}  {}", "#".repeat((p * 60.0) as usize));
    }
    println!("E0 from sweep {:.9}, closed form {:.9}", sweep.e0_estimate, plan.e0_cur);

    let times: Vec<f64> = (1..=4).map(|k| k as f64 * FRAC_PI_2 / c / 8.0).collect();
    let fit = estimate_overlap_from_rabi(&part, &prev, &cur, sweep.omega_peak, 1.0, c, &times)?;
    println!("g0 from Rabi fit {:.6} (rms {:.1e}), closed form {:.6}", fit.g0, fit.rms_residual, plan.g0);
    Ok(())
}
