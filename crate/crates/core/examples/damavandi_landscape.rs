//! Value histogram and paper schedule for the Damavandi function.

use qrt_core::landscape::{build_histogram, level_set_report, reference_thresholds, MPolicy, ThresholdSchedule, TiePolicy};
use qrt_core::ObjectiveFunction;

fn main() -> qrt_core::Result<()> {
    let f = ObjectiveFunction::damavandi();
    let g = f.default_grid().expect("damavandi has a default grid");
    println!("{} on {} points ({} qubits)", f.id(), g.len(), g.qubits());

    let h = build_histogram(&f, &g, 0.01, Some((0.0, 149.0)))?;
    let mut bins: Vec<usize> = (0..h.counts.len()).filter(|&k| h.counts[k] > 0).collect();
    bins.sort_by_key(|&k| std::cmp::Reverse(h.counts[k]));
    println!("most populated bins of width 0.01:");
    for &k in bins.iter().take(5) {
        println!("  [{:.2}, {:.2})  {}", h.bin_lo(k), h.bin_lo(k + 1), h.counts[k]);
    }

    let thresholds = reference_thresholds("damavandi").unwrap().to_vec();
    let schedule = ThresholdSchedule::new(thresholds, (0.0, 150.0))?;
    let report = level_set_report(&f, &g, &schedule, MPolicy::Exact, TiePolicy::Exclusive, 0)?;
    println!("\n{:>6} {:>7} {:>6} {:>6}", "d", "N_i", "rate", "b");
    for s in &report.steps {
        println!("{:>6} {:>7} {:>6.3} {:>6.3}", s.d, s.n_i, s.rate, s.b);
    }
    println!("b closest to 1/2: {:.3}", report.b_closest_to_half());
    Ok(())
}
