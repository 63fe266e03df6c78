//! Full multistep run on the Price function. The final state should be an
//! even mixture of the four global minima at (+-5, +-5).

use qrt_core::landscape::{reference_thresholds, GridValues, ThresholdSchedule};
use qrt_core::objective::index_to_point;
use qrt_core::qrt::{run_multistep_with, ProtocolConfig};
use qrt_core::ObjectiveFunction;

fn main() -> qrt_core::Result<()> {
    let f = ObjectiveFunction::price();
    let g = f.default_grid().unwrap();
    let values = GridValues::scan(&f, &g);
    let schedule = ThresholdSchedule::with_values(reference_thresholds("price").unwrap().to_vec(), &values)?;
    let cfg = ProtocolConfig { shots: 4000, seed: 1, ..Default::default() };
    let report = run_multistep_with(&f, &g, &values, &schedule, &cfg)?.into_result()?;

    println!(" i  N_i     g0      coupling   repeats  p0");
    for s in &report.steps {
        println!("{:>2}  {:<6}  {:.4}  {:.2e}   {:>3}      {:.6}", s.i, s.n_i, s.g0, s.coupling, s.repeats, s.p0_sector);
    }
    println!("\nshots per sampled point:");
    for (j, p) in report.sample_frequencies() {
        println!("  {:?}  {:.4}", index_to_point(j, &g)?, p);
    }
    println!("best value {:?}, simulated time {:.3e}", report.best_value, report.total_time);
    report.write_json("price_run.json")?;
    Ok(())
}
