//! Level-set chain of the 2-D Griewank function with step conditions, and
//! the exhaustive minimum it should end on.

use qrt_core::landscape::{level_set_report, reference_thresholds, MPolicy, ThresholdSchedule, TiePolicy};
use qrt_core::oracle::brute_force_minimum;
use qrt_core::ObjectiveFunction;

fn main() -> qrt_core::Result<()> {
    let f = ObjectiveFunction::griewank(2);
    let g = f.default_grid().expect("griewank has a default grid");
    let schedule = ThresholdSchedule::new(reference_thresholds("griewank").unwrap().to_vec(), (0.0, 2.0))?;
    let report = level_set_report(&f, &g, &schedule, MPolicy::Exact, TiePolicy::Exclusive, 0)?;
    report.to_table().write("griewank_schedule.csv")?;

    for s in &report.steps {
        let ok = if s.flags.all() { "" } else { "  <- conditions violated" };
        println!("d = {:<6} N_i = {:<7} rate = {:.2}  a = {:.2e}{ok}", s.d, s.n_i, s.rate, s.a);
    }
    let best = brute_force_minimum(&f, &g)?;
    println!("grid minimum {} at {:?} ({} minimizer)", best.value, best.point, best.minimizers.len());
    println!("wrote griewank_schedule.csv");
    Ok(())
}
