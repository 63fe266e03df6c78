//! Automatic threshold schedules and Monte-Carlo mixing weights.

use qrt_core::landscape::{
    auto_schedule, estimate_level_fraction, level_set_report, validate_schedule, ConditionLimits, MPolicy, TiePolicy,
};
use qrt_core::ObjectiveFunction;

fn main() -> qrt_core::Result<()> {
    for (f, d_final) in [(ObjectiveFunction::price(), 0.01), (ObjectiveFunction::damavandi(), 1.0)] {
        let g = f.default_grid().unwrap();
        let schedule = auto_schedule(&f, &g, 0.5, d_final, 3, TiePolicy::Exclusive)?;
        let mut report =
            level_set_report(&f, &g, &schedule, MPolicy::Sampled { samples: 100_000 }, TiePolicy::Exclusive, 3)?;
        let ok = validate_schedule(&mut report, &ConditionLimits::default());
        println!("{}: {} steps, conditions {}", f.id(), schedule.len(), if ok { "hold" } else { "violated" });
        for s in &report.steps {
            println!("  d = {:<10.5} N_i = {:<6} M_i = {:<6} (+-{:.0})", s.d, s.n_i, s.m_i, s.m_half_width);
        }
    }

    let f = ObjectiveFunction::price();
    let g = f.default_grid().unwrap();
    let est = estimate_level_fraction(&f, &g, 5.0, 100_000, 7, TiePolicy::Exclusive)?;
    println!(
        "\n|A(5)| / N = {:.5} +- {:.5} (exact {:.5})",
        est.fraction,
        est.half_width,
        6260.0 / 40401.0
    );
    Ok(())
}
