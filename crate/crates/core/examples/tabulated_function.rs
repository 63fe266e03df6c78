//! Running the protocol on values supplied as a table rather than a formula.

use std::fs::File;
use std::io::BufReader;

use qrt_core::landscape::{auto_schedule, TiePolicy};
use qrt_core::objective::{Axis, TabulatedFunction};
use qrt_core::qrt::{run_multistep, ProtocolConfig};
use qrt_core::{GridSpec, ObjectiveFunction};

fn main() -> qrt_core::Result<()> {
    // a tilted double well, written out as if it came from elsewhere
    let domain = vec![Axis { lo: -2.0, hi: 2.0 }, Axis { lo: -2.0, hi: 2.0 }];
    let well = ObjectiveFunction::custom("double-well", domain.clone(), |x| {
        (x[0] * x[0] - 1.0).powi(2) + 0.3 * x[0] + x[1] * x[1]
    });
    let grid = GridSpec::new(domain, 64)?;
    let path = std::env::temp_dir().join("double_well.tab");
    TabulatedFunction::sample(&well, &grid).write(File::create(&path)?)?;

    let table = TabulatedFunction::read(BufReader::new(File::open(&path)?))?;
    let f = table.into_objective("double-well-table");
    let schedule = auto_schedule(&f, &grid, 0.5, -0.25, 0, TiePolicy::Exclusive)?;
    let report = run_multistep(&f, &grid, &schedule, &ProtocolConfig { shots: 200, ..Default::default() })?;
    println!("thresholds {:?}", schedule.thresholds());
    println!("best {:?} = {:?}", report.best_point, report.best_value);
    println!("table at {}", path.display());
    Ok(())
}
