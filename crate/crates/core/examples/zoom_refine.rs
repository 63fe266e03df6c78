//! Zoom-in refinement on a coarse Griewank grid: each round re-grids a
//! smaller box around the incumbent. On this grid the best point sits in the
//! basin near (-pi, -pi sqrt 2), so the rounds polish that local minimum.

use qrt_core::qrt::{refine, ProtocolConfig, RefineOptions};
use qrt_core::{GridSpec, ObjectiveFunction};

fn main() -> qrt_core::Result<()> {
    let f = ObjectiveFunction::griewank(2);
    // 0 is not a grid point here
    let grid = GridSpec::uniform(2, -40.0, 40.0, 150)?;
    let opts = RefineOptions { rounds: 3, zoom: 0.1, ..Default::default() };
    let cfg = ProtocolConfig { shots: 500, ..Default::default() };
    let out = refine(&f, &grid, &opts, &cfg)?;
    for (r, (g, v)) in out.grids.iter().zip(&out.history).enumerate() {
        let a = g.axes()[0];
        println!("round {}: x1 in [{:.4}, {:.4}], incumbent {v:.3e}", r + 1, a.lo, a.hi);
    }
    println!("best {:?} = {:.3e}", out.best_point, out.best_value);
    if let Some(why) = out.stopped {
        println!("stopped early: {why}");
    }
    Ok(())
}
