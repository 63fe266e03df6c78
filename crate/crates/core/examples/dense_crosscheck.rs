//! One probe-coupled step simulated twice: in the collapsed cell sector and
//! with the full 2N-dimensional matrix.

use num_complex::Complex64;
use qrt_core::oracle::{cell_isometry, dense_evolve, dense_hamiltonian, dense_step_hamiltonian, fidelity};
use qrt_core::qrt::{build_step_hamiltonian, evolve, CellPartition, LevelHamiltonian, SectorState, StepPlan};

fn main() -> qrt_core::Result<()> {
    let (n, n_prev, n_cur) = (96u64, 40u64, 9u64);
    let part = CellPartition::nested(n, n_prev, n_cur)?;
    let prev = LevelHamiltonian { m: 40, prefix: part.prefix_for(n_prev)? };
    let cur = LevelHamiltonian { m: 20, prefix: part.prefix_for(n_cur)? };
    let plan = StepPlan::analytic(1, &part, prev, cur)?;
    let (c, alpha) = (1e-3, plan.resonant_alpha(1.0));
    let t = plan.optimal_time(c);

    // register index q is in cell 0, 1 or 2 by position
    let cell_of: Vec<usize> = (0..n).map(|q| if q < n_cur { 0 } else if q < n_prev { 1 } else { 2 }).collect();
    let w = cell_isometry(&cell_of, 3);
    let mask = |size: u64| (0..n).map(|q| q < size).collect::<Vec<bool>>();
    let hp = dense_hamiltonian(n as usize, &mask(n_prev), prev.m)?;
    let hc = dense_hamiltonian(n as usize, &mask(n_cur), cur.m)?;
    let h = dense_step_hamiltonian(&hc, &hp, 1.0, alpha, c)?;

    let start = SectorState::with_probe(1, &prev.ground(&part)?.1);
    let lift = |s: &SectorState| -> Vec<Complex64> {
        let mut out = Vec::with_capacity(2 * n as usize);
        for bit in 0..2u8 {
            let b = s.branch(bit);
            out.extend((0..n as usize).map(|q| (0..3).map(|j| b[j] * w[(q, j)]).sum::<Complex64>()));
        }
        out
    };
    let hs = build_step_hamiltonian(&part, &plan, 1.0, alpha, c);
    for frac in [0.25, 0.5, 1.0, 2.0] {
        let sector = evolve(&start, &hs, frac * t)?;
        let dense = dense_evolve(&h, &lift(&start), frac * t)?;
        println!(
            "t = {:>4} t_i: P(probe 0) = {:.8}, sector vs dense infidelity {:.1e}",
            frac,
            sector.population(0),
            (1.0 - fidelity(&lift(&sector), &dense)).abs()
        );
    }
    Ok(())
}
