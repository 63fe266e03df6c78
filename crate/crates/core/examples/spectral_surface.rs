//! Closed-form two-cell spectrum: gap surface over (a, b), slices at small
//! a, and the diagonal minimum near a = b = 1/3.

use qrt_core::spectral::{self, MixingParams};

fn main() -> qrt_core::Result<()> {
    let mesh = spectral::mesh(0.0, 1.0, 101);
    spectral::spectral_table(&mesh)?.write("spectral_surface.csv")?;
    let (at, min) = mesh
        .iter()
        .map(|&(a, b)| ((a, b), spectral::delta_e_ab(a, b).unwrap()))
        .min_by(|x, y| x.1.total_cmp(&y.1))
        .unwrap();
    println!("smallest gap {min} at (a, b) = {at:?}");

    for a in [0.0, 0.01, 0.05] {
        let row: Vec<String> = (0..=10)
            .map(|k| format!("{:.3}", spectral::delta_e_ab(a, k as f64 / 10.0).unwrap()))
            .collect();
        println!("a = {a:<4}  gap at b = 0, 0.1, .., 1: {}", row.join(" "));
    }

    let third = 1.0 / 3.0;
    println!("gap at a = b = 1/3: {:.6}", spectral::delta_e_ab(third, third)?);
    println!("second-order expansion there: {:.6}", spectral::gap_expansion(third, 0.0));

    let p = MixingParams::new(100, 62, 62)?;
    let s = spectral::summarize(&p)?;
    println!("\nN = 100, N_i = M = 62: {s:#?}");
    Ok(())
}
