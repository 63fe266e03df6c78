use num_complex::Complex64;
use proptest::prelude::*;
use qrt_core::landscape::{histogram_of, GridValues, TiePolicy};
use qrt_core::objective::{index_to_point, point_to_index, BasisIndex, GridSpec, ObjectiveFunction};
use qrt_core::output::fmt_float;
use qrt_core::qrt::{sector_matrix, CellPartition, LevelHamiltonian, Propagator, SectorState};
use qrt_core::spectral::{self, MixingParams};

fn instance() -> impl Strategy<Value = (u64, u64, u64)> {
    (2u64..5000).prop_flat_map(|n| (Just(n), 1..=n, 0..=n))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn grid_index_round_trip(dims in 1usize..4, count in 2usize..30, seed in any::<u64>()) {
        let g = GridSpec::uniform(dims, -3.0, 7.0, count).unwrap();
        let j = BasisIndex(seed % g.len());
        let x = index_to_point(j, &g).unwrap();
        prop_assert_eq!(point_to_index(&x, &g).unwrap(), j);
        let digits = g.digits(j).unwrap();
        prop_assert_eq!(g.index_from_digits(&digits).unwrap(), j);
    }

    #[test]
    fn spectrum_accounts_for_every_state((n, ni, m) in instance()) {
        let p = MixingParams::new(n, ni, m).unwrap();
        let levels = spectral::full_spectrum(&p);
        prop_assert_eq!(levels.iter().map(|l| l.1).sum::<u64>(), n);
        // trace of b H0 + (1 - b) H_P
        let b = p.b();
        let trace: f64 = levels.iter().map(|&(e, k)| e * k as f64).sum();
        let expect = -b - (1.0 - b) * ni as f64;
        prop_assert!((trace - expect).abs() < 1e-9 * (1.0 + expect.abs()));
        let (lo, hi) = spectral::eigenpair(&p);
        prop_assert!(lo <= -(1.0 - b) + 1e-12);
        prop_assert!(hi <= 1e-12 && hi >= -(1.0 - b) - 1e-12);
    }

    #[test]
    fn ground_components_are_a_unit_vector(a in 0.001f64..0.999, b in 0.001f64..1.0) {
        let (x1, x2) = spectral::ground_components_ab(a, b).unwrap();
        prop_assert!(x1 >= 0.0 && x2 >= 0.0);
        prop_assert!((x1 * x1 + x2 * x2 - 1.0).abs() < 1e-12);
        let gap = spectral::delta_e_ab(a, b).unwrap();
        prop_assert!(gap >= 0.0);
    }

    #[test]
    fn overlap_is_a_probability_amplitude(
        (n, np) in (3u64..3000).prop_flat_map(|n| (Just(n), 2..=n)),
        cur_frac in 0.0f64..1.0,
        mp_frac in 0.01f64..=1.0,
        mc_frac in 0.0f64..=1.0,
    ) {
        let nc = ((np - 1) as f64 * cur_frac) as u64 + 1;
        let mp = ((n as f64 * mp_frac) as u64).max(1);
        let mc = (n as f64 * mc_frac) as u64;
        let g = spectral::overlap(n, np, nc, mp, mc).unwrap();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&g), "{}", g);
    }

    #[test]
    fn sector_evolution_is_unitary(
        (n, np, nc) in (4u64..500).prop_flat_map(|n| (Just(n), 2..=n)).prop_flat_map(|(n, np)| (Just(n), Just(np), 1..np)),
        m in 1u64..500,
        alpha in 0.5f64..3.0,
        c in 1e-4f64..1e-1,
        t in 0.0f64..1e4,
    ) {
        let part = CellPartition::nested(n, np, nc).unwrap();
        let prev = LevelHamiltonian { m: m.min(n), prefix: part.prefix_for(np).unwrap() };
        let cur = LevelHamiltonian { m: (m / 2).min(n), prefix: part.prefix_for(nc).unwrap() };
        let h = sector_matrix(&part, &cur, &prev, 1.0, alpha, c);
        let u = Propagator::new(&h).unwrap();
        let s = SectorState::with_probe(1, &part.uniform());
        let fwd = u.apply(&s, t);
        prop_assert!((fwd.norm() - 1.0).abs() < 1e-10);
        let back = u.apply(&fwd, -t);
        let err = back
            .amplitudes()
            .iter()
            .zip(s.amplitudes())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        prop_assert!(err < 1e-9);
        let p: f64 = (0..2u8).map(|bit| fwd.population(bit)).sum();
        prop_assert!((p - 1.0).abs() < 1e-10);
    }

    #[test]
    fn level_sets_are_nested(d1 in 0.0f64..60.0, d2 in 0.0f64..60.0) {
        let f = ObjectiveFunction::price();
        let g = GridSpec::uniform(2, -10.0, 10.0, 41).unwrap();
        let v = GridValues::scan(&f, &g);
        let (lo, hi) = if d1 < d2 { (d1, d2) } else { (d2, d1) };
        for ties in [TiePolicy::Exclusive, TiePolicy::Inclusive] {
            prop_assert!(v.count(lo, ties).count <= v.count(hi, ties).count);
        }
        prop_assert!(v.count(lo, TiePolicy::Exclusive).count <= v.count(lo, TiePolicy::Inclusive).count);
    }

    #[test]
    fn histogram_keeps_every_value(bin in 0.05f64..20.0) {
        let f = ObjectiveFunction::damavandi();
        let g = GridSpec::uniform(2, 0.0, 14.0, 29).unwrap();
        let v = GridValues::scan(&f, &g);
        let h = histogram_of(&v, bin, None).unwrap();
        prop_assert_eq!(h.total(), g.len());
    }

    #[test]
    fn floats_round_trip_through_text(x in any::<f64>().prop_filter("finite", |x| x.is_finite())) {
        let s = fmt_float(x);
        prop_assert_eq!(s.parse::<f64>().unwrap(), x);
    }

    #[test]
    fn sector_states_carry_complex_phases(re in -1.0f64..1.0, im in -1.0f64..1.0) {
        prop_assume!(re * re + im * im > 1e-6);
        let z = Complex64::new(re, im);
        let norm = z.norm();
        let s = SectorState::from_amplitudes(vec![z / norm, Complex64::new(0.0, 0.0)]).unwrap();
        prop_assert!((s.population(0) - 1.0).abs() < 1e-12);
        prop_assert!(s.flip_probe().population(1) > 1.0 - 1e-12);
    }
}
