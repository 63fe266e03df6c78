//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fail.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::time::Instant;

use common::{log_slope, Nested};
use qrt_core::landscape::{
    build_histogram, estimate_level_fraction, level_set_report, reference_thresholds, validate_schedule,
    ConditionLimits, GridValues, LevelSetReport, MPolicy, ThresholdSchedule, TiePolicy,
};
use qrt_core::objective::{point_to_index, GridSpec, ObjectiveFunction};
use qrt_core::oracle::{dense_eigensolve, dense_step_hamiltonian, fidelity};
use qrt_core::qrt::{
    build_step_hamiltonian, evolve, frequency_sweep, run_multistep, run_step, CellPartition, LevelHamiltonian,
    ProtocolConfig, SectorState, StepConfig, StepPlan,
};
use qrt_core::spectral::{self, MixingParams};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Verdict {
    pass: bool,
    detail: String,
}

type Check = fn() -> Verdict;

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn paper_report(f: &ObjectiveFunction, ties: TiePolicy) -> LevelSetReport {
    let g = f.default_grid().unwrap();
    let values = GridValues::scan(f, &g);
    let t = reference_thresholds(f.id()).unwrap().to_vec();
    let s = ThresholdSchedule::with_values(t, &values).unwrap();
    qrt_core::landscape::level_set_report_from(&values, f, &g, &s, MPolicy::Exact, ties, 0).unwrap()
}

const DAMAVANDI_SIZES: [u64; 12] = [56634, 24939, 11573, 4452, 1772, 892, 448, 178, 94, 20, 5, 1];
const GRIEWANK_SIZES: [u64; 12] = [197363, 76951, 34453, 18937, 8283, 2033, 723, 319, 77, 23, 5, 1];
const PRICE_SIZES: [u64; 11] = [25108, 12532, 6260, 2484, 1220, 596, 244, 116, 52, 20, 4];

fn functions() -> [(ObjectiveFunction, u64, &'static [u64]); 3] {
    [
        (ObjectiveFunction::damavandi(), 78961, &DAMAVANDI_SIZES),
        (ObjectiveFunction::griewank(2), 641601, &GRIEWANK_SIZES),
        (ObjectiveFunction::price(), 40401, &PRICE_SIZES),
    ]
}

fn level_set_sizes() -> Verdict {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let start = Instant::now();
    let mut notes = Vec::new();
    let mut pass = true;
    for (f, n, published) in functions() {
        let r = pool.install(|| paper_report(&f, TiePolicy::Exclusive));
        let sizes = r.sizes();
        if r.n_total != n || sizes != published {
            pass = false;
            notes.push(format!("{}: N = {} sizes {:?}", f.id(), r.n_total, sizes));
        }
        let tied: u64 = r.steps.iter().map(|s| s.ties).sum();
        if tied > 0 {
            notes.push(format!("{}: {tied} grid values tie a threshold", f.id()));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    pass &= secs <= 60.0;
    notes.push(format!("{secs:.1} s single-threaded"));
    verdict(pass, notes.join("; "))
}

fn round_to(x: f64, digits: i32) -> f64 {
    let s = 10f64.powi(digits);
    (x * s).round() / s
}

fn reduction_rates() -> Verdict {
    let damavandi = [0.717, 0.440, 0.464, 0.385, 0.398, 0.503, 0.502, 0.397, 0.528, 0.213, 0.250, 0.200];
    let griewank = [0.31, 0.39, 0.45, 0.55, 0.44, 0.25, 0.36, 0.44, 0.24, 0.30, 0.22, 0.20];
    let price = [0.62, 0.50, 0.50, 0.40, 0.49, 0.49, 0.41, 0.48, 0.45, 0.38, 0.20];
    let mut pass = true;
    let mut worst = 0.0f64;
    let mut b_half = 0.0;
    for ((f, _, _), (paper, digits)) in functions()
        .into_iter()
        .zip([(&damavandi[..], 3), (&griewank[..], 2), (&price[..], 2)])
    {
        let r = paper_report(&f, TiePolicy::Exclusive);
        let rates = r.rates();
        pass &= rates.len() == paper.len();
        for (x, p) in rates.iter().zip(paper) {
            let e = (round_to(*x, digits) - p).abs();
            worst = worst.max(e);
            pass &= e <= 0.001 + 1e-12;
        }
        if f.id() == "damavandi" {
            b_half = r.b_closest_to_half();
        }
    }
    pass &= (b_half - 0.316).abs() <= 0.001;
    verdict(pass, format!("worst rounded deviation {worst:.4}; Damavandi b nearest 1/2 = {b_half:.4}"))
}

fn histogram_degeneracies() -> Verdict {
    let f = ObjectiveFunction::damavandi();
    let h = build_histogram(&f, &f.default_grid().unwrap(), 0.01, Some((0.0, 149.0))).unwrap();
    let d = h.max_count();
    let f = ObjectiveFunction::griewank(2);
    let h = build_histogram(&f, &f.default_grid().unwrap(), 0.0001, None).unwrap();
    let g = h.max_count();
    verdict(
        (50..=60).contains(&d) && g == 32,
        format!("Damavandi max bin {d} (want 50..=60), Griewank max bin {g} (want 32)"),
    )
}

fn spectra_vs_dense() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    let mut mult_ok = true;
    for _ in 0..200 {
        let n = rng.gen_range(2..=512u64);
        let ni = rng.gen_range(1..=n);
        let m = rng.gen_range(0..=n);
        let mut mask: Vec<bool> = (0..n).map(|q| q < ni).collect();
        mask.shuffle(&mut rng);
        let p = MixingParams::new(n, ni, m).unwrap();
        let h = qrt_core::oracle::dense_hamiltonian(n as usize, &mask, m).unwrap();
        let dense = dense_eigensolve(&h).unwrap();
        let closed = spectral::spectrum_values(&p);
        for (c, d) in closed.iter().zip(&dense.values) {
            worst = worst.max((c - d).abs());
        }
        for (e, _) in spectral::full_spectrum(&p) {
            let want: u64 = spectral::full_spectrum(&p)
                .iter()
                .filter(|l| (l.0 - e).abs() < 1e-9)
                .map(|l| l.1)
                .sum();
            let got = dense.values.iter().filter(|v| (*v - e).abs() < 1e-9).count() as u64;
            mult_ok &= want == got;
        }
    }
    let a0 = spectral::delta_e_ab(0.0, 0.5).unwrap();
    let a1 = spectral::delta_e_ab(1.0 / 3.0, 1.0 / 3.0).unwrap() - 11f64.sqrt() / (3.0 * 3f64.sqrt());
    let pass = worst <= 1e-10 && mult_ok && a0.abs() <= 1e-12 && a1.abs() <= 1e-12;
    verdict(
        pass,
        format!("max eigenvalue error {worst:.1e}, multiplicities {}, anchors {a0:.1e} / {a1:.1e}", if mult_ok { "match" } else { "differ" }),
    )
}

fn sector_exactness() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let c = 1e-3;
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let inst = Nested::random(&mut rng, 256);
        let part = inst.partition();
        let (prev, cur) = inst.levels(&part);
        let plan = StepPlan::analytic(1, &part, prev, cur).unwrap();
        let alpha = plan.resonant_alpha(1.0);
        let t = plan.optimal_time(c);
        let start = SectorState::with_probe(1, &prev.ground(&part).unwrap().1);
        let hs = build_step_hamiltonian(&part, &plan, 1.0, alpha, c);
        let (hp, hc) = inst.dense();
        let hd = dense_step_hamiltonian(&hc, &hp, 1.0, alpha, c).unwrap();
        let prop = qrt_core::oracle::DensePropagator::new(&hd).unwrap();
        let dense_start = inst.lift(&start);
        for tt in [0.5 * t, t, 3.0 * t] {
            let a = inst.lift(&evolve(&start, &hs, tt).unwrap());
            let b = prop.apply(&dense_start, tt);
            worst = worst.max(1.0 - fidelity(&a, &b));
        }
    }
    verdict(worst <= 1e-10, format!("worst infidelity {worst:.1e} over 300 evolutions"))
}

/// Nested instances whose two ground gaps are both at least `gap`.
fn gapped_instances(rng: &mut ChaCha8Rng, count: usize, gap: f64) -> Vec<Nested> {
    let mut out = Vec::new();
    while out.len() < count {
        let inst = Nested::random(rng, 256);
        let gp = spectral::energy_gap(&MixingParams::new(inst.n, inst.n_prev, inst.m_prev).unwrap()).ground_gap;
        let gc = spectral::energy_gap(&MixingParams::new(inst.n, inst.n_cur, inst.m_cur).unwrap()).ground_gap;
        if gp >= gap && gc >= gap {
            out.push(inst);
        }
    }
    out
}

fn rabi_resonance() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let c = 1e-3;
    let mut lowest = 1.0f64;
    for inst in gapped_instances(&mut rng, 50, 0.3) {
        let part = inst.partition();
        let (prev, cur) = inst.levels(&part);
        let plan = StepPlan::analytic(1, &part, prev, cur).unwrap();
        let h = build_step_hamiltonian(&part, &plan, 1.0, plan.resonant_alpha(1.0), c);
        let start = SectorState::with_probe(1, &prev.ground(&part).unwrap().1);
        let end = evolve(&start, &h, plan.optimal_time(c)).unwrap();
        lowest = lowest.min(end.population(0));
    }

    let mut sweeps_ok = 0;
    let mut worst_ratio = 0.0f64;
    for inst in gapped_instances(&mut rng, 20, 0.3) {
        let part = inst.partition();
        let (prev, cur) = inst.levels(&part);
        let (hp, hc) = inst.dense();
        let e_prev = dense_eigensolve(&hp).unwrap().values[0];
        let e_cur = dense_eigensolve(&hc).unwrap().values[0];
        let spacing = 0.4 * c;
        let offset = rng.gen_range(-0.5..0.5) * spacing;
        let omegas: Vec<f64> = (0..41).map(|k| e_cur - e_prev + offset + spacing * (k as f64 - 20.0)).collect();
        let sw = frequency_sweep(&part, &prev, &cur, e_prev, c, &omegas, std::f64::consts::FRAC_PI_2 / c).unwrap();
        let ratio = (sw.e0_estimate - e_cur).abs() / (0.5 * spacing);
        worst_ratio = worst_ratio.max(ratio);
        if ratio <= 1.0 {
            sweeps_ok += 1;
        }
    }
    verdict(
        lowest >= 0.999 && sweeps_ok == 20,
        format!("lowest decay population {lowest:.6} on 50 instances; {sweeps_ok}/20 sweeps within half a grid step (worst {worst_ratio:.3} of it)"),
    )
}

fn overlap_and_expansions() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let inst = Nested::random(&mut rng, 512);
        let (hp, hc) = inst.dense();
        let gp = dense_eigensolve(&hp).unwrap().ground();
        let gc = dense_eigensolve(&hc).unwrap().ground();
        let g = spectral::overlap(inst.n, inst.n_prev, inst.n_cur, inst.m_prev, inst.m_cur).unwrap();
        worst = worst.max((gp.dot(&gc).abs() - g).abs());
    }

    let deltas: Vec<f64> = (0..=8).map(|k| 10f64.powf(-1.0 - 0.25 * k as f64)).collect();
    let mut gap_order = f64::INFINITY;
    let mut ratio_order = f64::INFINITY;
    for a in [0.2, 0.35, 0.5, 0.65] {
        let ge: Vec<f64> = deltas
            .iter()
            .map(|&d| (spectral::gap_expansion(a, d) - spectral::delta_e_ab(a, a + d).unwrap()).abs())
            .collect();
        let re: Vec<f64> = deltas
            .iter()
            .map(|&d| (spectral::ratio_expansion(a, d).unwrap() - spectral::ground_ratio_ab(a, a + d)).abs())
            .collect();
        gap_order = gap_order.min(log_slope(&deltas, &ge));
        ratio_order = ratio_order.min(log_slope(&deltas, &re));
    }
    verdict(
        worst <= 1e-8 && gap_order >= 2.8 && ratio_order >= 1.8,
        format!("overlap error {worst:.1e}; convergence orders gap {gap_order:.2}, ratio {ratio_order:.2}"),
    )
}

fn price_end_to_end() -> Verdict {
    let f = ObjectiveFunction::price();
    let g = f.default_grid().unwrap();
    let values = GridValues::scan(&f, &g);
    let schedule = ThresholdSchedule::with_values(reference_thresholds("price").unwrap().to_vec(), &values).unwrap();
    let cfg = ProtocolConfig { shots: 4000, seed: 8, ..Default::default() };
    let report = run_multistep(&f, &g, &schedule, &cfg).unwrap();
    let freqs = report.sample_frequencies();
    let sigma = (0.25f64 * 0.75 / 4000.0).sqrt();
    let mut worst_z = 0.0f64;
    for (x1, x2) in [(-5.0, -5.0), (-5.0, 5.0), (5.0, -5.0), (5.0, 5.0)] {
        let j = point_to_index(&[x1, x2], &g).unwrap();
        let p = freqs.iter().find(|e| e.0 == j).map_or(0.0, |e| e.1);
        worst_z = worst_z.max((p - 0.25).abs() / sigma);
    }
    let best = report.best_value;

    // repeat-until-decay statistics at half the optimal runtime
    let sizes = report.levels.sizes();
    let part = CellPartition::chain(g.len(), &sizes, Some(schedule.thresholds())).unwrap();
    let cur = LevelHamiltonian { m: report.levels.steps[0].m_i, prefix: part.prefix_for(sizes[0]).unwrap() };
    let plan = StepPlan::analytic(1, &part, LevelHamiltonian::h0(&part), cur).unwrap();
    let c = 1e-3;
    let start = SectorState::with_probe(1, &part.uniform());
    let half = 0.5 * plan.optimal_time(c);
    let mut total = 0u64;
    let mut p0 = 0.0;
    for seed in 0..1000u64 {
        let step = StepConfig { coupling: c, time: Some(half), seed, ..Default::default() };
        let out = run_step(&part, &plan, &step, &start).unwrap();
        total += out.repeats as u64;
        p0 = out.p0_sector;
    }
    let mean = total as f64 / 1000.0;
    let se = ((1.0 - p0).sqrt() / p0) / 1000f64.sqrt();
    let rz = (mean - 1.0 / p0).abs() / se;
    verdict(
        worst_z <= 3.0 && best == Some(0.0) && rz <= 3.0,
        format!("minimizer frequencies within {worst_z:.2} sigma; best {best:?}; mean repeats {mean:.3} vs 1/p0 = {:.3} ({rz:.2} sigma)", 1.0 / p0),
    )
}

fn damavandi_and_griewank() -> Verdict {
    let mut notes = Vec::new();
    let mut pass = true;
    for (f, want) in [(ObjectiveFunction::damavandi(), [2.0, 2.0]), (ObjectiveFunction::griewank(2), [0.0, 0.0])] {
        let start = Instant::now();
        let g: GridSpec = f.default_grid().unwrap();
        let values = GridValues::scan(&f, &g);
        let schedule = ThresholdSchedule::with_values(reference_thresholds(f.id()).unwrap().to_vec(), &values).unwrap();
        let report = run_multistep(&f, &g, &schedule, &ProtocolConfig { shots: 100, ..Default::default() }).unwrap();
        let secs = start.elapsed().as_secs_f64();
        let last = *report.levels.sizes().last().unwrap();
        let point = report.best_point.clone().unwrap_or_default();
        let value = report.best_value.unwrap_or(f64::NAN);
        let ok = last == 1 && point == want && value.abs() <= 1e-12 && secs <= 120.0;
        pass &= ok;
        notes.push(format!("{}: terminal size {last}, best {point:?} = {value:e}, {secs:.1} s", f.id()));
    }
    verdict(pass, notes.join("; "))
}

fn monte_carlo_m() -> Verdict {
    let f = ObjectiveFunction::price();
    let g = f.default_grid().unwrap();
    let exact = 6260.0 / 40401.0;
    let hits = (0..100u64)
        .filter(|&seed| {
            estimate_level_fraction(&f, &g, 5.0, 100_000, seed, TiePolicy::Exclusive)
                .unwrap()
                .brackets(exact)
        })
        .count();
    let s = ThresholdSchedule::with_values(
        reference_thresholds("price").unwrap().to_vec(),
        &GridValues::scan(&f, &g),
    )
    .unwrap();
    let mut report =
        level_set_report(&f, &g, &s, MPolicy::Sampled { samples: 100_000 }, TiePolicy::Exclusive, 10).unwrap();
    let valid = validate_schedule(&mut report, &ConditionLimits::default());
    verdict(
        hits >= 93 && valid,
        format!("{hits}/100 intervals bracket the exact fraction; sampled-M Price chain {}", if valid { "valid" } else { "invalid" }),
    )
}

fn main() {
    let criteria: [(&str, Check); 10] = [
        ("level-set sizes", level_set_sizes),
        ("reduction rates", reduction_rates),
        ("histogram degeneracies", histogram_degeneracies),
        ("closed-form vs dense spectra", spectra_vs_dense),
        ("sector exactness", sector_exactness),
        ("Rabi resonance and sweep", rabi_resonance),
        ("overlap and expansions", overlap_and_expansions),
        ("Price end to end", price_end_to_end),
        ("Damavandi and Griewank end to end", damavandi_and_griewank),
        ("Monte-Carlo M", monte_carlo_m),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let v = check();
        println!("{} {:>2} {name}: {}", if v.pass { "PASS" } else { "FAIL" }, k + 1, v.detail);
        failed += usize::from(!v.pass);
    }
    println!("{} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
