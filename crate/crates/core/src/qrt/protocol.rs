//! The full multistep protocol on a grid: chained resonant steps, final
//! sampling of the register and zoom-in refinement.

use std::collections::HashMap;
use std::f64::consts::FRAC_PI_2;
use std::path::Path;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sector::{CellPartition, LevelHamiltonian, SectorState};
use super::step::{estimate_overlap_from_rabi, frequency_sweep, min_spacing, run_step, StepConfig, StepPlan};
use crate::error::{Error, Result};
use crate::landscape::{
    auto_schedule_with, level_set_report_from, value_in_level_set, GridValues, LevelSetReport, MPolicy,
    ThresholdSchedule, TiePolicy,
};
use crate::objective::{index_to_point, BasisIndex, GridSpec, ObjectiveFunction};
use crate::output::{fmt_float, Table};
use crate::rng;
use crate::spectral;

/// Where each step takes its ground energy and overlap from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum EnergySource {
    /// Closed-form spectrum and overlap.
    Analytic,
    /// Frequency sweep for the energy and a Rabi fit for the overlap. The
    /// sweep window is centred on the closed-form resonance and spans
    /// `linewidths` couplings either side. Sweep errors accumulate from step
    /// to step, so once the per-step coupling drops below that accumulated
    /// error the later steps detune and fail.
    Measured {
        sweep_points: usize,
        linewidths: f64,
        rabi_points: usize,
    },
}

/// How final shots are drawn from a cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplingMode {
    /// Uniform grid draws accepted when they fall in the cell.
    Rejection,
    /// List the cell once and draw from the list.
    Enumerate,
    /// Rejection for cells with at least as many states as shots, otherwise
    /// enumeration.
    #[default]
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    /// Upper bound on the probe coupling `c`.
    pub coupling: f64,
    /// When set, each step lowers `c` to `min_spacing / guard`.
    pub spacing_guard: Option<f64>,
    pub omega: f64,
    pub max_repeats: u32,
    pub shots: usize,
    pub seed: u64,
    pub source: EnergySource,
    pub ties: TiePolicy,
    pub m_policy: MPolicy,
    pub sampling: SamplingMode,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self {
            coupling: 1e-3,
            spacing_guard: Some(50.0),
            omega: 1.0,
            max_repeats: 200,
            shots: 4000,
            seed: 0,
            source: EnergySource::Analytic,
            ties: TiePolicy::Exclusive,
            m_policy: MPolicy::Exact,
            sampling: SamplingMode::Auto,
        }
    }
}

/// Per-step row of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub i: usize,
    pub d: f64,
    pub n_i: u64,
    /// `M` of the target Hamiltonian; 0 on the final step.
    pub m_i: u64,
    pub a: f64,
    pub b: f64,
    pub e0: f64,
    pub e0_used: f64,
    pub g0: f64,
    pub g0_used: f64,
    pub delta_e: f64,
    pub ground_gap: f64,
    pub min_spacing: f64,
    pub coupling: f64,
    /// `(c / min_spacing)^2`.
    pub kappa: f64,
    pub alpha: f64,
    pub omega: f64,
    pub detuning: f64,
    pub t_i: f64,
    pub repeats: u32,
    pub p0_analytic: f64,
    pub p0_sector: f64,
    pub p0_empirical: f64,
    pub fidelity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepFailure {
    pub step: usize,
    pub repeats: u32,
    pub p0_empirical: f64,
}

/// One final-measurement shot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub index: BasisIndex,
    pub value: f64,
    pub cell: usize,
}

/// Non-reproducible run metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub unix_time: u64,
    pub wall_clock_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub function: String,
    pub grid: GridSpec,
    pub schedule: Vec<f64>,
    pub seed: u64,
    pub config: ProtocolConfig,
    pub levels: LevelSetReport,
    pub conditions_passed: bool,
    pub steps: Vec<StepRecord>,
    pub failure: Option<StepFailure>,
    pub cell_sizes: Vec<u64>,
    /// Register probabilities per cell after the last step.
    pub cell_distribution: Vec<f64>,
    pub samples: Vec<Sample>,
    pub best_index: Option<BasisIndex>,
    pub best_point: Option<Vec<f64>>,
    pub best_value: Option<f64>,
    /// Sum of evolution time over every attempt of every step.
    pub total_time: f64,
    pub meta: RunMeta,
}

impl RunReport {
    pub fn completed(&self) -> bool {
        self.failure.is_none()
    }

    /// Converts a recorded step failure into an error.
    pub fn into_result(self) -> Result<Self> {
        match &self.failure {
            Some(f) => Err(Error::StepFailed {
                step: f.step,
                repeats: f.repeats,
                p0_empirical: f.p0_empirical,
            }),
            None => Ok(self),
        }
    }

    /// JSON without the timing metadata; equal seeds give equal values.
    pub fn canonical_json(&self) -> Result<serde_json::Value> {
        let mut v = serde_json::to_value(self)?;
        if let Some(o) = v.as_object_mut() {
            o.remove("meta");
        }
        Ok(v)
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    /// Empirical frequency of each sampled index.
    pub fn sample_frequencies(&self) -> Vec<(BasisIndex, f64)> {
        let mut counts: HashMap<BasisIndex, usize> = HashMap::new();
        for s in &self.samples {
            *counts.entry(s.index).or_default() += 1;
        }
        let mut out: Vec<_> = counts
            .into_iter()
            .map(|(j, c)| (j, c as f64 / self.samples.len() as f64))
            .collect();
        out.sort_by_key(|x| x.0);
        out
    }

    /// `trace.csv`: one row per step.
    pub fn trace_table(&self) -> Table {
        let mut t = Table::new([
            "i", "d_i", "N_i", "M_i", "a", "b", "E0", "g0", "coupling", "kappa", "alpha", "t_i", "repeats",
            "p0_analytic", "p0_sector", "p0_empirical", "fidelity", "detuning",
        ]);
        for s in &self.steps {
            let mut row = vec![s.i.to_string(), fmt_float(s.d), s.n_i.to_string(), s.m_i.to_string()];
            row.extend([s.a, s.b, s.e0, s.g0, s.coupling, s.kappa, s.alpha, s.t_i].map(fmt_float));
            row.push(s.repeats.to_string());
            row.extend([s.p0_analytic, s.p0_sector, s.p0_empirical, s.fidelity, s.detuning].map(fmt_float));
            t.push(row);
        }
        t
    }
}

/// Runs the chain `H_0 -> H_1 -> ... -> H_{m-1} -> H_P` over `schedule` and
/// samples the final register.
pub fn run_multistep(
    f: &ObjectiveFunction,
    g: &GridSpec,
    schedule: &ThresholdSchedule,
    cfg: &ProtocolConfig,
) -> Result<RunReport> {
    let values = GridValues::scan(f, g);
    run_multistep_with(f, g, &values, schedule, cfg)
}

/// [`run_multistep`] on an existing scan of the grid.
pub fn run_multistep_with(
    f: &ObjectiveFunction,
    g: &GridSpec,
    values: &GridValues,
    schedule: &ThresholdSchedule,
    cfg: &ProtocolConfig,
) -> Result<RunReport> {
    let started = Instant::now();
    if !(cfg.coupling > 0.0) || cfg.max_repeats == 0 {
        return Err(Error::InvalidArgument("coupling must be positive and max repeats at least 1".into()));
    }
    let levels = level_set_report_from(values, f, g, schedule, cfg.m_policy, cfg.ties, cfg.seed)?;
    let sizes = levels.sizes();
    let m = sizes.len();
    if sizes[m - 1] == 0 {
        return Err(Error::InfeasibleSchedule(format!(
            "level set at d = {} is empty",
            schedule.last()
        )));
    }
    let n = values.len();
    let part = CellPartition::chain(n, &sizes, Some(schedule.thresholds()))?;

    let mut prev = LevelHamiltonian::h0(&part);
    let mut e0_prev_used = -1.0;
    let mut state = SectorState::with_probe(1, &part.uniform());
    let mut steps = Vec::with_capacity(m);
    let mut failure = None;
    let mut total_time = 0.0;

    for (k, lv) in levels.steps.iter().enumerate() {
        let i = k + 1;
        let prefix = part.prefix_for(lv.n_i)?;
        let cur = if i < m {
            LevelHamiltonian { m: lv.m_i, prefix }
        } else {
            LevelHamiltonian::problem(prefix)
        };
        let truth = StepPlan::analytic(i, &part, prev, cur)?;
        let spacing = min_spacing(&part, &truth, truth.resonant_alpha(cfg.omega));
        let c = match cfg.spacing_guard {
            Some(guard) => cfg.coupling.min(spacing / guard),
            None => cfg.coupling,
        };

        let mut plan = truth;
        if let EnergySource::Measured {
            sweep_points,
            linewidths,
            rabi_points,
        } = cfg.source
        {
            plan.e0_prev = e0_prev_used;
            let centre = truth.e0_cur - truth.e0_prev;
            let half = linewidths * c;
            let pts = sweep_points.max(3);
            let omegas: Vec<f64> = (0..pts)
                .map(|j| centre - half + 2.0 * half * j as f64 / (pts - 1) as f64)
                .collect();
            let sweep = frequency_sweep(&part, &prev, &cur, e0_prev_used, c, &omegas, FRAC_PI_2 / c)?;
            plan.e0_cur = sweep.e0_estimate;
            let tau = FRAC_PI_2 / c / 6.0;
            let times: Vec<f64> = (1..=rabi_points.max(2)).map(|r| r as f64 * tau).collect();
            plan.g0 = estimate_overlap_from_rabi(&part, &prev, &cur, sweep.omega_peak, 1.0, c, &times)?.g0;
        }

        let step_cfg = StepConfig {
            omega: cfg.omega,
            coupling: c,
            alpha: None,
            time: None,
            max_repeats: cfg.max_repeats,
            seed: cfg.seed,
        };
        let params = cur.params(&part)?;
        let gap = spectral::energy_gap(&params);
        match run_step(&part, &plan, &step_cfg, &state) {
            Ok(out) => {
                total_time += out.time * out.repeats as f64;
                steps.push(StepRecord {
                    i,
                    d: lv.d,
                    n_i: lv.n_i,
                    m_i: cur.m,
                    a: params.a(),
                    b: params.b(),
                    e0: truth.e0_cur,
                    e0_used: plan.e0_cur,
                    g0: truth.g0,
                    g0_used: plan.g0,
                    delta_e: gap.delta_e,
                    ground_gap: gap.ground_gap,
                    min_spacing: spacing,
                    coupling: c,
                    kappa: (c / spacing).powi(2),
                    alpha: out.alpha,
                    omega: cfg.omega,
                    detuning: out.detuning,
                    t_i: out.time,
                    repeats: out.repeats,
                    p0_analytic: out.p0_analytic,
                    p0_sector: out.p0_sector,
                    p0_empirical: out.p0_empirical,
                    fidelity: out.fidelity,
                });
                state = out.state;
                if i < m {
                    state = state.flip_probe();
                }
            }
            Err(Error::StepFailed {
                step,
                repeats,
                p0_empirical,
            }) => {
                total_time += plan.optimal_time(c) * repeats as f64;
                failure = Some(StepFailure {
                    step,
                    repeats,
                    p0_empirical,
                });
                break;
            }
            Err(e) => return Err(e),
        }
        prev = cur;
        e0_prev_used = plan.e0_cur;
    }

    let (cell_distribution, samples) = if failure.is_none() {
        let probs = state.cell_probabilities(0);
        let samples = sample_final(f, g, &part, &probs, cfg.shots, cfg.seed, cfg.ties, cfg.sampling, Some(values))?;
        (probs, samples)
    } else {
        (Vec::new(), Vec::new())
    };
    let best = samples
        .iter()
        .min_by(|x, y| x.value.total_cmp(&y.value).then(x.index.cmp(&y.index)))
        .copied();
    let best_point = best.map(|s| index_to_point(s.index, g)).transpose()?;

    Ok(RunReport {
        function: f.id().to_string(),
        grid: g.clone(),
        schedule: schedule.thresholds().to_vec(),
        seed: cfg.seed,
        config: *cfg,
        conditions_passed: levels.passed(),
        levels,
        steps,
        failure,
        cell_sizes: part.sizes().to_vec(),
        cell_distribution,
        samples,
        best_index: best.map(|s| s.index),
        best_point,
        best_value: best.map(|s| s.value),
        total_time,
        meta: RunMeta {
            unix_time: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
            wall_clock_s: started.elapsed().as_secs_f64(),
        },
    })
}

/// Draws `shots` grid states: a cell by its probability, then a uniform
/// member of that cell. Cell membership comes from the partition thresholds.
#[allow(clippy::too_many_arguments)]
pub fn sample_final(
    f: &ObjectiveFunction,
    g: &GridSpec,
    part: &CellPartition,
    probs: &[f64],
    shots: usize,
    seed: u64,
    ties: TiePolicy,
    mode: SamplingMode,
    values: Option<&GridValues>,
) -> Result<Vec<Sample>> {
    let k = part.k();
    if probs.len() != k {
        return Err(Error::InvalidArgument("one probability per cell expected".into()));
    }
    let outer = part.outer();
    if outer[..k - 1].iter().any(Option::is_none) {
        return Err(Error::InvalidArgument("partition carries no level-set thresholds".into()));
    }
    let n = g.len();
    let total: f64 = probs.iter().sum();
    if !(total > 0.0) {
        return Err(Error::NumericDomain("register has no population".into()));
    }
    let member = |v: f64, j: usize| -> bool {
        outer[j].is_none_or(|d| value_in_level_set(v, d, ties)) && (j == 0 || !value_in_level_set(v, outer[j - 1].expect("inner cells have thresholds"), ties))
    };
    let value_at = |j: u64, x: &mut [f64]| -> f64 {
        match values {
            Some(v) => v.values()[j as usize],
            None => {
                g.fill_point(j, x);
                f.eval(x)
            }
        }
    };

    let mut listed: Vec<Option<Vec<u64>>> = vec![None; k];
    for j in 0..k {
        if probs[j] <= 0.0 {
            continue;
        }
        let size = part.sizes()[j];
        let enumerate = match mode {
            SamplingMode::Enumerate => true,
            SamplingMode::Rejection => false,
            SamplingMode::Auto => (size as usize) < shots,
        };
        if enumerate {
            let mut x = vec![0.0; g.dims()];
            let list: Vec<u64> = (0..n).filter(|&q| member(value_at(q, &mut x), j)).collect();
            listed[j] = Some(list);
        } else {
            let rate = size as f64 / n as f64;
            if rate < 1e-6 {
                return Err(Error::SamplingTooSlow { rate });
            }
        }
    }

    let cumulative: Vec<f64> = probs
        .iter()
        .scan(0.0, |acc, &p| {
            *acc += p / total;
            Some(*acc)
        })
        .collect();
    let blocks = shots.div_ceil(rng::BLOCK);
    let tag = rng::mix(seed ^ 0x5A3D_1E5F);
    let chunks: Vec<Vec<Sample>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut r = rng::substream(tag, b as u64);
            let mut x = vec![0.0; g.dims()];
            let todo = (shots - b * rng::BLOCK).min(rng::BLOCK);
            let mut out = Vec::with_capacity(todo);
            for _ in 0..todo {
                let u: f64 = r.gen();
                let cell = cumulative.iter().position(|&c| u < c).unwrap_or(k - 1);
                let cell = (cell..k).chain((0..cell).rev()).find(|&j| probs[j] > 0.0).unwrap_or(cell);
                let index = match &listed[cell] {
                    Some(list) => list[r.gen_range(0..list.len())],
                    None => loop {
                        let q = r.gen_range(0..n);
                        if member(value_at(q, &mut x), cell) {
                            break q;
                        }
                    },
                };
                out.push(Sample {
                    index: BasisIndex(index),
                    value: value_at(index, &mut x),
                    cell,
                });
            }
            out
        })
        .collect();
    Ok(chunks.into_iter().flatten().collect())
}

/// Smallest threshold whose exclusive level set holds exactly the grid
/// minimizers: midway between the two lowest distinct values.
pub fn terminal_threshold(values: &GridValues) -> Result<f64> {
    let lo = values.min();
    let tau = crate::landscape::tie_tolerance(lo);
    let next = values
        .values()
        .iter()
        .copied()
        .filter(|&v| v > lo + 3.0 * tau)
        .fold(f64::INFINITY, f64::min);
    if !next.is_finite() {
        return Err(Error::InfeasibleSchedule("objective is constant on the grid".into()));
    }
    Ok(0.5 * (lo + next))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefineOptions {
    /// Side shrink factor per round, in `(0, 1]`.
    pub zoom: f64,
    pub rounds: usize,
    /// Target reduction rate of the per-round automatic schedule.
    pub rho: f64,
    /// Optional incumbent to zoom around from the first round on.
    pub start: Option<Vec<f64>>,
}

impl Default for RefineOptions {
    fn default() -> Self {
        Self {
            zoom: 0.1,
            rounds: 2,
            rho: 0.5,
            start: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefineOutcome {
    pub rounds: Vec<RunReport>,
    pub grids: Vec<GridSpec>,
    /// Incumbent value after each round.
    pub history: Vec<f64>,
    pub best_point: Vec<f64>,
    pub best_value: f64,
    /// Set when refinement stopped before the requested number of rounds.
    pub stopped: Option<String>,
}

/// Repeats automatic schedule + multistep run on grids that shrink by `zoom`
/// per round around the incumbent. The incumbent never gets worse.
pub fn refine(f: &ObjectiveFunction, grid: &GridSpec, opts: &RefineOptions, cfg: &ProtocolConfig) -> Result<RefineOutcome> {
    if !(opts.zoom > 0.0 && opts.zoom <= 1.0) || opts.rounds == 0 {
        return Err(Error::InvalidArgument(format!(
            "need zoom in (0, 1] and rounds >= 1, got {} and {}",
            opts.zoom, opts.rounds
        )));
    }
    let mut incumbent: Option<(Vec<f64>, f64)> = opts.start.clone().map(|x| {
        let v = f.eval(&x);
        (x, v)
    });
    let offset = usize::from(incumbent.is_some());
    let mut out = RefineOutcome {
        rounds: Vec::new(),
        grids: Vec::new(),
        history: Vec::new(),
        best_point: Vec::new(),
        best_value: f64::INFINITY,
        stopped: None,
    };
    for r in 0..opts.rounds {
        let level = r + offset;
        let g = match &incumbent {
            Some((x, _)) if level > 0 => grid.zoomed(x, opts.zoom.powi(level as i32), f.domain())?,
            _ => grid.clone(),
        };
        if g.axes().iter().any(|a| a.hi - a.lo < 1e-12) {
            out.stopped = Some(format!("round {} grid side below 1e-12", r + 1));
            break;
        }
        let values = GridValues::scan(f, &g);
        let d_final = match terminal_threshold(&values) {
            Ok(d) => d,
            Err(e) => {
                out.stopped = Some(e.to_string());
                break;
            }
        };
        let span = (values.max() - values.min()).max(1e-12);
        let range = (values.min() - 0.05 * span, values.max() + 0.05 * span);
        let schedule = auto_schedule_with(&|d| values.fraction(d, cfg.ties), range, opts.rho, d_final)?;
        let mut round_cfg = *cfg;
        round_cfg.seed = rng::mix(cfg.seed ^ r as u64);
        let report = run_multistep_with(f, &g, &values, &schedule, &round_cfg)?;
        if let (Some(x), Some(v)) = (&report.best_point, report.best_value) {
            if incumbent.as_ref().is_none_or(|(_, best)| v < *best) {
                incumbent = Some((x.clone(), v));
            }
        }
        let failed = !report.completed();
        out.grids.push(g);
        out.rounds.push(report);
        if let Some((x, v)) = &incumbent {
            out.history.push(*v);
            out.best_point = x.clone();
            out.best_value = *v;
        }
        if failed {
            out.stopped = Some(format!("round {} step failed", r + 1));
            break;
        }
    }
    Ok(out)
}
