//! One resonant transition: sector assembly, repeat-until-decay, the
//! frequency sweep that locates the resonance and the Rabi fit of the overlap.

use std::f64::consts::FRAC_PI_2;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sector::{measure_probe, sector_matrix, CellPartition, LevelHamiltonian, Propagator, SectorMatrix, SectorState};
use crate::error::{Error, Result};
use crate::rng;
use crate::spectral;

/// What one step needs to know about its two Hamiltonians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepPlan {
    /// 1-based step number.
    pub index: usize,
    pub prev: LevelHamiltonian,
    pub cur: LevelHamiltonian,
    /// Ground energies used to tune the probe (closed form or measured).
    pub e0_prev: f64,
    pub e0_cur: f64,
    /// Ground-state overlap used to set the runtime.
    pub g0: f64,
}

impl StepPlan {
    /// Energies from the closed-form spectrum, overlap from the closed-form
    /// ground components.
    pub fn analytic(index: usize, part: &CellPartition, prev: LevelHamiltonian, cur: LevelHamiltonian) -> Result<Self> {
        let pp = prev.params(part)?;
        let cp = cur.params(part)?;
        let g0 = spectral::overlap(part.n(), pp.n_i, cp.n_i, pp.m_i, cp.m_i)?;
        Ok(Self {
            index,
            prev,
            cur,
            e0_prev: spectral::eigenpair(&pp).0,
            e0_cur: spectral::eigenpair(&cp).0,
            g0,
        })
    }

    /// `alpha_i = (E0_cur - omega) / E0_prev` puts `|1>|phi_prev>` and
    /// `|0>|phi_cur>` on resonance.
    pub fn resonant_alpha(&self, omega: f64) -> f64 {
        (self.e0_cur - omega) / self.e0_prev
    }

    /// `t_i = pi / (2 c g0)`.
    pub fn optimal_time(&self, c: f64) -> f64 {
        FRAC_PI_2 / (c * self.g0)
    }
}

/// Probe settings of one step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepConfig {
    pub omega: f64,
    pub coupling: f64,
    /// `None` selects the resonant rescale.
    pub alpha: Option<f64>,
    /// `None` selects `pi / (2 c g0)`.
    pub time: Option<f64>,
    pub max_repeats: u32,
    pub seed: u64,
}

impl Default for StepConfig {
    fn default() -> Self {
        Self {
            omega: 1.0,
            coupling: 1e-3,
            alpha: None,
            time: None,
            max_repeats: 200,
            seed: 0,
        }
    }
}

impl StepConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.coupling > 0.0) {
            return Err(Error::InvalidArgument(format!("coupling must be positive, got {}", self.coupling)));
        }
        if let Some(t) = self.time {
            if !(t > 0.0) {
                return Err(Error::InvalidArgument(format!("time must be positive, got {t}")));
            }
        }
        if self.max_repeats == 0 {
            return Err(Error::InvalidArgument("max repeats must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub decayed: bool,
    pub repeats: u32,
    pub state: SectorState,
    pub alpha: f64,
    pub time: f64,
    /// `sin^2(c t g0)`.
    pub p0_analytic: f64,
    /// Exact decay probability of the first attempt in the sector.
    pub p0_sector: f64,
    /// Decays per attempt.
    pub p0_empirical: f64,
    /// `(E0_cur - alpha E0_prev) - omega` with exact ground energies.
    pub detuning: f64,
    /// Register fidelity with the ground state of the current Hamiltonian.
    pub fidelity: f64,
}

/// Smallest distance from the resonant pair to any other sector level:
/// current excited levels on the probe-0 side, rescaled previous excited
/// levels on the probe-1 side. Levels degenerate with a `b = 0` ground are
/// skipped since they do not couple.
pub fn min_spacing(part: &CellPartition, plan: &StepPlan, alpha: f64) -> f64 {
    let spread = |h: &LevelHamiltonian, e0: f64| -> Vec<f64> {
        let (mut ev, _) = crate::linalg::symmetric_eigen(&h.matrix(part));
        let g = (0..ev.len())
            .min_by(|&i, &j| (ev[i] - e0).abs().total_cmp(&(ev[j] - e0).abs()))
            .unwrap_or(0);
        ev.remove(g);
        let bare = h.m == 0;
        ev.into_iter()
            .map(|e| (e - e0).abs())
            .filter(|&d| !(bare && d <= 1e-12))
            .collect()
    };
    let (e_cur, _) = plan.cur.ground(part).expect("plan Hamiltonians are valid");
    let (e_prev, _) = plan.prev.ground(part).expect("plan Hamiltonians are valid");
    let cur = spread(&plan.cur, e_cur);
    let prev = spread(&plan.prev, e_prev).into_iter().map(|d| alpha.abs() * d);
    cur.into_iter().chain(prev).fold(f64::INFINITY, f64::min)
}

pub fn build_step_hamiltonian(part: &CellPartition, plan: &StepPlan, omega: f64, alpha: f64, c: f64) -> SectorMatrix {
    sector_matrix(part, &plan.cur, &plan.prev, omega, alpha, c)
}

/// Evolves and measures until the probe reads 0 or the repeat budget runs out.
pub fn run_step(part: &CellPartition, plan: &StepPlan, cfg: &StepConfig, prev_state: &SectorState) -> Result<StepOutcome> {
    cfg.validate()?;
    let alpha = cfg.alpha.unwrap_or_else(|| plan.resonant_alpha(cfg.omega));
    let time = cfg.time.unwrap_or_else(|| plan.optimal_time(cfg.coupling));
    if !(time.is_finite() && time > 0.0) {
        return Err(Error::NumericDomain(format!("runtime {time} from overlap {}", plan.g0)));
    }
    let h = build_step_hamiltonian(part, plan, cfg.omega, alpha, cfg.coupling);
    let prop = Propagator::new(&h)?;

    let (e_cur, ground_cur) = plan.cur.ground(part)?;
    let (e_prev, _) = plan.prev.ground(part)?;
    let first = prop.apply(prev_state, time);
    let p0_sector = first.population(0) / first.norm().powi(2);

    let mut rng = rng::stream(cfg.seed, plan.index as u64);
    let mut state = prev_state.clone();
    for repeat in 1..=cfg.max_repeats {
        let evolved = prop.apply(&state, time);
        let (bit, post) = measure_probe(&evolved, &mut rng);
        if bit == 0 {
            return Ok(StepOutcome {
                decayed: true,
                repeats: repeat,
                fidelity: post.register_fidelity(0, &ground_cur),
                state: post,
                alpha,
                time,
                p0_analytic: (cfg.coupling * time * plan.g0).sin().powi(2),
                p0_sector,
                p0_empirical: 1.0 / repeat as f64,
                detuning: (e_cur - alpha * e_prev) - cfg.omega,
            });
        }
        state = post;
    }
    Err(Error::StepFailed {
        step: plan.index,
        repeats: cfg.max_repeats,
        p0_empirical: 0.0,
    })
}

/// Probe-0 population as a function of probe frequency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub omegas: Vec<f64>,
    pub populations: Vec<f64>,
    pub omega_peak: f64,
    pub peak: f64,
    pub baseline: f64,
    /// `omega_peak + E0_prev`.
    pub e0_estimate: f64,
}

/// Scans `omegas` with `alpha = 1`, evolving `|1>|phi_prev>` for `t_sweep`
/// at each point, and reads the current ground energy off the peak.
pub fn frequency_sweep(
    part: &CellPartition,
    prev: &LevelHamiltonian,
    cur: &LevelHamiltonian,
    e0_prev: f64,
    c: f64,
    omegas: &[f64],
    t_sweep: f64,
) -> Result<Sweep> {
    if omegas.len() < 3 {
        return Err(Error::InvalidArgument("sweep needs at least 3 frequencies".into()));
    }
    if omegas.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument("sweep frequencies must increase".into()));
    }
    let (_, phi_prev) = prev.ground(part)?;
    let start = SectorState::with_probe(1, &phi_prev);
    let populations = omegas
        .par_iter()
        .map(|&w| {
            let h = sector_matrix(part, cur, prev, w, 1.0, c);
            Ok(Propagator::new(&h)?.apply(&start, t_sweep).population(0))
        })
        .collect::<Result<Vec<f64>>>()?;

    let mut sorted = populations.clone();
    sorted.sort_by(f64::total_cmp);
    let baseline = sorted[sorted.len() / 2];
    let (i, &peak) = populations
        .iter()
        .enumerate()
        .max_by(|x, y| x.1.total_cmp(y.1))
        .expect("non-empty sweep");
    if !(peak > 2.0 * baseline && peak > 0.05) {
        return Err(Error::NoResonanceFound { peak, baseline });
    }
    let mut omega_peak = omegas[i];
    if i > 0 && i + 1 < omegas.len() {
        let (y0, y1, y2) = (populations[i - 1], populations[i], populations[i + 1]);
        let h = 0.5 * (omegas[i + 1] - omegas[i - 1]);
        let curv = y0 - 2.0 * y1 + y2;
        if curv < 0.0 {
            let shift = 0.5 * h * (y0 - y2) / curv;
            omega_peak += shift.clamp(-0.5 * h, 0.5 * h);
        }
    }
    Ok(Sweep {
        omegas: omegas.to_vec(),
        populations,
        omega_peak,
        peak,
        baseline,
        e0_estimate: omega_peak + e0_prev,
    })
}

/// Least-squares fit of `p(t) = sin^2(c g0 t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RabiFit {
    pub g0: f64,
    pub rms_residual: f64,
    pub times: Vec<f64>,
    pub populations: Vec<f64>,
}

/// Measures probe-0 populations of `|1>|phi_prev>` at `times` with the given
/// probe tuning and fits the overlap.
#[allow(clippy::too_many_arguments)]
pub fn estimate_overlap_from_rabi(
    part: &CellPartition,
    prev: &LevelHamiltonian,
    cur: &LevelHamiltonian,
    omega: f64,
    alpha: f64,
    c: f64,
    times: &[f64],
) -> Result<RabiFit> {
    if times.len() < 2 {
        return Err(Error::InvalidArgument("Rabi fit needs at least 2 times".into()));
    }
    let (_, phi_prev) = prev.ground(part)?;
    let start = SectorState::with_probe(1, &phi_prev);
    let prop = Propagator::new(&sector_matrix(part, cur, prev, omega, alpha, c))?;
    let populations: Vec<f64> = times.iter().map(|&t| prop.apply(&start, t).population(0)).collect();
    fit_rabi(c, times, &populations)
}

/// Fits `g0` to `(t, p)` samples: invert the earliest sample, then refine by
/// golden-section search on the squared residual.
pub fn fit_rabi(c: f64, times: &[f64], populations: &[f64]) -> Result<RabiFit> {
    let t_first = times.iter().copied().fold(f64::INFINITY, f64::min);
    let k = times.iter().position(|&t| t == t_first).unwrap_or(0);
    let g_init = populations[k].clamp(0.0, 1.0).sqrt().asin() / (c * t_first);
    let sse = |g: f64| -> f64 {
        times
            .iter()
            .zip(populations)
            .map(|(&t, &p)| (p - (c * g * t).sin().powi(2)).powi(2))
            .sum()
    };
    let g0 = if g_init > 0.0 {
        golden_min(&sse, 0.5 * g_init, 1.5 * g_init)
    } else {
        0.0
    };
    let rms_residual = (sse(g0) / times.len() as f64).sqrt();
    if !(rms_residual <= 0.1) {
        return Err(Error::FitFailed { residual: rms_residual });
    }
    Ok(RabiFit {
        g0,
        rms_residual,
        times: times.to_vec(),
        populations: populations.to_vec(),
    })
}

fn golden_min(f: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if hi - lo <= 1e-15 * hi.abs().max(1e-300) {
            break;
        }
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = f(x2);
        }
    }
    0.5 * (lo + hi)
}
