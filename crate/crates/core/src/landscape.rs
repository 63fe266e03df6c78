//! Level sets of a discretized objective: membership, exact counts,
//! Monte-Carlo fraction estimates, value histograms, threshold schedules and
//! the per-step conditions on the mixing parameters.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objective::{BasisIndex, GridSpec, ObjectiveFunction};
use crate::output::{fmt_float, Table};
use crate::rng;

/// Points per work unit for exact scans.
const SCAN_CHUNK: usize = 1 << 14;

/// How a grid value equal to a threshold (within [`tie_tolerance`]) is treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TiePolicy {
    /// Ties are outside the level set (`F_J < d - tau`).
    #[default]
    Exclusive,
    /// Ties are inside the level set (`F_J <= d + tau`).
    Inclusive,
}

#[inline]
pub fn tie_tolerance(d: f64) -> f64 {
    1e-9 * d.abs().max(1.0)
}

/// Membership test on a raw value.
#[inline]
pub fn value_in_level_set(value: f64, d: f64, ties: TiePolicy) -> bool {
    let tau = tie_tolerance(d);
    match ties {
        TiePolicy::Exclusive => value < d - tau,
        TiePolicy::Inclusive => value <= d + tau,
    }
}

/// Whether grid state `j` belongs to the level set `{J : F_J <= d}`.
pub fn in_level_set(
    j: BasisIndex,
    f: &ObjectiveFunction,
    g: &GridSpec,
    d: f64,
    ties: TiePolicy,
) -> Result<bool> {
    let v = crate::objective::eval_at_index(j, f, g)?;
    Ok(value_in_level_set(v, d, ties))
}

/// Exact size of one level set together with the number of grid values
/// sitting on the threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelCount {
    pub count: u64,
    pub ties: u64,
}

/// Exact scan count of the level set at `d`.
pub fn count_level_set(f: &ObjectiveFunction, g: &GridSpec, d: f64, ties: TiePolicy) -> LevelCount {
    let n = g.len();
    let chunks = n.div_ceil(SCAN_CHUNK as u64);
    let tau = tie_tolerance(d);
    let (count, tied) = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut x = vec![0.0; g.dims()];
            let lo = c * SCAN_CHUNK as u64;
            let hi = (lo + SCAN_CHUNK as u64).min(n);
            let mut inside = 0u64;
            let mut tied = 0u64;
            for j in lo..hi {
                g.fill_point(j, &mut x);
                let v = f.eval(&x);
                inside += value_in_level_set(v, d, ties) as u64;
                tied += ((v - d).abs() <= tau) as u64;
            }
            (inside, tied)
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    LevelCount { count, ties: tied }
}

/// Every `F_J` of a grid, in `J` order, plus a sorted copy for O(log N) counts.
#[derive(Debug, Clone)]
pub struct GridValues {
    values: Vec<f64>,
    sorted: Vec<f64>,
}

impl GridValues {
    pub fn scan(f: &ObjectiveFunction, g: &GridSpec) -> Self {
        let n = g.len() as usize;
        let mut values = vec![0.0; n];
        values
            .par_chunks_mut(SCAN_CHUNK)
            .enumerate()
            .for_each(|(c, chunk)| {
                let mut x = vec![0.0; g.dims()];
                let base = (c * SCAN_CHUNK) as u64;
                for (k, v) in chunk.iter_mut().enumerate() {
                    g.fill_point(base + k as u64, &mut x);
                    *v = f.eval(&x);
                }
            });
        let mut sorted = values.clone();
        sorted.par_sort_unstable_by(|a, b| a.total_cmp(b));
        Self { values, sorted }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> u64 {
        self.values.len() as u64
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.sorted[0]
    }

    pub fn max(&self) -> f64 {
        self.sorted[self.sorted.len() - 1]
    }

    pub fn count(&self, d: f64, ties: TiePolicy) -> LevelCount {
        let tau = tie_tolerance(d);
        let below = self.sorted.partition_point(|&v| v < d - tau) as u64;
        let upto = self.sorted.partition_point(|&v| v <= d + tau) as u64;
        let count = match ties {
            TiePolicy::Exclusive => below,
            TiePolicy::Inclusive => upto,
        };
        LevelCount {
            count,
            ties: upto - below,
        }
    }

    pub fn fraction(&self, d: f64, ties: TiePolicy) -> f64 {
        self.count(d, ties).count as f64 / self.len() as f64
    }

    /// Smallest `J` attaining the minimum value, with every `J` attaining it.
    pub fn argmin(&self) -> (BasisIndex, Vec<BasisIndex>) {
        let m = self.min();
        let all: Vec<_> = self
            .values
            .iter()
            .enumerate()
            .filter(|(_, &v)| v == m)
            .map(|(j, _)| BasisIndex(j as u64))
            .collect();
        (all[0], all)
    }
}

/// Monte-Carlo estimate of a level-set fraction with its 95% half-width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FractionEstimate {
    pub fraction: f64,
    pub half_width: f64,
    pub hits: u64,
    pub samples: u64,
}

impl FractionEstimate {
    /// `M = round(fraction * N)`.
    pub fn scaled(&self, n: u64) -> u64 {
        (self.fraction * n as f64).round() as u64
    }

    pub fn brackets(&self, exact: f64) -> bool {
        (self.fraction - exact).abs() <= self.half_width
    }
}

pub fn estimate_level_fraction(
    f: &ObjectiveFunction,
    g: &GridSpec,
    d: f64,
    samples: u64,
    seed: u64,
    ties: TiePolicy,
) -> Result<FractionEstimate> {
    if samples < 100 {
        return Err(Error::InvalidArgument(format!(
            "need at least 100 samples, got {samples}"
        )));
    }
    let n = g.len();
    let blocks = samples.div_ceil(rng::BLOCK as u64);
    let hits: u64 = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut r = rng::substream(seed, b);
            let mut x = vec![0.0; g.dims()];
            let todo = (samples - b * rng::BLOCK as u64).min(rng::BLOCK as u64);
            let mut hits = 0u64;
            for _ in 0..todo {
                let j = r.gen_range(0..n);
                g.fill_point(j, &mut x);
                hits += value_in_level_set(f.eval(&x), d, ties) as u64;
            }
            hits
        })
        .sum();
    let p = hits as f64 / samples as f64;
    Ok(FractionEstimate {
        fraction: p,
        half_width: 1.96 * (p * (1.0 - p) / samples as f64).sqrt(),
        hits,
        samples,
    })
}

/// Counts of grid values per bin of a fixed width.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub bin_width: f64,
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<u64>,
    /// States whose value falls outside `[lo, hi]`.
    pub overflow: u64,
}

impl Histogram {
    /// Largest bin count (the "degeneracy" of the most crowded value interval).
    pub fn max_count(&self) -> u64 {
        self.counts.iter().copied().max().unwrap_or(0)
    }

    pub fn argmax(&self) -> Option<usize> {
        let m = self.max_count();
        self.counts.iter().position(|&c| c == m)
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.overflow
    }

    pub fn bin_lo(&self, k: usize) -> f64 {
        self.lo + k as f64 * self.bin_width
    }

    pub fn nonzero_bins(&self) -> usize {
        self.counts.iter().filter(|&&c| c > 0).count()
    }

    /// `histogram.csv`: one `bin_lo,count` row per bin.
    pub fn to_table(&self) -> Table {
        let mut t = Table::new(["bin_lo", "count"]);
        for (k, c) in self.counts.iter().enumerate() {
            t.push(vec![fmt_float(self.bin_lo(k)), c.to_string()]);
        }
        t
    }
}

/// Bins every grid value into `floor((F_J - lo) / bin)`. `range = None`
/// spans the observed values. A value equal to `hi` lands in the last bin.
pub fn build_histogram(
    f: &ObjectiveFunction,
    g: &GridSpec,
    bin: f64,
    range: Option<(f64, f64)>,
) -> Result<Histogram> {
    let values = GridValues::scan(f, g);
    histogram_of(&values, bin, range)
}

pub fn histogram_of(values: &GridValues, bin: f64, range: Option<(f64, f64)>) -> Result<Histogram> {
    if !(bin > 0.0) || !bin.is_finite() {
        return Err(Error::InvalidArgument(format!("bin width must be positive, got {bin}")));
    }
    let (lo, hi) = range.unwrap_or((values.min(), values.max()));
    if !(hi >= lo) {
        return Err(Error::InvalidArgument(format!("empty range [{lo}, {hi}]")));
    }
    let nbins = (((hi - lo) / bin).ceil() as usize).max(1);
    let mut counts = vec![0u64; nbins];
    let mut overflow = 0u64;
    for &v in values.values() {
        if v < lo || v > hi {
            overflow += 1;
            continue;
        }
        let k = (((v - lo) / bin).floor() as usize).min(nbins - 1);
        counts[k] += 1;
    }
    Ok(Histogram {
        bin_width: bin,
        lo,
        hi,
        counts,
        overflow,
    })
}

/// Sampled value range widened by 5% of the sampled span on each side.
pub fn estimate_range(f: &ObjectiveFunction, g: &GridSpec, samples: u64, seed: u64) -> Result<(f64, f64)> {
    if samples < 1000 {
        return Err(Error::InvalidArgument(format!(
            "need at least 1000 samples, got {samples}"
        )));
    }
    let n = g.len();
    let blocks = samples.div_ceil(rng::BLOCK as u64);
    let (min, max) = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut r = rng::substream(seed ^ 0x005E_ED0F_4A4E_u64, b);
            let mut x = vec![0.0; g.dims()];
            let todo = (samples - b * rng::BLOCK as u64).min(rng::BLOCK as u64);
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for _ in 0..todo {
                g.fill_point(r.gen_range(0..n), &mut x);
                let v = f.eval(&x);
                lo = lo.min(v);
                hi = hi.max(v);
            }
            (lo, hi)
        })
        .reduce(
            || (f64::INFINITY, f64::NEG_INFINITY),
            |a, b| (a.0.min(b.0), a.1.max(b.1)),
        );
    let span = max - min;
    let margin = if span > 0.0 {
        0.05 * span
    } else {
        0.05 * min.abs().max(1.0)
    };
    let lo = (min - margin).max(min - span.max(margin));
    Ok((lo, max + margin))
}

/// Strictly decreasing thresholds `d_1 > ... > d_m` inside a value bracket.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSchedule {
    thresholds: Vec<f64>,
    /// `[F_min_est, F_max_est]`
    range: (f64, f64),
}

impl ThresholdSchedule {
    pub fn new(thresholds: Vec<f64>, range: (f64, f64)) -> Result<Self> {
        if thresholds.is_empty() {
            return Err(Error::InvalidArgument("schedule needs at least one threshold".into()));
        }
        if thresholds.windows(2).any(|w| !(w[0] > w[1])) {
            return Err(Error::InvalidArgument(
                "thresholds must be strictly decreasing".into(),
            ));
        }
        let (lo, hi) = range;
        if !(hi > thresholds[0]) || !(thresholds[thresholds.len() - 1] > lo) {
            return Err(Error::InvalidArgument(format!(
                "thresholds must lie strictly inside ({lo}, {hi})"
            )));
        }
        Ok(Self { thresholds, range })
    }

    /// A schedule whose bracket is derived from exact grid extremes.
    pub fn with_values(thresholds: Vec<f64>, values: &GridValues) -> Result<Self> {
        let span = (values.max() - values.min()).max(1.0);
        let lo = values.min().min(*thresholds.last().unwrap_or(&0.0)) - 0.05 * span;
        let hi = values.max().max(*thresholds.first().unwrap_or(&0.0)) + 0.05 * span;
        Self::new(thresholds, (lo, hi))
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn range(&self) -> (f64, f64) {
        self.range
    }

    pub fn len(&self) -> usize {
        self.thresholds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thresholds.is_empty()
    }

    pub fn last(&self) -> f64 {
        self.thresholds[self.thresholds.len() - 1]
    }
}

/// Threshold lists used in the published experiments, by function id.
pub fn reference_thresholds(id: &str) -> Option<&'static [f64]> {
    match id {
        "damavandi" => Some(&[70.0, 30.0, 15.0, 7.0, 4.0, 3.0, 2.5, 2.2, 2.1, 2.02, 2.0, 1.0]),
        "griewank" => Some(&[1.0, 0.6, 0.4, 0.3, 0.2, 0.1, 0.06, 0.04, 0.02, 0.01, 0.005, 0.002]),
        "price" => Some(&[20.0, 10.0, 5.0, 2.0, 1.0, 0.5, 0.2, 0.1, 0.05, 0.02, 0.01]),
        _ => None,
    }
}

/// Builds a schedule whose successive level-set fractions shrink by about
/// `rho`, ending at `d_final`. Fractions come from an exact scan.
pub fn auto_schedule(
    f: &ObjectiveFunction,
    g: &GridSpec,
    rho: f64,
    d_final: f64,
    seed: u64,
    ties: TiePolicy,
) -> Result<ThresholdSchedule> {
    let values = GridValues::scan(f, g);
    let range = estimate_range(f, g, 10_000, seed)?;
    let range = (range.0.min(values.min() - 1e-9), range.1.max(values.max() + 1e-9));
    auto_schedule_with(&|d| values.fraction(d, ties), range, rho, d_final)
}

/// [`auto_schedule`] against any monotone fraction oracle `d -> |A(d)| / N`.
pub fn auto_schedule_with(
    fraction: &dyn Fn(f64) -> f64,
    range: (f64, f64),
    rho: f64,
    d_final: f64,
) -> Result<ThresholdSchedule> {
    if !(0.1..=0.9).contains(&rho) {
        return Err(Error::InvalidArgument(format!("rho must lie in [0.1, 0.9], got {rho}")));
    }
    let (f_min, f_max) = range;
    if !(d_final > f_min && d_final < f_max) {
        return Err(Error::InvalidArgument(format!(
            "d_final = {d_final} outside ({f_min}, {f_max})"
        )));
    }
    let final_frac = fraction(d_final);
    if final_frac <= 0.0 {
        return Err(Error::InfeasibleSchedule(format!(
            "level set at d_final = {d_final} is empty"
        )));
    }

    let mut thresholds = Vec::new();
    let mut d_prev = f_max;
    let mut prev = 1.0;
    loop {
        if final_frac / prev >= rho / 2.0 {
            thresholds.push(d_final);
            break;
        }
        let target = rho * prev;
        let d = bisect_fraction(fraction, d_final, d_prev, target);
        let got = fraction(d);
        if !(got < prev) || !(d < d_prev) || d <= d_final {
            // value ties leave no admissible threshold between here and d_final
            thresholds.push(d_final);
            break;
        }
        thresholds.push(d);
        d_prev = d;
        prev = got;
    }
    ThresholdSchedule::new(thresholds, range)
}

/// Threshold in `(lo, hi)` whose fraction is closest (in log ratio) to `target`,
/// stopping early once within 10% relative.
fn bisect_fraction(fraction: &dyn Fn(f64) -> f64, lo: f64, hi: f64, target: f64) -> f64 {
    let score = |d: f64| {
        let f = fraction(d);
        if f <= 0.0 {
            f64::INFINITY
        } else {
            (f / target).ln().abs()
        }
    };
    let (mut a, mut b) = (lo, hi);
    let mut best = (f64::INFINITY, hi);
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        let s = score(mid);
        if s < best.0 {
            best = (s, mid);
        }
        if s <= (1.1f64).ln() && (fraction(mid) / target) >= 0.9 {
            break;
        }
        if fraction(mid) > target {
            b = mid;
        } else {
            a = mid;
        }
    }
    best.1
}

/// Where the Monte-Carlo `M_i` comes from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum MPolicy {
    /// `M_i = N_i` from exact scans.
    Exact,
    /// `M_i = round(p_hat * N)` from uniform sampling, at least 1.
    Sampled { samples: u64 },
}

/// Limits used by [`validate_schedule`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionLimits {
    /// Minimum distance of `(a, b)` from `(0, 1/2)`...
    pub min_distance: f64,
    /// ...unless `a` is at least this.
    pub min_a: f64,
    pub rate_floor: f64,
}

impl Default for ConditionLimits {
    fn default() -> Self {
        Self {
            min_distance: 0.1,
            min_a: 0.05,
            rate_floor: 0.05,
        }
    }
}

/// Per-step algorithm conditions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConditionFlags {
    /// `(a, b)` away from the gap-closing point `(0, 1/2)`.
    pub c1: bool,
    /// `2 M_i (N - N_i) < N^2`, i.e. the ground state leans on the level set.
    pub c2: bool,
    /// Reduction rate above the floor.
    pub c3: bool,
}

impl ConditionFlags {
    pub fn all(&self) -> bool {
        self.c1 && self.c2 && self.c3
    }

    /// Conditions on real-valued `(a, b)` and rate.
    pub fn evaluate(a: f64, b: f64, rate: f64, limits: &ConditionLimits) -> Self {
        Self {
            c1: (a * a + (b - 0.5).powi(2)).sqrt() >= limits.min_distance || a >= limits.min_a,
            c2: b * (1.0 - a) * 2.0 < 1.0,
            c3: rate >= limits.rate_floor,
        }
    }

    /// Same as [`Self::evaluate`] with `c2` decided in exact integer arithmetic.
    pub fn evaluate_counts(n: u64, n_i: u64, m_i: u64, rate: f64, limits: &ConditionLimits) -> Self {
        let a = n_i as f64 / n as f64;
        let b = m_i as f64 / n as f64;
        let mut flags = Self::evaluate(a, b, rate, limits);
        flags.c2 = 2 * (m_i as u128) * ((n - n_i) as u128) < (n as u128) * (n as u128);
        flags
    }
}

/// One row of a [`LevelSetReport`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelStep {
    pub i: usize,
    pub d: f64,
    pub n_i: u64,
    pub ties: u64,
    pub m_i: u64,
    /// Half-width of the `M_i` estimate in states (0 for exact M).
    pub m_half_width: f64,
    pub rate: f64,
    pub a: f64,
    pub b: f64,
    pub flags: ConditionFlags,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSetReport {
    pub n_total: u64,
    pub ties: TiePolicy,
    pub m_policy: MPolicy,
    pub steps: Vec<LevelStep>,
}

impl LevelSetReport {
    pub fn sizes(&self) -> Vec<u64> {
        self.steps.iter().map(|s| s.n_i).collect()
    }

    pub fn rates(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.rate).collect()
    }

    pub fn passed(&self) -> bool {
        self.steps.iter().all(|s| s.flags.all())
    }

    /// The `b = M_i / N` closest to 1/2.
    pub fn b_closest_to_half(&self) -> f64 {
        self.steps
            .iter()
            .map(|s| s.b)
            .min_by(|x, y| (x - 0.5).abs().total_cmp(&(y - 0.5).abs()))
            .unwrap_or(f64::NAN)
    }

    /// `schedule.csv`
    pub fn to_table(&self) -> Table {
        let mut t = Table::new(["i", "d_i", "N_i", "M_i", "rate", "a", "b", "c1", "c2", "c3"]);
        for s in &self.steps {
            t.push(vec![
                s.i.to_string(),
                fmt_float(s.d),
                s.n_i.to_string(),
                s.m_i.to_string(),
                fmt_float(s.rate),
                fmt_float(s.a),
                fmt_float(s.b),
                s.flags.c1.to_string(),
                s.flags.c2.to_string(),
                s.flags.c3.to_string(),
            ]);
        }
        t
    }
}

/// Exact sizes, `M_i` per policy, rates and condition flags for a schedule.
pub fn level_set_report(
    f: &ObjectiveFunction,
    g: &GridSpec,
    schedule: &ThresholdSchedule,
    m_policy: MPolicy,
    ties: TiePolicy,
    seed: u64,
) -> Result<LevelSetReport> {
    let values = GridValues::scan(f, g);
    level_set_report_from(&values, f, g, schedule, m_policy, ties, seed)
}

pub fn level_set_report_from(
    values: &GridValues,
    f: &ObjectiveFunction,
    g: &GridSpec,
    schedule: &ThresholdSchedule,
    m_policy: MPolicy,
    ties: TiePolicy,
    seed: u64,
) -> Result<LevelSetReport> {
    let n = values.len();
    let limits = ConditionLimits::default();
    let mut prev = n;
    let mut steps = Vec::with_capacity(schedule.len());
    for (k, &d) in schedule.thresholds().iter().enumerate() {
        let LevelCount { count, ties: tied } = values.count(d, ties);
        let (m_i, m_half_width) = match m_policy {
            MPolicy::Exact => (count, 0.0),
            MPolicy::Sampled { samples } => {
                let est = estimate_level_fraction(f, g, d, samples, rng::mix(seed ^ k as u64), ties)?;
                (est.scaled(n).max(1), est.half_width * n as f64)
            }
        };
        let rate = if prev == 0 { 0.0 } else { count as f64 / prev as f64 };
        steps.push(LevelStep {
            i: k + 1,
            d,
            n_i: count,
            ties: tied,
            m_i,
            m_half_width,
            rate,
            a: count as f64 / n as f64,
            b: m_i as f64 / n as f64,
            flags: ConditionFlags::evaluate_counts(n, count, m_i, rate, &limits),
        });
        prev = count;
    }
    Ok(LevelSetReport {
        n_total: n,
        ties,
        m_policy,
        steps,
    })
}

/// Recomputes the condition flags of every step; returns whether all pass.
pub fn validate_schedule(report: &mut LevelSetReport, limits: &ConditionLimits) -> bool {
    let n = report.n_total;
    for s in &mut report.steps {
        s.flags = ConditionFlags::evaluate_counts(n, s.n_i, s.m_i, s.rate, limits);
    }
    report.passed() && report.steps.last().is_some_and(|s| s.n_i >= 1)
}
