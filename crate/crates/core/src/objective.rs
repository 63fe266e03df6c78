//! Objective functions, the discretization grid and the index codec.
//!
//! A grid point is addressed by a single basis index `J` in `[0, N)`, with
//! `N = l^r`. The per-variable element indices ("digits") are laid out
//! mixed-radix, most significant variable first:
//! `J = sum_s digits[s] * l^(r-1-s)`.

use std::f64::consts::PI;
use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Closed interval `[lo, hi]` of one variable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
}

/// Uniform grid with the same number of points `l` on every variable,
/// endpoints included.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    axes: Vec<Axis>,
    count: usize,
}

/// Basis index `J` of a grid point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct BasisIndex(pub u64);

impl fmt::Display for BasisIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl GridSpec {
    pub fn new(axes: Vec<Axis>, count: usize) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::InvalidArgument("grid needs at least one variable".into()));
        }
        if count < 2 {
            return Err(Error::InvalidArgument(format!(
                "grid needs at least two points per variable, got {count}"
            )));
        }
        for (s, a) in axes.iter().enumerate() {
            if !(a.lo.is_finite() && a.hi.is_finite()) || a.hi <= a.lo {
                return Err(Error::InvalidArgument(format!(
                    "axis {s}: need finite lo < hi, got [{}, {}]",
                    a.lo, a.hi
                )));
            }
        }
        let n = (count as u128).checked_pow(axes.len() as u32);
        if n.is_none_or(|n| n > u64::MAX as u128) {
            return Err(Error::InvalidArgument("grid size overflows u64".into()));
        }
        Ok(Self { axes, count })
    }

    /// Same interval on all `dims` variables.
    pub fn uniform(dims: usize, lo: f64, hi: f64, count: usize) -> Result<Self> {
        Self::new(vec![Axis { lo, hi }; dims], count)
    }

    /// Build from `lo` and `step` per variable; `lo + (l-1)*step` is taken as `hi`.
    pub fn from_steps(lo: &[f64], step: &[f64], count: usize) -> Result<Self> {
        if lo.len() != step.len() {
            return Err(Error::InvalidArgument("lo/step length mismatch".into()));
        }
        if step.iter().any(|&h| !(h > 0.0)) {
            return Err(Error::InvalidArgument("step must be positive".into()));
        }
        let axes = lo
            .iter()
            .zip(step)
            .map(|(&lo, &h)| Axis {
                lo,
                hi: lo + (count.saturating_sub(1)) as f64 * h,
            })
            .collect();
        Self::new(axes, count)
    }

    pub fn dims(&self) -> usize {
        self.axes.len()
    }

    /// Points per variable (`l`).
    pub fn count(&self) -> usize {
        self.count
    }

    /// Total number of basis states `N = l^r`.
    pub fn len(&self) -> u64 {
        (self.count as u64).pow(self.axes.len() as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Qubits needed to hold the register, `r * ceil(log2 l)`.
    pub fn qubits(&self) -> u32 {
        let per = usize::BITS - (self.count - 1).leading_zeros();
        per * self.axes.len() as u32
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn step(&self, s: usize) -> f64 {
        let a = self.axes[s];
        (a.hi - a.lo) / (self.count - 1) as f64
    }

    /// Coordinate of element `k` on variable `s`.
    ///
    /// Computed as a weighted sum of the endpoints with a single rounding, so
    /// decimal grids land exactly on representable points such as 2.0 or 5.0.
    #[inline]
    pub fn coordinate(&self, s: usize, k: usize) -> f64 {
        let a = self.axes[s];
        let m = (self.count - 1) as f64;
        let k = k as f64;
        (a.lo * (m - k) + a.hi * k) / m
    }

    pub fn digits(&self, j: BasisIndex) -> Result<Vec<usize>> {
        self.check(j)?;
        let mut digits = vec![0usize; self.dims()];
        let l = self.count as u64;
        let mut rest = j.0;
        for d in digits.iter_mut().rev() {
            *d = (rest % l) as usize;
            rest /= l;
        }
        Ok(digits)
    }

    pub fn index_from_digits(&self, digits: &[usize]) -> Result<BasisIndex> {
        if digits.len() != self.dims() {
            return Err(Error::InvalidArgument(format!(
                "expected {} digits, got {}",
                self.dims(),
                digits.len()
            )));
        }
        let mut j = 0u64;
        for (s, &d) in digits.iter().enumerate() {
            if d >= self.count {
                return Err(Error::OutOfRange(format!(
                    "digit {d} on variable {s} exceeds {}",
                    self.count - 1
                )));
            }
            j = j * self.count as u64 + d as u64;
        }
        Ok(BasisIndex(j))
    }

    /// Writes the coordinates of `j` into `out` without bounds checks beyond debug asserts.
    #[inline]
    pub fn fill_point(&self, j: u64, out: &mut [f64]) {
        debug_assert!(j < self.len());
        debug_assert_eq!(out.len(), self.dims());
        let l = self.count as u64;
        let mut rest = j;
        for s in (0..self.dims()).rev() {
            out[s] = self.coordinate(s, (rest % l) as usize);
            rest /= l;
        }
    }

    fn check(&self, j: BasisIndex) -> Result<()> {
        if j.0 >= self.len() {
            return Err(Error::OutOfRange(format!(
                "basis index {} >= N = {}",
                j.0,
                self.len()
            )));
        }
        Ok(())
    }

    /// Hypercube of side `zoom * (hi - lo)` per axis centred on `center`,
    /// shifted (not shrunk) to stay inside `bounds`.
    pub fn zoomed(&self, center: &[f64], zoom: f64, bounds: &[Axis]) -> Result<Self> {
        let axes = self
            .axes
            .iter()
            .zip(center)
            .zip(bounds)
            .map(|((a, &c), b)| {
                let side = ((a.hi - a.lo) * zoom).min(b.hi - b.lo);
                let mut lo = c - side / 2.0;
                let mut hi = c + side / 2.0;
                if lo < b.lo {
                    lo = b.lo;
                    hi = b.lo + side;
                }
                if hi > b.hi {
                    hi = b.hi;
                    lo = b.hi - side;
                }
                Axis { lo, hi }
            })
            .collect();
        Self::new(axes, self.count)
    }
}

/// Coordinates of basis state `j`.
pub fn index_to_point(j: BasisIndex, g: &GridSpec) -> Result<Vec<f64>> {
    g.check(j)?;
    let mut x = vec![0.0; g.dims()];
    g.fill_point(j.0, &mut x);
    Ok(x)
}

/// Nearest grid point to `x`. Coordinates more than half a step outside the
/// grid are rejected.
pub fn point_to_index(x: &[f64], g: &GridSpec) -> Result<BasisIndex> {
    if x.len() != g.dims() {
        return Err(Error::InvalidArgument(format!(
            "point has {} coordinates, grid has {}",
            x.len(),
            g.dims()
        )));
    }
    let mut digits = Vec::with_capacity(x.len());
    for (s, &xs) in x.iter().enumerate() {
        let a = g.axes[s];
        let h = g.step(s);
        if !xs.is_finite() || xs < a.lo - h / 2.0 || xs > a.hi + h / 2.0 {
            return Err(Error::OutOfRange(format!(
                "coordinate {xs} outside [{}, {}] on variable {s}",
                a.lo, a.hi
            )));
        }
        let k = ((xs - a.lo) / h).round().clamp(0.0, (g.count - 1) as f64);
        digits.push(k as usize);
    }
    g.index_from_digits(&digits)
}

/// `F_J`: the objective evaluated at grid point `j`.
pub fn eval_at_index(j: BasisIndex, f: &ObjectiveFunction, g: &GridSpec) -> Result<f64> {
    let x = index_to_point(j, g)?;
    Ok(f.eval(&x))
}

#[inline]
fn sinc_pi(z: f64) -> f64 {
    // sin(pi z) / (pi z) with the removable singularity filled in
    let pz = PI * z;
    if pz.abs() < 1e-12 {
        1.0
    } else {
        pz.sin() / pz
    }
}

pub fn eval_damavandi(x1: f64, x2: f64) -> f64 {
    let s = (sinc_pi(x1 - 2.0) * sinc_pi(x2 - 2.0)).abs();
    (1.0 - s.powi(5)) * (2.0 + (x1 - 7.0).powi(2) + 2.0 * (x2 - 7.0).powi(2))
}

pub fn eval_griewank(x: &[f64]) -> Result<f64> {
    if x.is_empty() {
        return Err(Error::InvalidArgument("Griewank needs at least one variable".into()));
    }
    Ok(griewank_unchecked(x))
}

#[inline]
fn griewank_unchecked(x: &[f64]) -> f64 {
    let mut sum = 0.0;
    let mut prod = 1.0;
    for (k, &xk) in x.iter().enumerate() {
        sum += xk * xk;
        prod *= (xk / ((k + 1) as f64).sqrt()).cos();
    }
    sum / 4000.0 - prod + 1.0
}

pub fn eval_price(x1: f64, x2: f64) -> f64 {
    (x1.abs() - 5.0).powi(2) + (x2.abs() - 5.0).powi(2)
}

type Evaluator = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A named real-valued function of `r` variables on a box domain.
#[derive(Clone)]
pub struct ObjectiveFunction {
    id: String,
    domain: Vec<Axis>,
    eval: Evaluator,
    grid_count: Option<usize>,
}

impl fmt::Debug for ObjectiveFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ObjectiveFunction")
            .field("id", &self.id)
            .field("domain", &self.domain)
            .finish()
    }
}

/// Names accepted by [`ObjectiveFunction::by_name`].
pub const REGISTRY: &[&str] = &["damavandi", "griewank", "price"];

impl ObjectiveFunction {
    pub fn custom<F>(id: impl Into<String>, domain: Vec<Axis>, f: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Self {
            id: id.into(),
            domain,
            eval: Arc::new(f),
            grid_count: None,
        }
    }

    /// Two-variable Damavandi function on `[0, 14]^2`, 281 points per variable.
    pub fn damavandi() -> Self {
        let mut f = Self::custom("damavandi", vec![Axis { lo: 0.0, hi: 14.0 }; 2], |x| {
            eval_damavandi(x[0], x[1])
        });
        f.grid_count = Some(281);
        f
    }

    /// Griewank function of `dims` variables on `[-40, 40]^r`, 801 points per variable.
    pub fn griewank(dims: usize) -> Self {
        let mut f = Self::custom(
            "griewank",
            vec![Axis { lo: -40.0, hi: 40.0 }; dims],
            griewank_unchecked,
        );
        f.grid_count = Some(801);
        f
    }

    /// Price01 function on `[-10, 10]^2`, 201 points per variable.
    pub fn price() -> Self {
        let mut f = Self::custom("price", vec![Axis { lo: -10.0, hi: 10.0 }; 2], |x| {
            eval_price(x[0], x[1])
        });
        f.grid_count = Some(201);
        f
    }

    pub fn constant(domain: Vec<Axis>, value: f64) -> Self {
        Self::custom("constant", domain, move |_| value)
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "damavandi" => Ok(Self::damavandi()),
            "griewank" => Ok(Self::griewank(2)),
            "price" | "price01" => Ok(Self::price()),
            other => Err(Error::InvalidArgument(format!(
                "unknown function `{other}` (known: {})",
                REGISTRY.join(", ")
            ))),
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn dims(&self) -> usize {
        self.domain.len()
    }

    pub fn domain(&self) -> &[Axis] {
        &self.domain
    }

    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.eval)(x)
    }

    /// The default discretization of the domain, when the function carries one.
    pub fn default_grid(&self) -> Option<GridSpec> {
        self.grid_count
            .and_then(|l| GridSpec::new(self.domain.clone(), l).ok())
    }

    fn with_grid_count(mut self, count: usize) -> Self {
        self.grid_count = Some(count);
        self
    }
}

/// Function values given on every point of a grid.
///
/// File layout: a header line `r l lo1 hi1 ... lor hir`, then `N` lines
/// `J value` in ascending `J` with no gaps.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedFunction {
    grid: GridSpec,
    values: Vec<f64>,
}

impl TabulatedFunction {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() as u64 != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "{} values for a grid of {} states",
                values.len(),
                grid.len()
            )));
        }
        if let Some(j) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite value at J = {j}")));
        }
        Ok(Self { grid, values })
    }

    /// Tabulates `f` on `grid`.
    pub fn sample(f: &ObjectiveFunction, grid: &GridSpec) -> Self {
        let mut x = vec![0.0; grid.dims()];
        let values = (0..grid.len())
            .map(|j| {
                grid.fill_point(j, &mut x);
                f.eval(&x)
            })
            .collect();
        Self {
            grid: grid.clone(),
            values,
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn read<R: BufRead>(reader: R) -> Result<Self> {
        let mut lines = reader
            .lines()
            .enumerate()
            .filter(|(_, l)| l.as_ref().map_or(true, |l| !l.trim().is_empty()));
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::Parse("empty tabulated file".into()))?;
        let header = header?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() < 4 {
            return Err(Error::Parse(format!("bad header `{header}`")));
        }
        let r: usize = parse_field(fields[0], "r")?;
        let l: usize = parse_field(fields[1], "l")?;
        if fields.len() != 2 + 2 * r {
            return Err(Error::Parse(format!(
                "header declares r = {r} but has {} bound fields",
                fields.len() - 2
            )));
        }
        let axes = (0..r)
            .map(|s| {
                Ok(Axis {
                    lo: parse_field(fields[2 + 2 * s], "lo")?,
                    hi: parse_field(fields[3 + 2 * s], "hi")?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let grid = GridSpec::new(axes, l)?;
        let n = grid.len();
        let mut values = Vec::with_capacity(n as usize);
        for (lineno, line) in lines {
            let line = line?;
            let mut it = line.split_whitespace();
            let (Some(j), Some(v), None) = (it.next(), it.next(), it.next()) else {
                return Err(Error::Parse(format!("line {}: expected `J value`", lineno + 1)));
            };
            let j: u64 = parse_field(j, "J")?;
            if j != values.len() as u64 {
                return Err(Error::Parse(format!(
                    "line {}: expected J = {}, found {j}",
                    lineno + 1,
                    values.len()
                )));
            }
            values.push(parse_field(v, "value")?);
        }
        if values.len() as u64 != n {
            return Err(Error::Parse(format!(
                "missing entries: got {} of {n}",
                values.len()
            )));
        }
        Self::new(grid, values)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read(std::io::BufReader::new(file))
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        write!(w, "{} {}", self.grid.dims(), self.grid.count())?;
        for a in self.grid.axes() {
            write!(w, " {} {}", a.lo, a.hi)?;
        }
        writeln!(w)?;
        for (j, v) in self.values.iter().enumerate() {
            writeln!(w, "{j} {v:e}")?;
        }
        Ok(())
    }

    /// Wraps the table as an objective; off-grid points read the nearest entry.
    pub fn into_objective(self, id: impl Into<String>) -> ObjectiveFunction {
        let grid = self.grid.clone();
        let count = grid.count();
        let table = Arc::new(self);
        ObjectiveFunction::custom(id, grid.axes().to_vec(), move |x| {
            let g = &table.grid;
            let mut j = 0u64;
            for (s, &xs) in x.iter().enumerate() {
                let a = g.axes[s];
                let k = ((xs - a.lo) / g.step(s))
                    .round()
                    .clamp(0.0, (g.count - 1) as f64);
                j = j * g.count as u64 + k as u64;
            }
            table.values[j as usize]
        })
        .with_grid_count(count)
    }
}

fn parse_field<T: std::str::FromStr>(s: &str, what: &str) -> Result<T> {
    s.parse()
        .map_err(|_| Error::Parse(format!("cannot parse {what} from `{s}`")))
}
