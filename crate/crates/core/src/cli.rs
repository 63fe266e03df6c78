//! Command-line driver. Every subcommand writes its tables into `--out`.
//!
//! Exit codes: 0 success, 1 runtime error, 2 usage error, 3 step conditions
//! violated (0 with `--lenient`), 4 a protocol step ran out of repeats.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::landscape::{
    auto_schedule_with, build_histogram, level_set_report_from, reference_thresholds, GridValues,
    MPolicy, ThresholdSchedule, TiePolicy,
};
use crate::objective::{Axis, GridSpec, ObjectiveFunction, TabulatedFunction};
use crate::qrt::{
    self, CellPartition, EnergySource, LevelHamiltonian, ProtocolConfig, RefineOptions, SamplingMode, StepPlan,
};
use crate::spectral;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_CONDITIONS: i32 = 3;
pub const EXIT_STEP_FAILED: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "qrt", version, about = "Multistep quantum resonant transition optimizer (classical simulation)")]
#[command(args_override_self = true)]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// `key = value` file; keys are long flag names, `#` starts a comment.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true, env = "QRT_THREADS")]
    pub threads: Option<usize>,
    /// Report violated step conditions but exit 0.
    #[arg(long, global = true)]
    pub lenient: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Histogram of objective values over the grid.
    #[command(args_override_self = true)]
    Landscape {
        #[command(flatten)]
        function: FunctionArgs,
        #[arg(long, default_value_t = 0.01)]
        bin: f64,
        /// `lo:hi`; defaults to the observed value range.
        #[arg(long, allow_hyphen_values = true)]
        range: Option<String>,
    },
    /// Level-set sizes, mixing weights and step conditions of a schedule.
    #[command(args_override_self = true)]
    Schedule {
        #[command(flatten)]
        function: FunctionArgs,
        #[command(flatten)]
        schedule: ScheduleArgs,
    },
    /// Closed-form spectra over an (a, b) mesh.
    #[command(args_override_self = true)]
    Spectral {
        /// `lo:hi:steps` per axis.
        #[arg(long, allow_hyphen_values = true, default_value = "0:1:101")]
        mesh: String,
        /// Single point `a,b`.
        #[arg(long, allow_hyphen_values = true)]
        point: Option<String>,
        /// Fixed `a` values; `b` runs over the mesh axis.
        #[arg(long, allow_hyphen_values = true)]
        slices: Option<String>,
    },
    /// Full multistep protocol with final sampling.
    #[command(args_override_self = true)]
    Run {
        #[command(flatten)]
        function: FunctionArgs,
        #[command(flatten)]
        schedule: ScheduleArgs,
        #[command(flatten)]
        probe: ProbeArgs,
        #[arg(long, default_value_t = 4000)]
        shots: usize,
        /// `auto`, `rejection` or `enumerate`.
        #[arg(long, default_value = "auto")]
        sampling: String,
        /// Zoom-in refinement, e.g. `rounds=2 zoom=0.1`.
        #[arg(long, num_args = 1..)]
        refine: Option<Vec<String>>,
    },
    /// Probe-frequency sweep of one step of a schedule.
    #[command(args_override_self = true)]
    Sweep {
        #[command(flatten)]
        function: FunctionArgs,
        #[command(flatten)]
        schedule: ScheduleArgs,
        /// 1-based step.
        #[arg(long, default_value_t = 1)]
        step: usize,
        #[arg(long, default_value_t = 1e-3)]
        coupling: f64,
        /// `lo:hi:count`; defaults to 81 points over 8 couplings either side
        /// of the closed-form resonance.
        #[arg(long, allow_hyphen_values = true)]
        omega_grid: Option<String>,
        /// Evolution time per frequency; defaults to `pi / (2 c)`.
        #[arg(long)]
        sweep_time: Option<f64>,
    },
}

#[derive(Debug, Clone, Args)]
pub struct FunctionArgs {
    /// damavandi, griewank or price.
    #[arg(long, default_value = "price")]
    pub function: String,
    /// Dimension for griewank.
    #[arg(long)]
    pub dims: Option<usize>,
    /// Values on a grid from a file: header `r l lo1 hi1 ...`, then `J value` lines.
    #[arg(long)]
    pub tabulated: Option<PathBuf>,
    /// `lo:hi:count` per variable, comma separated.
    #[arg(long, allow_hyphen_values = true)]
    pub grid: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct ScheduleArgs {
    /// Comma-separated decreasing thresholds, or `paper`.
    #[arg(long, allow_hyphen_values = true)]
    pub thresholds: Option<String>,
    /// Automatic schedule `rho,d_final`.
    #[arg(long, allow_hyphen_values = true)]
    pub auto: Option<String>,
    /// `exact` or `sampled:SAMPLES`.
    #[arg(long, default_value = "exact")]
    pub m: String,
    /// `exclusive` or `inclusive`.
    #[arg(long, default_value = "exclusive")]
    pub ties: String,
}

#[derive(Debug, Clone, Args)]
pub struct ProbeArgs {
    #[arg(long, default_value_t = 1e-3)]
    pub coupling: f64,
    #[arg(long, default_value_t = 1.0)]
    pub omega: f64,
    #[arg(long, default_value_t = 200)]
    pub max_repeats: u32,
    /// Spacing guard for the per-step coupling, or `none` for a fixed `c`.
    #[arg(long, default_value = "50")]
    pub guard: String,
    /// `analytic` or `measured`.
    #[arg(long, allow_hyphen_values = true, default_value = "analytic")]
    pub source: String,
}

/// Runs the CLI on `args` (program name first) and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let args = match expand_config(args) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::StepFailed { .. } => EXIT_STEP_FAILED,
                Error::InvalidArgument(_) | Error::Parse(_) => EXIT_USAGE,
                _ => EXIT_ERROR,
            }
        }
    }
}

const SUBCOMMANDS: &[&str] = &["landscape", "schedule", "spectral", "run", "sweep"];
const BOOLEAN_KEYS: &[&str] = &["lenient"];

/// Splices `--config` file entries in front of the command-line flags so the
/// latter take precedence.
fn expand_config(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let mut path = None;
    for (k, a) in args.iter().enumerate() {
        let s = a.to_string_lossy();
        if s == "--config" {
            path = args.get(k + 1).map(PathBuf::from);
        } else if let Some(p) = s.strip_prefix("--config=") {
            path = Some(PathBuf::from(p));
        }
    }
    let Some(path) = path else {
        return Ok(args);
    };
    let extra = config_tokens(&fs::read_to_string(&path)?)?;
    let at = args
        .iter()
        .position(|a| SUBCOMMANDS.contains(&a.to_string_lossy().as_ref()))
        .map(|p| p + 1)
        .unwrap_or(args.len());
    let mut out = args[..at].to_vec();
    out.extend(extra.into_iter().map(OsString::from));
    out.extend_from_slice(&args[at..]);
    Ok(out)
}

fn config_tokens(text: &str) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("config line {}: expected `key = value`", no + 1)))?;
        let key = key.trim().replace('_', "-");
        let value = value.trim();
        if key == "config" {
            return Err(Error::Parse("config files cannot include other config files".into()));
        }
        if BOOLEAN_KEYS.contains(&key.as_str()) {
            match value {
                "true" | "yes" | "1" => out.push(format!("--{key}")),
                "false" | "no" | "0" => {}
                _ => return Err(Error::Parse(format!("config line {}: `{key}` takes true or false", no + 1))),
            }
        } else {
            out.push(format!("--{key}"));
            out.extend(value.split_whitespace().map(str::to_string));
        }
    }
    Ok(out)
}

fn execute(cli: &Cli) -> Result<i32> {
    if let Some(k) = cli.common.threads {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(k.max(1)).build_global();
    }
    fs::create_dir_all(&cli.common.out)?;
    let out = cli.common.out.as_path();
    let seed = cli.common.seed;
    match &cli.command {
        Command::Landscape { function, bin, range } => cmd_landscape(function, *bin, range.as_deref(), out),
        Command::Schedule { function, schedule } => cmd_schedule(function, schedule, seed, cli.common.lenient, out),
        Command::Spectral { mesh, point, slices } => cmd_spectral(mesh, point.as_deref(), slices.as_deref(), out),
        Command::Run {
            function,
            schedule,
            probe,
            shots,
            sampling,
            refine,
        } => {
            let cfg = protocol_config(schedule, probe, *shots, sampling, seed)?;
            match refine {
                Some(spec) => cmd_refine(function, schedule, &cfg, spec, out),
                None => cmd_run(function, schedule, &cfg, cli.common.lenient, out),
            }
        }
        Command::Sweep {
            function,
            schedule,
            step,
            coupling,
            omega_grid,
            sweep_time,
        } => cmd_sweep(function, schedule, *step, *coupling, omega_grid.as_deref(), *sweep_time, seed, out),
    }
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| Error::Parse(format!("`{s}` is not a number")))
}

fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',').map(parse_f64).collect()
}

/// `lo:hi:count`
fn parse_triple(s: &str) -> Result<(f64, f64, usize)> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(Error::Parse(format!("`{s}` is not lo:hi:count")));
    }
    let count = parts[2]
        .trim()
        .parse()
        .map_err(|_| Error::Parse(format!("`{}` is not a count", parts[2])))?;
    Ok((parse_f64(parts[0])?, parse_f64(parts[1])?, count))
}

fn parse_pair(s: &str, sep: char) -> Result<(f64, f64)> {
    let (a, b) = s
        .split_once(sep)
        .ok_or_else(|| Error::Parse(format!("`{s}` is not a pair separated by `{sep}`")))?;
    Ok((parse_f64(a)?, parse_f64(b)?))
}

pub fn parse_grid(s: &str) -> Result<GridSpec> {
    let mut axes = Vec::new();
    let mut count = None;
    for part in s.split(',') {
        let (lo, hi, l) = parse_triple(part)?;
        if count.is_some_and(|c| c != l) {
            return Err(Error::InvalidArgument("every variable needs the same point count".into()));
        }
        count = Some(l);
        axes.push(Axis { lo, hi });
    }
    GridSpec::new(axes, count.unwrap_or(0))
}

fn load_function(a: &FunctionArgs) -> Result<(ObjectiveFunction, GridSpec)> {
    if let Some(path) = &a.tabulated {
        let table = TabulatedFunction::from_path(path)?;
        let grid = match &a.grid {
            Some(s) => parse_grid(s)?,
            None => table.grid().clone(),
        };
        return Ok((table.into_objective("tabulated"), grid));
    }
    let f = match (a.function.to_ascii_lowercase().as_str(), a.dims) {
        ("griewank", Some(d)) => ObjectiveFunction::griewank(d),
        (_, _) => ObjectiveFunction::by_name(&a.function)?,
    };
    let grid = match &a.grid {
        Some(s) => parse_grid(s)?,
        None => f
            .default_grid()
            .ok_or_else(|| Error::InvalidArgument("function has no default grid; pass --grid".into()))?,
    };
    if grid.dims() != f.dims() {
        return Err(Error::InvalidArgument(format!(
            "grid has {} variables, function takes {}",
            grid.dims(),
            f.dims()
        )));
    }
    Ok((f, grid))
}

fn parse_ties(s: &str) -> Result<TiePolicy> {
    match s {
        "exclusive" => Ok(TiePolicy::Exclusive),
        "inclusive" => Ok(TiePolicy::Inclusive),
        _ => Err(Error::Parse(format!("ties must be exclusive or inclusive, got `{s}`"))),
    }
}

fn parse_m_policy(s: &str) -> Result<MPolicy> {
    if s == "exact" {
        return Ok(MPolicy::Exact);
    }
    match s.strip_prefix("sampled:") {
        Some(n) => Ok(MPolicy::Sampled {
            samples: n.parse().map_err(|_| Error::Parse(format!("`{n}` is not a sample count")))?,
        }),
        None => Err(Error::Parse(format!("M policy must be exact or sampled:N, got `{s}`"))),
    }
}

fn build_schedule(f: &ObjectiveFunction, a: &ScheduleArgs, values: &GridValues) -> Result<ThresholdSchedule> {
    let ties = parse_ties(&a.ties)?;
    match (&a.thresholds, &a.auto) {
        (Some(_), Some(_)) => Err(Error::InvalidArgument("give either --thresholds or --auto".into())),
        (Some(t), None) => {
            let list = if t == "paper" {
                reference_thresholds(f.id())
                    .ok_or_else(|| Error::InvalidArgument(format!("no published schedule for `{}`", f.id())))?
                    .to_vec()
            } else {
                parse_list(t)?
            };
            ThresholdSchedule::with_values(list, values)
        }
        (None, auto) => {
            let (rho, d_final) = match auto {
                Some(s) => parse_pair(s, ',')?,
                None => return Err(Error::InvalidArgument("a schedule needs --thresholds or --auto".into())),
            };
            let span = (values.max() - values.min()).max(1e-12);
            let range = (values.min() - 0.05 * span, values.max() + 0.05 * span);
            auto_schedule_with(&|d| values.fraction(d, ties), range, rho, d_final)
        }
    }
}

fn protocol_config(s: &ScheduleArgs, p: &ProbeArgs, shots: usize, sampling: &str, seed: u64) -> Result<ProtocolConfig> {
    let spacing_guard = match p.guard.as_str() {
        "none" => None,
        g => Some(parse_f64(g)?),
    };
    let source = match p.source.as_str() {
        "analytic" => EnergySource::Analytic,
        "measured" => EnergySource::Measured {
            sweep_points: 41,
            linewidths: 8.0,
            rabi_points: 3,
        },
        other => return Err(Error::Parse(format!("source must be analytic or measured, got `{other}`"))),
    };
    let sampling = match sampling {
        "auto" => SamplingMode::Auto,
        "rejection" => SamplingMode::Rejection,
        "enumerate" => SamplingMode::Enumerate,
        other => return Err(Error::Parse(format!("unknown sampling mode `{other}`"))),
    };
    Ok(ProtocolConfig {
        coupling: p.coupling,
        spacing_guard,
        omega: p.omega,
        max_repeats: p.max_repeats,
        shots,
        seed,
        source,
        ties: parse_ties(&s.ties)?,
        m_policy: parse_m_policy(&s.m)?,
        sampling,
    })
}

fn cmd_landscape(a: &FunctionArgs, bin: f64, range: Option<&str>, out: &Path) -> Result<i32> {
    let (f, g) = load_function(a)?;
    let range = range.map(|r| parse_pair(r, ':')).transpose()?;
    let h = build_histogram(&f, &g, bin, range)?;
    h.to_table().write(out.join("histogram.csv"))?;
    let k = h.argmax().unwrap_or(0);
    println!(
        "{}: N = {}, {} bins of width {bin}, max count {} at [{}, {})",
        f.id(),
        g.len(),
        h.counts.len(),
        h.max_count(),
        h.bin_lo(k),
        h.bin_lo(k + 1)
    );
    Ok(EXIT_OK)
}

fn cmd_schedule(a: &FunctionArgs, s: &ScheduleArgs, seed: u64, lenient: bool, out: &Path) -> Result<i32> {
    let (f, g) = load_function(a)?;
    let values = GridValues::scan(&f, &g);
    let schedule = build_schedule(&f, s, &values)?;
    let report = level_set_report_from(&values, &f, &g, &schedule, parse_m_policy(&s.m)?, parse_ties(&s.ties)?, seed)?;
    report.to_table().write(out.join("schedule.csv"))?;
    fs::write(out.join("schedule.json"), serde_json::to_string_pretty(&report)?)?;
    println!("{}: N = {}", f.id(), report.n_total);
    for st in &report.steps {
        println!(
            "  d = {:<8} N_i = {:<7} rate = {:.3}  a = {:.4}  b = {:.4}  conditions {}",
            st.d,
            st.n_i,
            st.rate,
            st.a,
            st.b,
            if st.flags.all() { "ok" } else { "VIOLATED" }
        );
    }
    Ok(conditions_exit(report.passed(), lenient))
}

fn conditions_exit(passed: bool, lenient: bool) -> i32 {
    if passed {
        EXIT_OK
    } else if lenient {
        eprintln!("warning: step conditions violated");
        EXIT_OK
    } else {
        eprintln!("error: step conditions violated (use --lenient to accept)");
        EXIT_CONDITIONS
    }
}

fn cmd_spectral(mesh: &str, point: Option<&str>, slices: Option<&str>, out: &Path) -> Result<i32> {
    if let Some(p) = point {
        let (a, b) = parse_pair(p, ',')?;
        let (lo, hi) = spectral::eigenpair_ab(a, b)?;
        println!("a = {a}, b = {b}: E- = {lo}, E+ = {hi}, gap = {}", hi - lo);
        if let Ok((x1, x2)) = spectral::ground_cells(a, b) {
            println!("x1 = {x1}, x2 = {x2}");
        }
        spectral::spectral_table(&[(a, b)])?.write(out.join("spectral.csv"))?;
        return Ok(EXIT_OK);
    }
    let (lo, hi, steps) = parse_triple(mesh)?;
    let points = match slices {
        Some(list) => {
            let axis: Vec<f64> = spectral::mesh(lo, hi, steps).iter().take(steps).map(|p| p.1).collect();
            parse_list(list)?
                .into_iter()
                .flat_map(|a| axis.iter().map(move |&b| (a, b)))
                .collect()
        }
        None => spectral::mesh(lo, hi, steps),
    };
    let table = spectral::spectral_table(&points)?;
    table.write(out.join("spectral.csv"))?;
    let (arg, min) = points
        .iter()
        .map(|&(a, b)| ((a, b), spectral::delta_e_ab(a, b).unwrap_or(f64::NAN)))
        .min_by(|x, y| x.1.total_cmp(&y.1))
        .expect("non-empty mesh");
    println!("{} points, smallest gap {min} at (a, b) = {arg:?}", points.len());
    Ok(EXIT_OK)
}

fn cmd_run(a: &FunctionArgs, s: &ScheduleArgs, cfg: &ProtocolConfig, lenient: bool, out: &Path) -> Result<i32> {
    let (f, g) = load_function(a)?;
    let values = GridValues::scan(&f, &g);
    let schedule = build_schedule(&f, s, &values)?;
    let report = qrt::run_multistep_with(&f, &g, &values, &schedule, cfg)?;
    report.write_json(out.join("run_report.json"))?;
    report.trace_table().write(out.join("trace.csv"))?;
    print_run(&report);
    if let Some(fail) = &report.failure {
        eprintln!("error: step {} did not decay within {} repeats", fail.step, fail.repeats);
        return Ok(EXIT_STEP_FAILED);
    }
    Ok(conditions_exit(report.conditions_passed, lenient))
}

fn print_run(r: &qrt::RunReport) {
    println!("{}: {} steps, total evolution time {:.3e}", r.function, r.steps.len(), r.total_time);
    for st in &r.steps {
        println!(
            "  step {:>2}: N_i = {:<7} g0 = {:.4}  c = {:.2e}  t = {:.3e}  repeats = {}  p0 = {:.6}",
            st.i, st.n_i, st.g0, st.coupling, st.t_i, st.repeats, st.p0_sector
        );
    }
    if let (Some(x), Some(v)) = (&r.best_point, r.best_value) {
        println!("best {x:?} with value {v}");
    }
}

fn cmd_refine(a: &FunctionArgs, s: &ScheduleArgs, cfg: &ProtocolConfig, spec: &[String], out: &Path) -> Result<i32> {
    let (f, g) = load_function(a)?;
    let mut opts = RefineOptions::default();
    if let Some(auto) = &s.auto {
        opts.rho = parse_pair(auto, ',')?.0;
    }
    for item in spec.iter().flat_map(|x| x.split([',', ' '])).filter(|x| !x.is_empty()) {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("refine option `{item}` is not key=value")))?;
        match k {
            "rounds" => opts.rounds = v.parse().map_err(|_| Error::Parse(format!("bad rounds `{v}`")))?,
            "zoom" => opts.zoom = parse_f64(v)?,
            "rho" => opts.rho = parse_f64(v)?,
            _ => return Err(Error::Parse(format!("unknown refine option `{k}`"))),
        }
    }
    let outcome = qrt::refine(&f, &g, &opts, cfg)?;
    for (r, report) in outcome.rounds.iter().enumerate() {
        let dir = out.join(format!("round_{}", r + 1));
        fs::create_dir_all(&dir)?;
        report.write_json(dir.join("run_report.json"))?;
        report.trace_table().write(dir.join("trace.csv"))?;
    }
    let summary = serde_json::json!({
        "history": outcome.history,
        "best_point": outcome.best_point,
        "best_value": outcome.best_value,
        "stopped": outcome.stopped,
        "grids": outcome.grids,
    });
    fs::write(out.join("refine.json"), serde_json::to_string_pretty(&summary)?)?;
    println!("incumbent after each round: {:?}", outcome.history);
    println!("best {:?} with value {}", outcome.best_point, outcome.best_value);
    if outcome.rounds.iter().any(|r| !r.completed()) {
        return Ok(EXIT_STEP_FAILED);
    }
    Ok(EXIT_OK)
}

#[allow(clippy::too_many_arguments)]
fn cmd_sweep(
    a: &FunctionArgs,
    s: &ScheduleArgs,
    step: usize,
    c: f64,
    omega_grid: Option<&str>,
    sweep_time: Option<f64>,
    seed: u64,
    out: &Path,
) -> Result<i32> {
    let (f, g) = load_function(a)?;
    let values = GridValues::scan(&f, &g);
    let schedule = build_schedule(&f, s, &values)?;
    let report = level_set_report_from(&values, &f, &g, &schedule, parse_m_policy(&s.m)?, parse_ties(&s.ties)?, seed)?;
    let m = report.steps.len();
    if step == 0 || step > m {
        return Err(Error::InvalidArgument(format!("step must lie in 1..={m}")));
    }
    let sizes = report.sizes();
    let part = CellPartition::chain(report.n_total, &sizes, Some(schedule.thresholds()))?;
    let ham = |i: usize| -> Result<LevelHamiltonian> {
        if i == 0 {
            return Ok(LevelHamiltonian::h0(&part));
        }
        let prefix = part.prefix_for(sizes[i - 1])?;
        Ok(if i < m {
            LevelHamiltonian { m: report.steps[i - 1].m_i, prefix }
        } else {
            LevelHamiltonian::problem(prefix)
        })
    };
    let plan = StepPlan::analytic(step, &part, ham(step - 1)?, ham(step)?)?;
    let omegas: Vec<f64> = match omega_grid {
        Some(spec) => {
            let (lo, hi, n) = parse_triple(spec)?;
            (0..n).map(|k| lo + (hi - lo) * k as f64 / (n.max(2) - 1) as f64).collect()
        }
        None => {
            let centre = plan.e0_cur - plan.e0_prev;
            (0..81).map(|k| centre + 8.0 * c * (k as f64 - 40.0) / 40.0).collect()
        }
    };
    let t = sweep_time.unwrap_or(std::f64::consts::FRAC_PI_2 / c);
    let sweep = qrt::frequency_sweep(&part, &plan.prev, &plan.cur, plan.e0_prev, c, &omegas, t)?;
    let mut table = crate::output::Table::new(["omega", "population"]);
    for (w, p) in sweep.omegas.iter().zip(&sweep.populations) {
        table.push(vec![crate::output::fmt_float(*w), crate::output::fmt_float(*p)]);
    }
    table.write(out.join("sweep.csv"))?;
    println!(
        "step {step}: peak {:.4} at omega = {}, E0 estimate {} (closed form {})",
        sweep.peak, sweep.omega_peak, sweep.e0_estimate, plan.e0_cur
    );
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &[&str]) -> i32 {
        main_with_args(std::iter::once("qrt").chain(args.iter().copied()))
    }

    #[test]
    fn grid_parsing() {
        let g = parse_grid("0:14:281,0:14:281").unwrap();
        assert_eq!(g.len(), 78961);
        assert!(parse_grid("0:1:3,0:1:4").is_err());
        assert!(parse_grid("0:1").is_err());
    }

    #[test]
    fn config_lines() {
        let t = config_tokens("# comment\nfunction = damavandi\nlenient = true\nrefine = rounds=2 zoom=0.1\n\n").unwrap();
        assert_eq!(t, ["--function", "damavandi", "--lenient", "--refine", "rounds=2", "zoom=0.1"]);
        assert!(config_tokens("nonsense").is_err());
        assert!(config_tokens("lenient = maybe").is_err());
    }

    #[test]
    fn subcommands_write_files() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().to_str().unwrap();
        assert_eq!(run(&["landscape", "--function", "price", "--bin", "1", "--out", out]), 0);
        assert!(dir.path().join("histogram.csv").exists());
        assert_eq!(run(&["schedule", "--function", "price", "--thresholds", "paper", "--out", out]), 0);
        let csv = fs::read_to_string(dir.path().join("schedule.csv")).unwrap();
        assert!(csv.contains(",25108,"));
        assert_eq!(run(&["spectral", "--point", "0.3333333333333333,0.3333333333333333", "--out", out]), 0);
        assert_eq!(run(&["spectral", "--mesh", "0:1:11", "--slices", "0,0.01,0.05", "--out", out]), 0);
        assert_eq!(
            run(&["run", "--function", "price", "--thresholds", "20,10,5,2,1", "--shots", "50", "--out", out]),
            0
        );
        assert!(dir.path().join("run_report.json").exists());
        assert!(dir.path().join("trace.csv").exists());
        assert_eq!(run(&["sweep", "--function", "price", "--thresholds", "paper", "--step", "2", "--out", out]), 0);
        assert!(dir.path().join("sweep.csv").exists());
    }

    #[test]
    fn config_file_and_overrides() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("run.conf");
        fs::write(&cfg, "function = damavandi\nbin = 5\n").unwrap();
        let out = dir.path().to_str().unwrap();
        let c = cfg.to_str().unwrap();
        assert_eq!(run(&["landscape", "--config", c, "--function", "price", "--out", out]), 0);
        let first = fs::read_to_string(dir.path().join("histogram.csv")).unwrap();
        // price values span [0, 50]: ten bins of width 5
        assert_eq!(first.lines().count(), 11);
        fs::write(&cfg, "colour = blue\n").unwrap();
        assert_eq!(run(&["landscape", "--config", c, "--out", out]), EXIT_USAGE);
    }

    #[test]
    fn error_codes() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().to_str().unwrap();
        assert_eq!(run(&["landscape", "--function", "rosenbrock", "--out", out]), EXIT_USAGE);
        assert_eq!(run(&["schedule", "--function", "price", "--out", out]), EXIT_USAGE);
        assert_eq!(run(&["frobnicate"]), EXIT_USAGE);
        // 0.001 -> 0.0 leaves the last level set empty
        assert_ne!(run(&["run", "--function", "price", "--thresholds", "1,0.0", "--out", out]), 0);
    }
}
