//! Command-line front end. Exit codes: 0 when every assertion passes, 1 on a
//! failed assertion or runtime error, 2 on a usage error.

use std::ffi::OsString;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;

use super::{
    run_experiment, standard_frames, ExperimentConfig, ExperimentKind, RunManifest, Status,
};
use crate::concentration::{
    self, frame_sigma, tail_experiment_with_sigma, BanachFrame, VariateKind,
};
use crate::error::{Error, Result};
use crate::io::{load_integers, load_json, load_poly, save_set, write_set};
use crate::polynorm::{
    lp_norm, luxemburg_psi2, rider_norm, sup_norm, weak_l2_norm, NormEstimate, OrliczConfig,
    TrigPolynomial,
};
use crate::quasiindep::{extract_greedy, find_relation, find_relation_of_length};
use crate::spectra::{sample_set, thin, SelectorSchedule};
use crate::ucconst::{sn_operator_norm, uc_constant, write_lp_instance, LpConfig, LpSolver};

#[derive(Parser)]
#[command(
    name = "thinsets",
    version,
    about = "Random thin sets of integers",
    arg_required_else_help = true
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Sample a random set from a selector schedule.
    Gen(GenArgs),
    /// Norms of a polynomial, a characteristic sum or a frame.
    Norms(NormsArgs),
    /// Empirical tails of ‖Σ Xⱼ vⱼ‖ against the deviation bounds.
    Tail(TailArgs),
    /// Self-bounding condition check.
    Blm(BlmArgs),
    /// Greedy quasi-independent extraction.
    Extract(ExtractArgs),
    /// Relation search in a set, or relation probabilities of a schedule.
    Relations(RelationsArgs),
    /// Partial-sum operator norms and UC constants.
    Uc(UcArgs),
    /// Kashin–Tzafriri growth experiment.
    Kt(KtArgs),
    /// Dyadic-density pipeline.
    Thm31(Thm31Args),
    /// Rider-schedule pipeline.
    Thm41(Thm41Args),
    /// Run any experiment from a JSON config.
    Run(RunArgs),
    /// Flatten manifests into CSV or JSON.
    Report(ReportArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ScheduleArg {
    Dyadic,
    Rider,
    Constant,
}

#[derive(Args)]
struct ScheduleOpts {
    #[arg(long, value_enum, default_value = "dyadic")]
    schedule: ScheduleArg,
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    #[arg(long, default_value_t = 1.5)]
    alpha: f64,
    #[arg(long, default_value_t = 0.5)]
    delta: f64,
    #[arg(long)]
    k_min: Option<u64>,
}

impl ScheduleOpts {
    fn build(&self) -> Result<SelectorSchedule> {
        let s = match self.schedule {
            ScheduleArg::Dyadic => SelectorSchedule::dyadic(self.c)?,
            ScheduleArg::Rider => SelectorSchedule::rider(self.c, self.alpha)?,
            ScheduleArg::Constant => SelectorSchedule::constant(self.delta)?,
        };
        match self.k_min {
            Some(k) => s.with_k_min(k),
            None => Ok(s),
        }
    }
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    schedule: ScheduleOpts,
    /// First index (defaults to k_min).
    #[arg(long)]
    lo: Option<u64>,
    #[arg(long)]
    hi: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Thin the sample to this constant mean.
    #[arg(long)]
    thin_delta: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// A set of frequencies, from a file or inline.
#[derive(Args)]
struct SetInput {
    /// Set file or whitespace/comma separated integers.
    #[arg(long)]
    set: Option<PathBuf>,
    /// Inline list, e.g. `1,2,4,8`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    frequencies: Option<Vec<i64>>,
}

impl SetInput {
    fn load(&self) -> Result<Option<Vec<i64>>> {
        match (&self.set, &self.frequencies) {
            (Some(_), Some(_)) => Err(Error::Config("give either --set or --frequencies".into())),
            (Some(p), None) => load_integers(p).map(Some),
            (None, Some(f)) => Ok(Some(f.clone())),
            (None, None) => Ok(None),
        }
    }

    fn require(&self) -> Result<Vec<i64>> {
        self.load()?
            .ok_or_else(|| Error::Config("a set is required (--set or --frequencies)".into()))
    }
}

#[derive(Args)]
#[command(group = clap::ArgGroup::new("norm").required(true))]
struct NormsArgs {
    #[arg(long, group = "norm")]
    psi2: bool,
    #[arg(long, group = "norm")]
    sup: bool,
    #[arg(long, group = "norm", value_name = "P")]
    lp: Option<f64>,
    #[arg(long, group = "norm")]
    rider: bool,
    /// Weak ℓ₂ norm of the characters of the set in L^Ψ₂.
    #[arg(long, group = "norm")]
    weak: bool,
    /// The constant function with this value.
    #[arg(long, allow_hyphen_values = true)]
    constant: Option<f64>,
    /// Polynomial as JSON.
    #[arg(long)]
    poly: Option<PathBuf>,
    #[command(flatten)]
    input: SetInput,
    #[arg(long, default_value_t = 16.0)]
    oversample: f64,
    #[arg(long, default_value_t = 200)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Print the full estimate as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum VariateArg {
    Rademacher,
    UniformPm1,
    Gaussian,
}

impl From<VariateArg> for VariateKind {
    fn from(v: VariateArg) -> Self {
        match v {
            VariateArg::Rademacher => Self::Rademacher,
            VariateArg::UniformPm1 => Self::UniformPm1,
            VariateArg::Gaussian => Self::Gaussian,
        }
    }
}

#[derive(Args)]
struct FrameInput {
    #[command(flatten)]
    input: SetInput,
    /// Coordinate frame as a JSON array of equal-length vectors.
    #[arg(long)]
    coordinate: Option<PathBuf>,
    /// The twelve built-in frames.
    #[arg(long)]
    standard: bool,
}

impl FrameInput {
    fn frames(&self, seed: u64) -> Result<Vec<(String, BanachFrame)>> {
        if self.standard {
            return standard_frames(seed);
        }
        if let Some(p) = &self.coordinate {
            let v: Vec<Vec<f64>> = load_json(p)?;
            return Ok(vec![("coordinate".into(), BanachFrame::coordinate(v)?)]);
        }
        let set = self.input.require()?;
        Ok(vec![(
            "exponential".into(),
            BanachFrame::exponential(set, OrliczConfig::default())?,
        )])
    }
}

#[derive(Args)]
struct TailArgs {
    #[command(flatten)]
    frame: FrameInput,
    #[arg(long, value_enum, default_value = "rademacher")]
    variate: VariateArg,
    #[arg(long, default_value_t = 10_000)]
    trials: usize,
    #[arg(long, default_value_t = 20)]
    points: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Standard errors allowed above the bound.
    #[arg(long, default_value_t = 3.0)]
    k: f64,
    /// Directory for per-frame CSV files.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BlmArgs {
    #[command(flatten)]
    frame: FrameInput,
    #[arg(long, default_value_t = 10_000)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct ExtractArgs {
    #[command(flatten)]
    input: SetInput,
    /// Write the extracted set here, one integer per line.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RelationsArgs {
    #[command(flatten)]
    input: SetInput,
    /// Relation length (search mode) or the `n` of the probability experiment.
    #[arg(long)]
    length: Option<usize>,
    #[command(flatten)]
    schedule: ScheduleOpts,
    /// Cutoffs `M` for the probability experiment.
    #[arg(long, value_delimiter = ',', default_value = "64,256,1024")]
    cutoffs: Vec<u64>,
    #[arg(long, default_value_t = 2048)]
    truncation: u64,
    #[arg(long, default_value_t = 10_000)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SolverArg {
    Auto,
    Simplex,
    InteriorPoint,
}

#[derive(Args)]
struct UcArgs {
    #[command(flatten)]
    input: SetInput,
    /// Bound only `S_N` for this `N` instead of the UC constant.
    #[arg(long)]
    n: Option<u64>,
    #[arg(long, value_enum, default_value = "auto")]
    solver: SolverArg,
    #[arg(long)]
    polygon_sides: Option<usize>,
    #[arg(long)]
    constraint_grid: Option<usize>,
    /// Write the discretized LP in LP format (needs --n).
    #[arg(long)]
    lp_out: Option<PathBuf>,
}

#[derive(Args)]
struct KtArgs {
    #[arg(long, default_value_t = 0.5)]
    delta: f64,
    #[arg(long, value_delimiter = ',', default_value = "64,128,256,512")]
    n_list: Vec<u64>,
    #[arg(long, default_value_t = 20)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PipelineOpts {
    /// Start from this config; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    n_lo: Option<u32>,
    #[arg(long)]
    n_hi: Option<u32>,
    #[arg(long)]
    trials: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct Thm31Args {
    #[command(flatten)]
    opts: PipelineOpts,
}

#[derive(Args)]
struct Thm41Args {
    #[command(flatten)]
    opts: PipelineOpts,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    alpha_low: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    block_size: Option<u64>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config's output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(required = true)]
    manifests: Vec<PathBuf>,
    /// CSV destination (stdout when neither --csv nor --json is given).
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    json: Option<PathBuf>,
}

/// Parses `argv` (including the program name) and runs the subcommand.
pub fn cli_dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(cli.cmd) {
        Ok(code) => code,
        Err(Error::Config(msg)) => {
            eprintln!("error: {msg}");
            2
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn dispatch(cmd: Cmd) -> Result<i32> {
    match cmd {
        Cmd::Gen(a) => gen(a),
        Cmd::Norms(a) => norms(a),
        Cmd::Tail(a) => tail(a),
        Cmd::Blm(a) => blm(a),
        Cmd::Extract(a) => extract(a),
        Cmd::Relations(a) => relations(a),
        Cmd::Uc(a) => uc(a),
        Cmd::Kt(a) => {
            let mut cfg = ExperimentConfig::new(ExperimentKind::Kt, a.seed);
            cfg.delta = Some(a.delta);
            cfg.n_list = Some(a.n_list);
            cfg.trials = Some(a.trials);
            cfg.output_dir = a.out;
            finish(run_experiment(&cfg)?)
        }
        Cmd::Thm31(a) => {
            let cfg = pipeline_config(ExperimentKind::Thm31, &a.opts)?;
            finish(run_experiment(&cfg)?)
        }
        Cmd::Thm41(a) => {
            let mut cfg = pipeline_config(ExperimentKind::Thm41, &a.opts)?;
            cfg.alpha = a.alpha.or(cfg.alpha);
            cfg.alpha_low = a.alpha_low.or(cfg.alpha_low);
            cfg.beta = a.beta.or(cfg.beta);
            cfg.block_size = a.block_size.or(cfg.block_size);
            finish(run_experiment(&cfg)?)
        }
        Cmd::Run(a) => {
            let mut cfg = ExperimentConfig::load(&a.config)?;
            if a.out.is_some() {
                cfg.output_dir = a.out;
            }
            finish(run_experiment(&cfg)?)
        }
        Cmd::Report(a) => report(a),
    }
}

fn pipeline_config(kind: ExperimentKind, o: &PipelineOpts) -> Result<ExperimentConfig> {
    let mut cfg = match &o.config {
        Some(p) => {
            let cfg = ExperimentConfig::load(p)?;
            if cfg.experiment != kind {
                return Err(Error::Config(format!(
                    "config is for {}, not {}",
                    cfg.experiment.name(),
                    kind.name()
                )));
            }
            cfg
        }
        None => ExperimentConfig::new(kind, super::SHIPPED_SEED),
    };
    if let Some(s) = o.seed {
        cfg.seed = s;
    }
    cfg.c = o.c.or(cfg.c);
    cfg.trials = o.trials.or(cfg.trials);
    if o.n_lo.is_some() || o.n_hi.is_some() {
        let (lo, hi) = cfg.resolved().n_range_or_default();
        cfg.n_range = Some((o.n_lo.unwrap_or(lo), o.n_hi.unwrap_or(hi)));
    }
    if o.out.is_some() {
        cfg.output_dir = o.out.clone();
    }
    Ok(cfg)
}

/// Prints assertion lines and, on failure, a JSON failure list.
fn finish(m: RunManifest) -> Result<i32> {
    let mut out = io::stdout().lock();
    for a in &m.assertions {
        let v = a.value.map_or("-".into(), |v| format!("{v:.6}"));
        writeln!(
            out,
            "{:<8} {:<28} value {:<12} ({})",
            status_word(a.status),
            a.name,
            v,
            a.tolerance
        )?;
    }
    if m.passed {
        writeln!(out, "{}: all assertions pass", m.experiment.name())?;
        Ok(0)
    } else {
        let failed =
            serde_json::json!({ "experiment": m.experiment.name(), "failed": m.failures() });
        writeln!(out, "{failed}")?;
        Ok(1)
    }
}

fn status_word(s: Status) -> &'static str {
    match s {
        Status::Pass => "PASS",
        Status::Fail => "FAIL",
        Status::Skipped => "SKIP",
    }
}

fn gen(a: GenArgs) -> Result<i32> {
    let schedule = a.schedule.build()?;
    let lo = a.lo.unwrap_or(schedule.k_min);
    let mut s = sample_set(&schedule, (lo, a.hi), a.seed)?;
    if let Some(d) = a.thin_delta {
        let target = SelectorSchedule::constant(d)?.with_k_min(schedule.k_min)?;
        s = thin(&s, &target, a.seed)?;
    }
    match a.out {
        Some(p) => save_set(&s, &p)?,
        None => write_set(&s, io::stdout().lock())?,
    }
    Ok(0)
}

fn norms(a: NormsArgs) -> Result<i32> {
    let poly = match (a.constant, &a.poly, a.input.load()?) {
        (Some(c), None, None) => TrigPolynomial::monomial(0, Complex64::new(c, 0.0)),
        (None, Some(p), None) => load_poly(p)?,
        (None, None, Some(set)) => TrigPolynomial::characteristic(&set),
        _ => {
            return Err(Error::Config(
                "give exactly one of --constant, --poly, --set, --frequencies".into(),
            ))
        }
    };
    let cfg = OrliczConfig::default();
    let est: NormEstimate = if a.psi2 {
        luxemburg_psi2(&poly, &cfg)?
    } else if a.sup {
        sup_norm(&poly, a.oversample)?
    } else if let Some(p) = a.lp {
        lp_norm(&poly, p, &cfg)?
    } else if a.rider {
        rider_norm(&poly, a.trials, a.seed)?
    } else {
        let frame = BanachFrame::exponential(poly.spectrum(), cfg)?;
        weak_l2_norm(&frame)?
    };
    if a.json {
        println!("{}", serde_json::to_string(&est)?);
    } else {
        println!("{:.10}", est.value);
    }
    Ok(0)
}

fn tail(a: TailArgs) -> Result<i32> {
    let variate: VariateKind = a.variate.into();
    let mut bad = 0;
    for (name, frame) in a.frame.frames(a.seed)? {
        let sigma = frame_sigma(&frame)?.value;
        let grid = concentration::default_t_grid(sigma, a.points);
        let r = tail_experiment_with_sigma(&frame, variate, a.trials, &grid, a.seed, sigma)?;
        let v = match variate {
            VariateKind::Gaussian => r.violations_23(a.k),
            _ => r.violations_24(a.k),
        };
        bad += v.len();
        println!(
            "{name}: sigma {sigma:.6}, mean Z {:.6}, violations {}",
            r.mean_z,
            v.len()
        );
        if let Some(dir) = &a.out {
            crate::io::write_atomic(&dir.join(format!("tail_{name}.csv")), |w| {
                r.write_csv(BufWriter::new(w))
            })?;
        }
    }
    Ok(i32::from(bad > 0))
}

fn blm(a: BlmArgs) -> Result<i32> {
    let mut bad = 0;
    for (i, (name, frame)) in a.frame.frames(a.seed)?.into_iter().enumerate() {
        let r = super::small::blm_frame(
            &frame,
            a.trials,
            crate::rng::derive_seed(a.seed, crate::rng::Stream::Trial, i as u64),
        )?;
        bad += r.violations;
        println!(
            "{name}: max statistic {:.6}, bound {:.6}, violations {}",
            r.max_statistic, r.bound, r.violations
        );
    }
    Ok(i32::from(bad > 0))
}

fn extract(a: ExtractArgs) -> Result<i32> {
    let set = a.input.require()?;
    let (e, report) = extract_greedy(&set)?;
    println!("{}", serde_json::to_string(&report)?);
    match a.out {
        Some(p) => crate::io::write_atomic(&p, |w| write_lines(&e, w))?,
        None => write_lines(&e, &mut io::stdout().lock())?,
    }
    Ok(0)
}

fn write_lines<W: Write>(xs: &[i64], w: &mut W) -> Result<()> {
    let mut w = BufWriter::new(w);
    for x in xs {
        writeln!(w, "{x}")?;
    }
    w.flush()?;
    Ok(())
}

fn relations(a: RelationsArgs) -> Result<i32> {
    if let Some(set) = a.input.load()? {
        let rel = match a.length {
            Some(n) => find_relation_of_length(&set, n)?,
            None => find_relation(&set)?,
        };
        match rel {
            Some(r) => println!("{}", serde_json::to_string(&r)?),
            None => println!("none"),
        }
        return Ok(0);
    }
    let mut cfg = ExperimentConfig::new(ExperimentKind::Relations, a.seed);
    cfg.schedule = Some(a.schedule.build()?);
    cfg.n_range = Some((a.length.unwrap_or(3) as u32, a.length.unwrap_or(3) as u32));
    let mut list = a.cutoffs;
    list.push(a.truncation);
    cfg.n_list = Some(list);
    cfg.trials = Some(a.trials);
    cfg.output_dir = a.out;
    finish(run_experiment(&cfg)?)
}

fn uc(a: UcArgs) -> Result<i32> {
    let set = a.input.require()?;
    let mut cfg = LpConfig {
        solver: match a.solver {
            SolverArg::Auto => LpSolver::Auto,
            SolverArg::Simplex => LpSolver::Simplex,
            SolverArg::InteriorPoint => LpSolver::InteriorPoint,
        },
        ..LpConfig::default()
    };
    if let Some(m) = a.polygon_sides {
        cfg.polygon_sides = m;
    }
    if let Some(g) = a.constraint_grid {
        cfg.constraint_grid = g;
    }
    match a.n {
        Some(n) => {
            if let Some(p) = &a.lp_out {
                crate::io::write_atomic(p, |w| {
                    write_lp_instance(&set, n, &cfg, BufWriter::new(w))
                })?;
            }
            let mut est = sn_operator_norm(&set, n, &cfg)?;
            est.optimizer = None;
            println!("{}", serde_json::to_string(&est)?);
        }
        None => {
            if a.lp_out.is_some() {
                return Err(Error::Config("--lp-out needs --n".into()));
            }
            let est = uc_constant(&set, &cfg)?;
            println!("{}", serde_json::to_string(&est)?);
        }
    }
    Ok(0)
}

fn report(a: ReportArgs) -> Result<i32> {
    let mut manifests = Vec::new();
    for p in &a.manifests {
        let m: RunManifest = load_json(p)?;
        manifests.push((p.clone(), m));
    }
    let all_pass = manifests.iter().all(|(_, m)| m.passed);
    let csv = |w: &mut dyn Write| -> Result<()> {
        writeln!(w, "manifest,experiment,assertion,status,value,tolerance")?;
        for (p, m) in &manifests {
            for x in &m.assertions {
                writeln!(
                    w,
                    "{},{},{},{},{},{}",
                    csv_field(&p.display().to_string()),
                    m.experiment.name(),
                    x.name,
                    status_word(x.status),
                    x.value.map_or(String::new(), |v| format!("{v}")),
                    csv_field(&x.tolerance)
                )?;
            }
            if let Some(step) = &m.aborted_at {
                writeln!(
                    w,
                    "{},{},aborted,FAIL,,{}",
                    csv_field(&p.display().to_string()),
                    m.experiment.name(),
                    csv_field(step)
                )?;
            }
        }
        Ok(())
    };
    if a.csv.is_none() && a.json.is_none() {
        csv(&mut io::stdout().lock())?;
    }
    if let Some(p) = &a.csv {
        crate::io::write_atomic(p, |f| {
            let mut w = BufWriter::new(f);
            csv(&mut w)?;
            w.flush()?;
            Ok(())
        })?;
    }
    if let Some(p) = &a.json {
        let rows: Vec<serde_json::Value> = manifests
            .iter()
            .map(|(path, m)| {
                serde_json::json!({
                    "manifest": path,
                    "experiment": m.experiment.name(),
                    "passed": m.passed,
                    "aborted_at": m.aborted_at,
                    "assertions": m.assertions,
                    "steps": m.steps,
                })
            })
            .collect();
        crate::io::save_json(&rows, p)?;
    }
    Ok(i32::from(!all_pass))
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
