use clap::{Args, Parser, Subcommand, ValueEnum};
use lle_bloch::blochop::{self, CriticalCurve, StabilityVerdict};
use lle_bloch::cli::artifacts::*;
use lle_bloch::cli::config::{ParamsConfig, SharpnessConfig, TimeGridConfig};
use lle_bloch::cli::pipeline::*;
use lle_bloch::cli::{acceptance_checks, run_pipeline, FieldFamily, PrecisionMode, RunConfig, WaveKind, TEMPLATE};
use lle_bloch::semigroup::{Decomposer, PerturbationField};
use lle_bloch::wave::PeriodicWave;
use lle_bloch::Error;
use serde_json::json;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const EXIT_VALIDATION: u8 = 2;
const EXIT_STAGE: u8 = 3;
const EXIT_ASSERT: u8 = 4;

#[derive(Parser)]
#[command(name = "lle-bloch", version, about = "Bloch stability and subharmonic decay of periodic LLE waves")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve for a periodic wave (from --mu) or a constant state (from --F).
    Solve(SolveArgs),
    /// Dump the Bloch spectrum on a xi grid as CSV.
    Spectrum(SpectrumArgs),
    /// Check diffusive spectral stability.
    Verdict(VerdictArgs),
    /// Track the critical eigenvalue curve and fit (a, d).
    Curve(CurveArgs),
    /// Evolve a subharmonic perturbation under the linearization.
    Evolve(EvolveArgs),
    /// Split e^{At} f into its five parts.
    Decompose(DecomposeArgs),
    /// Decay table over N.
    Sweep(SweepArgs),
    /// Riemann-sum versus Gaussian-integral gaps.
    Sharpness(SharpnessArgs),
    /// Localized data on a large window and the Whitham comparison.
    Whitham(WhithamArgs),
    /// Markdown summary of a pipeline output directory.
    Report(ReportArgs),
    /// Run every stage from a config file.
    Pipeline(PipelineArgs),
    /// Print a config template with all defaults.
    Template(TemplateArgs),
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    alpha: f64,
    #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
    beta: f64,
    #[arg(long = "F")]
    f: Option<f64>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long = "M", default_value_t = 32)]
    m: usize,
    #[arg(long, default_value_t = 1e-11)]
    tol: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GridArgs {
    /// Points on [-pi/T, pi/T].
    #[arg(long, default_value_t = 201)]
    grid: usize,
    /// Refinement factor near xi = 0.
    #[arg(long, default_value_t = 4)]
    refine: usize,
}

#[derive(Args)]
struct SpectrumArgs {
    #[arg(long)]
    wave: PathBuf,
    #[command(flatten)]
    grid: GridArgs,
    /// Galerkin truncation; defaults to the wave's.
    #[arg(long = "M")]
    m: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct VerdictArgs {
    #[arg(long)]
    wave: PathBuf,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long = "N-list", value_delimiter = ',', default_value = "1,2,4,8,16")]
    n_list: Vec<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CurveArgs {
    #[arg(long)]
    wave: PathBuf,
    /// Verdict file supplying xi1; computed on the default grid when absent.
    #[arg(long)]
    verdict: Option<PathBuf>,
    #[arg(long, default_value_t = 32)]
    samples: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Bump,
    Random,
}

impl From<Family> for FieldFamily {
    fn from(f: Family) -> Self {
        match f {
            Family::Bump => FieldFamily::Bump,
            Family::Random => FieldFamily::Random,
        }
    }
}

#[derive(Args)]
struct FieldArgs {
    /// Field file (JSON); a family member is generated when absent.
    #[arg(long = "f")]
    field: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Family::Bump)]
    family: Family,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct TimeArgs {
    /// Explicit comma-separated times; overrides the log grid.
    #[arg(long = "t-grid", value_delimiter = ',')]
    t_grid: Option<Vec<f64>>,
    #[arg(long = "t-min", default_value_t = 1.0)]
    t_min: f64,
    #[arg(long = "t-max", default_value_t = 600.0)]
    t_max: f64,
    #[arg(long, default_value_t = 60)]
    count: usize,
}

impl TimeArgs {
    fn times(&self) -> Result<Vec<f64>, Error> {
        let g = TimeGridConfig {
            values: self.t_grid.clone(),
            t_min: self.t_min,
            t_max: self.t_max,
            count: self.count,
        };
        g.validate("t-grid")?;
        Ok(g.times())
    }
}

#[derive(Args)]
struct EvolveArgs {
    #[arg(long)]
    wave: PathBuf,
    #[command(flatten)]
    field: FieldArgs,
    #[arg(long = "N")]
    n: usize,
    #[command(flatten)]
    times: TimeArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DecomposeArgs {
    #[arg(long)]
    wave: PathBuf,
    #[arg(long)]
    curve: PathBuf,
    #[command(flatten)]
    field: FieldArgs,
    #[arg(long = "N")]
    n: usize,
    #[arg(long)]
    t: f64,
    #[arg(long = "cutoff-xi1")]
    cutoff_xi1: Option<f64>,
    /// Output directory for the part files and norms.csv.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    wave: PathBuf,
    #[arg(long)]
    curve: PathBuf,
    #[arg(long = "N-list", value_delimiter = ',', default_value = "1,2,4,8,16")]
    n_list: Vec<usize>,
    #[command(flatten)]
    times: TimeArgs,
    #[arg(long, value_enum, default_value_t = Family::Bump)]
    family: Family,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long = "cutoff-xi1")]
    cutoff_xi1: Option<f64>,
    #[arg(long)]
    out: PathBuf,
    /// Optional JSON with fitted exponents and prefactors.
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Args)]
struct SharpnessArgs {
    #[arg(long = "T", default_value_t = std::f64::consts::TAU)]
    period: f64,
    #[arg(long, default_value_t = 1.0)]
    d: f64,
    #[arg(long = "N-list", value_delimiter = ',', default_value = "4,8,16,32,64,128,256")]
    n_list: Vec<usize>,
    #[arg(long = "t-grid", value_delimiter = ',', default_value = "1,4,16,64")]
    t_grid: Vec<f64>,
    /// Compare against 192-bit reference sums.
    #[arg(long)]
    extended: bool,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Args)]
struct WhithamArgs {
    #[arg(long)]
    wave: PathBuf,
    #[arg(long)]
    curve: PathBuf,
    #[arg(long = "N-win", default_value_t = 64)]
    n_win: usize,
    /// Gaussian width in units of T.
    #[arg(long, default_value_t = 2.0 / std::f64::consts::TAU)]
    width: f64,
    #[command(flatten)]
    times: TimeArgs,
    #[arg(long = "cutoff-xi1")]
    cutoff_xi1: Option<f64>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    dir: PathBuf,
    /// Write here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PipelineArgs {
    #[arg(long)]
    config: PathBuf,
    /// Exit with status 4 if any acceptance threshold fails.
    #[arg(long)]
    assert: bool,
}

#[derive(Args)]
struct TemplateArgs {
    #[arg(long)]
    out: Option<PathBuf>,
}

fn read_text(path: &Path) -> Result<String, Error> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn load_wave_file(path: &Path) -> Result<PeriodicWave, Error> {
    PeriodicWave::from_json(&read_text(path)?)
}

fn load_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Error> {
    Ok(serde_json::from_str(&read_text(path)?)?)
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), Error> {
    write_atomic(path, &to_json_bytes(value)?)
}

fn field_for(args: &FieldArgs, wave: &PeriodicWave, n: usize, m: usize) -> Result<PerturbationField, Error> {
    match &args.field {
        Some(p) => load_json(p),
        None => family_field(args.family.into(), args.seed, n, wave.period, m),
    }
}

fn solve(a: &SolveArgs) -> Result<(), Error> {
    let mut cfg = RunConfig::new(
        ParamsConfig {
            alpha: a.alpha,
            beta: a.beta,
            f: a.f,
        },
        ".",
    );
    cfg.mu = a.mu;
    cfg.m = a.m;
    cfg.newton_tol = a.tol;
    cfg.wave_kind = if a.mu.is_some() { WaveKind::Periodic } else { WaveKind::Constant };
    if a.mu.is_some() && a.f.is_some() {
        return Err(Error::InvalidParams("give either --F or --mu".into()));
    }
    cfg.validate()?;
    let w = compute_wave(&cfg)?;
    write_atomic(&a.out, w.to_json().as_bytes())
}

fn verdict_for(w: &PeriodicWave, g: &GridArgs, n_list: &[usize]) -> Result<StabilityVerdict, Error> {
    if g.grid < 3 {
        return Err(Error::InvalidParams("--grid must be at least 3".into()));
    }
    compute_verdict(w, g.grid, g.refine, n_list)
}

fn run(cli: Cli) -> Result<u8, Error> {
    match cli.cmd {
        Cmd::Solve(a) => solve(&a)?,
        Cmd::Spectrum(a) => {
            let w = load_wave_file(&a.wave)?;
            let grid = blochop::xi_grid(a.grid.grid, a.grid.refine, w.period);
            let rows = spectrum_rows(&w, &grid, a.m.unwrap_or(w.m))?;
            write_atomic(&a.out, &to_csv_bytes(&rows, &SPECTRUM_HEADER)?)?;
        }
        Cmd::Verdict(a) => {
            let w = load_wave_file(&a.wave)?;
            let v = verdict_for(&w, &a.grid, &a.n_list)?;
            write_json(&a.out, &v)?;
            println!("diffusively spectrally stable: {}", if v.stable { "yes" } else { "no" });
        }
        Cmd::Curve(a) => {
            let w = load_wave_file(&a.wave)?;
            let v = match &a.verdict {
                Some(p) => load_json::<StabilityVerdict>(p)?,
                None => verdict_for(&w, &GridArgs { grid: 201, refine: 4 }, &[])?,
            };
            if !v.stable {
                return Err(Error::Precondition("wave is not diffusively spectrally stable".into()));
            }
            write_json(&a.out, &compute_curve(&w, &v, a.samples)?)?;
        }
        Cmd::Evolve(a) => {
            let w = load_wave_file(&a.wave)?;
            let times = a.times.times()?;
            let f = field_for(&a.field, &w, a.n, w.m)?;
            let mut samples = Vec::new();
            for &t in &times {
                let u = lle_bloch::semigroup::evolve(&w, &f, a.n, t, w.m)?;
                samples.push(json!({"t": t, "norm_l2": u.norm_l2(), "norm_sup": u.norm_sup(), "field": u}));
            }
            write_json(&a.out, &json!({"N": a.n, "T": w.period, "norm_f": f.norm_l1_l2(), "samples": samples}))?;
        }
        Cmd::Decompose(a) => {
            let w = load_wave_file(&a.wave)?;
            let c: CriticalCurve = load_json(&a.curve)?;
            let cutoff = cutoff_for(&c, a.cutoff_xi1)?;
            let f = field_for(&a.field, &w, a.n, c.m)?;
            let dec = Decomposer::new(&w, &c, cutoff, a.n, c.m)?;
            let prepared = dec.prepare(&f)?;
            let rep = dec.decompose(&prepared, a.t)?;
            let gamma = dec.gamma(&prepared, a.t)?;
            std::fs::create_dir_all(&a.out).map_err(|e| Error::io(&a.out, e))?;
            let p = &rep.parts;
            for (name, part) in [
                ("full", &rep.full),
                ("p0", &p.p0),
                ("phase", &p.phase),
                ("sc", &p.sc),
                ("slf", &p.slf),
                ("shf", &p.shf),
            ] {
                write_json(&a.out.join(format!("{name}.json")), part)?;
            }
            write_json(&a.out.join("gamma.json"), &gamma)?;
            let mut csv = String::from("part,norm\n");
            for (k, v) in &rep.norms {
                csv.push_str(&format!("{k},{v:e}\n"));
            }
            csv.push_str(&format!("closure_residual,{:e}\n", rep.closure_residual));
            write_atomic(&a.out.join("norms.csv"), csv.as_bytes())?;
        }
        Cmd::Sweep(a) => {
            let w = load_wave_file(&a.wave)?;
            let c: CriticalCurve = load_json(&a.curve)?;
            if a.n_list.iter().any(|&n| n < 1) {
                return Err(Error::InvalidParams("N-list entries must be >= 1".into()));
            }
            let times = a.times.times()?;
            let cutoff = cutoff_for(&c, a.cutoff_xi1)?;
            let sw = compute_sweep(&w, &c, cutoff, a.family.into(), a.seed, &a.n_list, &times)?;
            write_atomic(&a.out, &to_csv_bytes(&sw.rows, &SWEEP_HEADER)?)?;
            if let Some(p) = &a.summary {
                write_json(p, &UniformSummary::new(&sw))?;
            }
        }
        Cmd::Sharpness(a) => {
            let s = SharpnessConfig {
                period: a.period,
                d: Some(a.d),
                n_list: a.n_list.clone(),
                t_list: a.t_grid.clone(),
            };
            if !(a.period > 0.0 && a.d > 0.0) || a.n_list.iter().any(|&n| n < 1) || a.t_grid.iter().any(|&t| !(t > 0.0)) {
                return Err(Error::InvalidParams("sharpness needs T > 0, d > 0, N >= 1 and t > 0".into()));
            }
            let mode = if a.extended { PrecisionMode::Extended } else { PrecisionMode::Standard };
            let out = compute_sharpness(&s, mode, a.d)?;
            write_atomic(&a.out, &to_csv_bytes(&sharp_rows(&out.records), &SHARP_HEADER)?)?;
            if let Some(p) = &a.summary {
                write_json(p, &out)?;
            }
        }
        Cmd::Whitham(a) => {
            let w = load_wave_file(&a.wave)?;
            let c: CriticalCurve = load_json(&a.curve)?;
            let times = a.times.times()?;
            let cutoff = cutoff_for(&c, a.cutoff_xi1)?;
            let (run, cmp) = compute_localized(&w, &c, cutoff, a.n_win, a.width, &times)?;
            write_atomic(&a.out, &to_csv_bytes(&whitham_rows(&run, &cmp), &WHITHAM_HEADER)?)?;
            if let Some(p) = &a.summary {
                write_json(p, &LocalizedSummary::new(&run, &cmp))?;
            }
        }
        Cmd::Report(a) => {
            let manifest = Manifest::load(&a.dir)?
                .ok_or_else(|| Error::InvalidParams(format!("no {MANIFEST_FILE} in {}", a.dir.display())))?;
            let text = lle_bloch::cli::report::render(&a.dir, &manifest)?;
            match &a.out {
                Some(p) => write_atomic(p, text.as_bytes())?,
                None => print!("{text}"),
            }
        }
        Cmd::Pipeline(a) => {
            let cfg = RunConfig::load(&a.config)?;
            let outcome = run_pipeline(&cfg)?;
            println!(
                "ran: [{}]  skipped: [{}]  not applicable: [{}]",
                outcome.ran.join(", "),
                outcome.skipped.join(", "),
                outcome.not_applicable.join(", ")
            );
            if a.assert {
                let checks = acceptance_checks(&cfg.output_dir, &outcome.manifest)?;
                let mut ok = true;
                for c in &checks {
                    println!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
                    ok &= c.pass;
                }
                if !ok {
                    return Ok(EXIT_ASSERT);
                }
            }
        }
        Cmd::Template(a) => match &a.out {
            Some(p) => write_atomic(p, TEMPLATE.as_bytes())?,
            None => print!("{TEMPLATE}"),
        },
    }
    Ok(0)
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidParams(_)
        | Error::Precondition(_)
        | Error::GridMismatch { .. }
        | Error::TruncationTooSmall { .. }
        | Error::Format(_) => EXIT_VALIDATION,
        _ => EXIT_STAGE,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
