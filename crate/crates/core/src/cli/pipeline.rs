use super::artifacts::*;
use super::config::{FieldFamily, PrecisionMode, RunConfig, SharpnessConfig, WaveKind};
use crate::blochop::{self, CriticalCurve, StabilityVerdict};
use crate::error::{Error, Result};
use crate::riemann::{self, SharpnessRecord, UniformBounds, Variant};
use crate::semigroup::{
    gaussian_bump, localized_pipeline_leak_free, uniform_sweep, whitham_compare, CutoffProfile, LocalizedRun,
    PerturbationField, UniformSweep, WhithamComparison,
};
use crate::transforms::cell_points;
use crate::wave::{self, constant_state, BifurcationSeed, NewtonOptions, PeriodicWave};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::collections::BTreeMap;
use std::path::Path;

pub const WAVE_FILE: &str = "wave.json";
pub const VERDICT_FILE: &str = "verdict.json";
pub const SPECTRUM_FILE: &str = "spectrum.csv";
pub const CURVE_FILE: &str = "curve.json";
pub const UNIFORM_CSV: &str = "uniform.csv";
pub const UNIFORM_JSON: &str = "uniform.json";
pub const SHARP_CSV: &str = "sharp.csv";
pub const SHARP_JSON: &str = "sharp.json";
pub const WHITHAM_CSV: &str = "whitham.csv";
pub const LOCALIZED_JSON: &str = "localized.json";
pub const REPORT_FILE: &str = "report.md";

// ---- stage computations, shared with the single-purpose subcommands ----

pub fn compute_wave(cfg: &RunConfig) -> Result<PeriodicWave> {
    let params = cfg.lle_params()?;
    match cfg.wave_kind {
        WaveKind::Periodic => {
            let mu = cfg.mu.expect("validated");
            let seed = wave::bifurcation_seed(cfg.params.alpha, mu, cfg.m)?;
            let opts = NewtonOptions {
                tol: cfg.newton_tol,
                ..NewtonOptions::default()
            };
            Ok(wave::newton_solve_with(&seed, &opts)?.wave)
        }
        WaveKind::Constant => {
            let period = match cfg.mu {
                Some(mu) => BifurcationSeed::new(cfg.params.alpha, mu)?.period(),
                None => 2.0 * std::f64::consts::PI,
            };
            let value = constant_state(&params)?.selected();
            Ok(PeriodicWave::constant(params, value, period, cfg.m))
        }
    }
}

pub fn compute_verdict(w: &PeriodicWave, n: usize, refine: usize, n_list: &[usize]) -> Result<StabilityVerdict> {
    let grid = blochop::xi_grid(n, refine, w.period);
    blochop::check_diffusive_stability(w, &grid, w.m, n_list)
}

pub fn spectrum_rows(w: &PeriodicWave, grid: &[f64], m: usize) -> Result<Vec<SpectrumRow>> {
    use rayon::prelude::*;
    let slices = grid
        .par_iter()
        .map(|&xi| blochop::spectrum(&blochop::assemble(w, xi, m)?))
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    for s in slices {
        let mut ev = s.eigenvalues.clone();
        ev.sort_by(|a, b| b.re.total_cmp(&a.re).then(a.im.total_cmp(&b.im)));
        rows.extend(ev.iter().enumerate().map(|(k, z)| SpectrumRow {
            xi: s.xi,
            re_lambda: z.re,
            im_lambda: z.im,
            branch_id: k,
        }));
    }
    Ok(rows)
}

pub fn compute_curve(w: &PeriodicWave, verdict: &StabilityVerdict, samples: usize) -> Result<CriticalCurve> {
    blochop::critical_curve(w, verdict.xi1, samples, w.m)
}

pub fn cutoff_for(curve: &CriticalCurve, cutoff_xi1: Option<f64>) -> Result<CutoffProfile> {
    match cutoff_xi1 {
        Some(x) => CutoffProfile::new(x),
        None => CutoffProfile::for_curve(curve),
    }
}

/// Member of a data family on the N-periodic grid; random fields use seed + N.
pub fn family_field(family: FieldFamily, seed: u64, n: usize, period: f64, m: usize) -> Result<PerturbationField> {
    match family {
        FieldFamily::Bump => gaussian_bump(n, period, n * cell_points(m)),
        FieldFamily::Random => PerturbationField::random_smooth(n, period, m, seed.wrapping_add(n as u64)),
    }
}

pub fn compute_sweep(
    w: &PeriodicWave,
    curve: &CriticalCurve,
    cutoff: CutoffProfile,
    family: FieldFamily,
    seed: u64,
    n_list: &[usize],
    times: &[f64],
) -> Result<UniformSweep> {
    let m = curve.m;
    uniform_sweep(w, curve, cutoff, move |n, period, _| family_field(family, seed, n, period, m), n_list, times)
}

/// Gaussian data of width `width * T` centred in a window of `n_win` periods.
pub fn localized_data(w: &PeriodicWave, n_win: usize, width: f64, m: usize) -> Result<PerturbationField> {
    let len = n_win as f64 * w.period;
    let s = width * w.period;
    let g = move |x: f64| (-(x - 0.5 * len).powi(2) / (2.0 * s * s)).exp();
    PerturbationField::from_fn(n_win, w.period, n_win * cell_points(m), g, move |x| 0.5 * g(x))
}

pub fn compute_localized(
    w: &PeriodicWave,
    curve: &CriticalCurve,
    cutoff: CutoffProfile,
    n_win: usize,
    width: f64,
    times: &[f64],
) -> Result<(LocalizedRun, WhithamComparison)> {
    let v = localized_data(w, n_win, width, curve.m)?;
    let run = localized_pipeline_leak_free(w, curve, cutoff, &v, times)?;
    let cmp = whitham_compare(curve, &run)?;
    Ok((run, cmp))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeEntry {
    pub t: f64,
    pub variant: Variant,
    pub slope: Option<f64>,
    /// max / min of the normalized constant over N at this t; None when the smallest is zero
    pub const_ratio: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossoverSummary {
    #[serde(rename = "N")]
    pub n: usize,
    pub t_star: f64,
    pub t_max_observed: f64,
    pub decreasing_beyond_t_star: bool,
    pub max_inequality_excess: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SharpnessOutput {
    #[serde(rename = "T")]
    pub period: f64,
    pub d: f64,
    pub records: Vec<SharpnessRecord>,
    pub slopes: Vec<SlopeEntry>,
    pub bounds: UniformBounds,
    pub crossover: Vec<CrossoverSummary>,
    /// fewest matching significant digits between hardware and 192-bit sums
    pub extended_digits: Option<f64>,
}

pub fn const_ratio(records: &[SharpnessRecord], variant: Variant, t: Option<f64>) -> Option<f64> {
    let v: Vec<f64> = records
        .iter()
        .filter(|r| r.variant == variant && t.is_none_or(|t| r.t == t))
        .map(|r| r.bound_const)
        .collect();
    let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
    Some(hi / lo).filter(|r| r.is_finite())
}

/// Matching significant digits of `a` against the reference `b`.
pub fn agreement_digits(a: f64, b: f64) -> f64 {
    if a == b {
        return 17.0;
    }
    -(((a - b) / b).abs()).log10()
}

pub fn compute_sharpness(s: &SharpnessConfig, precision: PrecisionMode, d: f64) -> Result<SharpnessOutput> {
    let records = riemann::sharpness_sweep(s.period, d, &s.n_list, &s.t_list)?;
    let mut slopes = Vec::new();
    for &t in &s.t_list {
        for variant in [Variant::Plain, Variant::Weighted] {
            slopes.push(SlopeEntry {
                t,
                variant,
                slope: riemann::gap_slope(&records, variant, t),
                const_ratio: const_ratio(&records, variant, Some(t)),
            });
        }
    }
    let log_t: Vec<f64> = (0..=120).map(|k| 1e-2 * 1e6f64.powf(k as f64 / 120.0)).collect();
    let bounds = riemann::uniform_bound_check(s.period, d, &s.n_list, &log_t)?;
    let crossover = s
        .n_list
        .iter()
        .filter(|&&n| n >= 2)
        .map(|&n| {
            let c = riemann::crossover_diagnostics(s.period, d, n)?;
            Ok(CrossoverSummary {
                n,
                t_star: c.t_star,
                t_max_observed: c.t_max_observed,
                decreasing_beyond_t_star: c.decreasing_beyond_t_star,
                max_inequality_excess: c.max_inequality_excess,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let extended_digits = if precision == PrecisionMode::Extended {
        let mut worst = f64::INFINITY;
        for r in &records {
            let inp = riemann::GaussianSumInput::new(r.n, s.period, d, r.t)?;
            let reference = match r.variant {
                Variant::Plain => riemann::sum_plain_extended(&inp).0,
                Variant::Weighted => riemann::sum_weighted_extended(&inp).0,
            };
            if reference != 0.0 {
                worst = worst.min(agreement_digits(r.sum_value, reference));
            }
        }
        Some(worst)
    } else {
        None
    };
    Ok(SharpnessOutput {
        period: s.period,
        d,
        records,
        slopes,
        bounds,
        crossover,
        extended_digits,
    })
}

pub fn sharp_rows(records: &[SharpnessRecord]) -> Vec<SharpRow> {
    records
        .iter()
        .map(|r| SharpRow {
            n: r.n,
            t: r.t,
            variant: r.variant.as_str().to_string(),
            sum: r.sum_value,
            integral: r.integral_value,
            gap: r.gap,
            normalized_const: r.bound_const,
            regime_flag: r.regime.as_str().to_string(),
        })
        .collect()
}

pub fn whitham_rows(run: &LocalizedRun, cmp: &WhithamComparison) -> Vec<WhithamRow> {
    run.samples
        .iter()
        .zip(&cmp.errors)
        .map(|(s, e)| WhithamRow {
            t: s.t,
            norm_full: s.norm_full,
            norm_minus_p0: s.norm_minus_p0,
            norm_phase: s.norm_phase,
            norm_residual: s.norm_residual,
            whitham_error: *e,
            leak: s.leak,
        })
        .collect()
}

/// Sweep data written next to uniform.csv.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct UniformSummary {
    pub eta: f64,
    pub eta_cutoff: f64,
    pub d: f64,
    pub prefactor_ratio: f64,
    pub summaries: Vec<crate::semigroup::SweepSummary>,
}

/// Localized run data written next to whitham.csv.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalizedSummary {
    #[serde(rename = "N_win")]
    pub n_win: usize,
    pub fit_window: (f64, f64),
    pub coefficient_bound: f64,
    pub minus_p0_exponent: Option<f64>,
    pub phase_exponent: Option<f64>,
    pub residual_exponent: Option<f64>,
    pub whitham_exponent: Option<f64>,
    pub a: f64,
    pub d: f64,
}

impl LocalizedSummary {
    pub fn new(run: &LocalizedRun, cmp: &WhithamComparison) -> Self {
        LocalizedSummary {
            n_win: run.n_win,
            fit_window: run.fit_window(),
            coefficient_bound: run.coefficient_bound,
            minus_p0_exponent: run.minus_p0_fit().ok().map(|f| f.fitted_exponent),
            phase_exponent: run.phase_fit().ok().map(|f| f.fitted_exponent),
            residual_exponent: run.residual_fit().ok().map(|f| f.fitted_exponent),
            whitham_exponent: cmp.fit.as_ref().map(|f| f.fitted_exponent),
            a: cmp.a,
            d: cmp.d,
        }
    }
}

impl UniformSummary {
    pub fn new(sw: &UniformSweep) -> Self {
        UniformSummary {
            eta: sw.eta,
            eta_cutoff: sw.eta_cutoff,
            d: sw.d,
            prefactor_ratio: sw.prefactor_ratio(),
            summaries: sw.summaries.clone(),
        }
    }
}

// ---- stage DAG ----

enum StageResult {
    Outputs(Vec<(&'static str, Vec<u8>)>),
    NotApplicable(String),
}

struct StageSpec {
    name: &'static str,
    inputs: Vec<&'static str>,
    config: Value,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineOutcome {
    pub manifest: Manifest,
    pub ran: Vec<String>,
    pub skipped: Vec<String>,
    pub not_applicable: Vec<String>,
}

pub fn read_json<T: serde::de::DeserializeOwned>(dir: &Path, name: &str) -> Result<T> {
    let p = dir.join(name);
    let text = std::fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
    Ok(serde_json::from_str(&text)?)
}

pub fn load_wave(dir: &Path) -> Result<PeriodicWave> {
    let p = dir.join(WAVE_FILE);
    let text = std::fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
    PeriodicWave::from_json(&text)
}

fn stage_failure(stage: &str) -> impl Fn(Error) -> Error + '_ {
    move |e| match e {
        Error::HashMismatch { .. } | Error::StageFailure { .. } => e,
        other => Error::StageFailure {
            stage: stage.to_string(),
            message: other.to_string(),
        },
    }
}

fn run_stage(
    name: &str,
    cfg: &RunConfig,
    dir: &Path,
    manifest: &Manifest,
) -> Result<StageResult> {
    let out = match name {
        "solve" => {
            let w = compute_wave(cfg)?;
            StageResult::Outputs(vec![(WAVE_FILE, w.to_json().into_bytes())])
        }
        "verdict" => {
            let w = load_wave(dir)?;
            let v = compute_verdict(&w, cfg.xi_grid.n, cfg.xi_grid.refine, &cfg.n_list)?;
            let grid = blochop::xi_grid(cfg.xi_grid.n, cfg.xi_grid.refine, w.period);
            let rows = spectrum_rows(&w, &grid, w.m)?;
            StageResult::Outputs(vec![
                (VERDICT_FILE, to_json_bytes(&v)?),
                (SPECTRUM_FILE, to_csv_bytes(&rows, &SPECTRUM_HEADER)?),
            ])
        }
        "curve" => {
            let v: StabilityVerdict = read_json(dir, VERDICT_FILE)?;
            if !v.stable {
                return Ok(StageResult::NotApplicable("wave is not diffusively spectrally stable".into()));
            }
            let w = load_wave(dir)?;
            let c = compute_curve(&w, &v, cfg.curve_samples)?;
            StageResult::Outputs(vec![(CURVE_FILE, to_json_bytes(&c)?)])
        }
        "sweep" => {
            if cfg.n_list.is_empty() {
                return Ok(StageResult::NotApplicable("empty N_list".into()));
            }
            let w = load_wave(dir)?;
            let c: CriticalCurve = read_json(dir, CURVE_FILE)?;
            let cutoff = cutoff_for(&c, cfg.cutoff_xi1)?;
            let sw = compute_sweep(&w, &c, cutoff, cfg.family, cfg.seed, &cfg.n_list, &cfg.t_grid.times())?;
            let summary = UniformSummary::new(&sw);
            StageResult::Outputs(vec![
                (UNIFORM_CSV, to_csv_bytes(&sw.rows, &SWEEP_HEADER)?),
                (UNIFORM_JSON, to_json_bytes(&summary)?),
            ])
        }
        "sharpness" => {
            let d = match cfg.sharpness.d {
                Some(d) => d,
                None if manifest.files.contains_key(CURVE_FILE) => read_json::<CriticalCurve>(dir, CURVE_FILE)?.d,
                None => return Ok(StageResult::NotApplicable("no diffusion coefficient: set sharpness.d".into())),
            };
            let s = compute_sharpness(&cfg.sharpness, cfg.precision_mode, d)?;
            StageResult::Outputs(vec![
                (SHARP_CSV, to_csv_bytes(&sharp_rows(&s.records), &SHARP_HEADER)?),
                (SHARP_JSON, to_json_bytes(&s)?),
            ])
        }
        "whitham" => {
            if !cfg.localized.enabled {
                return Ok(StageResult::NotApplicable("localized run disabled".into()));
            }
            let w = load_wave(dir)?;
            let c: CriticalCurve = read_json(dir, CURVE_FILE)?;
            let cutoff = cutoff_for(&c, cfg.cutoff_xi1)?;
            let l = &cfg.localized;
            let (run, cmp) = compute_localized(&w, &c, cutoff, l.n_win, l.width, &cfg.t_grid.times())?;
            let summary = LocalizedSummary::new(&run, &cmp);
            StageResult::Outputs(vec![
                (WHITHAM_CSV, to_csv_bytes(&whitham_rows(&run, &cmp), &WHITHAM_HEADER)?),
                (LOCALIZED_JSON, to_json_bytes(&summary)?),
            ])
        }
        "report" => StageResult::Outputs(vec![(REPORT_FILE, super::report::render(dir, manifest)?.into_bytes())]),
        other => return Err(Error::Format(format!("unknown stage {other}"))),
    };
    Ok(out)
}

/// Re-read a freshly produced artifact as its declared schema.
fn validate_output(name: &str, bytes: &[u8]) -> Result<()> {
    let text = std::str::from_utf8(bytes).map_err(|e| Error::Format(format!("{name}: {e}")))?;
    match name {
        WAVE_FILE => PeriodicWave::from_json(text).map(|_| ()),
        VERDICT_FILE => serde_json::from_str::<StabilityVerdict>(text).map(|_| ()).map_err(Into::into),
        CURVE_FILE => serde_json::from_str::<CriticalCurve>(text).map(|_| ()).map_err(Into::into),
        UNIFORM_JSON => serde_json::from_str::<UniformSummary>(text).map(|_| ()).map_err(Into::into),
        SHARP_JSON => serde_json::from_str::<SharpnessOutput>(text).map(|_| ()).map_err(Into::into),
        LOCALIZED_JSON => serde_json::from_str::<LocalizedSummary>(text).map(|_| ()).map_err(Into::into),
        SPECTRUM_FILE => read_csv::<SpectrumRow>(bytes, &SPECTRUM_HEADER).map(|_| ()),
        UNIFORM_CSV => read_csv::<crate::semigroup::SweepRow>(bytes, &SWEEP_HEADER).map(|_| ()),
        SHARP_CSV => read_csv::<SharpRow>(bytes, &SHARP_HEADER).map(|_| ()),
        WHITHAM_CSV => read_csv::<WhithamRow>(bytes, &WHITHAM_HEADER).map(|_| ()),
        REPORT_FILE => Ok(()),
        other => Err(Error::Format(format!("no schema for {other}"))),
    }
}

fn stage_specs(cfg: &RunConfig) -> Vec<StageSpec> {
    let mut sharp_inputs = vec![];
    if cfg.sharpness.d.is_none() {
        sharp_inputs.push(CURVE_FILE);
    }
    vec![
        StageSpec {
            name: "solve",
            inputs: vec![],
            config: json!({"params": cfg.params, "mu": cfg.mu, "M": cfg.m, "newton_tol": cfg.newton_tol, "wave_kind": cfg.wave_kind}),
        },
        StageSpec {
            name: "verdict",
            inputs: vec![WAVE_FILE],
            config: json!({"xi_grid": cfg.xi_grid, "N_list": cfg.n_list}),
        },
        StageSpec {
            name: "curve",
            inputs: vec![WAVE_FILE, VERDICT_FILE],
            config: json!({"curve_samples": cfg.curve_samples}),
        },
        StageSpec {
            name: "sweep",
            inputs: vec![WAVE_FILE, CURVE_FILE],
            config: json!({"N_list": cfg.n_list, "t_grid": cfg.t_grid, "cutoff_xi1": cfg.cutoff_xi1, "family": cfg.family, "seed": cfg.seed}),
        },
        StageSpec {
            name: "sharpness",
            inputs: sharp_inputs,
            config: json!({"sharpness": cfg.sharpness, "precision_mode": cfg.precision_mode}),
        },
        StageSpec {
            name: "whitham",
            inputs: vec![WAVE_FILE, CURVE_FILE],
            config: json!({"localized": cfg.localized, "t_grid": cfg.t_grid, "cutoff_xi1": cfg.cutoff_xi1}),
        },
        StageSpec {
            name: "report",
            inputs: vec![],
            config: json!({}),
        },
    ]
}

/// Run every stage in order, skipping those whose recorded inputs and outputs are intact.
pub fn run_pipeline(cfg: &RunConfig) -> Result<PipelineOutcome> {
    cfg.validate()?;
    let dir = cfg.output_dir.as_path();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut manifest = Manifest::load(dir)?.unwrap_or_default();
    manifest.version = 1;
    // the output location is not part of the run's identity
    let mut identity = serde_json::to_value(cfg)?;
    if let Some(obj) = identity.as_object_mut() {
        obj.remove("output_dir");
    }
    manifest.config_sha256 = sha256_hex(identity.to_string().as_bytes());
    let mut outcome = PipelineOutcome {
        manifest: Manifest::default(),
        ran: vec![],
        skipped: vec![],
        not_applicable: vec![],
    };
    for spec in stage_specs(cfg) {
        let name = spec.name;
        let mut inputs = BTreeMap::new();
        inputs.insert("config".to_string(), sha256_hex(spec.config.to_string().as_bytes()));
        let mut missing = None;
        let input_names: Vec<String> = if name == "report" {
            manifest.files.keys().filter(|f| f.as_str() != REPORT_FILE).cloned().collect()
        } else {
            spec.inputs.iter().map(|s| s.to_string()).collect()
        };
        for f in &input_names {
            if !manifest.files.contains_key(f) {
                missing = Some(f.clone());
                break;
            }
            inputs.insert(f.clone(), manifest.verified_hash(dir, f)?);
        }
        if let Some(f) = missing {
            manifest.stages.insert(
                name.to_string(),
                StageRecord {
                    status: StageStatus::NotApplicable,
                    reason: Some(format!("input {f} was not produced")),
                    inputs,
                    outputs: vec![],
                },
            );
            outcome.not_applicable.push(name.to_string());
            manifest.save(dir)?;
            continue;
        }
        // refuse to overwrite recorded outputs that no longer match their hashes
        if let Some(prev) = manifest.stages.get(name) {
            for o in &prev.outputs {
                if dir.join(o).exists() {
                    manifest.verified_hash(dir, o)?;
                }
            }
            let intact = prev.outputs.iter().all(|o| dir.join(o).exists());
            if prev.inputs == inputs && intact {
                match prev.status {
                    StageStatus::Done => outcome.skipped.push(name.to_string()),
                    StageStatus::NotApplicable => outcome.not_applicable.push(name.to_string()),
                }
                continue;
            }
            for o in prev.outputs.clone() {
                manifest.files.remove(&o);
            }
        }
        let result = run_stage(name, cfg, dir, &manifest).map_err(stage_failure(name))?;
        match result {
            StageResult::NotApplicable(reason) => {
                manifest.stages.insert(
                    name.to_string(),
                    StageRecord {
                        status: StageStatus::NotApplicable,
                        reason: Some(reason),
                        inputs,
                        outputs: vec![],
                    },
                );
                outcome.not_applicable.push(name.to_string());
            }
            StageResult::Outputs(files) => {
                let mut outputs = vec![];
                for (fname, bytes) in files {
                    validate_output(fname, &bytes).map_err(stage_failure(name))?;
                    write_atomic(&dir.join(fname), &bytes)?;
                    manifest.files.insert(
                        fname.to_string(),
                        FileRecord {
                            sha256: sha256_hex(&bytes),
                            bytes: bytes.len() as u64,
                            stage: name.to_string(),
                        },
                    );
                    outputs.push(fname.to_string());
                }
                manifest.stages.insert(
                    name.to_string(),
                    StageRecord {
                        status: StageStatus::Done,
                        reason: None,
                        inputs,
                        outputs,
                    },
                );
                outcome.ran.push(name.to_string());
            }
        }
        manifest.save(dir)?;
    }
    outcome.manifest = manifest;
    Ok(outcome)
}

// ---- acceptance checks for `pipeline --assert` ----

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

fn check(name: &str, pass: bool, detail: String) -> Check {
    Check {
        name: name.to_string(),
        pass,
        detail,
    }
}

/// Threshold checks on the artifacts of a finished run. Stages that did not run contribute nothing.
pub fn acceptance_checks(dir: &Path, manifest: &Manifest) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let has = |f: &str| manifest.files.contains_key(f);
    if has(VERDICT_FILE) {
        let v: StabilityVerdict = read_json(dir, VERDICT_FILE)?;
        out.push(check("stability", v.stable, format!("theta = {:.4}", v.theta)));
    }
    if has(CURVE_FILE) {
        let c: CriticalCurve = read_json(dir, CURVE_FILE)?;
        out.push(check("diffusion", c.d > 0.0, format!("d = {:.4}, a = {:.2e}", c.d, c.a)));
    }
    if has(UNIFORM_CSV) {
        let rows: Vec<crate::semigroup::SweepRow> =
            read_csv(&std::fs::read(dir.join(UNIFORM_CSV)).map_err(|e| Error::io(dir, e))?, &SWEEP_HEADER)?;
        let worst = rows.iter().map(|r| r.closure_residual).fold(0.0, f64::max);
        out.push(check("closure", worst <= 1e-8, format!("max closure residual {worst:.2e}")));
    }
    if has(UNIFORM_JSON) {
        let u: UniformSummary = read_json(dir, UNIFORM_JSON)?;
        let p: Vec<f64> = u.summaries.iter().map(|s| s.prefactor).collect();
        let ratio = p.iter().cloned().fold(f64::NEG_INFINITY, f64::max) / p.iter().cloned().fold(f64::INFINITY, f64::min);
        out.push(check("uniform-prefactor", ratio <= 3.0, format!("max/min over N = {ratio:.3}")));
        for s in u.summaries.iter().filter(|s| s.n >= 16) {
            let e = s.residual_fit.as_ref().map(|f| f.fitted_exponent);
            out.push(check(
                &format!("residual-exponent-N{}", s.n),
                e.is_some_and(|e| e >= 0.70),
                format!("exponent {}", opt(e)),
            ));
        }
        if let Some(s) = u.summaries.iter().find(|s| s.n == 8) {
            let r = s.late_fit.as_ref().map(|f| f.fitted_exponent);
            let rel = r.map(|r| (r - s.delta).abs() / s.delta);
            out.push(check(
                "late-rate-N8",
                rel.is_some_and(|x| x <= 0.25),
                format!("rate {} vs delta {:.4e}", opt(r), s.delta),
            ));
        }
    }
    if has(LOCALIZED_JSON) {
        let l: LocalizedSummary = read_json(dir, LOCALIZED_JSON)?;
        for (name, e, min) in [
            ("localized-minus-p0", l.minus_p0_exponent, 0.20),
            ("localized-residual", l.residual_exponent, 0.70),
            ("whitham", l.whitham_exponent, 0.70),
        ] {
            out.push(check(name, e.is_some_and(|e| e >= min), format!("exponent {} (need >= {min})", opt(e))));
        }
    }
    if has(SHARP_JSON) {
        let s: SharpnessOutput = read_json(dir, SHARP_JSON)?;
        for v in [Variant::Plain, Variant::Weighted] {
            let ratio = const_ratio(&s.records, v, None);
            out.push(check(
                &format!("sharpness-{}-constant", v.as_str()),
                ratio.is_some_and(|r| r <= 5.0),
                format!("max/min = {}", opt(ratio)),
            ));
            let bad: Vec<String> = s
                .slopes
                .iter()
                .filter(|e| e.variant == v && !e.slope.is_some_and(|x| (x + 1.0).abs() <= 0.1))
                .map(|e| format!("t={}: {}", e.t, opt(e.slope)))
                .collect();
            out.push(check(
                &format!("sharpness-{}-slope", v.as_str()),
                bad.is_empty(),
                if bad.is_empty() { "all slopes within -1 +- 0.1".into() } else { bad.join(", ") },
            ));
        }
        if let Some(dg) = s.extended_digits {
            out.push(check("extended-agreement", dg >= 12.0, format!("{dg:.1} digits")));
        }
        let b = &s.bounds;
        out.push(check(
            "uniform-bounds",
            b.sup_plain.is_finite() && b.sup_weighted.is_finite() && b.small_time_ok,
            format!("sup plain {:.4}, sup weighted {:.4}, small-time max {:.4}", b.sup_plain, b.sup_weighted, b.small_time_max),
        ));
    }
    Ok(out)
}

fn opt(x: Option<f64>) -> String {
    x.map_or("n/a".into(), |v| format!("{v:.4}"))
}
