use super::artifacts::Manifest;
use super::pipeline::*;
use crate::blochop::{CriticalCurve, StabilityVerdict};
use crate::error::{Error, Result};
use crate::riemann::Variant;
use std::fmt::Write;
use std::path::Path;

fn load<T: serde::de::DeserializeOwned>(dir: &Path, name: &str, manifest: &Manifest) -> Result<Option<T>> {
    if !manifest.files.contains_key(name) {
        return Ok(None);
    }
    let p = dir.join(name);
    let text = std::fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
    Ok(Some(serde_json::from_str(&text)?))
}

fn opt(x: Option<f64>) -> String {
    x.map_or("n/a".into(), |v| format!("{v:.4}"))
}

/// Markdown summary of whatever artifacts the manifest records.
pub fn render(dir: &Path, manifest: &Manifest) -> Result<String> {
    let mut s = String::new();
    let w = |s: &mut String, line: String| {
        let _ = writeln!(s, "{line}");
    };
    w(&mut s, "# Run report\n".into());
    if manifest.files.contains_key(WAVE_FILE) {
        let wave = load_wave(dir)?;
        w(&mut s, "## Wave\n".into());
        w(&mut s, format!("- period T = {:.6}", wave.period));
        w(&mut s, format!("- truncation M = {}", wave.m));
        w(&mut s, format!("- collocation residual = {:.3e}\n", wave.collocation_residual()));
    }
    if let Some(v) = load::<StabilityVerdict>(dir, VERDICT_FILE, manifest)? {
        w(&mut s, "## Spectral stability\n".into());
        w(&mut s, format!("- diffusively spectrally stable: {}", if v.stable { "yes" } else { "no" }));
        let mut worst: std::collections::BTreeMap<&str, &crate::blochop::Violation> = Default::default();
        for viol in &v.violations {
            let e = worst.entry(viol.condition.as_str()).or_insert(viol);
            if viol.value > e.value {
                *e = viol;
            }
        }
        for (cond, viol) in worst {
            let count = v.violations.iter().filter(|x| x.condition == cond).count();
            w(
                &mut s,
                format!(
                    "- failing condition ({cond}) at xi = {:.6}, value {:.4e} ({count} grid points)",
                    viol.xi, viol.value
                ),
            );
        }
        w(&mut s, format!("- theta = {:.4}", v.theta));
        w(&mut s, format!("- secondary gap = {:.4}", v.secondary_gap));
        w(&mut s, format!("- xi1 = {:.4}, delta1 = {:.4e}\n", v.xi1, v.delta1));
    }
    if let Some(c) = load::<CriticalCurve>(dir, CURVE_FILE, manifest)? {
        w(&mut s, "## Critical curve\n".into());
        w(&mut s, format!("- a = {:.6e}", c.a));
        w(&mut s, format!("- d = {:.6}", c.d));
        w(&mut s, format!("- fit residual = {:.3e}\n", c.fit_residual));
    }
    if let Some(u) = load::<UniformSummary>(dir, UNIFORM_JSON, manifest)? {
        w(&mut s, "## Subharmonic decay\n".into());
        w(&mut s, format!("- eta = {:.4}, d = {:.4}", u.eta, u.d));
        w(&mut s, format!("- prefactor ratio over N = {:.3}\n", u.prefactor_ratio));
        w(&mut s, "| N | prefactor | residual exponent | late rate | delta_N |".into());
        w(&mut s, "|---|---|---|---|---|".into());
        for r in &u.summaries {
            w(
                &mut s,
                format!(
                    "| {} | {:.4} | {} | {} | {:.4e} |",
                    r.n,
                    r.prefactor,
                    opt(r.residual_fit.as_ref().map(|f| f.fitted_exponent)),
                    opt(r.late_fit.as_ref().map(|f| f.fitted_exponent)),
                    r.delta
                ),
            );
        }
        w(&mut s, String::new());
    }
    if let Some(sh) = load::<SharpnessOutput>(dir, SHARP_JSON, manifest)? {
        w(&mut s, "## Riemann-sum sharpness\n".into());
        w(&mut s, format!("- T = {:.6}, d = {:.4}", sh.period, sh.d));
        for v in [Variant::Plain, Variant::Weighted] {
            w(&mut s, format!("- {} constant ratio over all (N, t) = {}", v.as_str(), opt(const_ratio(&sh.records, v, None))));
        }
        w(&mut s, format!("- sup plain = {:.4}, sup weighted = {:.4}", sh.bounds.sup_plain, sh.bounds.sup_weighted));
        if let Some(dg) = sh.extended_digits {
            w(&mut s, format!("- agreement with 192-bit sums: {dg:.1} digits"));
        }
        w(&mut s, "\n| t | variant | slope | const ratio |".into());
        w(&mut s, "|---|---|---|---|".into());
        for e in &sh.slopes {
            w(&mut s, format!("| {} | {} | {} | {} |", e.t, e.variant.as_str(), opt(e.slope), opt(e.const_ratio)));
        }
        w(&mut s, String::new());
    }
    if let Some(l) = load::<LocalizedSummary>(dir, LOCALIZED_JSON, manifest)? {
        w(&mut s, "## Localized data\n".into());
        w(&mut s, format!("- window N_win = {}, fit window [{:.2}, {:.2}]", l.n_win, l.fit_window.0, l.fit_window.1));
        w(&mut s, format!("- exponent of full - P0: {}", opt(l.minus_p0_exponent)));
        w(&mut s, format!("- residual exponent: {}", opt(l.residual_exponent)));
        w(&mut s, format!("- Whitham exponent: {}", opt(l.whitham_exponent)));
        w(&mut s, String::new());
    }
    let skipped: Vec<_> = manifest
        .stages
        .iter()
        .filter_map(|(k, r)| r.reason.as_ref().map(|why| format!("- {k}: {why}")))
        .collect();
    if !skipped.is_empty() {
        w(&mut s, "## Not applicable\n".into());
        for l in skipped {
            w(&mut s, l);
        }
    }
    Ok(s)
}
