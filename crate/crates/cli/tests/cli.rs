use std::path::Path;
use std::process::{Command, Output};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lle-bloch")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn template_is_printed_and_written() {
    let o = bin(&["template"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("[params]"));
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run.toml");
    assert_eq!(code(&bin(&["template", "--out", p(&out)])), 0);
    assert_eq!(std::fs::read_to_string(&out).unwrap(), stdout(&o));
}

#[test]
fn solve_then_verdict_on_a_small_wave() {
    let dir = tempfile::tempdir().unwrap();
    let wave = dir.path().join("wave.json");
    let o = bin(&["solve", "--alpha", "1", "--mu", "0.01", "--out", p(&wave)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&wave).unwrap()).unwrap();
    assert!(v["residual_norm"].as_f64().unwrap() <= 1e-10);

    let verdict = dir.path().join("verdict.json");
    let o = bin(&["verdict", "--wave", p(&wave), "--grid", "51", "--N-list", "1,2", "--out", p(&verdict)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&verdict).unwrap()).unwrap();
    assert_eq!(v["stable"], true);
}

#[test]
fn validation_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("w.json");
    // alpha above the seed's range
    assert_eq!(code(&bin(&["solve", "--alpha", "1.5", "--mu", "0.01", "--out", p(&out)])), 2);
    // neither F nor mu
    assert_eq!(code(&bin(&["solve", "--alpha", "1", "--out", p(&out)])), 2);
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "output_dir = \"x\"\nnonsense = 3\n[params]\nalpha = 1.0\n").unwrap();
    assert_eq!(code(&bin(&["pipeline", "--config", p(&bad)])), 2);
    assert!(!out.exists());
}

#[test]
fn sharpness_writes_the_documented_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sharp.csv");
    let o = bin(&["sharpness", "--N-list", "4,8,16", "--t-grid", "1,4", "--out", p(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("N,t,variant,sum,integral,gap,normalized_const,regime_flag\n"));
    assert_eq!(text.lines().count(), 1 + 3 * 2 * 2);
}

fn unstable_config(dir: &Path) -> std::path::PathBuf {
    let cfg = dir.join("run.toml");
    let text = format!(
        "output_dir = {:?}\nwave_kind = \"constant\"\nM = 8\n[params]\nalpha = 1.0\nF = 2.0\n[xi_grid]\nn = 51\nrefine = 4\n[sharpness]\nd = 1.0\nN_list = [4, 8]\nt_list = [1.0]\n",
        p(&dir.join("run"))
    );
    std::fs::write(&cfg, text).unwrap();
    cfg
}

#[test]
fn pipeline_resumes_refuses_corruption_and_asserts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = unstable_config(dir.path());
    let run = dir.path().join("run");

    let o = bin(&["pipeline", "--config", p(&cfg)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("ran: [solve, verdict, sharpness, report]"));

    let o = bin(&["pipeline", "--config", p(&cfg)]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).starts_with("ran: []"));

    // the modulationally unstable state fails the stability check
    let o = bin(&["pipeline", "--config", p(&cfg), "--assert"]);
    assert_eq!(code(&o), 4);
    assert!(stdout(&o).contains("FAIL stability"));

    let o = bin(&["report", "--dir", p(&run)]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("diffusively spectrally stable: no"));
    assert_eq!(stdout(&o), std::fs::read_to_string(run.join("report.md")).unwrap());

    let wave = run.join("wave.json");
    let mut bytes = std::fs::read(&wave).unwrap();
    bytes.push(b'\n');
    std::fs::write(&wave, bytes).unwrap();
    let o = bin(&["pipeline", "--config", p(&cfg)]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("hash mismatch"));
}

#[test]
fn missing_inputs_are_stage_failures() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin(&["report", "--dir", p(&dir.path().join("nowhere"))]);
    assert_eq!(code(&o), 2);
    let o = bin(&["spectrum", "--wave", p(&dir.path().join("missing.json")), "--out", p(&dir.path().join("s.csv"))]);
    assert_eq!(code(&o), 3);
}
