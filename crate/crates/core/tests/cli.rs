use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use qram::cli::{parse_config, run, Mode};
use tempfile::TempDir;

const SHORT: &str = r#"
[schedule]
t_ramp = 1.0
t_hold = 12.0
t_post = 1.0

[integrator]
steps_per_fast_period = 256
tolerance = 1e-5
report_samples = 120
"#;

fn qram(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qram")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn run_mode(mode: &str, config: &str, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![mode, "--config", config, "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    qram(&args)
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn diagnostic(o: &Output) -> String {
    let err = stderr(o);
    let lines: Vec<&str> = err.lines().collect();
    assert_eq!(lines.len(), 1, "{err}");
    lines[0].to_string()
}

fn column(csv: &str, name: &str) -> Vec<f64> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let idx = header.iter().position(|h| *h == name).unwrap();
    lines.map(|l| l.split(',').nth(idx).unwrap().parse().unwrap()).collect()
}

#[test]
fn transfer_output_is_deterministic() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "run.toml", SHORT);
    let (a, b, c) = (tmp.path().join("a"), tmp.path().join("b"), tmp.path().join("c"));
    assert!(run_mode("transfer", &cfg, &a, &[]).status.success());
    assert!(run_mode("transfer", &cfg, &b, &[]).status.success());
    assert!(run_mode("transfer", &cfg, &c, &["--threads", "2"]).status.success());
    for file in ["trace.csv", "summary.json", "config.toml"] {
        let first = fs::read(a.join(file)).unwrap();
        assert_eq!(first, fs::read(b.join(file)).unwrap(), "{file}");
        assert_eq!(first, fs::read(c.join(file)).unwrap(), "{file}");
    }

    let trace = fs::read_to_string(a.join("trace.csv")).unwrap();
    assert_eq!(trace.lines().next().unwrap(), "t,F,P0,P1,P2,P3,P4,P5,W");
    assert_eq!(trace.lines().count(), 121);
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(a.join("summary.json")).unwrap()).unwrap();
    let f = column(&trace, "F");
    assert_eq!(summary["f_final"].as_f64().unwrap(), *f.last().unwrap());
    assert!(summary.get("wall_clock").is_none());
}

#[test]
fn resolved_config_round_trips() {
    let tmp = TempDir::new().unwrap();
    let text = format!("profile = \"rb87-ghz\"\n[params]\nlaser = \"co-rotating\"\n{SHORT}\n[sweep]\nt_ramp_min = 0.5\nt_ramp_max = 2\n");
    let cfg = write_config(tmp.path(), "run.toml", &text);
    let out = tmp.path().join("out");
    let o = run_mode("estimate-params", &cfg, &out, &["--angular"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let echoed = parse_config(&fs::read_to_string(out.join("config.toml")).unwrap()).unwrap();
    assert_eq!(echoed.mode, Mode::EstimateParams);
    assert!(echoed.angular);
    let original = qram::cli::parse_config_with(
        &text,
        qram::cli::Overrides { mode: Some(Mode::EstimateParams), angular: true },
    )
    .unwrap();
    assert_eq!(echoed, original);
    assert_eq!(parse_config(&echoed.to_toml()).unwrap(), echoed);
}

#[test]
fn estimate_report() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "run.toml", "");
    let out = tmp.path().join("out");
    let o = run_mode("estimate-params", &cfg, &out, &[]);
    assert!(o.status.success());
    let csv = fs::read_to_string(out.join("estimate.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "quantity,value,unit");
    let value = |name: &str| -> f64 {
        let line = csv.lines().find(|l| l.starts_with(&format!("{name},"))).unwrap();
        line.split(',').nth(1).unwrap().parse().unwrap()
    };
    let tau = value("transfer_time");
    assert!((5e-9..=50e-9).contains(&tau), "{tau}");
    assert!((17e9..=20e9).contains(&value("squid_splitting")));
}

#[test]
fn sweep_and_average_files() {
    let tmp = TempDir::new().unwrap();
    let text = format!("{SHORT}\n[sweep]\nt_ramp_min = 0.2\nt_ramp_max = 2.0\npoints = 3\ncalibrate_hold = false\n");
    let cfg = write_config(tmp.path(), "run.toml", &text);
    let out = tmp.path().join("sweep");
    let o = run_mode("ramp-sweep", &cfg, &out, &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert_eq!(
        csv.lines().next().unwrap(),
        "measured_ramp_time,f_avg_final,t_ramp_nominal,f_final,unitarity_defect,status"
    );
    assert_eq!(csv.lines().count(), 4);
    let measured = column(&csv, "measured_ramp_time");
    assert!(measured.windows(2).all(|w| w[0] < w[1]));
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    let best = summary["f_avg_final"].as_f64().unwrap();
    assert_eq!(best, column(&csv, "f_avg_final").into_iter().fold(f64::MIN, f64::max));

    let out = tmp.path().join("avg");
    let o = run_mode("avg-fidelity", &cfg, &out, &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(out.join("avg_trace.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "t,F_avg,W");
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["f_avg_final"].as_f64().unwrap(), *column(&csv, "F_avg").last().unwrap());
}

#[test]
fn errors_exit_with_a_single_tagged_line() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");

    let cfg = write_config(tmp.path(), "bad.toml", "[params]\ndelta1 = -1\n");
    let o = run_mode("transfer", &cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(1));
    let line = diagnostic(&o);
    assert!(line.starts_with("error[config]:") && line.contains("params.delta1"), "{line}");

    let cfg = write_config(tmp.path(), "unknown.toml", "[quad]\nrule = \"simpson\"\n");
    let o = run_mode("avg-fidelity", &cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(diagnostic(&o).contains("quad.rule"));

    let cfg = write_config(tmp.path(), "sweep.toml", "");
    let o = run_mode("ramp-sweep", &cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(diagnostic(&o).contains("sweep.t_ramp_min"));

    let o = run_mode("transfer", tmp.path().join("missing.toml").to_str().unwrap(), &out, &[]);
    assert_eq!(o.status.code(), Some(3));
    assert!(diagnostic(&o).starts_with("error[io]:"));

    let blocker = tmp.path().join("file");
    fs::write(&blocker, "").unwrap();
    let cfg = write_config(tmp.path(), "est.toml", "");
    let o = run_mode("estimate-params", &cfg, &blocker.join("out"), &[]);
    assert_eq!(o.status.code(), Some(3));
    assert!(diagnostic(&o).starts_with("error[io]:"));

    let text = "[schedule]\nt_hold = 5.0\n[integrator]\nsteps_per_fast_period = 8\ntolerance = 1e-12\n";
    let cfg = write_config(tmp.path(), "coarse.toml", text);
    let o = run_mode("transfer", &cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(2));
    let line = diagnostic(&o);
    assert!(line.starts_with("error[integration]:") && line.contains("reduce the step"), "{line}");

    let o = qram(&["sideways", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(1));
    assert!(diagnostic(&o).starts_with("error[usage]:"));
}

#[test]
fn help_lists_every_section() {
    let o = qram(&["--help"]);
    assert!(o.status.success());
    let text = String::from_utf8_lossy(&o.stdout);
    for section in ["[params]", "[schedule]", "[integrator]", "[quad]", "[sweep]", "[physical]", "[protocol]", "[angles]"] {
        assert!(text.contains(section), "{section}");
    }
}

#[test]
fn library_run_writes_the_listed_files() {
    let tmp = TempDir::new().unwrap();
    let config = parse_config("mode = \"estimate-params\"").unwrap();
    let summary = run(&config, tmp.path()).unwrap();
    assert_eq!(summary.files, ["estimate.csv", "config.toml", "summary.json"]);
    for f in &summary.files {
        assert!(tmp.path().join(f).is_file());
    }
}
