use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn covertour(args: &[&str]) -> Output {
    let out = Command::new(env!("CARGO_BIN_EXE_covertour")).args(args).output().expect("spawn covertour");
    assert!(
        out.status.success(),
        "covertour {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn field(text: &str, key: &str) -> f64 {
    let line = text.lines().find(|l| l.starts_with(key)).unwrap_or_else(|| panic!("no {key} in {text}"));
    line[key.len()..].trim().parse().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn gen_simulate_opt_error() {
    let dir = tempfile::tempdir().unwrap();
    covertour(&[
        "gen", "--grid", "5x5", "--count", "1", "--requests", "6", "--horizon", "8", "--sigma-location", "1",
        "--seed", "3", "--out", s(dir.path()),
    ]);
    let inst = dir.path().join("instance_0.json");
    let pred = dir.path().join("prediction_0.json");
    assert!(inst.exists() && pred.exists());

    let opt = stdout(&covertour(&["opt", "--grid", "5x5", "--instance", s(&inst)]));
    let trace = dir.path().join("trace.json");
    let sim = stdout(&covertour(&[
        "simulate", "--grid", "5x5", "--instance", s(&inst), "--prediction", s(&pred), "--algo", "smart-trust",
        "--alpha", "0.25", "--trace", s(&trace),
    ]));
    let ratio = field(&sim, "ratio=");
    assert!(ratio >= 1.0 - 1e-9, "{sim}");
    assert!((field(&sim, "opt=") - field(&opt, "completion=")).abs() < 1e-9);
    let t: serde_json::Value = serde_json::from_str(&fs::read_to_string(&trace).unwrap()).unwrap();
    assert!(t.is_object());

    let err = stdout(&covertour(&[
        "error", "--grid", "5x5", "--instance", s(&inst), "--prediction", s(&pred), "--k", "1",
    ]));
    assert!(field(&err, "lambda_k=") >= 0.0);
}

#[test]
fn matrix_is_byte_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("exp.json");
    fs::write(
        &config,
        r#"{
  "algorithms": [{"algo": "replan"}, {"algo": "smart-trust", "alphas": [0.1, 0.5]}],
  "source": {"kind": "grid", "width": 5, "height": 5, "count": 6, "per_instance": 6, "horizon": 10, "seed": 5},
  "sweep": {"param": "sigma_location", "values": [0, 2], "seed": 9}
}"#,
    )
    .unwrap();
    let mut csvs = Vec::new();
    for jobs in ["1", "4"] {
        let out = dir.path().join(format!("rows_{jobs}.csv"));
        covertour(&["matrix", s(&config), "--jobs", jobs, "--out", s(&out)]);
        assert!(dir.path().join(format!("rows_{jobs}.csv.summary.csv")).exists());
        csvs.push(fs::read(&out).unwrap());
    }
    assert!(!csvs[0].is_empty());
    assert_eq!(csvs[0], csvs[1]);

    let svg = dir.path().join("plot.svg");
    covertour(&["plot", s(&dir.path().join("rows_1.csv")), "--out", s(&svg), "--title", "grid"]);
    assert!(fs::read_to_string(&svg).unwrap().starts_with("<svg"));
}

#[test]
fn adversarial_writes_files() {
    let dir = tempfile::tempdir().unwrap();
    covertour(&["adversarial", "--kind", "smarttrust", "--alpha", "0.5", "--out", s(dir.path())]);
    for f in ["instance.json", "prediction.json", "space.json"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
}

#[test]
fn rejects_unsupported_nu() {
    let dir = tempfile::tempdir().unwrap();
    covertour(&["gen", "--grid", "3x3", "--requests", "2", "--out", s(dir.path())]);
    let inst = dir.path().join("instance_0.json");
    let out = Command::new(env!("CARGO_BIN_EXE_covertour"))
        .args(["simulate", "--grid", "3x3", "--instance", s(&inst), "--nu", "1.5"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("nu"));
}
