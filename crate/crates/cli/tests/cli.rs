use std::fs;
use std::path::Path;
use std::process::Command;

const BASE: &str = r#"
[exponents]
d = 1
p = 2.0
[grid]
half_width = 10.0
points = 256
t_half_width = 10.0
x_half_width = 20.0
t_points = 128
x_points = 256
"#;

fn parext(dir: &Path, kind: &str, config: &str, extra: &[&str]) -> (i32, String) {
    let cfg = dir.join(format!("{kind}.toml"));
    fs::write(&cfg, config).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_parext"))
        .arg(kind)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .args(extra)
        .output()
        .unwrap();
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stderr).into_owned())
}

#[test]
fn quotient_writes_report_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let (code, err) = parext(dir.path(), "quotient", BASE, &["--threads", "2"]);
    assert_eq!(code, 0, "{err}");
    let csv = fs::read_to_string(dir.path().join("out/quotient.csv")).unwrap();
    assert!(csv.starts_with("d,p,q,tau0,xi0_1,quotient,"));
    assert_eq!(csv.lines().count(), 2);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/report.json")).unwrap()).unwrap();
    assert_eq!(report["kind"], "quotient");
    assert_eq!(report["tables"], serde_json::json!(["quotient"]));
}

#[test]
fn unknown_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let (code, err) = parext(dir.path(), "quotient", &format!("{BASE}\nt_pionts = 3\n"), &[]);
    assert_eq!(code, 2);
    assert!(err.contains("t_pionts"), "{err}");
    let (code, _) = parext(dir.path(), "quotient", "[exponents]\nd = 1\np = 1.0\n", &[]);
    assert_eq!(code, 2);
}

#[test]
fn bad_command_line_is_a_config_error() {
    let out = Command::new(env!("CARGO_BIN_EXE_parext")).args(["nonsense", "--config", "x.toml"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = Command::new(env!("CARGO_BIN_EXE_parext"))
        .args(["quotient", "--config", "/definitely/missing.toml"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn numerical_refusal_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    // frequency spacing 20/64 against X = 200 violates the sampling limit
    let cfg = BASE.replace("points = 256", "points = 64").replace("x_half_width = 20.0", "x_half_width = 200.0");
    let (code, err) = parext(dir.path(), "quotient", &cfg, &[]);
    assert_eq!(code, 3, "{err}");
    // no grid point lies farther than s from the zero set inside |xi| < r
    let sep =
        format!("shift = {{ xi0 = [1.0] }}\n{BASE}\n[separation]\nshift_n = {{ xi0 = [1.1] }}\ns = 5.0\nr = 1.0\n");
    let (code, err) = parext(dir.path(), "separation", &sep, &[]);
    assert_eq!(code, 3, "{err}");
}

#[test]
fn reruns_are_byte_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!("seed = 7\n{BASE}\n[symmetry_box]\ndraws = 6\nholder_pairs = 20\n");
    let mut outputs = Vec::new();
    for threads in ["1", "4"] {
        let (code, err) = parext(dir.path(), "verify-symmetry", &cfg, &["--threads", threads]);
        assert_eq!(code, 0, "{err}");
        let read = |n: &str| fs::read(dir.path().join("out").join(n)).unwrap();
        outputs.push((read("report.json"), read("intertwining.csv"), read("pushthrough.csv"), read("holder.csv")));
    }
    assert!(outputs[0] == outputs[1]);
    let (code, _) = parext(dir.path(), "verify-symmetry", &cfg, &["--seed", "8"]);
    assert_eq!(code, 0);
    assert_ne!(fs::read(dir.path().join("out/report.json")).unwrap(), outputs[0].0);
}
