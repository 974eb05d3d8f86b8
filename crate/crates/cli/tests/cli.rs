use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn mdc(args: &[&str], cfg: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mdc"))
        .args(args)
        .arg("--config")
        .arg(cfg)
        .arg("--out")
        .arg(out)
        .env_remove("MDC_SEED")
        .env_remove("MDC_N_SAMPLES")
        .env_remove("MDC_BUDGET")
        .env_remove("MDC_T")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read(p: PathBuf) -> String {
    std::fs::read_to_string(p).unwrap()
}

const WINDOW_TEMPLATE: &str = r#"
horizon = 10
alphabet = ALPHABET
[family]
kind = "window"
width = 5
alpha = ALPHA
[target]
kind = "terminal"
symbol = 0
[sweep]
horizons = HORIZONS
"#;

fn window(dir: &TempDir, alphabet: usize, alpha: f64, horizons: &str) -> PathBuf {
    let text = WINDOW_TEMPLATE
        .replace("ALPHABET", &alphabet.to_string())
        .replace("ALPHA", &alpha.to_string())
        .replace("HORIZONS", horizons);
    write_config(dir, "window.toml", &text)
}

#[test]
fn describe_markov() {
    let tmp = TempDir::new().unwrap();
    let o = mdc(&["describe"], &config("markov.toml"), tmp.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let s = stdout(&o);
    assert!(s.contains("family: markov (alpha 0.7)"), "{s}");
    assert!(s.contains("step 2: [1]"));
    assert!(s.contains("exact H cost"));
}

#[test]
fn missing_field_exits_2() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(&tmp, "bad.toml", "[family]\nkind = \"independent\"\n[target]\nkind = \"sum\"\n");
    let o = mdc(&["describe"], &cfg, tmp.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("horizon"), "{}", stderr(&o));
}

#[test]
fn unknown_key_exits_2() {
    let tmp = TempDir::new().unwrap();
    let text = read(config("markov.toml")).replace("symbol = 1", "symbol = 1\nsymbl = 1");
    let cfg = write_config(&tmp, "bad.toml", &text);
    let o = mdc(&["bounds"], &cfg, tmp.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("symbl"));
}

#[test]
fn missing_config_exits_2() {
    let o = Command::new(env!("CARGO_BIN_EXE_mdc")).arg("describe").env_remove("MDC_CONFIG").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn describe_warns_when_h_is_infeasible() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        &tmp,
        "table.toml",
        r#"
horizon = 3
alphabet = 2
sensitivity = [1.0, 1.0, 1.0]
[family]
kind = "table"
[[family.steps]]
table = [0.5, 0.5]
[[family.steps]]
context = [1]
table = [0.9, 0.1, 0.3, 0.7]
[[family.steps]]
context = [1, 2]
table = [0.9, 0.1, 0.3, 0.7, 0.5, 0.5, 0.2, 0.8]
[target]
kind = "sum"
"#,
    );
    let o = mdc(&["describe", "--budget", "2"], &cfg, tmp.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("warning"));
    let o = mdc(&["matrix", "--budget", "2"], &cfg, tmp.path());
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn matrix_csvs() {
    let tmp = TempDir::new().unwrap();
    let o = mdc(&["matrix"], &config("markov.toml"), tmp.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let h = read(tmp.path().join("H.csv"));
    let lines: Vec<&str> = h.lines().collect();
    assert_eq!(lines[0], "i,j,value");
    assert_eq!(lines.len(), 8);
    assert!(lines[1..].iter().enumerate().all(|(i, l)| *l == format!("{},{},0.7", i + 1, i + 2)));
    assert!(!h.contains('\r'));
    let g = read(tmp.path().join("gamma.csv"));
    assert!(g.contains("1,3,0.49\n"));
    assert!(stdout(&o).contains("H norms: l1 0.7 linf 0.7"));

    let o = mdc(&["matrix"], &config("independent.toml"), tmp.path());
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(read(tmp.path().join("H.csv")), "i,j,value\n");

    let o = mdc(&["matrix"], &config("tree.toml"), tmp.path());
    assert_eq!(o.status.code(), Some(0));
    let parents = [0, 1, 1, 2, 2, 3, 3];
    for line in read(tmp.path().join("H.csv")).lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let (i, j): (usize, usize) = (f[0].parse().unwrap(), f[1].parse().unwrap());
        assert_eq!(parents[j - 1], i);
        assert_eq!(f[2], "0.2");
    }
}

#[test]
fn bounds_tables() {
    let tmp = TempDir::new().unwrap();
    for (name, first) in [("independent.toml", "mdc"), ("markov.toml", "mdc"), ("window.toml", "mdc")] {
        let o = mdc(&["bounds", "--t", "0.5,1,2"], &config(name), tmp.path());
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        let csv = read(tmp.path().join("bounds.csv"));
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("bound,proxy,applicable,reason,t,delta"));
        assert!(lines.next().unwrap().starts_with(first));
        assert_eq!(csv.lines().count(), 1 + 9 * 3);
    }
    let s = stdout(&mdc(&["bounds"], &config("markov.toml"), tmp.path()));
    assert!(s.contains("divergent"));
    let csv = read(tmp.path().join("bounds.csv"));
    assert!(csv.contains("kontorovich,inf,false,"));
}

#[test]
fn verify_canonical_scenarios() {
    let tmp = TempDir::new().unwrap();
    for name in ["independent.toml", "markov.toml", "tree.toml", "window.toml"] {
        let o = mdc(&["verify", "--n-samples", "20000"], &config(name), tmp.path());
        assert_eq!(o.status.code(), Some(0), "{name}: {}\n{}", stdout(&o), stderr(&o));
        let csv = read(tmp.path().join("verify.csv"));
        assert!(csv.starts_with("check,k,j,observed,bound,slack,pass\n"));
        assert!(!csv.contains(",false"));
        let tail = read(tmp.path().join("tail.csv"));
        assert!(tail.starts_with("t,empirical,stderr,bound_name,bound_value,pass\n"));
    }
}

#[test]
fn verify_reports_bad_sensitivity() {
    let tmp = TempDir::new().unwrap();
    let o = mdc(&["verify"], &config("bad_sensitivity.toml"), tmp.path());
    assert_eq!(o.status.code(), Some(1));
    let csv = read(tmp.path().join("verify.csv"));
    let row = csv.lines().nth(1).unwrap();
    assert!(row.starts_with("sensitivity x="), "{row}");
    assert!(row.ends_with(",,2,1,0.5,-0.499999999,false"), "{row}");
}

#[test]
fn verify_budget_overrun_exits_3() {
    let tmp = TempDir::new().unwrap();
    let o = mdc(&["verify", "--budget", "50"], &config("markov.toml"), tmp.path());
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn verify_is_deterministic_and_env_overridable() {
    let tmp = TempDir::new().unwrap();
    let run = |seed: &str| {
        let o = Command::new(env!("CARGO_BIN_EXE_mdc"))
            .arg("verify")
            .arg("--config")
            .arg(config("markov.toml"))
            .arg("--out")
            .arg(tmp.path())
            .env("MDC_SEED", seed)
            .env("MDC_N_SAMPLES", "5000")
            .output()
            .unwrap();
        assert_eq!(o.status.code(), Some(0));
        (read(tmp.path().join("verify.csv")), read(tmp.path().join("tail.csv")))
    };
    let a = run("11");
    let b = run("11");
    let c = run("12");
    assert_eq!(a, b);
    assert_ne!(a.1, c.1);
}

#[test]
fn sweep_window() {
    let tmp = TempDir::new().unwrap();
    let o = mdc(&["sweep"], &config("sweep.toml"), tmp.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = read(tmp.path().join("sweep.csv"));
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("N,mdc_proxy,scalar_collapse_proxy,sparse_terminal_bound"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 5);
    for r in &rows {
        assert!(r[1] <= 25.0);
        assert!(r[2] >= r[0]);
    }
}

#[test]
fn sweep_without_dependence() {
    let tmp = TempDir::new().unwrap();
    let cfg = window(&tmp, 2, 0.0, "[10, 30]");
    let o = mdc(&["sweep"], &cfg, tmp.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(read(tmp.path().join("sweep.csv")), "N,mdc_proxy,scalar_collapse_proxy,sparse_terminal_bound\n10,1,10,1\n30,1,30,1\n");

    let cfg = window(&tmp, 2, 0.8, "[10]");
    let o = mdc(&["sweep"], &cfg, tmp.path());
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(read(tmp.path().join("sweep.csv")).lines().count(), 2);
}

#[test]
fn sweep_calibration_failure_exits_4() {
    let tmp = TempDir::new().unwrap();
    let cfg = window(&tmp, 1, 0.5, "[10]");
    let o = mdc(&["sweep"], &cfg, tmp.path());
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
}
