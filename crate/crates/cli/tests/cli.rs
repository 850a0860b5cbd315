use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_csi-market"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn column(table: &[Vec<String>], name: &str) -> Vec<f64> {
    let k = table[0].iter().position(|h| h == name).unwrap();
    table[1..].iter().map(|r| r[k].parse().unwrap()).collect()
}

#[test]
fn sweep_over_cost_reaches_bertrand_and_the_threshold() {
    let out = run(&["sweep", "--v", "11", "--c", "1", "--q1", "0.5", "--s1", "0", "--sweep", "s:0:3:13"]);
    assert!(out.status.success());
    let table = rows(&stdout(&out));
    let mut header = vec!["axis_value", "p1", "p2", "payoff1", "payoff2"];
    header.extend(csi_market_names());
    assert_eq!(table[0], header);
    let s = column(&table, "axis_value");
    let p = column(&table, "p1");
    assert_eq!(p[0], 1.0);
    for (s, p) in s.iter().zip(&p) {
        assert_eq!(*p == 0.0, *s >= 2.5, "s={s} p={p}");
    }
}

fn csi_market_names() -> Vec<&'static str> {
    vec![
        "p_tilde", "p_tilde_1", "p_tilde_2", "p_tilde_3", "L", "L_N", "L_0", "p_bar", "p_tilde_N",
        "p_tilde_1N",
    ]
}

#[test]
fn sweep_over_availability_has_the_mixing_window() {
    let out = run(&["sweep", "--v", "11", "--c", "1", "--q1", "0.5", "--s1", "2", "--sweep", "q:0.01:0.99:99"]);
    assert!(out.status.success());
    let table = rows(&stdout(&out));
    let q = column(&table, "axis_value");
    let p = column(&table, "p1");
    for (q, p) in q.iter().zip(&p) {
        if *q <= 0.27 || *q >= 0.73 {
            assert_eq!(*p, 0.0, "q={q}");
        }
    }
    let (k, top) = p.iter().enumerate().fold((0, 0.0), |a, (k, &x)| if x > a.1 { (k, x) } else { a });
    assert!((top - 0.35).abs() < 0.01 && (q[k] - 0.55).abs() < 0.011, "{top} at {}", q[k]);
}

#[test]
fn sweep_over_estimate_quality_switches_near_two_thirds() {
    let out = run(&[
        "sweep", "--v", "50", "--q1", "0.5", "--s1", "4", "--sweep", "qs:0.55:0.75:21", "--verify-each",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let table = rows(&stdout(&out));
    assert_eq!(table[0].last().unwrap(), "eps");
    let qs = column(&table, "axis_value");
    let p = column(&table, "p1");
    for (qs, p) in qs.iter().zip(&p) {
        assert_eq!(*p == 0.0, *qs <= 0.66 + 1e-9, "qs={qs}");
    }
    assert!(column(&table, "eps").iter().all(|e| *e <= 5e-4));
}

#[test]
fn output_is_byte_identical() {
    let args = [
        "sweep", "--v", "50", "--q1", "0.5", "--s1", "0", "--s2", "8", "--sweep", "s:0:10:6", "--rounds", "70000",
        "--seed", "7",
    ];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert!(!a.stdout.contains(&b'\r'));
    let header = rows(&stdout(&a))[0].clone();
    assert!(header.contains(&"sim_mean_price".to_string()));
    let sim = ["simulate", "--v", "50", "--q1", "0.5", "--s1", "4", "--qs", "0.8", "--rounds", "70000", "--seed", "3"];
    assert_eq!(run(&sim).stdout, run(&sim).stdout);
}

#[test]
fn exit_codes() {
    let code = |args: &[&str]| run(args).status.code().unwrap();
    assert_eq!(code(&["verify", "--v", "50", "--q1", "0.5", "--s1", "8", "--grid", "500"]), 0);
    assert_eq!(code(&["solve", "--v", "50", "--q1", "1.5", "--s1", "8"]), 1);
    assert_eq!(code(&["solve", "--v", "50", "--q1", "0.5", "--q2", "0.4", "--s1", "8", "--s2", "4"]), 1);
    assert_eq!(code(&["solve", "--q1", "0.5", "--s1", "8"]), 1);
    assert_eq!(code(&["solve", "--frobnicate"]), 1);
    assert_eq!(code(&["simulate", "--v", "50", "--q1", "0.5", "--s1", "8"]), 1);
    assert_eq!(code(&["sweep", "--v", "50", "--q1", "0.5", "--s1", "8", "--sweep", "s:0:1:1"]), 1);
    assert_eq!(code(&["verify", "--v", "50", "--q1", "0.6", "--s1", "5", "--n", "6", "--m", "3"]), 2);
    assert_eq!(code(&["verify", "--v", "50", "--q1", "0.5", "--s1", "8", "--eps=-1"]), 2);
    assert_eq!(code(&["dist", "--v", "50", "--q1", "0.5", "--s1", "8", "--out", "/nonexistent/dir/x.csv"]), 3);
    assert_eq!(code(&["solve", "--config", "/nonexistent/run.toml"]), 3);
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "v = 50\nq1 = 0.5\ns1 = 13\ngrid = 3\n").unwrap();
    let cfg = cfg.to_str().unwrap();
    let from_file = stdout(&run(&["dist", "--config", cfg]));
    assert!(from_file.lines().all(|l| !l.contains("Y1")), "{from_file}");
    let overridden = stdout(&run(&["dist", "--config", cfg, "--s1", "8"]));
    assert!(overridden.lines().any(|l| l.starts_with("1,Y1,16,")), "{overridden}");
}

#[test]
fn solve_writes_summary_and_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let status = run(&["solve", "--v", "50", "--q1", "0.5", "--s1", "8", "--out", out.to_str().unwrap()]).status;
    assert!(status.success());
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["payoffs"][0], 25.0);
    assert!((summary["p_acquire"][0].as_f64().unwrap() - 9.0 / 17.0).abs() < 1e-12);
    for name in ["cdf_p1_N.csv", "cdf_p1_Y1.csv", "cdf_p2_Y0.csv"] {
        let text = std::fs::read_to_string(out.join(name)).unwrap();
        assert!(text.starts_with("x,F\n"), "{name}");
        assert!(text.ends_with(",1\n"), "{name}");
    }
    assert!(!Path::new(&out.join("cdf_p1_Y2.csv")).exists());
}

#[test]
fn verify_reports_every_state() {
    let out = run(&["verify", "--v", "50", "--q1", "0.5", "--s1", "4", "--s2", "8", "--grid", "500"]);
    let table = rows(&stdout(&out));
    assert_eq!(table[0], ["primary", "scope", "current", "best_price", "best_value", "gain", "gain_upper"]);
    let scopes: Vec<&str> = table[1..].iter().map(|r| r[1].as_str()).collect();
    assert_eq!(scopes, ["N", "Y1", "Y0", "best:N", "N", "Y1", "Y0", "best:N", "epsilon"]);
}
