use std::fs;
use std::io::Write;
use std::path::Path;

use csi_market::equilibria::ENDPOINT_NAMES;
use csi_market::extensions::{n_primary_payoff_checks, simulate_all_acquire};
use csi_market::verifier::Decision;
use csi_market::{
    certify_ne, simulate, solve, structural_checks, validate_params, EquilibriumProfile, InfoState,
    MarketParams, PriceCdf, SimStats,
};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{Settings, Sweep};
use crate::number::{g12, opt};
use crate::Failure;

const DEFAULT_ROUNDS: u64 = 1_000_000;
const DEFAULT_GRID: usize = 10_000;
const DEFAULT_TABLE_ROWS: usize = 201;

fn io(path: &Path, e: std::io::Error) -> Failure {
    Failure::Io(format!("{}: {e}", path.display()))
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, bytes).map_err(|e| io(path, e)),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(bytes)
                .and_then(|_| stdout.flush())
                .map_err(|e| Failure::Io(format!("stdout: {e}")))
        }
    }
}

fn csv_bytes(header: &[&str], rows: &[Vec<String>]) -> Vec<u8> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(header).expect("writing to memory");
    for row in rows {
        w.write_record(row).expect("writing to memory");
    }
    w.into_inner().expect("writing to memory")
}

fn json_bytes(value: &Value) -> Vec<u8> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    text.into_bytes()
}

fn reached(ne: &EquilibriumProfile) -> Vec<(usize, InfoState, &PriceCdf)> {
    let mut out = Vec::new();
    for (me, st) in ne.strategies.iter().enumerate() {
        for info in InfoState::ALL {
            if let Some(d) = st.cdf(info).filter(|_| st.reaches(info)) {
                out.push((me, info, d));
            }
        }
    }
    out
}

fn is_n_primary(p: &MarketParams) -> bool {
    p.n > 2
}

pub fn solve_cmd(cfg: &Settings) -> Result<(), Failure> {
    let p = cfg.params()?;
    if is_n_primary(&p) {
        let val = validate_params(&p)?;
        let checks = n_primary_payoff_checks(&p)?;
        let summary = json!({
            "params": val.params,
            "scenario": val.scenario,
            "all_acquire": checks,
        });
        return match &cfg.out {
            Some(dir) => {
                fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
                emit(Some(&dir.join("summary.json")), &json_bytes(&summary))
            }
            None => emit(None, &json_bytes(&summary)),
        };
    }
    let ne = solve(&p)?;
    let rows = cfg.grid.unwrap_or(DEFAULT_TABLE_ROWS);
    let distributions: Vec<Value> = reached(&ne)
        .into_iter()
        .map(|(me, info, d)| {
            json!({
                "primary": me + 1,
                "info": info.label(),
                "support": d.support(),
                "jump_at_v": d.jump_at_v,
                "mean": d.mean(),
                "segments": d.segments,
            })
        })
        .collect();
    let thresholds: serde_json::Map<String, Value> = ne
        .regime
        .thresholds
        .iter()
        .map(|(name, t)| (name.to_string(), json!(t)))
        .collect();
    let summary = json!({
        "params": p,
        "scenario": ne.regime.scenario,
        "band": ne.regime.band,
        "thresholds": thresholds,
        "swapped": ne.swapped,
        "p_acquire": ne.p_acquire(),
        "payoffs": ne.payoffs,
        "endpoints": ne.endpoints,
        "distributions": distributions,
    });
    let Some(dir) = &cfg.out else {
        return emit(None, &json_bytes(&summary));
    };
    fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    emit(Some(&dir.join("summary.json")), &json_bytes(&summary))?;
    for (me, info, d) in reached(&ne) {
        let table: Vec<Vec<String>> = d
            .tabulate(rows)
            .into_iter()
            .map(|(x, f)| vec![g12(x), g12(f)])
            .collect();
        let name = format!("cdf_p{}_{}.csv", me + 1, info.label());
        emit(Some(&dir.join(name)), &csv_bytes(&["x", "F"], &table))?;
    }
    Ok(())
}

fn sim_rows(st: &SimStats, ne: &EquilibriumProfile) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    let mut push = |scope: &str, stat: &str, value: String| {
        rows.push(vec![scope.to_string(), stat.to_string(), value]);
    };
    push("market", "rounds", st.rounds.to_string());
    push("market", "seed", st.seed.to_string());
    push("market", "sale_rounds", st.sale_rounds.to_string());
    push("market", "sale_fraction", g12(st.sale_fraction));
    push("market", "mean_price", g12(st.mean_price));
    push("market", "mean_price_se", g12(st.mean_price_se));
    push("market", "price_variance", g12(st.price_variance));
    for (me, pr) in st.primaries.iter().enumerate() {
        let scope = format!("primary{}", me + 1);
        push(&scope, "available_rounds", pr.available_rounds.to_string());
        push(&scope, "mean_payoff", g12(pr.mean_payoff));
        push(&scope, "payoff_se", g12(pr.payoff_se));
        push(&scope, "analytic_payoff", g12(ne.payoffs[me]));
        push(&scope, "unconditional_payoff", g12(pr.unconditional_payoff));
        push(&scope, "unconditional_se", g12(pr.unconditional_se));
        push(&scope, "sale_frequency", g12(pr.sale_frequency));
        push(&scope, "acquire_frequency", g12(pr.acquire_frequency));
        push(&scope, "acquire_se", g12(pr.acquire_se));
        push(&scope, "analytic_p_acquire", g12(ne.strategies[me].p_acquire));
        push(&scope, "estimate_correct_frequency", g12(pr.estimate_correct_frequency));
        for cell in &pr.by_state {
            let scope = format!("primary{}/{}", me + 1, cell.info.label());
            push(&scope, "rounds", cell.rounds.to_string());
            push(&scope, "mean_payoff", g12(cell.mean_payoff));
            push(&scope, "payoff_se", g12(cell.payoff_se));
        }
    }
    rows
}

pub fn simulate_cmd(cfg: &Settings) -> Result<(), Failure> {
    let p = cfg.params()?;
    let seed = cfg.seed()?;
    let rounds = cfg.rounds.unwrap_or(DEFAULT_ROUNDS);
    let header = ["scope", "statistic", "value"];
    if is_n_primary(&p) {
        let sim = simulate_all_acquire(&p, rounds, seed)?;
        let checks = n_primary_payoff_checks(&p)?;
        let rows = vec![
            vec!["all_acquire".into(), "rounds".into(), sim.rounds.to_string()],
            vec!["all_acquire".into(), "samples".into(), sim.samples.to_string()],
            vec!["all_acquire".into(), "mean_payoff".into(), g12(sim.mean_payoff)],
            vec!["all_acquire".into(), "payoff_se".into(), g12(sim.payoff_se)],
            vec!["all_acquire".into(), "analytic_payoff".into(), g12(checks.all_acquire_payoff)],
        ];
        return emit(cfg.out.as_deref(), &csv_bytes(&header, &rows));
    }
    let ne = solve(&p)?;
    let st = simulate(&p, &ne.strategies, rounds, seed)?;
    emit(cfg.out.as_deref(), &csv_bytes(&header, &sim_rows(&st, &ne)))
}

fn decision_label(d: Decision) -> &'static str {
    match d {
        Decision::NoAcquire => "N",
        Decision::Acquire => "Y",
    }
}

pub fn verify_cmd(cfg: &Settings) -> Result<(), Failure> {
    let p = cfg.params()?;
    let bound = cfg.eps.unwrap_or(1e-6 * p.span());
    let header = ["primary", "scope", "current", "best_price", "best_value", "gain", "gain_upper"];
    if is_n_primary(&p) {
        let checks = n_primary_payoff_checks(&p)?;
        let rows = vec![vec![
            "all".into(),
            "all_acquire".into(),
            g12(checks.all_acquire_payoff),
            g12(p.v),
            g12(checks.deviation_payoff),
            g12(checks.deviation_gain),
            String::new(),
        ]];
        emit(cfg.out.as_deref(), &csv_bytes(&header, &rows))?;
        return settle(checks.deviation_gain, bound);
    }
    let ne = solve(&p)?;
    let report = certify_ne(&p, &ne, cfg.grid.unwrap_or(DEFAULT_GRID))?;
    let mut rows = Vec::new();
    for dev in &report.primaries {
        let who = (dev.primary + 1).to_string();
        for row in &dev.rows {
            rows.push(vec![
                who.clone(),
                row.info.label().into(),
                opt(row.current),
                g12(row.best_price),
                g12(row.best_value),
                opt(row.gain),
                String::new(),
            ]);
        }
        rows.push(vec![
            who,
            format!("best:{}", decision_label(dev.best_decision)),
            g12(dev.current),
            String::new(),
            g12(dev.best_value),
            g12(dev.gain),
            g12(dev.gain_upper),
        ]);
    }
    rows.push(vec![
        "all".into(),
        "epsilon".into(),
        String::new(),
        String::new(),
        String::new(),
        g12(report.epsilon),
        g12(report.epsilon_upper),
    ]);
    emit(cfg.out.as_deref(), &csv_bytes(&header, &rows))?;
    let shape = structural_checks(&ne);
    for c in shape.failures() {
        eprintln!("structure check {} failed: {}", c.name, c.detail);
    }
    settle(report.epsilon, bound)
}

fn settle(epsilon: f64, bound: f64) -> Result<(), Failure> {
    if epsilon <= bound {
        eprintln!("verified: eps {} <= {}", g12(epsilon), g12(bound));
        Ok(())
    } else {
        Err(Failure::Verify(format!("eps {} exceeds {}", g12(epsilon), g12(bound))))
    }
}

struct SweepRow {
    x: f64,
    ne: EquilibriumProfile,
    eps: Option<(f64, f64)>,
    sim: Option<SimStats>,
}

pub fn sweep_cmd(cfg: &Settings) -> Result<(), Failure> {
    let base = cfg.params()?;
    if is_n_primary(&base) {
        return Err(Failure::Usage("sweep needs exactly two primaries".into()));
    }
    let axis = Sweep::parse(
        cfg.sweep
            .as_deref()
            .ok_or_else(|| Failure::Usage("--sweep is required".into()))?,
    )?;
    let seed = cfg.rounds.map(|_| cfg.seed()).transpose()?;
    let grid = cfg.grid.unwrap_or(DEFAULT_GRID);
    let rows: Vec<Result<SweepRow, Failure>> = axis
        .values()
        .into_par_iter()
        .map(|x| {
            let p = axis.apply(&base, x);
            let ne = solve(&p)?;
            let eps = if cfg.verify_each {
                let bound = cfg.eps.unwrap_or(1e-5 * p.span());
                Some((certify_ne(&p, &ne, grid)?.epsilon, bound))
            } else {
                None
            };
            let sim = match (cfg.rounds, seed) {
                (Some(rounds), Some(seed)) => Some(simulate(&p, &ne.strategies, rounds, seed)?),
                _ => None,
            };
            Ok(SweepRow { x, ne, eps, sim })
        })
        .collect();
    let rows: Vec<SweepRow> = rows.into_iter().collect::<Result<_, _>>()?;

    let mut header: Vec<&str> = vec!["axis_value", "p1", "p2", "payoff1", "payoff2"];
    header.extend(ENDPOINT_NAMES);
    if cfg.verify_each {
        header.push("eps");
    }
    if cfg.rounds.is_some() {
        header.extend([
            "sim_payoff1",
            "sim_payoff1_se",
            "sim_payoff2",
            "sim_payoff2_se",
            "sim_mean_price",
            "sim_mean_price_se",
            "sim_price_variance",
        ]);
    }
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let [p1, p2] = r.ne.p_acquire();
            let mut line = vec![g12(r.x), g12(p1), g12(p2), g12(r.ne.payoffs[0]), g12(r.ne.payoffs[1])];
            line.extend(ENDPOINT_NAMES.iter().map(|name| opt(r.ne.endpoint(name))));
            if let Some((eps, _)) = r.eps {
                line.push(g12(eps));
            }
            if let Some(st) = &r.sim {
                line.extend([
                    g12(st.primaries[0].mean_payoff),
                    g12(st.primaries[0].payoff_se),
                    g12(st.primaries[1].mean_payoff),
                    g12(st.primaries[1].payoff_se),
                    g12(st.mean_price),
                    g12(st.mean_price_se),
                    g12(st.price_variance),
                ]);
            }
            line
        })
        .collect();
    emit(cfg.out.as_deref(), &csv_bytes(&header, &table))?;
    let failed: Vec<String> = rows
        .iter()
        .filter_map(|r| r.eps.filter(|(e, b)| e > b).map(|(e, _)| format!("{}: eps {}", g12(r.x), g12(e))))
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Verify(format!("rows failed certification: {}", failed.join("; "))))
    }
}

pub fn dist_cmd(cfg: &Settings) -> Result<(), Failure> {
    let p = cfg.params()?;
    if is_n_primary(&p) {
        return Err(Failure::Usage("dist needs exactly two primaries".into()));
    }
    let ne = solve(&p)?;
    let rows_per = cfg.grid.unwrap_or(DEFAULT_TABLE_ROWS);
    let mut rows = Vec::new();
    for (me, info, d) in reached(&ne) {
        for (x, f) in d.tabulate(rows_per) {
            rows.push(vec![(me + 1).to_string(), info.label().into(), g12(x), g12(f)]);
        }
    }
    emit(cfg.out.as_deref(), &csv_bytes(&["primary", "info", "x", "F"], &rows))
}
