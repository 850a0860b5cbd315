//! Best-response checks for arbitrary strategy profiles.
//!
//! The opponent's posted-price law (given that both channels are free) is a
//! mixture of its three information-state distributions. Because every piece
//! shares the floor `c`, a deviating price earns a payoff that is linear in
//! `x` between the opponent's knots, and the payoff of a whole own
//! distribution integrates in closed form.

use serde::Serialize;

use crate::dist::PriceCdf;
use crate::equilibria::{EquilibriumProfile, InfoState, PrimaryStrategy};
use crate::error::{Error, Result};
use crate::market::{validate_params, MarketParams, Scenario};

/// Opponent's posted-price law conditioned on both channels being free.
#[derive(Debug, Clone)]
pub struct OpponentView {
    /// Opponent availability.
    pub q_opp: f64,
    pub qs: f64,
    pub posted: PriceCdf,
}

impl OpponentView {
    pub fn new(params: &MarketParams, me: usize, opp: &PrimaryStrategy) -> Result<Self> {
        let other = 1 - me;
        let qs = params.qs;
        let mut parts: Vec<(f64, &PriceCdf)> = Vec::new();
        let weights = [
            (InfoState::NoAcquire, 1.0 - opp.p_acquire),
            (InfoState::AcquiredEst1, opp.p_acquire * qs),
            (InfoState::AcquiredEst0, opp.p_acquire * (1.0 - qs)),
        ];
        for (info, w) in weights {
            if w > 0.0 {
                let cdf = opp.cdf(info).ok_or(Error::MissingCdf {
                    primary: other,
                    info: info.label(),
                })?;
                parts.push((w, cdf));
            }
        }
        Ok(OpponentView {
            q_opp: params.q[other],
            qs,
            posted: PriceCdf::mixture(&parts),
        })
    }

    /// Probability that the opponent's channel is free given `info`.
    pub fn posterior(&self, info: InfoState) -> f64 {
        let (q, qs) = (self.q_opp, self.qs);
        match info {
            InfoState::NoAcquire => q,
            InfoState::AcquiredEst1 => q * qs / (q * qs + (1.0 - q) * (1.0 - qs)),
            InfoState::AcquiredEst0 => {
                let num = q * (1.0 - qs);
                let den = num + (1.0 - q) * qs;
                if den == 0.0 {
                    0.0
                } else {
                    num / den
                }
            }
        }
    }

    /// Probability of reading "free" after acquiring.
    pub fn est1_probability(&self) -> f64 {
        self.q_opp * self.qs + (1.0 - self.q_opp) * (1.0 - self.qs)
    }

    pub fn win_probability(&self, info: InfoState, x: f64) -> f64 {
        1.0 - self.posterior(info) * self.posted.eval_tie_half(x)
    }

    /// Payoff of posting `x` in `info`, before the acquisition cost.
    pub fn gross(&self, info: InfoState, x: f64) -> f64 {
        (x - self.posted.c) * self.win_probability(info, x)
    }

    /// Expected gross payoff of pricing from `own` in `info`.
    pub fn gross_of_cdf(&self, info: InfoState, own: &PriceCdf) -> f64 {
        let c = own.c;
        let post = self.posterior(info);
        let atomic: f64 = own
            .atoms()
            .iter()
            .map(|&(x, m)| m * self.gross(info, x))
            .sum();
        let knots = self.posted.knots();
        let mut smooth = 0.0;
        for seg in own.segments.iter().filter(|s| s.b > 0.0 && s.hi > s.lo) {
            let mut cuts: Vec<f64> = knots
                .iter()
                .copied()
                .filter(|k| *k > seg.lo && *k < seg.hi)
                .collect();
            cuts.insert(0, seg.lo);
            cuts.push(seg.hi);
            for w in cuts.windows(2) {
                let (l, h) = (w[0] - c, w[1] - c);
                let (ga, gb) = self.posted.form_right_of(w[0]);
                let log_ratio = (h / l).ln();
                let inv_gap = (w[1] - w[0]) / (l * h);
                smooth += seg.b * ((1.0 - post * ga) * log_ratio + post * gb * inv_gap);
            }
        }
        atomic + smooth
    }
}

fn cost_of(params: &MarketParams, me: usize, info: InfoState) -> f64 {
    match info {
        InfoState::NoAcquire => 0.0,
        _ => params.s[me],
    }
}

/// Probability that `me` wins at price `x` in `info` against `opp`, given
/// `me` is free. An exact tie counts half.
pub fn win_probability(
    params: &MarketParams,
    me: usize,
    info: InfoState,
    x: f64,
    opp: &PrimaryStrategy,
) -> Result<f64> {
    Ok(OpponentView::new(params, me, opp)?.win_probability(info, x))
}

/// `(x - c) * win - s` (the cost only in the acquired states).
pub fn expected_payoff(
    params: &MarketParams,
    me: usize,
    info: InfoState,
    x: f64,
    opp: &PrimaryStrategy,
) -> Result<f64> {
    let view = OpponentView::new(params, me, opp)?;
    Ok(view.gross(info, x) - cost_of(params, me, info))
}

/// Expected payoff of a whole strategy given `me` is free.
pub fn strategy_payoff(
    params: &MarketParams,
    me: usize,
    own: &PrimaryStrategy,
    opp: &PrimaryStrategy,
) -> Result<f64> {
    let view = OpponentView::new(params, me, opp)?;
    let per_state = state_payoffs(params, me, own, &view)?;
    Ok(combine(own.p_acquire, view.est1_probability(), &per_state))
}

fn state_payoffs(
    params: &MarketParams,
    me: usize,
    own: &PrimaryStrategy,
    view: &OpponentView,
) -> Result<[Option<f64>; 3]> {
    let mut out = [None; 3];
    for (k, info) in InfoState::ALL.into_iter().enumerate() {
        if !own.reaches(info) {
            continue;
        }
        let cdf = own.cdf(info).ok_or(Error::MissingCdf {
            primary: me,
            info: info.label(),
        })?;
        out[k] = Some(view.gross_of_cdf(info, cdf) - cost_of(params, me, info));
    }
    Ok(out)
}

fn combine(p_acquire: f64, est1: f64, per_state: &[Option<f64>; 3]) -> f64 {
    let n = per_state[0].unwrap_or(0.0);
    let y = est1 * per_state[1].unwrap_or(0.0) + (1.0 - est1) * per_state[2].unwrap_or(0.0);
    (1.0 - p_acquire) * n + p_acquire * y
}

/// Candidate deviation prices: a uniform grid over `(c, v]` plus every
/// opponent knot and its neighbours at distance `1e-6 (v-c)`.
pub fn probe_grid(params: &MarketParams, view: &OpponentView, grid_size: usize) -> Vec<f64> {
    let (c, v) = (params.c, params.v);
    let delta = 1e-6 * params.span();
    let grid_size = grid_size.max(1);
    let mut xs: Vec<f64> = (1..=grid_size)
        .map(|j| c + params.span() * j as f64 / grid_size as f64)
        .collect();
    for k in view.posted.knots() {
        xs.extend([k - delta, k, k + delta]);
    }
    xs.extend([v, v - delta]);
    xs.retain(|x| *x > c && *x <= v);
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    xs
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StateOptimum {
    pub info: InfoState,
    pub price: f64,
    /// Best payoff found on the probe grid.
    pub value: f64,
    /// Rigorous upper bound on the supremum over all prices.
    pub upper: f64,
}

fn optimise_state(
    params: &MarketParams,
    me: usize,
    info: InfoState,
    view: &OpponentView,
    probes: &[f64],
) -> StateOptimum {
    let cost = cost_of(params, me, info);
    let post = view.posterior(info);
    let c = params.c;
    let mut best = (probes[0], f64::NEG_INFINITY);
    for &x in probes {
        let value = view.gross(info, x);
        if value > best.1 {
            best = (x, value);
        }
    }
    // On (a, b) the payoff is at most (b - c)(1 - post * F(a)).
    let mut upper = f64::NEG_INFINITY;
    let mut left = c;
    for &x in probes {
        let bound = (x - c) * (1.0 - post * view.posted.eval(left));
        upper = upper.max(bound);
        left = x;
    }
    StateOptimum {
        info,
        price: best.0,
        value: best.1 - cost,
        upper: upper.max(best.1) - cost,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Decision {
    NoAcquire,
    Acquire,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BestResponse {
    pub states: [StateOptimum; 3],
    /// Best value after deciding not to acquire.
    pub no_acquire: f64,
    /// Best value after acquiring, averaged over the estimate, net of cost.
    pub acquire: f64,
    pub no_acquire_upper: f64,
    pub acquire_upper: f64,
}

impl BestResponse {
    pub fn decision(&self) -> Decision {
        if self.acquire > self.no_acquire {
            Decision::Acquire
        } else {
            Decision::NoAcquire
        }
    }

    pub fn value(&self) -> f64 {
        self.acquire.max(self.no_acquire)
    }

    pub fn upper(&self) -> f64 {
        self.acquire_upper.max(self.no_acquire_upper)
    }
}

fn best_response_view(
    params: &MarketParams,
    me: usize,
    view: &OpponentView,
    grid_size: usize,
) -> BestResponse {
    let probes = probe_grid(params, view, grid_size);
    let states = InfoState::ALL.map(|info| optimise_state(params, me, info, view, &probes));
    let est1 = view.est1_probability();
    BestResponse {
        states,
        no_acquire: states[0].value,
        acquire: est1 * states[1].value + (1.0 - est1) * states[2].value,
        no_acquire_upper: states[0].upper,
        acquire_upper: est1 * states[1].upper + (1.0 - est1) * states[2].upper,
    }
}

/// Best pure deviation of `me` against `opp`, searched on the probe grid.
pub fn best_response(
    params: &MarketParams,
    me: usize,
    opp: &PrimaryStrategy,
    grid_size: usize,
) -> Result<BestResponse> {
    validate_params(params)?;
    let view = OpponentView::new(params, me, opp)?;
    Ok(best_response_view(params, me, &view, grid_size))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StateRow {
    pub info: InfoState,
    /// Payoff of the profile's own distribution in this state, if reached.
    pub current: Option<f64>,
    pub best_price: f64,
    pub best_value: f64,
    pub gain: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrimaryDeviation {
    pub primary: usize,
    pub rows: Vec<StateRow>,
    pub current: f64,
    pub best_decision: Decision,
    pub best_value: f64,
    /// Largest gain found on the probe grid.
    pub gain: f64,
    /// Gain bound valid for every price, not only the probes.
    pub gain_upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeviationReport {
    pub grid_size: usize,
    pub primaries: Vec<PrimaryDeviation>,
    /// Largest unilateral gain found on the probe grid.
    pub epsilon: f64,
    /// Upper bound on the largest unilateral gain; shrinks as the grid refines.
    pub epsilon_upper: f64,
}

/// Searches both primaries' pure deviations and reports the profile as an
/// epsilon-equilibrium. `params` and `profile` must use the same labelling.
pub fn certify_ne(
    params: &MarketParams,
    profile: &EquilibriumProfile,
    grid_size: usize,
) -> Result<DeviationReport> {
    validate_params(params)?;
    let mut primaries = Vec::with_capacity(2);
    for me in 0..2 {
        let own = &profile.strategies[me];
        let view = OpponentView::new(params, me, &profile.strategies[1 - me])?;
        let per_state = state_payoffs(params, me, own, &view)?;
        let current = combine(own.p_acquire, view.est1_probability(), &per_state);
        let br = best_response_view(params, me, &view, grid_size);
        let rows = InfoState::ALL
            .into_iter()
            .enumerate()
            .map(|(k, info)| StateRow {
                info,
                current: per_state[k],
                best_price: br.states[k].price,
                best_value: br.states[k].value,
                gain: per_state[k].map(|cur| br.states[k].value - cur),
            })
            .collect();
        primaries.push(PrimaryDeviation {
            primary: me,
            rows,
            current,
            best_decision: br.decision(),
            best_value: br.value(),
            gain: br.value() - current,
            gain_upper: br.upper() - current,
        });
    }
    let epsilon = primaries.iter().map(|d| d.gain).fold(f64::NEG_INFINITY, f64::max);
    let epsilon_upper = primaries
        .iter()
        .map(|d| d.gain_upper)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(DeviationReport {
        grid_size,
        primaries,
        epsilon,
        epsilon_upper,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub primary: Option<usize>,
    pub info: Option<InfoState>,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StructureReport {
    pub checks: Vec<Check>,
    /// `(primary, state, mass)` for every atom at the ceiling.
    pub ceiling_atoms: Vec<(usize, InfoState, f64)>,
}

impl StructureReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }
}

/// Qualitative shape checks: no atoms below the ceiling, the est-1 support
/// sits below the no-acquire support, supports have no holes, the est-1 law
/// has no ceiling atom, and symmetric markets mix with equal probability.
pub fn structural_checks(profile: &EquilibriumProfile) -> StructureReport {
    const TOL: f64 = 1e-9;
    let mut checks = Vec::new();
    let mut ceiling_atoms = Vec::new();
    for (me, st) in profile.strategies.iter().enumerate() {
        let reached: Vec<(InfoState, &PriceCdf)> = InfoState::ALL
            .into_iter()
            .filter(|i| st.reaches(*i))
            .filter_map(|i| st.cdf(i).map(|d| (i, d)))
            .collect();
        for &(info, d) in &reached {
            let low_atoms: Vec<(f64, f64)> = d
                .atoms()
                .into_iter()
                .filter(|(x, m)| *x < d.v && *m > TOL)
                .collect();
            checks.push(Check {
                name: "no_atom_below_ceiling",
                primary: Some(me),
                info: Some(info),
                passed: low_atoms.is_empty(),
                detail: format!("{low_atoms:?}"),
            });
            if d.jump_at_v > 0.0 {
                ceiling_atoms.push((me, info, d.jump_at_v));
            }
            let holes: Vec<(f64, f64)> = d
                .segments
                .windows(2)
                .filter(|w| (w[0].hi - w[1].lo).abs() > TOL * (d.v - d.c))
                .map(|w| (w[0].hi, w[1].lo))
                .chain(
                    d.segments
                        .iter()
                        .filter(|s| s.b == 0.0 && d.segments.len() > 1)
                        .map(|s| (s.lo, s.hi)),
                )
                .collect();
            checks.push(Check {
                name: "support_without_holes",
                primary: Some(me),
                info: Some(info),
                passed: holes.is_empty(),
                detail: format!("{holes:?}"),
            });
        }
        if st.reaches(InfoState::AcquiredEst1) {
            if let Some(d) = st.est1.as_ref() {
                checks.push(Check {
                    name: "est1_no_ceiling_atom",
                    primary: Some(me),
                    info: Some(InfoState::AcquiredEst1),
                    passed: d.jump_at_v <= TOL,
                    detail: format!("mass {}", d.jump_at_v),
                });
            }
        }
        if let (true, true, Some(y), Some(n)) = (
            st.reaches(InfoState::AcquiredEst1),
            st.reaches(InfoState::NoAcquire),
            st.est1.as_ref(),
            st.no_acquire.as_ref(),
        ) {
            let (y_top, n_low) = (y.support().1, n.support().0);
            checks.push(Check {
                name: "est1_below_no_acquire",
                primary: Some(me),
                info: None,
                passed: y_top <= n_low + TOL * (y.v - y.c),
                detail: format!("est-1 top {y_top}, no-acquire bottom {n_low}"),
            });
        }
        // The union of all supports must be one interval ending at v.
        let mut spans: Vec<(f64, f64)> = reached.iter().map(|(_, d)| d.support()).collect();
        spans.sort_by(|a, b| a.0.total_cmp(&b.0));
        let v = profile.strategies[me]
            .cdf(reached.first().map(|r| r.0).unwrap_or(InfoState::NoAcquire))
            .map(|d| d.v);
        if let (Some(v), Some(first)) = (v, spans.first()) {
            let mut reach = first.1;
            let mut gaps = Vec::new();
            for &(lo, hi) in &spans[1..] {
                if lo > reach + TOL * v.abs().max(1.0) {
                    gaps.push((reach, lo));
                }
                reach = reach.max(hi);
            }
            if reach < v - TOL * v.abs().max(1.0) {
                gaps.push((reach, v));
            }
            checks.push(Check {
                name: "joint_support_contiguous",
                primary: Some(me),
                info: None,
                passed: gaps.is_empty(),
                detail: format!("{gaps:?}"),
            });
        }
    }
    if matches!(
        profile.regime.scenario,
        Scenario::Basic | Scenario::EstimationError
    ) {
        let [p1, p2] = profile.p_acquire();
        checks.push(Check {
            name: "equal_mixing",
            primary: None,
            info: None,
            passed: (p1 - p2).abs() <= 1e-12,
            detail: format!("{p1} vs {p2}"),
        });
    }
    StructureReport {
        checks,
        ceiling_atoms,
    }
}
