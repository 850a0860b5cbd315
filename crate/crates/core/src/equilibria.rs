//! Closed-form equilibrium profiles for the two-primary market.
//!
//! Each constructor validates its parameters, works in canonical order and
//! maps the result back to the caller's labelling. Endpoint names always
//! refer to the canonical labelling.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::dist::{HyperbolicSegment, PriceCdf};
use crate::error::{Error, Result};
use crate::market::{thresholds, validate_params, CostBand, MarketParams, Regime, Scenario};

/// What a primary knows when it posts its price.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum InfoState {
    NoAcquire,
    AcquiredEst1,
    AcquiredEst0,
}

impl InfoState {
    pub const ALL: [InfoState; 3] = [
        InfoState::NoAcquire,
        InfoState::AcquiredEst1,
        InfoState::AcquiredEst0,
    ];

    pub fn label(self) -> &'static str {
        match self {
            InfoState::NoAcquire => "N",
            InfoState::AcquiredEst1 => "Y1",
            InfoState::AcquiredEst0 => "Y0",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrimaryStrategy {
    /// Probability of acquiring the competitor's state when free.
    pub p_acquire: f64,
    pub no_acquire: Option<PriceCdf>,
    pub est1: Option<PriceCdf>,
    pub est0: Option<PriceCdf>,
}

impl PrimaryStrategy {
    /// Never acquire; price from `cdf`.
    pub fn never_acquire(cdf: PriceCdf) -> Self {
        PrimaryStrategy {
            p_acquire: 0.0,
            no_acquire: Some(cdf),
            est1: None,
            est0: None,
        }
    }

    /// Always acquire; price from `est1` or `est0` by the estimate.
    pub fn always_acquire(est1: PriceCdf, est0: PriceCdf) -> Self {
        PrimaryStrategy {
            p_acquire: 1.0,
            no_acquire: None,
            est1: Some(est1),
            est0: Some(est0),
        }
    }

    pub fn cdf(&self, info: InfoState) -> Option<&PriceCdf> {
        match info {
            InfoState::NoAcquire => self.no_acquire.as_ref(),
            InfoState::AcquiredEst1 => self.est1.as_ref(),
            InfoState::AcquiredEst0 => self.est0.as_ref(),
        }
    }

    /// Whether the strategy can end up in `info`.
    pub fn reaches(&self, info: InfoState) -> bool {
        match info {
            InfoState::NoAcquire => self.p_acquire < 1.0,
            _ => self.p_acquire > 0.0,
        }
    }
}

/// Endpoint names in the column order used by tabular output.
pub const ENDPOINT_NAMES: [&str; 10] = [
    "p_tilde",
    "p_tilde_1",
    "p_tilde_2",
    "p_tilde_3",
    "L",
    "L_N",
    "L_0",
    "p_bar",
    "p_tilde_N",
    "p_tilde_1N",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumProfile {
    pub regime: Regime,
    pub strategies: [PrimaryStrategy; 2],
    /// Expected payoff of each primary given its channel is free.
    pub payoffs: [f64; 2],
    /// Support knots and pricing parameters, keyed by canonical name.
    pub endpoints: BTreeMap<String, f64>,
    /// True when primary labels were exchanged for the computation.
    pub swapped: bool,
}

impl EquilibriumProfile {
    pub fn p_acquire(&self) -> [f64; 2] {
        [self.strategies[0].p_acquire, self.strategies[1].p_acquire]
    }

    pub fn endpoint(&self, name: &str) -> Option<f64> {
        self.endpoints.get(name).copied()
    }

    fn unswap(mut self) -> Self {
        if self.swapped {
            self.strategies.swap(0, 1);
            self.payoffs.swap(0, 1);
        }
        self
    }
}

fn consistency(what: &str, closed: f64, raw: f64, span: f64) -> Result<()> {
    let tol = 1e-9 * span.max(1.0);
    if (closed - raw).abs() > tol || !closed.is_finite() {
        return Err(Error::InternalConsistency(format!(
            "{what}: closed form {closed} vs defining equation {raw}"
        )));
    }
    Ok(())
}

struct Builder {
    c: f64,
    v: f64,
    endpoints: BTreeMap<String, f64>,
}

impl Builder {
    fn new(p: &MarketParams) -> Self {
        Builder {
            c: p.c,
            v: p.v,
            endpoints: BTreeMap::new(),
        }
    }

    fn mark(&mut self, name: &str, value: f64) {
        self.endpoints.insert(name.to_string(), value);
    }

    fn cdf(&self, segments: Vec<HyperbolicSegment>) -> PriceCdf {
        let last = segments.last().expect("at least one piece");
        let top = last.eval(last.hi, self.c);
        let jump = if last.hi >= self.v { 1.0 - top } else { 0.0 };
        // rounding residue is not an atom
        let jump = if jump.abs() < 1e-12 { 0.0 } else { jump };
        PriceCdf::new(self.c, self.v, segments, jump)
    }

    fn at_v(&self) -> PriceCdf {
        PriceCdf::point_mass_at_v(self.c, self.v)
    }
}

fn require(params: &MarketParams, allowed: &[Scenario]) -> Result<(MarketParams, Regime, bool)> {
    let val = validate_params(params)?;
    if !allowed.contains(&val.scenario) {
        return Err(Error::ScenarioMismatch {
            expected: allowed[0],
            found: val.scenario,
        });
    }
    let regime = thresholds(&val.params)?;
    Ok((val.params, regime, val.swapped))
}

/// Both primaries skip acquisition and price from `(1/q)(1 - a/(x-c))` on
/// `[c + a, v]` where `a = (v-c)(1-q)`.
fn symmetric_pure_n(p: &MarketParams, regime: Regime) -> EquilibriumProfile {
    let q = p.q[0];
    let base = p.span() * (1.0 - q);
    let mut b = Builder::new(p);
    b.mark("p_tilde", p.c + base);
    let phi = b.cdf(vec![HyperbolicSegment::scaled(p.c + base, p.v, 1.0 / q, base, 0.0)]);
    let strategy = PrimaryStrategy::never_acquire(phi);
    EquilibriumProfile {
        regime,
        strategies: [strategy.clone(), strategy],
        payoffs: [base, base],
        endpoints: b.endpoints,
        swapped: false,
    }
}

/// Acquisition probability in the symmetric market with perfect estimates.
pub fn basic_mix_probability(p: &MarketParams) -> f64 {
    let q = p.q[0];
    let t = q * p.span() * (1.0 - q);
    let s = p.s[0];
    if s >= t {
        0.0
    } else {
        (t - s) / (t - s * q)
    }
}

/// Symmetric market, perfect estimates.
pub fn ne_basic(params: &MarketParams) -> Result<EquilibriumProfile> {
    let (p, regime, _) = require(params, &[Scenario::Basic])?;
    basic_from(&p, regime)
}

fn basic_from(p: &MarketParams, regime: Regime) -> Result<EquilibriumProfile> {
    if regime.band == CostBand::PureN {
        return Ok(symmetric_pure_n(p, regime));
    }
    let (q, s, c, v, span) = (p.q[0], p.s[0], p.c, p.v, p.span());
    let base = span * (1.0 - q);
    let mix = basic_mix_probability(p);
    let low = base * (1.0 - mix) / (1.0 - q * mix);
    let high = base / (1.0 - q * mix);
    consistency("acquire indifference", q * low + (1.0 - q) * span - s, base, span)?;
    consistency("est-1 support top", low, high * (1.0 - mix), span)?;

    let mut b = Builder::new(p);
    b.mark("p_tilde_1", c + low);
    b.mark("p_tilde_2", c + high);
    let est1 = b.cdf(vec![HyperbolicSegment::scaled(c + low, c + high, 1.0 / mix, low, 0.0)]);
    let no_acquire = (mix < 1.0).then(|| {
        b.cdf(vec![HyperbolicSegment::scaled(
            c + high,
            v,
            1.0 / (q * (1.0 - mix)),
            base,
            q * mix,
        )])
    });
    let strategy = PrimaryStrategy {
        p_acquire: mix,
        no_acquire,
        est1: Some(est1),
        est0: Some(b.at_v()),
    };
    Ok(EquilibriumProfile {
        regime,
        strategies: [strategy.clone(), strategy],
        payoffs: [base, base],
        endpoints: b.endpoints,
        swapped: false,
    })
}

/// Knots of the noisy-estimate equilibrium as distances above `c`.
#[derive(Debug, Clone, Copy)]
struct NoisyKnots {
    est1_low: f64,
    payoff: f64,
    top_n: f64,
    low_n: f64,
    est0_anchor: f64,
}

fn noisy_knots(span: f64, q: f64, qs: f64, mix: f64) -> NoisyKnots {
    let est0_prob = q * (1.0 - qs) + qs * (1.0 - q);
    let est1_prob = q * qs + (1.0 - q) * (1.0 - qs);
    let stay = 1.0 - (1.0 - mix) * q - mix * q * qs;
    let est0_anchor = span * (1.0 - q) * qs / est0_prob;
    let payoff = span * (1.0 - q) * qs * stay / (mix * q * (1.0 - qs).powi(2) + qs * (1.0 - q));
    let top_n = payoff / stay;
    let low_n = payoff / (1.0 - mix * q * qs);
    let est1_low = low_n * (q * qs * (1.0 - mix * qs) + (1.0 - q) * (1.0 - qs)) / est1_prob;
    NoisyKnots {
        est1_low,
        payoff,
        top_n,
        low_n,
        est0_anchor,
    }
}

/// Residual of the mixing condition in reduced form; increasing in `mix`.
fn noisy_residual(span: f64, q: f64, qs: f64, s: f64, mix: f64) -> f64 {
    let k = noisy_knots(span, q, qs, mix);
    let pass = (q * qs * (1.0 - mix * qs) + (1.0 - q) * (1.0 - qs)) / (1.0 - mix * q * qs);
    k.payoff * (1.0 - pass) - (span * (1.0 - q) * qs - s)
}

/// Unreduced indifference condition between acquiring and not:
/// expected est-1 and est-0 margins net of the cost minus the no-acquire
/// margin. Zero at the equilibrium mixing probability.
pub fn error_mixing_residual(params: &MarketParams, mix: f64) -> f64 {
    let (q, qs, s, span) = (params.q[0], params.qs, params.s[0], params.span());
    let k = noisy_knots(span, q, qs, mix);
    let est1_prob = q * qs + (1.0 - q) * (1.0 - qs);
    let est0_prob = q * (1.0 - qs) + qs * (1.0 - q);
    k.est1_low * est1_prob + k.est0_anchor * est0_prob - s - k.payoff
}

/// Acquisition probability with noisy estimates, by bisection on
/// `[1e-12, 1 - 1e-12]` to a residual of `1e-10 (v-c)`. Zero when acquisition
/// does not pay at any probability.
pub fn solve_error_mixing(params: &MarketParams) -> Result<f64> {
    let val = validate_params(params)?;
    let p = val.params;
    if !matches!(val.scenario, Scenario::Basic | Scenario::EstimationError) {
        return Err(Error::ScenarioMismatch {
            expected: Scenario::EstimationError,
            found: val.scenario,
        });
    }
    let (q, qs, s, span) = (p.q[0], p.qs, p.s[0], p.span());
    if qs == 1.0 {
        return Ok(basic_mix_probability(&p));
    }
    if s == 0.0 {
        return Ok(1.0);
    }
    let f = |mix: f64| noisy_residual(span, q, qs, s, mix);
    let tol = 1e-10 * span;
    let (mut lo, mut hi) = (1e-12, 1.0 - 1e-12);
    let (f_lo, f_hi) = (f(lo), f(hi));
    if f_lo >= -tol {
        // cost at or above the threshold up to rounding
        return Ok(0.0);
    }
    if f_hi.abs() <= tol {
        return Ok(hi);
    }
    if f_lo > 0.0 || f_hi < 0.0 {
        return Err(Error::NoRoot);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let r = f(mid);
        if r.abs() <= tol * 1e-3 || hi - lo <= f64::EPSILON {
            return Ok(mid);
        }
        if r < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mid = 0.5 * (lo + hi);
    if f(mid).abs() <= tol {
        Ok(mid)
    } else {
        Err(Error::NoRoot)
    }
}

/// Symmetric market with noisy estimates. Perfect estimates fall through to
/// [`ne_basic`].
pub fn ne_estimation_error(params: &MarketParams) -> Result<EquilibriumProfile> {
    let (p, regime, _) = require(params, &[Scenario::EstimationError, Scenario::Basic])?;
    if p.qs == 1.0 {
        return basic_from(&p, regime);
    }
    if regime.band == CostBand::PureN {
        return Ok(symmetric_pure_n(&p, regime));
    }
    let (q, qs, s, c, v, span) = (p.q[0], p.qs, p.s[0], p.c, p.v, p.span());
    let mix = solve_error_mixing(&p)?;
    if mix == 0.0 {
        let regime = Regime {
            band: CostBand::PureN,
            ..regime
        };
        return Ok(symmetric_pure_n(&p, regime));
    }
    let k = noisy_knots(span, q, qs, mix);
    let est1_prob = q * qs + (1.0 - q) * (1.0 - qs);
    let est0_prob = q * (1.0 - qs) + qs * (1.0 - q);

    consistency(
        "acquire indifference",
        k.est1_low * est1_prob + k.est0_anchor * est0_prob - s,
        k.payoff,
        span,
    )?;
    consistency(
        "N/est-0 boundary",
        k.top_n,
        k.est0_anchor * est0_prob / (qs * (1.0 - q) + mix * q * (1.0 - qs).powi(2)),
        span,
    )?;

    let scale1 = est1_prob / (mix * q * qs * qs);
    let scale0 = est0_prob / (mix * q * (1.0 - qs).powi(2));
    let shift0 = (mix * q * (1.0 - qs) * qs + (1.0 - mix) * q * (1.0 - qs)) / est0_prob;

    let mut b = Builder::new(&p);
    b.mark("p_tilde_1", c + k.est1_low);
    b.mark("p_tilde_2", c + k.payoff);
    b.mark("p_tilde_3", c + k.est0_anchor);
    b.mark("L_N", c + k.low_n);
    b.mark("L_0", c + k.top_n);
    let est1 = b.cdf(vec![HyperbolicSegment::scaled(
        c + k.est1_low,
        c + k.low_n,
        scale1,
        k.est1_low,
        0.0,
    )]);
    let no_acquire = (mix < 1.0).then(|| {
        b.cdf(vec![HyperbolicSegment::scaled(
            c + k.low_n,
            c + k.top_n,
            1.0 / ((1.0 - mix) * q),
            k.payoff,
            mix * q * qs,
        )])
    });
    let est0 = b.cdf(vec![HyperbolicSegment::scaled(
        c + k.top_n,
        v,
        scale0,
        k.est0_anchor,
        shift0,
    )]);
    let strategy = PrimaryStrategy {
        p_acquire: mix,
        no_acquire,
        est1: Some(est1),
        est0: Some(est0),
    };
    Ok(EquilibriumProfile {
        regime,
        strategies: [strategy.clone(), strategy],
        payoffs: [k.payoff, k.payoff],
        endpoints: b.endpoints,
        swapped: false,
    })
}

/// Mixing probability of the cheaper primary when only it acquires.
pub fn one_sided_cost_mix(span: f64, q: f64, s_low: f64) -> f64 {
    let base = span * (1.0 - q);
    (1.0 / q) * (1.0 - base * (1.0 - q) / (base - s_low))
}

/// Mixing probability of a primary with cost `s` when both acquire.
pub fn both_mix_cost_mix(span: f64, q: f64, s: f64) -> f64 {
    let t = q * span * (1.0 - q);
    (t - s) / (t - q * s)
}

/// Equal availability, different acquisition costs, perfect estimates.
pub fn ne_unequal_costs(params: &MarketParams) -> Result<EquilibriumProfile> {
    let (p, regime, swapped) = require(params, &[Scenario::UnequalCosts])?;
    let (q, c, v, span) = (p.q[0], p.c, p.v, p.span());
    let (s1, s2) = (p.s[0], p.s[1]);
    let base = span * (1.0 - q);
    let profile = match regime.band {
        CostBand::PureN => symmetric_pure_n(&p, regime),
        CostBand::OneSidedMix => {
            let mix = both_mix_cost_mix(span, q, s1);
            consistency("mixing probability", mix, one_sided_cost_mix(span, q, s1), span)?;
            let top_y = base / (1.0 - q * mix);
            consistency("est-1 support top", top_y, (base - s1) / (1.0 - q), span)?;
            let rival_anchor = base + q * base - s1;

            let mut b = Builder::new(&p);
            b.mark("p_tilde", c + base);
            b.mark("p_tilde_1", c + top_y);
            b.mark("p_tilde_N", c + rival_anchor);
            let est1 = b.cdf(vec![HyperbolicSegment::scaled(
                c + base,
                c + top_y,
                1.0 / (q * mix),
                base,
                0.0,
            )]);
            let no_acquire = (mix < 1.0).then(|| {
                b.cdf(vec![HyperbolicSegment::scaled(
                    c + top_y,
                    v,
                    1.0 / (q * (1.0 - mix)),
                    base,
                    q * mix,
                )])
            });
            let rival = b.cdf(vec![
                HyperbolicSegment::scaled(c + base, c + top_y, 1.0, base, 0.0),
                HyperbolicSegment::scaled(c + top_y, v, 1.0 / q, rival_anchor, 0.0),
            ]);
            EquilibriumProfile {
                regime,
                strategies: [
                    PrimaryStrategy {
                        p_acquire: mix,
                        no_acquire,
                        est1: Some(est1),
                        est0: Some(b.at_v()),
                    },
                    PrimaryStrategy::never_acquire(rival),
                ],
                payoffs: [base + q * base - s1, base],
                endpoints: b.endpoints,
                swapped,
            }
        }
        CostBand::BothMix => {
            let mix1 = both_mix_cost_mix(span, q, s1);
            let mix2 = both_mix_cost_mix(span, q, s2);
            let floor = s2 / q;
            let top2 = base / (1.0 - mix2 * q);
            let top1 = base / (1.0 - mix1 * q);
            consistency("est-1 top (primary 2)", top2, (base - s2) / (1.0 - q), span)?;
            consistency("est-1 top (primary 1)", top1, (base - s1) / (1.0 - q), span)?;
            consistency("est-1 floor", floor, top2 * (1.0 - mix2), span)?;
            let n_anchor = base + s2 - s1;

            let mut b = Builder::new(&p);
            b.mark("L", c + floor);
            b.mark("p_tilde_2", c + top2);
            b.mark("p_tilde_1", c + top1);
            b.mark("p_tilde_1N", c + n_anchor);
            let est1_first = b.cdf(vec![
                HyperbolicSegment::scaled(c + floor, c + top2, 1.0 / mix1, floor, 0.0),
                HyperbolicSegment::scaled(c + top2, c + top1, 1.0 / (mix1 * q), base, 0.0),
            ]);
            let est1_second = b.cdf(vec![HyperbolicSegment::scaled(
                c + floor,
                c + top2,
                1.0 / mix2,
                floor,
                0.0,
            )]);
            let n_first = (mix1 < 1.0).then(|| {
                b.cdf(vec![HyperbolicSegment::scaled(
                    c + top1,
                    v,
                    1.0 / (q * (1.0 - mix1)),
                    base,
                    mix1 * q,
                )])
            });
            let n_second = b.cdf(vec![
                HyperbolicSegment::scaled(c + top2, c + top1, 1.0 / (1.0 - mix2), floor, mix2),
                HyperbolicSegment::scaled(
                    c + top1,
                    v,
                    1.0 / (q * (1.0 - mix2)),
                    n_anchor,
                    mix2 * q,
                ),
            ]);
            EquilibriumProfile {
                regime,
                strategies: [
                    PrimaryStrategy {
                        p_acquire: mix1,
                        no_acquire: n_first,
                        est1: Some(est1_first),
                        est0: Some(b.at_v()),
                    },
                    PrimaryStrategy {
                        p_acquire: mix2,
                        no_acquire: Some(n_second),
                        est1: Some(est1_second),
                        est0: Some(b.at_v()),
                    },
                ],
                payoffs: [base + s2 - s1, base],
                endpoints: b.endpoints,
                swapped,
            }
        }
    };
    Ok(profile.unswap())
}

/// Equal costs, different availabilities, perfect estimates.
pub fn ne_unequal_availability(params: &MarketParams) -> Result<EquilibriumProfile> {
    let (p, regime, swapped) = require(params, &[Scenario::UnequalAvailability])?;
    let (q1, q2, s, c, v, span) = (p.q[0], p.q[1], p.s[0], p.c, p.v, p.span());
    let base2 = span * (1.0 - q2);
    let base1 = span * (1.0 - q1);
    let profile = match regime.band {
        CostBand::PureN => {
            let mut b = Builder::new(&p);
            b.mark("p_bar", c + base2);
            let first = b.cdf(vec![HyperbolicSegment::scaled(c + base2, v, 1.0 / q1, base2, 0.0)]);
            consistency("ceiling atom", first.jump_at_v, (q1 - q2) / q1, 1.0)?;
            let second = b.cdf(vec![HyperbolicSegment::scaled(c + base2, v, 1.0 / q2, base2, 0.0)]);
            EquilibriumProfile {
                regime,
                strategies: [
                    PrimaryStrategy::never_acquire(first),
                    PrimaryStrategy::never_acquire(second),
                ],
                payoffs: [base2, base2],
                endpoints: b.endpoints,
                swapped,
            }
        }
        CostBand::OneSidedMix => {
            let floor = s / q2;
            let mix = (base2 - s / q2) / (q1 * base2 - q1 * s);
            let top = floor / (1.0 - mix * q1);
            consistency("est-1 support top", top, (base2 - s) / (1.0 - q2), span)?;

            let mut b = Builder::new(&p);
            b.mark("L", c + floor);
            b.mark("p_tilde", c + top);
            let est1 = b.cdf(vec![HyperbolicSegment::scaled(
                c + floor,
                c + top,
                1.0 / (mix * q1),
                floor,
                0.0,
            )]);
            let no_acquire = b.cdf(vec![HyperbolicSegment::scaled(
                c + top,
                v,
                1.0 / ((1.0 - mix) * q1),
                floor,
                mix * q1,
            )]);
            let rival = b.cdf(vec![
                HyperbolicSegment::scaled(c + floor, c + top, 1.0, floor, 0.0),
                HyperbolicSegment::scaled(c + top, v, 1.0 / q2, base2, 0.0),
            ]);
            EquilibriumProfile {
                regime,
                strategies: [
                    PrimaryStrategy {
                        p_acquire: mix,
                        no_acquire: Some(no_acquire),
                        est1: Some(est1),
                        est0: Some(b.at_v()),
                    },
                    PrimaryStrategy::never_acquire(rival),
                ],
                payoffs: [base2, floor],
                endpoints: b.endpoints,
                swapped,
            }
        }
        CostBand::BothMix => {
            let bar = base1 + s * (q1 - q2) / q2;
            let mix1 = (q1 * base2 - s * (q1 / q2 - q1 + q2)) / (q1 * base2 - q1 * s);
            let mix2 = (q2 * base1 - s * (1.0 - q1 + q2)) / (q2 * base1 - q2 * s);
            let floor = s / q2;
            let top2 = bar / (1.0 - mix2 * q1);
            let top1 = bar / (1.0 - mix1 * q1);
            consistency("est-1 top (primary 2)", top2, (base1 - s) / (1.0 - q1), span)?;
            consistency("est-1 top (primary 1)", top1, (base2 - s) / (1.0 - q2), span)?;
            consistency("est-1 floor", floor, top2 * (1.0 - mix2), span)?;

            let mut b = Builder::new(&p);
            b.mark("L", c + floor);
            b.mark("p_bar", c + bar);
            b.mark("p_tilde_2", c + top2);
            b.mark("p_tilde_1", c + top1);
            let est1_first = b.cdf(vec![
                HyperbolicSegment::scaled(c + floor, c + top2, 1.0 / mix1, floor, 0.0),
                HyperbolicSegment::scaled(c + top2, c + top1, 1.0 / (mix1 * q1), bar, 0.0),
            ]);
            let est1_second = b.cdf(vec![HyperbolicSegment::scaled(
                c + floor,
                c + top2,
                1.0 / mix2,
                floor,
                0.0,
            )]);
            let n_first = (mix1 < 1.0).then(|| {
                b.cdf(vec![HyperbolicSegment::scaled(
                    c + top1,
                    v,
                    1.0 / ((1.0 - mix1) * q1),
                    bar,
                    mix1 * q1,
                )])
            });
            if let Some(d) = &n_first {
                let closed = s * (q1 - q2) / (span * (1.0 - mix1) * q1 * q2);
                consistency("ceiling atom", d.jump_at_v, closed, 1.0)?;
            }
            let n_second = (mix2 < 1.0).then(|| {
                b.cdf(vec![
                    HyperbolicSegment::scaled(c + top2, c + top1, 1.0 / (1.0 - mix2), floor, mix2),
                    HyperbolicSegment::scaled(
                        c + top1,
                        v,
                        1.0 / ((1.0 - mix2) * q2),
                        base2,
                        mix2 * q2,
                    ),
                ])
            });
            EquilibriumProfile {
                regime,
                strategies: [
                    PrimaryStrategy {
                        p_acquire: mix1,
                        no_acquire: n_first,
                        est1: Some(est1_first),
                        est0: Some(b.at_v()),
                    },
                    PrimaryStrategy {
                        p_acquire: mix2,
                        no_acquire: n_second,
                        est1: Some(est1_second),
                        est0: Some(b.at_v()),
                    },
                ],
                payoffs: [base2, base1 + s * (q1 - q2) / q2],
                endpoints: b.endpoints,
                swapped,
            }
        }
    };
    Ok(profile.unswap())
}

/// Dispatches to the constructor matching the parameters' scenario.
pub fn solve(params: &MarketParams) -> Result<EquilibriumProfile> {
    match validate_params(params)?.scenario {
        Scenario::Basic => ne_basic(params),
        Scenario::EstimationError => ne_estimation_error(params),
        Scenario::UnequalCosts => ne_unequal_costs(params),
        Scenario::UnequalAvailability => ne_unequal_availability(params),
        other => Err(Error::ScenarioMismatch {
            expected: Scenario::Basic,
            found: other,
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn all_cdfs(profile: &EquilibriumProfile) -> Vec<&PriceCdf> {
        profile
            .strategies
            .iter()
            .flat_map(|st| InfoState::ALL.into_iter().filter_map(|i| st.cdf(i)))
            .collect()
    }

    #[test]
    fn basic_example() {
        let ne = ne_basic(&MarketParams::symmetric(50.0, 0.0, 0.5, 8.0)).unwrap();
        assert!(close(ne.p_acquire()[0], 9.0 / 17.0, 1e-12));
        assert!(close(ne.endpoint("p_tilde_1").unwrap(), 16.0, 1e-9));
        assert!(close(ne.endpoint("p_tilde_2").unwrap(), 34.0, 1e-9));
        assert_eq!(ne.payoffs, [25.0, 25.0]);
        for d in all_cdfs(&ne) {
            assert!(d.validate().is_empty(), "{:?}", d.validate());
        }
    }

    #[test]
    fn free_information_is_bertrand() {
        let ne = ne_basic(&MarketParams::symmetric(50.0, 0.0, 0.5, 0.0)).unwrap();
        assert_eq!(ne.p_acquire(), [1.0, 1.0]);
        assert!(ne.strategies[0].no_acquire.is_none());
        assert_eq!(ne.strategies[0].est1.as_ref().unwrap().quantile(0.5), 0.0);
    }

    #[test]
    fn noisy_estimates_route_and_solve() {
        let p = MarketParams::symmetric(50.0, 0.0, 0.5, 4.0).with_qs(0.8);
        let ne = ne_estimation_error(&p).unwrap();
        // independently solved from the unreduced indifference equation
        assert!(close(ne.p_acquire()[0], 0.578154260311027, 1e-9));
        assert!(close(ne.payoffs[0], 27.10716515071316, 1e-8));
        assert!(close(ne.endpoint("p_tilde_1").unwrap(), 22.214330301426322, 1e-8));
        assert!(close(ne.endpoint("L_N").unwrap(), 35.26188989952456, 1e-8));
        assert!(close(ne.endpoint("L_0").unwrap(), 48.59522323285789, 1e-8));
        for d in all_cdfs(&ne) {
            assert!(d.validate().is_empty(), "{:?}", d.validate());
        }
        let perfect = MarketParams::symmetric(50.0, 0.0, 0.5, 8.0);
        assert_eq!(ne_estimation_error(&perfect).unwrap(), ne_basic(&perfect).unwrap());
    }

    #[test]
    fn unequal_cost_examples() {
        let ne = ne_unequal_costs(&MarketParams::symmetric(50.0, 0.0, 0.5, 0.0).with_costs(4.0, 8.0)).unwrap();
        assert!(close(ne.p_acquire()[0], 17.0 / 21.0, 1e-12));
        assert!(close(ne.p_acquire()[1], 9.0 / 17.0, 1e-12));
        assert!(close(ne.endpoint("L").unwrap(), 16.0, 1e-9));
        assert!(close(ne.endpoint("p_tilde_2").unwrap(), 34.0, 1e-9));
        assert!(close(ne.endpoint("p_tilde_1").unwrap(), 42.0, 1e-9));
        assert_eq!(ne.payoffs, [29.0, 25.0]);
        for d in all_cdfs(&ne) {
            assert!(d.validate().is_empty(), "{:?}", d.validate());
        }

        let ne = ne_unequal_costs(&MarketParams::symmetric(50.0, 0.0, 0.5, 0.0).with_costs(4.0, 13.0)).unwrap();
        assert_eq!(ne.regime.band, CostBand::OneSidedMix);
        assert!(close(ne.p_acquire()[0], 17.0 / 21.0, 1e-12));
        assert!(close(ne.payoffs[0], 33.5, 1e-12) && close(ne.payoffs[1], 25.0, 1e-12));
        for d in all_cdfs(&ne) {
            assert!(d.validate().is_empty(), "{:?}", d.validate());
        }
    }

    #[test]
    fn relabelled_costs_map_back() {
        let ne = ne_unequal_costs(&MarketParams::symmetric(50.0, 0.0, 0.5, 0.0).with_costs(8.0, 4.0)).unwrap();
        assert!(ne.swapped);
        assert_eq!(ne.payoffs, [25.0, 29.0]);
        assert!(close(ne.p_acquire()[1], 17.0 / 21.0, 1e-12));
    }

    #[test]
    fn unequal_availability_examples() {
        let at = |s: f64| MarketParams::symmetric(25.0, 0.0, 0.5, s).with_availability(0.7, 0.4);
        let mid = ne_unequal_availability(&at(5.0)).unwrap();
        assert!(close(mid.p_acquire()[0], 5.0 / 14.0, 1e-12));
        assert!(close(mid.endpoint("L").unwrap(), 12.5, 1e-12));
        assert!(close(mid.payoffs[0], 15.0, 1e-12) && close(mid.payoffs[1], 12.5, 1e-12));

        let low = ne_unequal_availability(&at(2.0)).unwrap();
        assert!(close(low.p_acquire()[0], 0.835164835164835, 1e-9));
        assert!(close(low.p_acquire()[1], 8.0 / 11.0, 1e-12));
        assert!(close(low.endpoint("L").unwrap(), 5.0, 1e-12));
        assert!(close(low.payoffs[0], 15.0, 1e-12) && close(low.payoffs[1], 9.0, 1e-12));

        let high = ne_unequal_availability(&at(6.0)).unwrap();
        assert_eq!(high.regime.band, CostBand::PureN);
        let jump = high.strategies[0].no_acquire.as_ref().unwrap().jump_at_v;
        assert!(close(jump, 3.0 / 7.0, 1e-12));
        for ne in [&mid, &low, &high] {
            for d in all_cdfs(ne) {
                assert!(d.validate().is_empty(), "{:?}", d.validate());
            }
        }
    }

    #[test]
    fn constructors_reject_other_scenarios() {
        let p = MarketParams::symmetric(50.0, 0.0, 0.5, 8.0);
        assert!(matches!(ne_unequal_costs(&p), Err(Error::ScenarioMismatch { .. })));
        assert!(matches!(ne_basic(&p.with_qs(0.8)), Err(Error::ScenarioMismatch { .. })));
    }
}
