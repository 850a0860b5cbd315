//! Market parameters, scenario classification and regime thresholds.
//!
//! Two primaries each own one channel that is free with some probability.
//! A free primary may pay to learn the competitor's channel state and then
//! posts a price; the single secondary buys the cheapest free channel.

use serde::Serialize;

use crate::error::{Error, Result};

/// Raw model inputs. Index 0 is primary 1, index 1 is primary 2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MarketParams {
    /// Secondary's valuation, the price ceiling.
    pub v: f64,
    /// Per-sale transaction cost, the price floor.
    pub c: f64,
    /// Channel availability probability of each primary.
    pub q: [f64; 2],
    /// Cost of acquiring the competitor's channel state, per primary.
    pub s: [f64; 2],
    /// Probability that an acquired estimate is correct.
    pub qs: f64,
    /// Number of primaries (only the n-primary extension uses n > 2).
    pub n: usize,
    /// Number of secondaries in the n-primary extension.
    pub m: usize,
}

impl MarketParams {
    /// Symmetric two-primary market with perfect estimation.
    pub fn symmetric(v: f64, c: f64, q: f64, s: f64) -> Self {
        MarketParams {
            v,
            c,
            q: [q, q],
            s: [s, s],
            qs: 1.0,
            n: 2,
            m: 1,
        }
    }

    pub fn with_qs(mut self, qs: f64) -> Self {
        self.qs = qs;
        self
    }

    pub fn with_costs(mut self, s1: f64, s2: f64) -> Self {
        self.s = [s1, s2];
        self
    }

    pub fn with_availability(mut self, q1: f64, q2: f64) -> Self {
        self.q = [q1, q2];
        self
    }

    pub fn with_primaries(mut self, n: usize, m: usize) -> Self {
        self.n = n;
        self.m = m;
        self
    }

    /// Price range width `v - c`.
    pub fn span(&self) -> f64 {
        self.v - self.c
    }

    /// Same market with the primaries relabelled.
    pub fn swapped(&self) -> Self {
        MarketParams {
            q: [self.q[1], self.q[0]],
            s: [self.s[1], self.s[0]],
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Scenario {
    Basic,
    EstimationError,
    UnequalCosts,
    UnequalAvailability,
    NPrimary,
    MultiState,
}

/// Which acquisition regime the cost falls into.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum CostBand {
    /// Nobody acquires.
    PureN,
    /// Exactly one primary randomizes over acquiring.
    OneSidedMix,
    /// Both primaries randomize over acquiring.
    BothMix,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Regime {
    pub scenario: Scenario,
    pub band: CostBand,
    /// Named cost thresholds separating the bands, in decreasing order.
    pub thresholds: Vec<(&'static str, f64)>,
}

/// Parameters after validation, relabelled into the canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Validated {
    pub params: MarketParams,
    pub scenario: Scenario,
    /// True when the primaries were exchanged to reach canonical order.
    pub swapped: bool,
}

fn range(field: &'static str, value: f64, reason: &'static str) -> Error {
    Error::Range {
        field,
        value,
        reason,
    }
}

/// Checks ranges, classifies the scenario and puts the primaries in canonical
/// order (`s1 <= s2` for unequal costs, `q1 >= q2` for unequal availability).
pub fn validate_params(params: &MarketParams) -> Result<Validated> {
    let p = params;
    for (field, value) in [("v", p.v), ("c", p.c), ("qs", p.qs)] {
        if !value.is_finite() {
            return Err(range(field, value, "must be finite"));
        }
    }
    if p.v <= p.c {
        return Err(range("v", p.v, "must exceed c"));
    }
    for (field, value) in [("q1", p.q[0]), ("q2", p.q[1])] {
        if !(value > 0.0 && value < 1.0) {
            return Err(range(field, value, "must lie in (0, 1)"));
        }
    }
    for (field, value) in [("s1", p.s[0]), ("s2", p.s[1])] {
        if !(value >= 0.0 && value.is_finite()) {
            return Err(range(field, value, "must be finite and non-negative"));
        }
    }
    if !(p.qs > 0.5 && p.qs <= 1.0) {
        return Err(range("qs", p.qs, "must lie in (1/2, 1]"));
    }
    if p.n < 2 {
        return Err(range("n", p.n as f64, "need at least two primaries"));
    }
    if p.m < 1 || p.m >= p.n {
        return Err(range("m", p.m as f64, "must satisfy 1 <= m < n"));
    }

    let equal_q = p.q[0] == p.q[1];
    let equal_s = p.s[0] == p.s[1];
    if !equal_q && !equal_s {
        return Err(Error::AmbiguousScenario);
    }
    if p.n > 2 {
        if !(equal_q && equal_s) {
            return Err(Error::AmbiguousScenario);
        }
        return Ok(Validated {
            params: *p,
            scenario: Scenario::NPrimary,
            swapped: false,
        });
    }
    if p.qs < 1.0 {
        // Only the symmetric market has been solved with noisy estimates.
        if !(equal_q && equal_s) {
            return Err(Error::AmbiguousScenario);
        }
        return Ok(Validated {
            params: *p,
            scenario: Scenario::EstimationError,
            swapped: false,
        });
    }
    let (scenario, swap) = match (equal_q, equal_s) {
        (true, true) => (Scenario::Basic, false),
        (true, false) => (Scenario::UnequalCosts, p.s[0] > p.s[1]),
        (false, true) => (Scenario::UnequalAvailability, p.q[0] < p.q[1]),
        (false, false) => unreachable!(),
    };
    Ok(Validated {
        params: if swap { p.swapped() } else { *p },
        scenario,
        swapped: swap,
    })
}

/// Threshold for the symmetric market; reduces to `q(v-c)(1-q)` when `qs = 1`.
pub fn symmetric_threshold(p: &MarketParams) -> f64 {
    let q = p.q[0];
    q * p.span() * (1.0 - q) * (2.0 * p.qs - 1.0)
}

/// Bands above `T1` (unequal availability): nobody acquires.
pub fn availability_thresholds(p: &MarketParams) -> (f64, f64) {
    let (q1, q2) = (p.q[0], p.q[1]);
    let upper = q2 * p.span() * (1.0 - q2);
    let lower = q2 * p.span() * (1.0 - q1) / (1.0 - q1 + q2);
    (upper, lower)
}

/// Classifies the cost regime. A cost exactly at a threshold belongs to the
/// band above it.
pub fn thresholds(params: &MarketParams) -> Result<Regime> {
    let val = validate_params(params)?;
    let p = val.params;
    let regime = match val.scenario {
        Scenario::Basic | Scenario::EstimationError => {
            let t = symmetric_threshold(&p);
            Regime {
                scenario: val.scenario,
                band: if p.s[0] >= t {
                    CostBand::PureN
                } else {
                    CostBand::BothMix
                },
                thresholds: vec![("T", t)],
            }
        }
        Scenario::UnequalCosts => {
            let t = symmetric_threshold(&p);
            let band = if p.s[0] >= t {
                CostBand::PureN
            } else if p.s[1] >= t {
                CostBand::OneSidedMix
            } else {
                CostBand::BothMix
            };
            Regime {
                scenario: val.scenario,
                band,
                thresholds: vec![("T", t)],
            }
        }
        Scenario::UnequalAvailability => {
            let (upper, lower) = availability_thresholds(&p);
            let s = p.s[0];
            let band = if s >= upper {
                CostBand::PureN
            } else if s >= lower {
                CostBand::OneSidedMix
            } else {
                CostBand::BothMix
            };
            Regime {
                scenario: val.scenario,
                band,
                thresholds: vec![("T1", upper), ("T2", lower)],
            }
        }
        Scenario::NPrimary | Scenario::MultiState => {
            return Err(Error::Domain(
                "no two-primary cost regime for this scenario".into(),
            ))
        }
    };
    Ok(regime)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_out_of_range() {
        let base = MarketParams::symmetric(50.0, 0.0, 0.5, 8.0);
        let bad = [
            MarketParams { v: 0.0, ..base },
            base.with_availability(1.0, 1.0),
            base.with_availability(0.0, 0.0),
            base.with_qs(0.5),
            base.with_qs(1.2),
            base.with_costs(-1.0, -1.0),
        ];
        for p in bad {
            assert!(matches!(validate_params(&p), Err(Error::Range { .. })), "{p:?}");
        }
    }

    #[test]
    fn double_asymmetry_is_ambiguous() {
        let p = MarketParams::symmetric(50.0, 0.0, 0.5, 8.0)
            .with_costs(4.0, 8.0)
            .with_availability(0.6, 0.5);
        assert_eq!(validate_params(&p), Err(Error::AmbiguousScenario));
    }

    #[test]
    fn canonical_order_is_recorded() {
        let p = MarketParams::symmetric(50.0, 0.0, 0.5, 0.0).with_costs(8.0, 4.0);
        let val = validate_params(&p).unwrap();
        assert!(val.swapped);
        assert_eq!(val.params.s, [4.0, 8.0]);
        assert_eq!(val.scenario, Scenario::UnequalCosts);

        let p = MarketParams::symmetric(25.0, 0.0, 0.5, 5.0).with_availability(0.4, 0.7);
        let val = validate_params(&p).unwrap();
        assert!(val.swapped);
        assert_eq!(val.params.q, [0.7, 0.4]);
    }

    #[test]
    fn threshold_values() {
        let p = MarketParams::symmetric(11.0, 1.0, 0.5, 1.0);
        assert!((symmetric_threshold(&p) - 2.5).abs() < 1e-12);
        let p = MarketParams::symmetric(50.0, 0.0, 0.5, 4.0).with_qs(0.75);
        assert!((symmetric_threshold(&p) - 6.25).abs() < 1e-12);
        let p = MarketParams::symmetric(25.0, 0.0, 0.5, 5.0).with_availability(0.7, 0.4);
        let (upper, lower) = availability_thresholds(&p);
        assert!((upper - 6.0).abs() < 1e-12);
        assert!((lower - 30.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn boundary_cost_is_pure_n() {
        let p = MarketParams::symmetric(50.0, 0.0, 0.5, 12.5);
        assert_eq!(thresholds(&p).unwrap().band, CostBand::PureN);
        let p = MarketParams::symmetric(25.0, 0.0, 0.5, 6.0).with_availability(0.7, 0.4);
        assert_eq!(thresholds(&p).unwrap().band, CostBand::PureN);
        let lower = availability_thresholds(&p).1;
        let p = MarketParams::symmetric(25.0, 0.0, 0.5, lower).with_availability(0.7, 0.4);
        assert_eq!(thresholds(&p).unwrap().band, CostBand::OneSidedMix);
    }
}
