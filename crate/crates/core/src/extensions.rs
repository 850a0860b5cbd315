//! Markets with more than two primaries, and a two-state primary with quality
//! offsets.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::market::{validate_params, MarketParams, Scenario};

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Probability that at least `m` of the other `n - 1` primaries are free,
/// each independently with probability `x`.
pub fn w_mn(m: usize, n: usize, x: f64) -> f64 {
    (m..n)
        .map(|i| binomial(n - 1, i) * x.powi(i as i32) * (1.0 - x).powi((n - 1 - i) as i32))
        .sum()
}

/// Complement of [`w_mn`]: fewer than `m` rivals are free.
pub fn big_w_mn(m: usize, n: usize, x: f64) -> f64 {
    (0..m.min(n))
        .map(|i| binomial(n - 1, i) * x.powi(i as i32) * (1.0 - x).powi((n - 1 - i) as i32))
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NPrimaryChecks {
    /// Payoff of each primary when every primary acquires.
    pub all_acquire_payoff: f64,
    /// Payoff of skipping acquisition and posting `v` against that profile.
    pub deviation_payoff: f64,
    /// Deviation gain; equals the acquisition cost.
    pub deviation_gain: f64,
}

fn require_n_primary(params: &MarketParams) -> Result<MarketParams> {
    let val = validate_params(params)?;
    if val.scenario != Scenario::NPrimary {
        return Err(Error::ScenarioMismatch {
            expected: Scenario::NPrimary,
            found: val.scenario,
        });
    }
    Ok(val.params)
}

/// Payoffs showing that universal acquisition is never an equilibrium when
/// acquisition is costly.
pub fn n_primary_payoff_checks(params: &MarketParams) -> Result<NPrimaryChecks> {
    let p = require_n_primary(params)?;
    let sells_at_v = big_w_mn(p.m, p.n, p.q[0]);
    let all_acquire = p.span() * sells_at_v - p.s[0];
    let deviation = p.span() * sells_at_v;
    Ok(NPrimaryChecks {
        all_acquire_payoff: all_acquire,
        deviation_payoff: deviation,
        deviation_gain: deviation - all_acquire,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NPrimarySim {
    pub rounds: u64,
    /// Rounds with primary 1 free.
    pub samples: u64,
    pub mean_payoff: f64,
    pub payoff_se: f64,
}

/// Replays the all-acquire profile: with `m` or fewer channels free every
/// free primary sells at `v`, otherwise prices collapse to `c`. Reports
/// primary 1's payoff given its channel is free.
pub fn simulate_all_acquire(params: &MarketParams, rounds: u64, seed: u64) -> Result<NPrimarySim> {
    let p = require_n_primary(params)?;
    const SHARD: u64 = 1 << 16;
    let shards = rounds.div_ceil(SHARD);
    let parts: Vec<(u64, f64, f64)> = (0..shards)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k);
            let len = SHARD.min(rounds - k * SHARD);
            let (mut n, mut sum, mut sum_sq) = (0u64, 0.0, 0.0);
            for _ in 0..len {
                let me_free = rng.gen::<f64>() < p.q[0];
                let free = (1..p.n).filter(|_| rng.gen::<f64>() < p.q[0]).count();
                if !me_free {
                    continue;
                }
                // `free` counts the rivals; add primary 1 itself.
                let payoff = if free < p.m { p.span() } else { 0.0 } - p.s[0];
                n += 1;
                sum += payoff;
                sum_sq += payoff * payoff;
            }
            (n, sum, sum_sq)
        })
        .collect();
    let (n, sum, sum_sq) = parts
        .iter()
        .fold((0u64, 0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2));
    let mean = sum / n as f64;
    let var = (sum_sq - n as f64 * mean * mean) / (n as f64 - 1.0);
    Ok(NPrimarySim {
        rounds,
        samples: n,
        mean_payoff: mean,
        payoff_se: (var.max(0.0) / n as f64).sqrt(),
    })
}

/// Primary 1 is free in one of two states, each with its own offset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MultiStateParams {
    pub v: f64,
    pub c: f64,
    /// Probability of state 1 (offset `h1`).
    pub q1: f64,
    /// Probability of state 2 (offset `h2`).
    pub q2: f64,
    pub h1: f64,
    pub h2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MultiStatePayoffs {
    pub state2: f64,
    pub state1: f64,
    /// Lower end of the state-1 pricing support.
    pub low: f64,
}

impl MultiStateParams {
    pub fn validate(&self) -> Result<()> {
        let finite = [self.v, self.c, self.q1, self.q2, self.h1, self.h2]
            .iter()
            .all(|x| x.is_finite());
        if !finite {
            return Err(Error::Domain("parameters must be finite".into()));
        }
        if self.v <= self.c {
            return Err(Error::Domain("v must exceed c".into()));
        }
        if !(self.q1 > 0.0 && self.q2 > 0.0 && self.q1 + self.q2 < 1.0) {
            return Err(Error::Domain("need q1, q2 > 0 and q1 + q2 < 1".into()));
        }
        if self.h2 <= self.h1 {
            return Err(Error::Domain("need h2 > h1".into()));
        }
        Ok(())
    }
}

pub fn multistate_payoffs(p: &MultiStateParams) -> Result<MultiStatePayoffs> {
    p.validate()?;
    let idle = 1.0 - p.q1 - p.q2;
    let state2 = (p.v - p.c) * idle + p.h2 * (1.0 - p.q2) - p.h1 * p.q1;
    let state1 = (p.v + p.h1 - p.c) * idle;
    let low = p.c - p.h1 + (p.v - p.c + p.h1) * idle / (1.0 - p.q2);
    Ok(MultiStatePayoffs { state2, state1, low })
}

/// `(L - c + h2)(1 - q2) - payoff_state2`; zero for every valid input.
pub fn multistate_identity_residual(p: &MultiStateParams) -> Result<f64> {
    let out = multistate_payoffs(p)?;
    Ok((out.low - p.c + p.h2) * (1.0 - p.q2) - out.state2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tail_examples() {
        assert!((w_mn(2, 4, 0.5) - 0.5).abs() < 1e-15);
        let p = MarketParams::symmetric(50.0, 0.0, 0.6, 10.0).with_primaries(10, 6);
        let out = n_primary_payoff_checks(&p).unwrap();
        assert!((out.all_acquire_payoff - (25.8695168 - 10.0)).abs() < 1e-9);
        assert!((out.deviation_gain - 10.0).abs() < 1e-12);
    }

    #[test]
    fn multistate_example() {
        let p = MultiStateParams {
            v: 10.0,
            c: 0.0,
            q1: 0.3,
            q2: 0.3,
            h1: 1.0,
            h2: 3.0,
        };
        let out = multistate_payoffs(&p).unwrap();
        assert!((out.state2 - 5.8).abs() < 1e-12);
        assert!((out.state1 - 4.4).abs() < 1e-12);
        assert!((out.low - 37.0 / 7.0).abs() < 1e-12);
        let bad = MultiStateParams { q1: 0.6, q2: 0.5, ..p };
        assert!(matches!(multistate_payoffs(&bad), Err(Error::Domain(_))));
    }

    #[test]
    fn n_primary_requires_extension_scenario() {
        let p = MarketParams::symmetric(50.0, 0.0, 0.6, 10.0);
        assert!(matches!(
            n_primary_payoff_checks(&p),
            Err(Error::ScenarioMismatch { .. })
        ));
    }
}
