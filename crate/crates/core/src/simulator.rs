//! Seeded Monte Carlo replay of the market.
//!
//! Rounds are processed in fixed-size shards. Each shard owns one ChaCha
//! stream per role (primary 1, primary 2, tie-breaking), keyed by the run
//! seed and the shard index, so results do not depend on the thread count.
//! Every role draws the same number of uniforms per round whatever happens.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::equilibria::{solve, InfoState, PrimaryStrategy};
use crate::error::{Error, Result};
use crate::market::{validate_params, MarketParams};

const SHARD_ROUNDS: u64 = 1 << 16;
const ROLES: u64 = 3;

#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct Moments {
    n: u64,
    sum: f64,
    sum_sq: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    fn merge(&mut self, other: &Moments) {
        self.n += other.n;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
    }

    fn mean(&self) -> f64 {
        if self.n == 0 {
            f64::NAN
        } else {
            self.sum / self.n as f64
        }
    }

    fn variance(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        let n = self.n as f64;
        let mean = self.sum / n;
        ((self.sum_sq - n * mean * mean) / (n - 1.0)).max(0.0)
    }

    fn std_error(&self) -> f64 {
        if self.n == 0 {
            f64::NAN
        } else {
            (self.variance() / self.n as f64).sqrt()
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct PrimaryTally {
    payoff: Moments,
    by_state: [Moments; 3],
    sales: u64,
    acquisitions: u64,
    correct_estimates: u64,
}

#[derive(Debug, Clone, Copy, Default)]
struct Tally {
    primaries: [PrimaryTally; 2],
    price: Moments,
}

impl Tally {
    fn merge(&mut self, other: &Tally) {
        for (mine, theirs) in self.primaries.iter_mut().zip(&other.primaries) {
            mine.payoff.merge(&theirs.payoff);
            for (a, b) in mine.by_state.iter_mut().zip(&theirs.by_state) {
                a.merge(b);
            }
            mine.sales += theirs.sales;
            mine.acquisitions += theirs.acquisitions;
            mine.correct_estimates += theirs.correct_estimates;
        }
        self.price.merge(&other.price);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StateStats {
    pub info: InfoState,
    pub rounds: u64,
    pub mean_payoff: f64,
    pub payoff_se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrimaryStats {
    /// Rounds in which this primary's channel was free.
    pub available_rounds: u64,
    /// Mean payoff over rounds with the channel free.
    pub mean_payoff: f64,
    pub payoff_se: f64,
    /// Mean payoff over all rounds, counting unavailable rounds as zero.
    pub unconditional_payoff: f64,
    pub unconditional_se: f64,
    /// Fraction of free rounds that ended in a sale.
    pub sale_frequency: f64,
    /// Fraction of free rounds in which the competitor's state was bought.
    pub acquire_frequency: f64,
    pub acquire_se: f64,
    /// Fraction of acquisitions whose estimate was right.
    pub estimate_correct_frequency: f64,
    pub by_state: [StateStats; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimStats {
    pub rounds: u64,
    pub seed: u64,
    pub primaries: [PrimaryStats; 2],
    /// Rounds with at least one channel posted, which always sell.
    pub sale_rounds: u64,
    pub sale_fraction: f64,
    /// Mean price paid by the secondary over rounds with a sale.
    pub mean_price: f64,
    pub mean_price_se: f64,
    pub price_variance: f64,
}

fn check_strategies(strategies: &[PrimaryStrategy; 2]) -> Result<()> {
    for (me, st) in strategies.iter().enumerate() {
        for info in InfoState::ALL {
            if st.reaches(info) && st.cdf(info).is_none() {
                return Err(Error::MissingCdf {
                    primary: me,
                    info: info.label(),
                });
            }
        }
    }
    Ok(())
}

fn shard_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

struct Draws {
    free: bool,
    info: Option<InfoState>,
    correct: bool,
    price: f64,
}

fn play(
    params: &MarketParams,
    me: usize,
    st: &PrimaryStrategy,
    u: [f64; 4],
    rival_free: bool,
) -> Draws {
    let [u_free, u_acq, u_est, u_price] = u;
    let free = u_free < params.q[me];
    if !free {
        return Draws {
            free,
            info: None,
            correct: false,
            price: f64::INFINITY,
        };
    }
    let acquire = u_acq < st.p_acquire;
    let correct = u_est < params.qs;
    let info = if !acquire {
        InfoState::NoAcquire
    } else if correct == rival_free {
        InfoState::AcquiredEst1
    } else {
        InfoState::AcquiredEst0
    };
    let price = st
        .cdf(info)
        .expect("checked before simulation")
        .quantile(u_price);
    Draws {
        free,
        info: Some(info),
        correct,
        price,
    }
}

fn run_shard(
    params: &MarketParams,
    strategies: &[PrimaryStrategy; 2],
    rounds: u64,
    seed: u64,
    stream_base: u64,
) -> Tally {
    let mut rngs = [
        shard_rng(seed, stream_base),
        shard_rng(seed, stream_base + 1),
    ];
    let mut market = shard_rng(seed, stream_base + 2);
    let mut tally = Tally::default();
    for _ in 0..rounds {
        let u: [[f64; 4]; 2] = [rngs[0].gen(), rngs[1].gen()];
        let free = [u[0][0] < params.q[0], u[1][0] < params.q[1]];
        let d0 = play(params, 0, &strategies[0], u[0], free[1]);
        let d1 = play(params, 1, &strategies[1], u[1], free[0]);
        let u_tie: f64 = market.gen();
        let draws = [d0, d1];
        let winner = match (draws[0].free, draws[1].free) {
            (false, false) => None,
            (true, false) => Some(0),
            (false, true) => Some(1),
            (true, true) => {
                if draws[0].price < draws[1].price {
                    Some(0)
                } else if draws[1].price < draws[0].price {
                    Some(1)
                } else if u_tie < 0.5 {
                    Some(0)
                } else {
                    Some(1)
                }
            }
        };
        if let Some(w) = winner {
            tally.price.push(draws[w].price);
        }
        for (me, d) in draws.iter().enumerate() {
            let Some(info) = d.info else { continue };
            let t = &mut tally.primaries[me];
            let mut payoff = 0.0;
            if winner == Some(me) {
                payoff += d.price - params.c;
                t.sales += 1;
            }
            if info != InfoState::NoAcquire {
                payoff -= params.s[me];
                t.acquisitions += 1;
                if d.correct {
                    t.correct_estimates += 1;
                }
            }
            t.payoff.push(payoff);
            let k = InfoState::ALL.iter().position(|i| *i == info).unwrap();
            t.by_state[k].push(payoff);
        }
    }
    tally
}

fn simulate_streams(
    params: &MarketParams,
    strategies: &[PrimaryStrategy; 2],
    rounds: u64,
    seed: u64,
    stream_offset: u64,
) -> Result<SimStats> {
    validate_params(params)?;
    check_strategies(strategies)?;
    let shards = rounds.div_ceil(SHARD_ROUNDS);
    let tallies: Vec<Tally> = (0..shards)
        .into_par_iter()
        .map(|k| {
            let len = SHARD_ROUNDS.min(rounds - k * SHARD_ROUNDS);
            run_shard(params, strategies, len, seed, stream_offset + k * ROLES)
        })
        .collect();
    let mut total = Tally::default();
    for t in &tallies {
        total.merge(t);
    }
    Ok(summarize(&total, rounds, seed))
}

fn summarize(total: &Tally, rounds: u64, seed: u64) -> SimStats {
    let primaries = [0, 1].map(|me| {
        let t = &total.primaries[me];
        let n = t.payoff.n;
        let frac = |k: u64, of: u64| if of == 0 { f64::NAN } else { k as f64 / of as f64 };
        let acq = frac(t.acquisitions, n);
        let all = Moments {
            n: rounds,
            ..t.payoff
        };
        PrimaryStats {
            available_rounds: n,
            mean_payoff: t.payoff.mean(),
            payoff_se: t.payoff.std_error(),
            unconditional_payoff: all.mean(),
            unconditional_se: all.std_error(),
            sale_frequency: frac(t.sales, n),
            acquire_frequency: acq,
            acquire_se: (acq * (1.0 - acq) / n.max(1) as f64).sqrt(),
            estimate_correct_frequency: frac(t.correct_estimates, t.acquisitions),
            by_state: [0, 1, 2].map(|k| StateStats {
                info: InfoState::ALL[k],
                rounds: t.by_state[k].n,
                mean_payoff: t.by_state[k].mean(),
                payoff_se: t.by_state[k].std_error(),
            }),
        }
    });
    SimStats {
        rounds,
        seed,
        primaries,
        sale_rounds: total.price.n,
        sale_fraction: total.price.n as f64 / rounds.max(1) as f64,
        mean_price: total.price.mean(),
        mean_price_se: total.price.std_error(),
        price_variance: total.price.variance(),
    }
}

/// Plays `rounds` independent rounds of the market under `strategies`.
/// Identical inputs give bit-identical statistics.
pub fn simulate(
    params: &MarketParams,
    strategies: &[PrimaryStrategy; 2],
    rounds: u64,
    seed: u64,
) -> Result<SimStats> {
    simulate_streams(params, strategies, rounds, seed, 0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WelfareRow {
    pub s: f64,
    pub mean_price: f64,
    pub mean_price_se: f64,
    pub price_variance: f64,
    pub payoffs: [f64; 2],
    pub payoff_se: [f64; 2],
    pub analytic_payoffs: [f64; 2],
}

/// Simulates the equilibrium of a symmetric market at every cost in `s_grid`.
/// Grid points use disjoint random streams of the same seed.
pub fn welfare_sweep(
    params: &MarketParams,
    s_grid: &[f64],
    rounds: u64,
    seed: u64,
) -> Result<Vec<WelfareRow>> {
    let stride = rounds.div_ceil(SHARD_ROUNDS).max(1) * ROLES;
    s_grid
        .iter()
        .enumerate()
        .map(|(k, &s)| {
            let p = MarketParams { s: [s, s], ..*params };
            let ne = solve(&p)?;
            let stats = simulate_streams(&p, &ne.strategies, rounds, seed, k as u64 * stride)?;
            Ok(WelfareRow {
                s,
                mean_price: stats.mean_price,
                mean_price_se: stats.mean_price_se,
                price_variance: stats.price_variance,
                payoffs: [stats.primaries[0].mean_payoff, stats.primaries[1].mean_payoff],
                payoff_se: [stats.primaries[0].payoff_se, stats.primaries[1].payoff_se],
                analytic_payoffs: ne.payoffs,
            })
        })
        .collect()
}
