//! Piecewise-hyperbolic price distributions.
//!
//! Every pricing distribution in the model is built from pieces of the form
//! `F(x) = A - B / (x - c)` glued end to end, plus an optional atom at the
//! ceiling `v`. Mixtures over a common floor `c` keep that form, which lets
//! the verifier integrate payoffs in closed form.

use rand::Rng;
use serde::Serialize;

/// Absolute tolerance on probabilities used by [`PriceCdf::validate`].
pub const CDF_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HyperbolicSegment {
    pub lo: f64,
    pub hi: f64,
    pub a: f64,
    pub b: f64,
}

impl HyperbolicSegment {
    pub fn new(lo: f64, hi: f64, a: f64, b: f64) -> Self {
        HyperbolicSegment { lo, hi, a, b }
    }

    /// `scale * (1 - anchor / (x - c) - shift)`, the shape every equilibrium
    /// piece takes; `anchor` is a distance above the floor.
    pub fn scaled(lo: f64, hi: f64, scale: f64, anchor: f64, shift: f64) -> Self {
        HyperbolicSegment {
            lo,
            hi,
            a: scale * (1.0 - shift),
            b: scale * anchor,
        }
    }

    pub fn eval(&self, x: f64, c: f64) -> f64 {
        if self.b == 0.0 {
            self.a
        } else {
            self.a - self.b / (x - c)
        }
    }
}

/// Closed-form pieces of `int b/(x-c)^2 * {1, x, x^2} dx` over a segment.
fn segment_moments(seg: &HyperbolicSegment, c: f64) -> (f64, f64, f64) {
    if seg.b == 0.0 || seg.hi <= seg.lo {
        return (0.0, 0.0, 0.0);
    }
    let (l, h) = (seg.lo - c, seg.hi - c);
    let inv_gap = (seg.hi - seg.lo) / (l * h);
    let log_ratio = (h / l).ln();
    let m0 = seg.b * inv_gap;
    let m1 = seg.b * (log_ratio + c * inv_gap);
    let m2 = seg.b * ((seg.hi - seg.lo) + 2.0 * c * log_ratio + c * c * inv_gap);
    (m0, m1, m2)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Violation {
    InvertedSegment { segment: usize },
    Decreasing { segment: usize },
    BelowFloor { segment: usize },
    BeyondCeiling { segment: usize },
    Gap { at: f64, next: f64 },
    Discontinuity { at: f64, jump: f64 },
    AtomBelowCeiling { at: f64, mass: f64 },
    OutOfRange { at: f64, value: f64 },
    MassMismatch { total: f64 },
}

/// Price distribution of one primary in one information state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PriceCdf {
    pub c: f64,
    pub v: f64,
    pub segments: Vec<HyperbolicSegment>,
    pub jump_at_v: f64,
}

impl PriceCdf {
    pub fn new(c: f64, v: f64, segments: Vec<HyperbolicSegment>, jump_at_v: f64) -> Self {
        PriceCdf {
            c,
            v,
            segments,
            jump_at_v,
        }
    }

    /// Always post the ceiling.
    pub fn point_mass_at_v(c: f64, v: f64) -> Self {
        PriceCdf::new(c, v, Vec::new(), 1.0)
    }

    /// Always post `price`. Below the ceiling this is a flat unit piece whose
    /// lower end carries all the mass.
    pub fn pure_price(c: f64, v: f64, price: f64) -> Self {
        if price >= v {
            PriceCdf::point_mass_at_v(c, v)
        } else {
            PriceCdf::new(c, v, vec![HyperbolicSegment::new(price, v, 1.0, 0.0)], 0.0)
        }
    }

    fn value_on(&self, idx: usize, x: f64) -> f64 {
        let seg = &self.segments[idx];
        seg.eval(x.min(seg.hi), self.c)
    }

    /// `P(price <= x)`. At a knot the right-hand piece is used.
    pub fn eval(&self, x: f64) -> f64 {
        if x >= self.v {
            return 1.0;
        }
        match self.segments.iter().rposition(|s| s.lo <= x) {
            None => 0.0,
            Some(idx) => self.value_on(idx, x),
        }
    }

    /// `P(price < x)`.
    pub fn eval_left(&self, x: f64) -> f64 {
        if x > self.v {
            return 1.0;
        }
        match self.segments.iter().rposition(|s| s.lo < x) {
            None => 0.0,
            Some(idx) => self.value_on(idx, x),
        }
    }

    /// Probability of posting below `x` with an exact tie counted as half.
    pub fn eval_tie_half(&self, x: f64) -> f64 {
        0.5 * (self.eval(x) + self.eval_left(x))
    }

    /// Smallest `x` with `F(x) >= u`.
    pub fn quantile(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        for seg in &self.segments {
            let top = seg.eval(seg.hi, self.c);
            if u <= top {
                let bottom = seg.eval(seg.lo, self.c);
                if u <= bottom || seg.b == 0.0 {
                    return seg.lo;
                }
                let x = self.c + seg.b / (seg.a - u);
                return x.clamp(seg.lo, seg.hi);
            }
        }
        self.v
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.quantile(rng.gen::<f64>())
    }

    /// Lowest and highest price in the support.
    pub fn support(&self) -> (f64, f64) {
        match (self.segments.first(), self.segments.last()) {
            (Some(first), Some(last)) => {
                let hi = if self.jump_at_v > 0.0 { self.v } else { last.hi };
                (first.lo, hi)
            }
            _ => (self.v, self.v),
        }
    }

    /// Segment endpoints and the ceiling, sorted and deduplicated.
    pub fn knots(&self) -> Vec<f64> {
        let mut knots: Vec<f64> = self
            .segments
            .iter()
            .flat_map(|s| [s.lo, s.hi])
            .chain(std::iter::once(self.v))
            .collect();
        knots.sort_by(f64::total_cmp);
        knots.dedup();
        knots
    }

    /// Point masses, including the one at `v`.
    pub fn atoms(&self) -> Vec<(f64, f64)> {
        let mut atoms = Vec::new();
        let mut below = 0.0;
        for seg in &self.segments {
            let start = seg.eval(seg.lo, self.c);
            if start - below > 0.0 {
                atoms.push((seg.lo, start - below));
            }
            below = seg.eval(seg.hi, self.c);
        }
        if self.jump_at_v > 0.0 {
            atoms.push((self.v, self.jump_at_v));
        }
        atoms
    }

    pub fn mean(&self) -> f64 {
        let atomic: f64 = self.atoms().iter().map(|(x, m)| x * m).sum();
        let smooth: f64 = self
            .segments
            .iter()
            .map(|s| segment_moments(s, self.c).1)
            .sum();
        atomic + smooth
    }

    pub fn variance(&self) -> f64 {
        let mu = self.mean();
        let atomic: f64 = self
            .atoms()
            .iter()
            .map(|(x, m)| m * (x - mu) * (x - mu))
            .sum();
        let smooth: f64 = self
            .segments
            .iter()
            .map(|s| {
                let (m0, m1, m2) = segment_moments(s, self.c);
                m2 - 2.0 * mu * m1 + mu * mu * m0
            })
            .sum();
        (atomic + smooth).max(0.0)
    }

    /// Coefficients `(A, B)` of the piece in force on the open interval just
    /// right of `x`. Outside the segments the distribution is flat.
    pub fn form_right_of(&self, x: f64) -> (f64, f64) {
        if x >= self.v {
            return (1.0, 0.0);
        }
        match self.segments.iter().rposition(|s| s.lo <= x) {
            None => (0.0, 0.0),
            Some(idx) => {
                let seg = &self.segments[idx];
                if x < seg.hi {
                    (seg.a, seg.b)
                } else {
                    (seg.eval(seg.hi, self.c), 0.0)
                }
            }
        }
    }

    /// Weighted mixture of distributions sharing the same floor and ceiling.
    /// Flat stretches between the components' supports become `B = 0` pieces.
    pub fn mixture(parts: &[(f64, &PriceCdf)]) -> PriceCdf {
        let live: Vec<(f64, &PriceCdf)> = parts.iter().copied().filter(|(w, _)| *w > 0.0).collect();
        let (c, v) = match live.first() {
            Some((_, d)) => (d.c, d.v),
            None => return PriceCdf::new(0.0, 0.0, Vec::new(), 0.0),
        };
        let jump: f64 = live.iter().map(|(w, d)| w * d.jump_at_v).sum();
        let mut knots: Vec<f64> = live
            .iter()
            .flat_map(|(_, d)| d.segments.iter().flat_map(|s| [s.lo, s.hi]))
            .collect();
        if knots.is_empty() {
            return PriceCdf::new(c, v, Vec::new(), jump);
        }
        knots.push(v);
        knots.sort_by(f64::total_cmp);
        knots.dedup();
        let segments = knots
            .windows(2)
            .map(|w| {
                let (a, b) = live.iter().fold((0.0, 0.0), |(a, b), (weight, d)| {
                    let (da, db) = d.form_right_of(w[0]);
                    (a + weight * da, b + weight * db)
                });
                HyperbolicSegment::new(w[0], w[1], a, b)
            })
            .collect();
        PriceCdf::new(c, v, segments, jump)
    }

    /// Checks monotonicity, contiguity, continuity, range and total mass.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let c = self.c;
        let span_tol = CDF_TOL * (self.v - self.c).abs().max(1.0);
        if !(-CDF_TOL..=1.0 + CDF_TOL).contains(&self.jump_at_v) {
            out.push(Violation::OutOfRange {
                at: self.v,
                value: self.jump_at_v,
            });
        }
        if self.segments.is_empty() {
            if (self.jump_at_v - 1.0).abs() > CDF_TOL {
                out.push(Violation::MassMismatch {
                    total: self.jump_at_v,
                });
            }
            return out;
        }
        for (k, seg) in self.segments.iter().enumerate() {
            if seg.lo.partial_cmp(&seg.hi) != Some(std::cmp::Ordering::Less) {
                out.push(Violation::InvertedSegment { segment: k });
            }
            if seg.b < 0.0 {
                out.push(Violation::Decreasing { segment: k });
            }
            if seg.lo < c || (seg.lo == c && seg.b != 0.0) {
                out.push(Violation::BelowFloor { segment: k });
            }
            if seg.hi > self.v + span_tol {
                out.push(Violation::BeyondCeiling { segment: k });
            }
            for x in [seg.lo, seg.hi] {
                let value = seg.eval(x, c);
                if !(-CDF_TOL..=1.0 + CDF_TOL).contains(&value) {
                    out.push(Violation::OutOfRange { at: x, value });
                }
            }
        }
        for pair in self.segments.windows(2) {
            let (left, right) = (&pair[0], &pair[1]);
            if (left.hi - right.lo).abs() > span_tol {
                out.push(Violation::Gap {
                    at: left.hi,
                    next: right.lo,
                });
            }
            let jump = right.eval(right.lo, c) - left.eval(left.hi, c);
            if jump.abs() > CDF_TOL {
                out.push(Violation::Discontinuity {
                    at: right.lo,
                    jump,
                });
            }
        }
        let first = &self.segments[0];
        let start = first.eval(first.lo, c);
        if start > CDF_TOL && first.lo < self.v {
            out.push(Violation::AtomBelowCeiling {
                at: first.lo,
                mass: start,
            });
        }
        let last = self.segments.last().unwrap();
        let total = last.eval(last.hi, c) + self.jump_at_v;
        if (total - 1.0).abs() > CDF_TOL {
            out.push(Violation::MassMismatch { total });
        }
        out
    }

    /// `(x, F(x))` on a uniform grid over `[support low, v]`, merged with the knots.
    pub fn tabulate(&self, points: usize) -> Vec<(f64, f64)> {
        let (lo, _) = self.support();
        let lo = lo.min(self.v);
        let points = points.max(2);
        let mut xs: Vec<f64> = (0..points)
            .map(|i| lo + (self.v - lo) * i as f64 / (points - 1) as f64)
            .chain(self.knots().into_iter().filter(|k| *k >= lo))
            .collect();
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        xs.into_iter().map(|x| (x, self.eval(x))).collect()
    }
}
