//! Buyer valuation functions `v_i(q)` and the market they live in.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::bisect_increasing;
use crate::quality_dist::QualityDistribution;

const MONOTONE_CHECK_POINTS: usize = 1024;
const CROSSING_SCAN_POINTS: usize = 256;

/// A strictly increasing valuation of quality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", content = "params")]
pub enum ValuationFunction {
    /// `a + b q`
    Linear { a: f64, b: f64 },
    /// `scale * q^exponent` on a nonnegative support.
    Power { scale: f64, exponent: f64 },
    /// Linear interpolation through `(quality, value)` points.
    PiecewiseLinearIncreasing { points: Vec<(f64, f64)> },
}

impl ValuationFunction {
    pub fn linear(a: f64, b: f64) -> Self {
        Self::Linear { a, b }
    }

    pub fn power(scale: f64, exponent: f64) -> Self {
        Self::Power { scale, exponent }
    }

    pub fn eval(&self, q: f64) -> f64 {
        match self {
            Self::Linear { a, b } => a + b * q,
            Self::Power { scale, exponent } => scale * q.max(0.0).powf(*exponent),
            Self::PiecewiseLinearIncreasing { points } => {
                let k = points.partition_point(|p| p.0 <= q).clamp(1, points.len() - 1);
                let (qa, va) = points[k - 1];
                let (qb, vb) = points[k];
                va + (vb - va) * (q - qa) / (qb - qa)
            }
        }
    }

    /// Quality at which the valuation reaches `p`, clamped to the support so
    /// that `G(inverse(p)) = Pr{v(q) < p}` at both extremes.
    pub fn inverse(&self, p: f64, support: (f64, f64)) -> f64 {
        let (lo, hi) = support;
        if p <= self.eval(lo) {
            return lo;
        }
        if p >= self.eval(hi) {
            return hi;
        }
        bisect_increasing(|q| self.eval(q), p, lo, hi)
    }

    fn kinks(&self) -> Vec<f64> {
        match self {
            Self::PiecewiseLinearIncreasing { points } => points.iter().map(|p| p.0).collect(),
            _ => Vec::new(),
        }
    }

    fn validate(&self, support: (f64, f64)) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidValuation(msg));
        let (lo, hi) = support;
        match self {
            Self::Linear { a, b } => {
                if !(a.is_finite() && b.is_finite() && *b > 0.0) {
                    return bad(format!("linear valuation needs slope b > 0, got a={a}, b={b}"));
                }
            }
            Self::Power { scale, exponent } => {
                if !(*scale > 0.0 && *exponent > 0.0 && scale.is_finite() && exponent.is_finite()) {
                    return bad(format!("power valuation needs scale, exponent > 0, got {scale}, {exponent}"));
                }
                if lo < 0.0 {
                    return bad("power valuation requires a nonnegative support".into());
                }
            }
            Self::PiecewiseLinearIncreasing { points } => {
                if points.len() < 2 {
                    return bad("piecewise valuation needs at least two points".into());
                }
                if points.windows(2).any(|w| !(w[1].0 > w[0].0 && w[1].1 > w[0].1)) {
                    return bad("piecewise valuation points must increase in quality and value".into());
                }
                if points[0].0 > lo || points[points.len() - 1].0 < hi {
                    return bad(format!("piecewise valuation must cover the support [{lo}, {hi}]"));
                }
            }
        }
        let step = (hi - lo) / (MONOTONE_CHECK_POINTS - 1) as f64;
        let mut prev = self.eval(lo);
        if !(prev >= 0.0) {
            return bad(format!("valuation is negative at q={lo}"));
        }
        for k in 1..MONOTONE_CHECK_POINTS {
            let q = if k + 1 == MONOTONE_CHECK_POINTS { hi } else { lo + step * k as f64 };
            let v = self.eval(q);
            if !(v > prev) {
                return bad(format!("valuation is not strictly increasing near q={q}"));
            }
            prev = v;
        }
        Ok(())
    }
}

/// The ordered buyers of a market, validated against a support.
#[derive(Debug, Clone, PartialEq)]
pub struct ValuationProfile {
    buyers: Vec<ValuationFunction>,
    support: (f64, f64),
    breakpoints: Vec<f64>,
}

impl ValuationProfile {
    pub fn new(buyers: Vec<ValuationFunction>, support: (f64, f64)) -> Result<Self> {
        if buyers.is_empty() {
            return Err(Error::InvalidValuation("a market needs at least one buyer".into()));
        }
        for v in &buyers {
            v.validate(support)?;
        }
        let mut breakpoints: Vec<f64> = buyers.iter().flat_map(|v| v.kinks()).collect();
        for i in 0..buyers.len() {
            for j in i + 1..buyers.len() {
                breakpoints.extend(crossings(&buyers[i], &buyers[j], support));
            }
        }
        let (lo, hi) = support;
        breakpoints.retain(|&q| q > lo && q < hi);
        breakpoints.sort_by(f64::total_cmp);
        breakpoints.dedup();
        Ok(Self { buyers, support, breakpoints })
    }

    pub fn len(&self) -> usize {
        self.buyers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buyers.is_empty()
    }

    pub fn buyers(&self) -> &[ValuationFunction] {
        &self.buyers
    }

    pub fn buyer(&self, i: usize) -> Result<&ValuationFunction> {
        self.buyers.get(i).ok_or(Error::BuyerIndex { index: i, buyers: self.buyers.len() })
    }

    pub fn support(&self) -> (f64, f64) {
        self.support
    }

    /// Interior kinks of any `v_i` and pairwise crossing points.
    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn value(&self, i: usize, q: f64) -> f64 {
        self.buyers[i].eval(q)
    }

    pub fn max_value(&self, q: f64) -> f64 {
        self.buyers.iter().map(|v| v.eval(q)).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Buyer with the highest valuation at `q`; lowest index on ties.
    pub fn argmax(&self, q: f64) -> usize {
        let mut best = 0;
        let mut best_v = self.buyers[0].eval(q);
        for (i, v) in self.buyers.iter().enumerate().skip(1) {
            let x = v.eval(q);
            if x > best_v {
                best = i;
                best_v = x;
            }
        }
        best
    }

    pub fn inverse(&self, i: usize, p: f64) -> f64 {
        self.buyers[i].inverse(p, self.support)
    }

    pub fn min_inverse(&self, p: f64) -> f64 {
        (0..self.len()).map(|i| self.inverse(i, p)).fold(f64::INFINITY, f64::min)
    }

    pub fn max_inverse(&self, p: f64) -> f64 {
        (0..self.len()).map(|i| self.inverse(i, p)).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Buyer attaining [`min_inverse`](Self::min_inverse); lowest index on ties.
    pub fn argmin_inverse(&self, p: f64) -> usize {
        let mut best = 0;
        let mut best_q = self.inverse(0, p);
        for i in 1..self.len() {
            let q = self.inverse(i, p);
            if q < best_q {
                best = i;
                best_q = q;
            }
        }
        best
    }
}

// Sign changes of v - w on a coarse scan, refined by bisection. Profiles with
// several crossings inside one scan cell are not resolved.
fn crossings(v: &ValuationFunction, w: &ValuationFunction, (lo, hi): (f64, f64)) -> Vec<f64> {
    let diff = |q: f64| v.eval(q) - w.eval(q);
    let step = (hi - lo) / (CROSSING_SCAN_POINTS - 1) as f64;
    let grid: Vec<f64> = (0..CROSSING_SCAN_POINTS)
        .map(|k| if k + 1 == CROSSING_SCAN_POINTS { hi } else { lo + step * k as f64 })
        .collect();
    let mut out = Vec::new();
    for pair in grid.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let (da, db) = (diff(a), diff(b));
        if da == 0.0 {
            if db != 0.0 {
                out.push(a);
            }
        } else if da * db < 0.0 {
            let (mut x, mut y) = (a, b);
            for _ in 0..200 {
                let m = 0.5 * (x + y);
                if m <= x || m >= y {
                    break;
                }
                if diff(m) * da > 0.0 {
                    x = m;
                } else {
                    y = m;
                }
            }
            out.push(0.5 * (x + y));
        }
    }
    out
}

/// A quality prior together with the buyers' valuations.
#[derive(Debug, Clone, PartialEq)]
pub struct Market {
    dist: QualityDistribution,
    profile: ValuationProfile,
}

impl Market {
    pub fn new(dist: QualityDistribution, buyers: Vec<ValuationFunction>) -> Result<Self> {
        let profile = ValuationProfile::new(buyers, dist.support())?;
        Ok(Self { dist, profile })
    }

    pub fn dist(&self) -> &QualityDistribution {
        &self.dist
    }

    pub fn profile(&self) -> &ValuationProfile {
        &self.profile
    }

    pub fn buyers(&self) -> usize {
        self.profile.len()
    }

    pub fn support(&self) -> (f64, f64) {
        self.dist.support()
    }

    /// `v̄_i = E[v_i(q)]`.
    pub fn expected_valuation(&self, i: usize) -> Result<f64> {
        let v = self.profile.buyer(i)?;
        self.dist.expect(|q| v.eval(q), self.profile.breakpoints())
    }

    /// `E[max_i v_i(q)]`, integrated piecewise between crossing points.
    pub fn expected_max_valuation(&self) -> Result<f64> {
        self.dist.expect(|q| self.profile.max_value(q), self.profile.breakpoints())
    }

    /// Highest valuation any buyer can have, `max_i v_i(q2)`.
    pub fn top_valuation(&self) -> f64 {
        self.profile.max_value(self.support().1)
    }
}
