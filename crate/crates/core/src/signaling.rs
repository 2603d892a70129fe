//! Signaling schemes, Bayesian posteriors, and the closed-form optimal
//! fixed-price signaling mechanisms.
//!
//! A scheme maps each quality to a distribution over `n + 1` action
//! recommendations: signal `0` means "nobody buys" and signal `i + 1` asks
//! buyer `i` (zero-based) to buy. Each buyer only sees one bit: whether the
//! realized signal is addressed to them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fixed_price::maximize_price;
use crate::quality_dist::DiscreteQualityGrid;
use crate::valuation::Market;

/// Signal masses below this are treated as never sent.
pub const NEVER_SENT_MASS: f64 = 1e-12;

/// Action recommendation; `0` is "no sale", `i + 1` addresses buyer `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Signal(pub usize);

impl Signal {
    pub const NO_SALE: Signal = Signal(0);

    pub fn recommend(buyer: usize) -> Self {
        Signal(buyer + 1)
    }

    pub fn buyer(self) -> Option<usize> {
        self.0.checked_sub(1)
    }

    pub fn id(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecipientRule {
    /// Highest `v_i(q)`, lowest index on ties.
    Argmax,
    /// Always the same (zero-based) buyer.
    Buyer(usize),
}

/// Signal constant on `[lo, hi)` (the last segment is closed).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub lo: f64,
    pub hi: f64,
    pub signal: Signal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "representation", rename_all = "snake_case")]
pub enum SignalingScheme {
    /// One buyer: recommend buying iff `q >= threshold`.
    SingleThreshold { threshold: f64 },
    /// Every quality is sold to the buyer picked by `recipient`.
    AlwaysRecommend { recipient: RecipientRule },
    /// Interval `k` is `[cuts[k], cuts[k + 1])` and sends `signals[k]`.
    Partition { cuts: Vec<f64>, signals: Vec<Signal> },
    /// Stochastic scheme on a grid: `probs[k][i]` is the probability of
    /// recommending buyer `i` at `grid.points()[k]`; the rest is signal 0.
    Grid { grid: DiscreteQualityGrid, probs: Vec<Vec<f64>> },
}

impl SignalingScheme {
    /// Checks the scheme against the market's buyer count and support, and
    /// the per-quality probability simplex.
    pub fn validate(&self, market: &Market) -> Result<()> {
        let n = market.buyers();
        let (lo, hi) = market.support();
        match self {
            Self::SingleThreshold { threshold } => {
                if n != 1 {
                    return Err(Error::DimensionMismatch { expected: n, found: 1 });
                }
                if !threshold.is_finite() {
                    return Err(Error::InvalidScheme("threshold must be finite".into()));
                }
            }
            Self::AlwaysRecommend { recipient: RecipientRule::Buyer(i) } => {
                if *i >= n {
                    return Err(Error::DimensionMismatch { expected: n, found: i + 1 });
                }
            }
            Self::AlwaysRecommend { recipient: RecipientRule::Argmax } => {}
            Self::Partition { cuts, signals } => {
                if signals.is_empty() || cuts.len() != signals.len() + 1 {
                    return Err(Error::InvalidScheme("partition needs one more cut than signals".into()));
                }
                if cuts.windows(2).any(|w| w[1] < w[0]) {
                    return Err(Error::InvalidScheme("partition cuts must be nondecreasing".into()));
                }
                if (cuts[0] - lo).abs() > 1e-12 || (cuts[cuts.len() - 1] - hi).abs() > 1e-12 {
                    return Err(Error::InvalidScheme(format!("partition must cover [{lo}, {hi}]")));
                }
                if let Some(s) = signals.iter().find(|s| s.0 > n) {
                    return Err(Error::DimensionMismatch { expected: n, found: s.0 });
                }
            }
            Self::Grid { grid, probs } => {
                if probs.len() != grid.len() {
                    return Err(Error::InvalidScheme("one probability row per grid point".into()));
                }
                for row in probs {
                    if row.len() != n {
                        return Err(Error::DimensionMismatch { expected: n, found: row.len() });
                    }
                    if row.iter().any(|&x| !(-1e-12..=1.0 + 1e-12).contains(&x))
                        || row.iter().sum::<f64>() > 1.0 + 1e-9
                    {
                        return Err(Error::InvalidScheme("grid row leaves the probability simplex".into()));
                    }
                }
                if grid.points().iter().any(|&q| q < lo || q > hi) {
                    return Err(Error::InvalidScheme("grid points outside the support".into()));
                }
            }
        }
        Ok(())
    }

    /// Deterministic schemes as a list of constant-signal segments covering
    /// the support. `None` for grid schemes.
    pub fn segments(&self, market: &Market) -> Option<Vec<Segment>> {
        let (lo, hi) = market.support();
        let segs = match self {
            Self::SingleThreshold { threshold } => {
                let t = threshold.clamp(lo, hi);
                vec![
                    Segment { lo, hi: t, signal: Signal::NO_SALE },
                    Segment { lo: t, hi, signal: Signal::recommend(0) },
                ]
            }
            Self::AlwaysRecommend { recipient: RecipientRule::Buyer(i) } => {
                vec![Segment { lo, hi, signal: Signal::recommend(*i) }]
            }
            Self::AlwaysRecommend { recipient: RecipientRule::Argmax } => {
                let profile = market.profile();
                let mut cuts = vec![lo];
                cuts.extend_from_slice(profile.breakpoints());
                cuts.push(hi);
                cuts.windows(2)
                    .map(|w| Segment {
                        lo: w[0],
                        hi: w[1],
                        signal: Signal::recommend(profile.argmax(0.5 * (w[0] + w[1]))),
                    })
                    .collect()
            }
            Self::Partition { cuts, signals } => cuts
                .windows(2)
                .zip(signals)
                .map(|(w, &signal)| Segment { lo: w[0], hi: w[1], signal })
                .collect(),
            Self::Grid { .. } => return None,
        };
        let mut merged: Vec<Segment> = Vec::with_capacity(segs.len());
        for s in segs.into_iter().filter(|s| s.hi > s.lo) {
            match merged.last_mut() {
                Some(last) if last.signal == s.signal => last.hi = s.hi,
                _ => merged.push(s),
            }
        }
        Some(merged)
    }

    /// `π(q, ·)` indexed by signal id (`n + 1` entries).
    pub fn probabilities(&self, market: &Market, q: f64) -> Vec<f64> {
        let n = market.buyers();
        let mut out = vec![0.0; n + 1];
        match self {
            Self::Grid { grid, probs } => {
                let row = &probs[grid.locate(q)];
                let mut sold = 0.0;
                for (i, &x) in row.iter().enumerate() {
                    out[i + 1] = x;
                    sold += x;
                }
                out[0] = (1.0 - sold).max(0.0);
            }
            _ => {
                let signal = self.signal_at(market, q);
                out[signal.0] = 1.0;
            }
        }
        out
    }

    fn signal_at(&self, market: &Market, q: f64) -> Signal {
        let (lo, hi) = market.support();
        match self {
            Self::SingleThreshold { threshold } => {
                if q >= threshold.clamp(lo, hi) {
                    Signal::recommend(0)
                } else {
                    Signal::NO_SALE
                }
            }
            Self::AlwaysRecommend { recipient: RecipientRule::Buyer(i) } => Signal::recommend(*i),
            Self::AlwaysRecommend { recipient: RecipientRule::Argmax } => {
                Signal::recommend(market.profile().argmax(q))
            }
            Self::Partition { cuts, signals } => {
                let k = cuts.partition_point(|&c| c <= q);
                signals[k.clamp(1, signals.len()) - 1]
            }
            Self::Grid { .. } => unreachable!("grid schemes are stochastic"),
        }
    }

    /// Buyer `i`'s signal weight: `π(q, s_i)` for `bit`, else `1 - π(q, s_i)`.
    fn grid_weight(row: &[f64], buyer: usize, bit: bool) -> f64 {
        if bit {
            row[buyer]
        } else {
            1.0 - row[buyer]
        }
    }

    /// `∫_{q1}^{upper} w(q) g(q) dq` with `w` the buyer's bit-weight. `upper`
    /// of `None` integrates the whole support.
    pub fn signal_mass(&self, market: &Market, buyer: usize, bit: bool, upper: Option<f64>) -> Result<f64> {
        self.check_buyer(market, buyer)?;
        let dist = market.dist();
        match self.segments(market) {
            Some(segs) => Ok(segs
                .iter()
                .filter(|s| (s.signal == Signal::recommend(buyer)) == bit)
                .map(|s| dist.mass(s.lo, upper.map_or(s.hi, |u| s.hi.min(u))))
                .sum()),
            None => {
                let Self::Grid { grid, probs } = self else { unreachable!() };
                Ok(grid_sum(grid, upper, market, |k, _| Self::grid_weight(&probs[k], buyer, bit)))
            }
        }
    }

    /// `∫_{q1}^{upper} w(q) h(q) g(q) dq`, split at the segment boundaries,
    /// the valuation kinks, and `extra_breaks`.
    pub fn signal_integral<H: Fn(f64) -> f64>(
        &self,
        market: &Market,
        buyer: usize,
        bit: bool,
        h: H,
        upper: Option<f64>,
    ) -> Result<f64> {
        self.check_buyer(market, buyer)?;
        let dist = market.dist();
        let breaks = market.profile().breakpoints();
        match self.segments(market) {
            Some(segs) => {
                let mut total = 0.0;
                for s in segs.iter().filter(|s| (s.signal == Signal::recommend(buyer)) == bit) {
                    let hi = upper.map_or(s.hi, |u| s.hi.min(u));
                    total += dist.integrate(&h, s.lo, hi, breaks)?;
                }
                Ok(total)
            }
            None => {
                let Self::Grid { grid, probs } = self else { unreachable!() };
                Ok(grid_sum(grid, upper, market, |k, q| Self::grid_weight(&probs[k], buyer, bit) * h(q)))
            }
        }
    }

    /// Probability that the item is recommended to somebody.
    pub fn sale_probability(&self, market: &Market) -> Result<f64> {
        let mut total = 0.0;
        for i in 0..market.buyers() {
            total += self.signal_mass(market, i, true, None)?;
        }
        Ok(total)
    }

    fn check_buyer(&self, market: &Market, buyer: usize) -> Result<()> {
        if buyer >= market.buyers() {
            return Err(Error::BuyerIndex { index: buyer, buyers: market.buyers() });
        }
        Ok(())
    }
}

// Grid analogue of ∫_{q1}^{upper}: points strictly below `upper`, or all of
// them when integrating the full support.
fn grid_sum<F: Fn(usize, f64) -> f64>(grid: &DiscreteQualityGrid, upper: Option<f64>, market: &Market, f: F) -> f64 {
    let full = upper.is_none_or(|u| u >= market.support().1);
    grid.points()
        .iter()
        .zip(grid.weights())
        .enumerate()
        .filter(|(_, (&q, _))| full || q < upper.unwrap_or(f64::INFINITY))
        .map(|(k, (&q, &w))| w * f(k, q))
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Posterior {
    /// The signal has (numerically) zero probability; no belief is defined.
    NeverSent,
    Belief {
        mass: f64,
        mean_valuation: f64,
        /// Posterior probability that `v_i(q) < price`.
        prob_value_below: f64,
    },
}

/// Buyer `i`'s posterior after seeing `bit`, summarized at `price`.
pub fn posterior_stats(
    scheme: &SignalingScheme,
    market: &Market,
    buyer: usize,
    bit: bool,
    price: f64,
) -> Result<Posterior> {
    let mass = scheme.signal_mass(market, buyer, bit, None)?;
    if mass < NEVER_SENT_MASS {
        return Ok(Posterior::NeverSent);
    }
    let v = market.profile().buyer(buyer)?;
    let value = scheme.signal_integral(market, buyer, bit, |q| v.eval(q), None)?;
    let threshold = market.profile().inverse(buyer, price);
    let below = scheme.signal_mass(market, buyer, bit, Some(threshold))?;
    Ok(Posterior::Belief {
        mass,
        mean_valuation: value / mass,
        prob_value_below: (below / mass).clamp(0.0, 1.0),
    })
}

/// A committed scheme together with its single posted price.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalingMechanism {
    pub scheme: SignalingScheme,
    pub price: f64,
}

impl SignalingMechanism {
    pub fn new(scheme: SignalingScheme, price: f64) -> Result<Self> {
        if !(price >= 0.0 && price.is_finite()) {
            return Err(Error::Domain(format!("price {price} must be finite and nonnegative")));
        }
        Ok(Self { scheme, price })
    }
}

fn require_single(market: &Market) -> Result<()> {
    if market.buyers() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, found: market.buyers() });
    }
    Ok(())
}

/// Recommend buying exactly when `q >= v^{-1}(p)`.
pub fn ex_post_single_scheme(market: &Market, price: f64) -> Result<SignalingScheme> {
    require_single(market)?;
    Ok(SignalingScheme::SingleThreshold { threshold: market.profile().inverse(0, price) })
}

/// `[1 - G(v_min^{-1}(p))] · p`: revenue of recommending some buyer whenever
/// at least one would value the item at `p`.
pub fn revenue_restricted(market: &Market, price: f64) -> f64 {
    (1.0 - market.dist().cdf(market.profile().min_inverse(price))) * price
}

/// Optimal single-buyer mechanism for an ex-post rational buyer.
pub fn optimal_ex_post_single(market: &Market) -> Result<SignalingMechanism> {
    require_single(market)?;
    let best = maximize_price(market, |p| revenue_restricted(market, p));
    SignalingMechanism::new(ex_post_single_scheme(market, best.argmax)?, best.argmax)
}

/// Optimal single-buyer mechanism for an ex-interim buyer: always recommend,
/// charge the prior mean.
pub fn optimal_ex_interim_single(market: &Market) -> Result<SignalingMechanism> {
    require_single(market)?;
    SignalingMechanism::new(
        SignalingScheme::AlwaysRecommend { recipient: RecipientRule::Buyer(0) },
        market.expected_valuation(0)?,
    )
}

/// Optimal mechanism when ex-post buyers may only buy on a recommendation:
/// sell to the buyer with the lowest threshold whenever `q` clears it.
pub fn optimal_ex_post_restricted(market: &Market) -> Result<SignalingMechanism> {
    let best = maximize_price(market, |p| revenue_restricted(market, p));
    let price = best.argmax;
    let profile = market.profile();
    let (lo, hi) = market.support();
    let threshold = profile.min_inverse(price);
    let recipient = profile.argmin_inverse(price);
    SignalingMechanism::new(
        SignalingScheme::Partition {
            cuts: vec![lo, threshold, hi],
            signals: vec![Signal::NO_SALE, Signal::recommend(recipient)],
        },
        price,
    )
}

/// Recommend the buyer with the highest valuation at every quality and charge
/// `E[max_i v_i(q)]`.
pub fn optimal_ex_interim_multi(market: &Market) -> Result<SignalingMechanism> {
    SignalingMechanism::new(
        SignalingScheme::AlwaysRecommend { recipient: RecipientRule::Argmax },
        market.expected_max_valuation()?,
    )
}

/// Expected revenue: sale probability times price.
pub fn revenue_sig(mech: &SignalingMechanism, market: &Market) -> Result<f64> {
    mech.scheme.validate(market)?;
    Ok(mech.scheme.sale_probability(market)? * mech.price)
}
