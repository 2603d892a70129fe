//! Monte-Carlo replay of a single sale: nature draws `q`, the seller sends
//! signals, buyers decide from their posteriors and one willing buyer is
//! picked uniformly at random.
//!
//! Trial `t` under seed `s` always uses the ChaCha stream `(s, t)`, so results
//! do not depend on how trials are split across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fixed_price::Rationality;
use crate::signaling::{posterior_stats, Posterior, SignalingMechanism};
use crate::valuation::Market;

/// Slack allowed when comparing a posterior against the price.
pub const DECISION_TOL: f64 = 1e-9;
const CHUNK: usize = 4096;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Mechanism {
    FixedPrice { price: f64 },
    Signaling(SignalingMechanism),
}

impl Mechanism {
    pub fn price(&self) -> f64 {
        match self {
            Self::FixedPrice { price } => *price,
            Self::Signaling(m) => m.price,
        }
    }
}

/// How buyers react to a recommendation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Behavior {
    /// Each buyer buys iff its own posterior justifies it, whatever bit it got.
    #[default]
    PerBuyerObedience,
    /// Buyers buy exactly when recommended.
    FollowRecommendation,
}

/// What an ex-post buyer facing a plain fixed price looks at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QualityObservation {
    /// Every buyer sees the one realized quality.
    #[default]
    Common,
    /// Buyer 0 sees the realized quality and every other buyer an
    /// independent draw from the prior. Reproduces the product-of-CDFs
    /// revenue formula.
    IndependentPerBuyer,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub quality: f64,
    /// Bit `i` is set iff buyer `i` was recommended. Empty without signaling.
    pub bits: Vec<bool>,
    pub willing: Vec<usize>,
    pub winner: Option<usize>,
    pub revenue: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RevenueEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub trials: usize,
    pub seed: u64,
}

/// Streaming mean and sum of squared deviations.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: usize,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    fn merge(self, o: Moments) -> Moments {
        if self.n == 0 {
            return o;
        }
        if o.n == 0 {
            return self;
        }
        let n = self.n + o.n;
        let d = o.mean - self.mean;
        Moments {
            n,
            mean: self.mean + d * o.n as f64 / n as f64,
            m2: self.m2 + o.m2 + d * d * (self.n as f64 * o.n as f64) / n as f64,
        }
    }
}

/// Everything a trial needs that does not depend on `q`.
#[derive(Debug, Clone)]
pub struct Simulator<'a> {
    market: &'a Market,
    mechanism: &'a Mechanism,
    rationality: Rationality,
    behavior: Behavior,
    observation: QualityObservation,
    /// `willing[i][bit]` for signaling mechanisms under per-buyer obedience.
    willing: Vec<[bool; 2]>,
    prior_willing: Vec<bool>,
}

fn buys(posterior: Posterior, rationality: Rationality, price: f64) -> bool {
    match posterior {
        Posterior::NeverSent => false,
        Posterior::Belief { prob_value_below, mean_valuation, .. } => match rationality {
            Rationality::ExPost => prob_value_below <= DECISION_TOL,
            Rationality::ExInterim => mean_valuation >= price - DECISION_TOL,
        },
    }
}

impl<'a> Simulator<'a> {
    pub fn new(market: &'a Market, mechanism: &'a Mechanism, rationality: Rationality, behavior: Behavior) -> Result<Self> {
        let n = market.buyers();
        let price = mechanism.price();
        if !(price.is_finite() && price >= 0.0) {
            return Err(Error::Domain(format!("price {price} must be finite and nonnegative")));
        }
        let mut willing = Vec::new();
        if let Mechanism::Signaling(mech) = mechanism {
            mech.scheme.validate(market)?;
            for i in 0..n {
                let mut pair = [false; 2];
                for (bit, slot) in [false, true].into_iter().zip(pair.iter_mut()) {
                    *slot = buys(posterior_stats(&mech.scheme, market, i, bit, price)?, rationality, price);
                }
                willing.push(pair);
            }
        }
        let mut prior_willing = Vec::with_capacity(n);
        for i in 0..n {
            prior_willing.push(market.expected_valuation(i)? >= price - DECISION_TOL);
        }
        Ok(Self {
            market,
            mechanism,
            rationality,
            behavior,
            observation: QualityObservation::default(),
            willing,
            prior_willing,
        })
    }

    pub fn with_observation(mut self, observation: QualityObservation) -> Self {
        self.observation = observation;
        self
    }

    pub fn trial(&self, seed: u64, index: u64) -> TrialOutcome {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        let q = self.market.dist().sample(&mut rng);
        let n = self.market.buyers();
        let price = self.mechanism.price();
        let profile = self.market.profile();

        let (bits, willing): (Vec<bool>, Vec<usize>) = match self.mechanism {
            Mechanism::FixedPrice { .. } => {
                let seen: Vec<f64> = (0..n)
                    .map(|i| match self.observation {
                        QualityObservation::IndependentPerBuyer if i > 0 => self.market.dist().sample(&mut rng),
                        _ => q,
                    })
                    .collect();
                let willing = (0..n)
                    .filter(|&i| match self.rationality {
                        // The buyer acts on the quality it observes.
                        Rationality::ExPost => profile.value(i, seen[i]) >= price,
                        Rationality::ExInterim => self.prior_willing[i],
                    })
                    .collect();
                (Vec::new(), willing)
            }
            Mechanism::Signaling(mech) => {
                let probs = mech.scheme.probabilities(self.market, q);
                let signal = draw_signal(&probs, &mut rng);
                let bits: Vec<bool> = (0..n).map(|i| signal == i + 1).collect();
                let willing = (0..n)
                    .filter(|&i| match self.behavior {
                        Behavior::FollowRecommendation => bits[i],
                        Behavior::PerBuyerObedience => self.willing[i][bits[i] as usize],
                    })
                    .collect();
                (bits, willing)
            }
        };
        let winner = match willing.len() {
            0 => None,
            1 => Some(willing[0]),
            k => Some(willing[rng.random_range(0..k)]),
        };
        TrialOutcome { quality: q, bits, willing, winner, revenue: if winner.is_some() { price } else { 0.0 } }
    }

    pub fn run(&self, trials: usize, seed: u64) -> Result<RevenueEstimate> {
        if trials == 0 {
            return Err(Error::Domain("trials must be at least 1".into()));
        }
        let chunks: Vec<Moments> = (0..trials.div_ceil(CHUNK))
            .into_par_iter()
            .map(|c| {
                let mut acc = Moments::default();
                for t in c * CHUNK..((c + 1) * CHUNK).min(trials) {
                    acc.push(self.trial(seed, t as u64).revenue);
                }
                acc
            })
            .collect();
        let total = chunks.into_iter().fold(Moments::default(), Moments::merge);
        let stderr = if total.n > 1 { (total.m2 / (total.n - 1) as f64).sqrt() / (total.n as f64).sqrt() } else { 0.0 };
        Ok(RevenueEstimate { mean: total.mean, stderr, trials, seed })
    }

    pub fn outcomes(&self, trials: usize, seed: u64) -> Vec<TrialOutcome> {
        (0..trials as u64).into_par_iter().map(|t| self.trial(seed, t)).collect()
    }
}

fn draw_signal<R: Rng>(probs: &[f64], rng: &mut R) -> usize {
    // Deterministic rows consume no randomness.
    if let Some(k) = probs.iter().position(|&p| p >= 1.0) {
        return k;
    }
    let u: f64 = rng.random::<f64>() * probs.iter().sum::<f64>();
    let mut acc = 0.0;
    for (k, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return k;
        }
    }
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

pub fn run_trials(
    market: &Market,
    mechanism: &Mechanism,
    rationality: Rationality,
    behavior: Behavior,
    trials: usize,
    seed: u64,
) -> Result<RevenueEstimate> {
    Simulator::new(market, mechanism, rationality, behavior)?.run(trials, seed)
}

/// One row per trial: `trial,quality,bits,willing,winner,revenue`, with
/// buyer lists joined by `;`.
pub fn outcomes_csv(outcomes: &[TrialOutcome]) -> String {
    let mut out = String::from("trial,quality,bits,willing,winner,revenue\n");
    for (t, o) in outcomes.iter().enumerate() {
        let bits: String = o.bits.iter().map(|&b| if b { '1' } else { '0' }).collect();
        let willing: Vec<String> = o.willing.iter().map(|i| i.to_string()).collect();
        let winner = o.winner.map(|w| w.to_string()).unwrap_or_default();
        out.push_str(&format!("{t},{},{bits},{},{winner},{}\n", o.quality, willing.join(";"), o.revenue));
    }
    out
}
