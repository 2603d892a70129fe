//! Numerical checks of the obedience constraints: a buyer told to buy must
//! want to buy, and a buyer not told to buy must not want to.
//!
//! Every constraint is reported as a slack that is nonnegative when the
//! constraint holds. Constraints attached to a signal that is never sent are
//! vacuous and skipped by the verdict.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signaling::{SignalingMechanism, SignalingScheme, NEVER_SENT_MASS};
use crate::fixed_price::Rationality;
use crate::valuation::Market;

/// Slack below which a constraint counts as violated.
pub const SLACK_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Obedient,
    Violated,
    /// No scheme at this price can be obedient for every buyer.
    NoObedientMechanismExists,
    /// At most one buyer is ever forced to buy; the single-buyer analysis applies.
    ReducesToSingleBuyer,
}

/// Which family of constraints a mechanism is held to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObedienceMode {
    /// Both signal constraints, separately for every buyer.
    #[default]
    PerBuyer,
    /// Only the "buy" recommendation must be followed; unrecommended buyers
    /// cannot purchase.
    RecommendedOnly,
    /// Constraints summed across buyers.
    Aggregated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintSlack {
    pub label: String,
    pub buyer: usize,
    pub signal_bit: u8,
    pub slack: f64,
    pub vacuous: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfeasibilityWitness {
    /// Qualities on which at least two buyers must each be recommended with
    /// probability one.
    pub interval: (f64, f64),
    pub interval_mass: f64,
    pub forced_buyers: Vec<usize>,
    pub thresholds: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateCheck {
    pub signal1_slack: f64,
    pub signal0_slack: f64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObedienceReport {
    pub constraints: Vec<ConstraintSlack>,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<InfeasibilityWitness>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub aggregate: Option<AggregateCheck>,
}

impl ObedienceReport {
    fn from_constraints(constraints: Vec<ConstraintSlack>) -> Self {
        let verdict = verdict_of(&constraints);
        Self { constraints, verdict, witness: None, aggregate: None }
    }

    /// Verdict under `mode`; falls back to the per-buyer verdict when no
    /// aggregate was computed.
    pub fn verdict_in(&self, mode: ObedienceMode) -> Verdict {
        match (mode, &self.aggregate) {
            (ObedienceMode::Aggregated, Some(agg)) => agg.verdict,
            _ => self.verdict,
        }
    }

    pub fn min_slack(&self) -> f64 {
        self.constraints
            .iter()
            .filter(|c| !c.vacuous)
            .map(|c| c.slack)
            .fold(f64::INFINITY, f64::min)
    }
}

fn verdict_of(constraints: &[ConstraintSlack]) -> Verdict {
    if constraints.iter().all(|c| c.vacuous || c.slack >= -SLACK_TOL) {
        Verdict::Obedient
    } else {
        Verdict::Violated
    }
}

fn require_single(market: &Market) -> Result<()> {
    if market.buyers() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, found: market.buyers() });
    }
    Ok(())
}

// Signal-1 mass below the threshold must vanish; signal-0 mass above it must vanish.
fn expost_constraints(scheme: &SignalingScheme, market: &Market, buyer: usize, price: f64) -> Result<Vec<ConstraintSlack>> {
    let threshold = market.profile().inverse(buyer, price);
    let mass1 = scheme.signal_mass(market, buyer, true, None)?;
    let mass0 = scheme.signal_mass(market, buyer, false, None)?;
    let below1 = scheme.signal_mass(market, buyer, true, Some(threshold))?;
    let below0 = scheme.signal_mass(market, buyer, false, Some(threshold))?;
    Ok(vec![
        ConstraintSlack {
            label: "buy recommendation never sent below the valuation threshold".into(),
            buyer,
            signal_bit: 1,
            slack: -below1,
            vacuous: mass1 < NEVER_SENT_MASS,
        },
        ConstraintSlack {
            label: "no-buy recommendation never sent above the valuation threshold".into(),
            buyer,
            signal_bit: 0,
            slack: -(mass0 - below0).max(0.0),
            vacuous: mass0 < NEVER_SENT_MASS,
        },
    ])
}

fn exinterim_constraints(scheme: &SignalingScheme, market: &Market, buyer: usize, price: f64) -> Result<Vec<ConstraintSlack>> {
    let v = market.profile().buyer(buyer)?;
    let mass1 = scheme.signal_mass(market, buyer, true, None)?;
    let mass0 = scheme.signal_mass(market, buyer, false, None)?;
    let slack1 = scheme.signal_integral(market, buyer, true, |q| v.eval(q) - price, None)?;
    let prior_surplus = match scheme {
        // Keep the grid program internally consistent: grid expectation, not quadrature.
        SignalingScheme::Grid { grid, .. } => grid.expect(|q| v.eval(q)) - price,
        _ => market.expected_valuation(buyer)? - price,
    };
    Ok(vec![
        ConstraintSlack {
            label: "expected surplus after a buy recommendation is nonnegative".into(),
            buyer,
            signal_bit: 1,
            slack: slack1,
            vacuous: mass1 < NEVER_SENT_MASS,
        },
        ConstraintSlack {
            label: "expected surplus after a no-buy recommendation is nonpositive".into(),
            buyer,
            signal_bit: 0,
            slack: slack1 - prior_surplus,
            vacuous: mass0 < NEVER_SENT_MASS,
        },
    ])
}

pub fn check_expost_single(mech: &SignalingMechanism, market: &Market) -> Result<ObedienceReport> {
    require_single(market)?;
    mech.scheme.validate(market)?;
    Ok(ObedienceReport::from_constraints(expost_constraints(&mech.scheme, market, 0, mech.price)?))
}

pub fn check_exinterim_single(mech: &SignalingMechanism, market: &Market) -> Result<ObedienceReport> {
    require_single(market)?;
    mech.scheme.validate(market)?;
    Ok(ObedienceReport::from_constraints(exinterim_constraints(&mech.scheme, market, 0, mech.price)?))
}

/// Ex-post buyers who may only buy on a recommendation: just the signal-1
/// constraint per buyer.
pub fn check_expost_recommended_only(mech: &SignalingMechanism, market: &Market) -> Result<ObedienceReport> {
    mech.scheme.validate(market)?;
    let mut constraints = Vec::new();
    for i in 0..market.buyers() {
        constraints.extend(
            expost_constraints(&mech.scheme, market, i, mech.price)?
                .into_iter()
                .filter(|c| c.signal_bit == 1),
        );
    }
    Ok(ObedienceReport::from_constraints(constraints))
}

/// Decides whether any scheme can be obedient for several ex-post buyers at
/// `price`. Every buyer whose valuation threshold leaves prior mass above it
/// must be recommended with probability one there; two such buyers overlap on
/// `[second-lowest threshold, q2]`, which the probability simplex forbids.
/// With `scheme`, its per-constraint slacks are reported as well.
pub fn check_expost_multi(market: &Market, price: f64, scheme: Option<&SignalingScheme>) -> Result<ObedienceReport> {
    let (_, hi) = market.support();
    let profile = market.profile();
    let thresholds: Vec<f64> = (0..market.buyers()).map(|i| profile.inverse(i, price)).collect();
    let mut forced: Vec<usize> = (0..market.buyers())
        .filter(|&i| market.dist().mass(thresholds[i], hi) > NEVER_SENT_MASS)
        .collect();
    forced.sort_by(|&a, &b| thresholds[a].total_cmp(&thresholds[b]).then(a.cmp(&b)));

    let mut constraints = Vec::new();
    if let Some(s) = scheme {
        s.validate(market)?;
        for i in 0..market.buyers() {
            constraints.extend(expost_constraints(s, market, i, price)?);
        }
    }

    if forced.len() >= 2 {
        let lo = thresholds[forced[1]];
        return Ok(ObedienceReport {
            constraints,
            verdict: Verdict::NoObedientMechanismExists,
            witness: Some(InfeasibilityWitness {
                interval: (lo, hi),
                interval_mass: market.dist().mass(lo, hi),
                forced_buyers: forced,
                thresholds,
            }),
            aggregate: None,
        });
    }
    let verdict = if scheme.is_some() {
        verdict_of(&constraints)
    } else if market.buyers() == 1 {
        Verdict::Obedient
    } else {
        Verdict::ReducesToSingleBuyer
    };
    Ok(ObedienceReport { constraints, verdict, witness: None, aggregate: None })
}

/// Per-buyer ex-interim constraints, plus their sums across buyers.
pub fn check_exinterim_multi(mech: &SignalingMechanism, market: &Market) -> Result<ObedienceReport> {
    mech.scheme.validate(market)?;
    let mut constraints = Vec::new();
    for i in 0..market.buyers() {
        constraints.extend(exinterim_constraints(&mech.scheme, market, i, mech.price)?);
    }
    let sum = |bit: u8| -> f64 {
        constraints
            .iter()
            .filter(|c| c.signal_bit == bit && !c.vacuous)
            .map(|c| c.slack)
            .sum()
    };
    let (signal1_slack, signal0_slack) = (sum(1), sum(0));
    let agg_verdict = if signal1_slack >= -SLACK_TOL && signal0_slack >= -SLACK_TOL {
        Verdict::Obedient
    } else {
        Verdict::Violated
    };
    let mut report = ObedienceReport::from_constraints(constraints);
    report.aggregate = Some(AggregateCheck { signal1_slack, signal0_slack, verdict: agg_verdict });
    Ok(report)
}

/// Dispatches to the checker matching the buyer count, rationality and mode.
pub fn check(mech: &SignalingMechanism, market: &Market, rationality: Rationality, mode: ObedienceMode) -> Result<ObedienceReport> {
    match (rationality, mode, market.buyers()) {
        (Rationality::ExPost, ObedienceMode::RecommendedOnly, _) => check_expost_recommended_only(mech, market),
        (Rationality::ExPost, _, 1) => check_expost_single(mech, market),
        (Rationality::ExPost, _, _) => check_expost_multi(market, mech.price, Some(&mech.scheme)),
        (Rationality::ExInterim, _, 1) => {
            let mut r = check_exinterim_single(mech, market)?;
            let c1 = r.constraints.iter().find(|c| c.signal_bit == 1).map_or(0.0, |c| if c.vacuous { 0.0 } else { c.slack });
            let c0 = r.constraints.iter().find(|c| c.signal_bit == 0).map_or(0.0, |c| if c.vacuous { 0.0 } else { c.slack });
            r.aggregate = Some(AggregateCheck { signal1_slack: c1, signal0_slack: c0, verdict: r.verdict });
            Ok(r)
        }
        (Rationality::ExInterim, _, _) => check_exinterim_multi(mech, market),
    }
}
