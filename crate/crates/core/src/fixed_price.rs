//! Optimal fixed price without any information disclosure.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::numeric::{maximize_on_interval, MaximizerConfig, ScalarMax};
use crate::valuation::Market;

/// How a buyer turns beliefs into a purchase decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rationality {
    /// Buys iff the valuation at the (posterior-certain) quality is at least the price.
    #[serde(alias = "ExPost")]
    ExPost,
    /// Buys iff the posterior expected valuation is at least the price.
    #[serde(alias = "ExInterim")]
    ExInterim,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriceSearch {
    pub grid_points: usize,
    pub bracket: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPriceSolution {
    pub price: f64,
    pub revenue: f64,
    pub rationality: Rationality,
    /// `None` for the closed-form ex-interim price.
    pub search: Option<PriceSearch>,
}

/// `[1 - Π_i G(v_i^{-1}(p))] · p`.
pub fn revenue_ex_post(market: &Market, p: f64) -> f64 {
    let profile = market.profile();
    let unsold: f64 = (0..profile.len())
        .map(|i| market.dist().cdf(profile.inverse(i, p)))
        .product();
    (1.0 - unsold) * p
}

/// `[1 - G(min_i v_i^{-1}(p))] · p`: the revenue when every buyer faces the
/// same realized quality, so the no-sale events are nested rather than
/// independent. Equals [`revenue_ex_post`] for one buyer and is never larger.
pub fn revenue_ex_post_common_quality(market: &Market, p: f64) -> f64 {
    (1.0 - market.dist().cdf(market.profile().min_inverse(p))) * p
}

/// `1{p <= max_i v̄_i} · p`.
pub fn revenue_ex_interim(market: &Market, p: f64) -> Result<f64> {
    let p0 = best_prior_valuation(market)?;
    Ok(if p <= p0 { p } else { 0.0 })
}

fn best_prior_valuation(market: &Market) -> Result<f64> {
    let mut best = f64::NEG_INFINITY;
    for i in 0..market.buyers() {
        best = best.max(market.expected_valuation(i)?);
    }
    Ok(best)
}

/// Maximizes `revenue(p)` over `[0, max_i v_i(q2)]`; smallest price among ties.
pub(crate) fn maximize_price<F: Fn(f64) -> f64>(market: &Market, revenue: F) -> ScalarMax {
    maximize_on_interval(&revenue, 0.0, market.top_valuation(), MaximizerConfig::default())
}

pub fn optimize_ex_post(market: &Market) -> FixedPriceSolution {
    let best = maximize_price(market, |p| revenue_ex_post(market, p));
    FixedPriceSolution {
        price: best.argmax,
        revenue: revenue_ex_post(market, best.argmax),
        rationality: Rationality::ExPost,
        search: Some(PriceSearch { grid_points: best.grid_points, bracket: best.bracket }),
    }
}

/// Post the highest prior mean valuation; the item then always sells.
pub fn optimize_ex_interim(market: &Market) -> Result<FixedPriceSolution> {
    let price = best_prior_valuation(market)?;
    Ok(FixedPriceSolution { price, revenue: price, rationality: Rationality::ExInterim, search: None })
}

pub fn optimize(market: &Market, rationality: Rationality) -> Result<FixedPriceSolution> {
    match rationality {
        Rationality::ExPost => Ok(optimize_ex_post(market)),
        Rationality::ExInterim => optimize_ex_interim(market),
    }
}
