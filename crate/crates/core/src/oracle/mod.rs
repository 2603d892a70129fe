//! LP oracles over a discretized quality grid. These solve the mechanism
//! design problems directly, independent of the closed forms in
//! [`crate::signaling`], and are used to cross-check them.

pub mod simplex;

use serde::{Deserialize, Serialize};

pub use simplex::{
    complementary_slackness_residual, solve, solve_with, LinearProgram, LpResult, LpStatus, PivotRule, Relation,
};

use crate::error::{Error, Result};
use crate::obedience::ObedienceMode;
use crate::quality_dist::DiscreteQualityGrid;
use crate::signaling::SignalingScheme;
use crate::valuation::Market;

pub const DEFAULT_GRID_M: usize = 401;
pub const DEFAULT_PRICE_STEPS: usize = 401;
const TIE_TOL: f64 = 1e-9;

/// `steps` equally spaced prices on `[0, max_i v_i(q2)]`.
pub fn price_grid(market: &Market, steps: usize) -> Vec<f64> {
    let top = market.top_valuation();
    match steps {
        0 => Vec::new(),
        1 => vec![top],
        _ => (0..steps).map(|k| top * k as f64 / (steps - 1) as f64).collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSolution {
    pub price: f64,
    pub objective: f64,
    pub scheme: SignalingScheme,
    pub grid_m: usize,
    /// Prices actually solved; the rest were pruned by the revenue bound.
    pub lps_solved: usize,
    pub pivots: usize,
}

/// Column of `x[k][i]`.
fn var(k: usize, i: usize, n: usize) -> usize {
    k * n + i
}

/// The ex-interim program at one price: variables `x[k][i]`, revenue
/// objective, ex-interim obedience rows for `mode` and a probability simplex
/// per grid point. Rows are ordered obedience first, then one simplex row
/// per grid point.
pub fn exinterim_program(market: &Market, grid: &DiscreteQualityGrid, price: f64, mode: ObedienceMode) -> Result<LinearProgram> {
    let n = market.buyers();
    let m = grid.len();
    let nv = n * m;
    let (q, w) = (grid.points(), grid.weights());
    let profile = market.profile();

    let mut objective = vec![0.0; nv];
    for k in 0..m {
        for i in 0..n {
            objective[var(k, i, n)] = price * w[k];
        }
    }
    let mut lp = LinearProgram::new(objective);

    let surplus_row = |i: usize| {
        let mut row = vec![0.0; nv];
        for k in 0..m {
            row[var(k, i, n)] = w[k] * (profile.value(i, q[k]) - price);
        }
        row
    };
    let prior_surplus = |i: usize| grid.expect(|x| profile.value(i, x)) - price;

    // The buy-signal row asks `a·x >= 0` and the no-buy row `a·x >= Ê[v] - p`
    // for the same `a`, so one row with the larger bound is equivalent.
    match mode {
        ObedienceMode::PerBuyer => {
            for i in 0..n {
                lp.push(surplus_row(i), Relation::Ge, prior_surplus(i).max(0.0));
            }
        }
        ObedienceMode::Aggregated => {
            let mut row = vec![0.0; nv];
            let mut rhs = 0.0;
            for i in 0..n {
                for (acc, v) in row.iter_mut().zip(surplus_row(i)) {
                    *acc += v;
                }
                rhs += prior_surplus(i);
            }
            lp.push(row, Relation::Ge, rhs.max(0.0));
        }
        ObedienceMode::RecommendedOnly => {
            for i in 0..n {
                lp.push(surplus_row(i), Relation::Ge, 0.0);
            }
        }
    }
    for k in 0..m {
        let mut row = vec![0.0; nv];
        for i in 0..n {
            row[var(k, i, n)] = 1.0;
        }
        lp.push(row, Relation::Le, 1.0);
    }
    Ok(lp)
}

fn grid_scheme(grid: &DiscreteQualityGrid, n: usize, x: &[f64]) -> SignalingScheme {
    let probs = (0..grid.len())
        .map(|k| {
            let mut row: Vec<f64> = (0..n).map(|i| x[var(k, i, n)].clamp(0.0, 1.0)).collect();
            let s: f64 = row.iter().sum();
            if s > 1.0 {
                row.iter_mut().for_each(|v| *v /= s);
            }
            row
        })
        .collect();
    SignalingScheme::Grid { grid: grid.clone(), probs }
}

/// Largest grid mass that can be recommended to a buyer while the
/// recommended set still has mean value at least `price`. `values` must be
/// nondecreasing along the grid.
pub fn max_recommended_mass(values: &[f64], weights: &[f64], price: f64) -> f64 {
    let mut budget: f64 = values.iter().zip(weights).filter(|(v, _)| **v >= price).map(|(v, w)| w * (v - price)).sum();
    let mut mass: f64 = values.iter().zip(weights).filter(|(v, _)| **v >= price).map(|(_, w)| w).sum();
    // Fill with the cheapest shortfalls, i.e. the highest values below the price.
    for (v, w) in values.iter().zip(weights).rev().filter(|(v, _)| **v < price) {
        let cost = w * (price - v);
        if cost <= budget {
            budget -= cost;
            mass += w;
        } else {
            mass += budget / (price - v);
            break;
        }
    }
    mass
}

/// Upper bound on the program's revenue at `price`: each buyer's
/// recommendation mass is limited by its own buy-signal constraint.
fn revenue_bound(market: &Market, grid: &DiscreteQualityGrid, price: f64, mode: ObedienceMode) -> f64 {
    match mode {
        ObedienceMode::Aggregated => price,
        ObedienceMode::PerBuyer | ObedienceMode::RecommendedOnly => {
            let profile = market.profile();
            let total: f64 = (0..market.buyers())
                .map(|i| {
                    let values: Vec<f64> = grid.points().iter().map(|&q| profile.value(i, q)).collect();
                    max_recommended_mass(&values, grid.weights(), price)
                })
                .sum();
            price * total.min(1.0)
        }
    }
}

/// Best revenue over `prices` of the discretized ex-interim program.
/// Prices are solved in decreasing order of a cheap revenue bound and the
/// search stops once no remaining bound can beat the incumbent; among
/// near-ties the smallest price wins.
pub fn oracle_exinterim(market: &Market, m: usize, prices: &[f64], mode: ObedienceMode) -> Result<OracleSolution> {
    if prices.is_empty() {
        return Err(Error::Domain("price grid is empty".into()));
    }
    if prices.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(Error::Domain("prices must be finite and nonnegative".into()));
    }
    let grid = market.dist().discretize(m)?;
    let n = market.buyers();
    let mut order: Vec<(f64, f64)> = prices.iter().map(|&p| (p, revenue_bound(market, &grid, p, mode))).collect();
    order.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.total_cmp(&b.0)));
    order.dedup_by(|a, b| a.0 == b.0);

    let mut best: Option<(f64, f64, Vec<f64>)> = None;
    let (mut solved, mut pivots) = (0, 0);
    for &(p, bound) in &order {
        if let Some((_, obj, _)) = &best {
            if bound < obj - TIE_TOL {
                break;
            }
        }
        let lp = exinterim_program(market, &grid, p, mode)?;
        let r = solve(&lp);
        solved += 1;
        pivots += r.pivots;
        match r.status {
            LpStatus::Optimal => {}
            LpStatus::Infeasible => continue,
            LpStatus::Unbounded => return Err(Error::Lp(format!("unbounded program at price {p}"))),
        }
        let better = match &best {
            None => true,
            Some((bp, obj, _)) => r.objective > obj + TIE_TOL || (r.objective >= obj - TIE_TOL && p < *bp),
        };
        if better {
            best = Some((p, r.objective, r.solution));
        }
    }
    let (price, objective, x) = best.ok_or_else(|| Error::Lp("no candidate price is feasible".into()))?;
    Ok(OracleSolution { price, objective, scheme: grid_scheme(&grid, n, &x), grid_m: m, lps_solved: solved, pivots })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RestrictedOracleSolution {
    pub price: f64,
    pub objective: f64,
}

/// Grid revenue of the ex-post restricted program at one price: a grid
/// point can be sold iff some buyer values it at `p` or more.
pub fn expost_restricted_objective(market: &Market, grid: &DiscreteQualityGrid, price: f64) -> f64 {
    let profile = market.profile();
    let sold: f64 = grid
        .points()
        .iter()
        .zip(grid.weights())
        .filter(|(&q, _)| (0..profile.len()).any(|i| q >= profile.inverse(i, price)))
        .map(|(_, &w)| w)
        .sum();
    price * sold
}

pub fn oracle_expost_restricted(market: &Market, m: usize, prices: &[f64]) -> Result<RestrictedOracleSolution> {
    if prices.is_empty() {
        return Err(Error::Domain("price grid is empty".into()));
    }
    let grid = market.dist().discretize(m)?;
    let mut best = RestrictedOracleSolution { price: f64::NAN, objective: f64::NEG_INFINITY };
    for &p in prices {
        let obj = expost_restricted_objective(market, &grid, p);
        if obj > best.objective + TIE_TOL || ((obj - best.objective).abs() <= TIE_TOL && p < best.price) {
            best = RestrictedOracleSolution { price: p, objective: obj };
        }
    }
    Ok(best)
}

/// Feasibility of full ex-post obedience at `price` on an `m`-point grid:
/// every buyer must be recommended exactly on the points it values at `p`
/// or more. Infeasible iff two buyers both need grid points.
pub fn oracle_expost_full_infeasible(market: &Market, m: usize, price: f64) -> Result<LpResult> {
    let grid = market.dist().discretize(m)?;
    let n = market.buyers();
    let nv = n * grid.len();
    let (q, w) = (grid.points(), grid.weights());
    let profile = market.profile();

    let mut objective = vec![0.0; nv];
    for k in 0..grid.len() {
        for i in 0..n {
            objective[var(k, i, n)] = price * w[k];
        }
    }
    let mut lp = LinearProgram::new(objective);
    for i in 0..n {
        let theta = profile.inverse(i, price);
        let mut below = vec![0.0; nv];
        let mut above = vec![0.0; nv];
        let (mut any_below, mut above_mass) = (false, 0.0);
        for k in 0..grid.len() {
            if q[k] < theta {
                below[var(k, i, n)] = w[k];
                any_below = true;
            } else {
                above[var(k, i, n)] = w[k];
                above_mass += w[k];
            }
        }
        if any_below {
            lp.push(below, Relation::Eq, 0.0);
        }
        if above_mass > 0.0 {
            lp.push(above, Relation::Eq, above_mass);
        }
    }
    for k in 0..grid.len() {
        let mut row = vec![0.0; nv];
        for i in 0..n {
            row[var(k, i, n)] = 1.0;
        }
        lp.push(row, Relation::Le, 1.0);
    }
    Ok(solve(&lp))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixed_price::Rationality;
    use crate::obedience::{check, Verdict};
    use crate::quality_dist::QualityDistribution;
    use crate::signaling::{revenue_restricted, SignalingMechanism};
    use crate::valuation::ValuationFunction;

    fn uniform(buyers: Vec<ValuationFunction>) -> Market {
        Market::new(QualityDistribution::uniform(0.0, 1.0).unwrap(), buyers).unwrap()
    }

    fn q() -> ValuationFunction {
        ValuationFunction::linear(0.0, 1.0)
    }

    #[test]
    fn single_buyer_matches_prior_mean() {
        let market = uniform(vec![q()]);
        let prices = price_grid(&market, 101);
        let s = oracle_exinterim(&market, 101, &prices, ObedienceMode::PerBuyer).unwrap();
        assert!((s.objective - 0.5).abs() < 1e-9, "{}", s.objective);
        assert!((s.price - 0.5).abs() < 1e-12);
    }

    #[test]
    fn knapsack_mass_examples() {
        let grid = QualityDistribution::uniform(0.0, 1.0).unwrap().discretize(1000).unwrap();
        let q: Vec<f64> = grid.points().to_vec();
        // Mean of [a, 1] is p when a = 2p - 1.
        assert!((max_recommended_mass(&q, grid.weights(), 0.7) - 0.6).abs() < 2e-3);
        assert!((max_recommended_mass(&q, grid.weights(), 0.4) - 1.0).abs() < 1e-12);
        assert_eq!(max_recommended_mass(&q, grid.weights(), 1.5), 0.0);
    }

    #[test]
    fn bound_pruning_matches_exhaustive_scan() {
        let market = uniform(vec![ValuationFunction::linear(0.3, 0.4), q()]);
        let grid = market.dist().discretize(41).unwrap();
        let prices = price_grid(&market, 41);
        let pruned = oracle_exinterim(&market, 41, &prices, ObedienceMode::PerBuyer).unwrap();
        let mut best = (f64::NAN, f64::NEG_INFINITY);
        for &p in &prices {
            let r = solve(&exinterim_program(&market, &grid, p, ObedienceMode::PerBuyer).unwrap());
            assert!(r.status != LpStatus::Optimal || r.objective <= revenue_bound(&market, &grid, p, ObedienceMode::PerBuyer) + 1e-12);
            if r.status == LpStatus::Optimal && r.objective > best.1 + TIE_TOL {
                best = (p, r.objective);
            }
        }
        assert_eq!(pruned.price, best.0);
        assert!((pruned.objective - best.1).abs() < 1e-12);
        assert!(pruned.lps_solved < prices.len());
    }

    #[test]
    fn zero_price_has_zero_revenue() {
        let market = uniform(vec![q()]);
        let s = oracle_exinterim(&market, 51, &[0.0], ObedienceMode::PerBuyer).unwrap();
        assert_eq!(s.objective, 0.0);
    }

    #[test]
    fn solutions_are_feasible_and_audited() {
        let market = uniform(vec![ValuationFunction::linear(0.3, 0.4), q()]);
        let grid = market.dist().discretize(61).unwrap();
        // Below buyer 1's lowest value it must always be recommended, which
        // leaves buyer 2 a no-sale posterior mean of 0.5.
        let low = solve(&exinterim_program(&market, &grid, 0.2, ObedienceMode::PerBuyer).unwrap());
        assert_eq!(low.status, LpStatus::Infeasible);
        assert!(low.phase_one_objective > 1e-6);
        for p in [0.45, 0.5, 0.55] {
            for mode in [ObedienceMode::PerBuyer, ObedienceMode::Aggregated] {
                let lp = exinterim_program(&market, &grid, p, mode).unwrap();
                let r = solve(&lp);
                assert_eq!(r.status, LpStatus::Optimal);
                assert!(lp.max_violation(&r.solution) < 1e-9);
                assert!(complementary_slackness_residual(&lp, &r) < 1e-7);
                assert!(r.objective <= p + 1e-12);
            }
        }
    }

    #[test]
    fn oracle_scheme_passes_obedience_check() {
        let market = uniform(vec![ValuationFunction::linear(0.3, 0.4), q()]);
        let prices = price_grid(&market, 41);
        let s = oracle_exinterim(&market, 41, &prices, ObedienceMode::PerBuyer).unwrap();
        let mech = SignalingMechanism::new(s.scheme.clone(), s.price).unwrap();
        let report = check(&mech, &market, Rationality::ExInterim, ObedienceMode::PerBuyer).unwrap();
        assert!(report.min_slack() > -1e-9, "{report:?}");
        assert_eq!(report.verdict_in(ObedienceMode::PerBuyer), Verdict::Obedient);
    }

    #[test]
    fn pivot_rules_agree_on_mechanism_programs() {
        let market = uniform(vec![ValuationFunction::linear(0.3, 0.4), q()]);
        let grid = market.dist().discretize(41).unwrap();
        for p in [0.3, 0.5, 0.56] {
            let lp = exinterim_program(&market, &grid, p, ObedienceMode::PerBuyer).unwrap();
            let a = solve_with(&lp, PivotRule::Bland);
            let b = solve_with(&lp, PivotRule::DantzigWithBlandFallback);
            assert_eq!(a.status, b.status);
            if a.status == LpStatus::Optimal {
                assert!((a.objective - b.objective).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn aggregated_relaxation_dominates_per_buyer() {
        let market = uniform(vec![ValuationFunction::linear(0.3, 0.4), q()]);
        let prices = price_grid(&market, 41);
        let per = oracle_exinterim(&market, 41, &prices, ObedienceMode::PerBuyer).unwrap();
        let agg = oracle_exinterim(&market, 41, &prices, ObedienceMode::Aggregated).unwrap();
        assert!(agg.objective >= per.objective - 1e-9);
    }

    #[test]
    fn restricted_oracle_tracks_closed_form() {
        let market = uniform(vec![q(), ValuationFunction::linear(0.0, 0.5)]);
        let grid = market.dist().discretize(401).unwrap();
        for p in price_grid(&market, 51) {
            let lp = expost_restricted_objective(&market, &grid, p);
            assert!((lp - revenue_restricted(&market, p)).abs() < 2.0 / 401.0, "p={p}");
        }
        let best = oracle_expost_restricted(&market, 401, &price_grid(&market, 201)).unwrap();
        assert!((best.objective - 0.25).abs() < 0.01);
    }

    #[test]
    fn full_expost_feasibility() {
        let two = uniform(vec![q(), ValuationFunction::linear(0.0, 0.5)]);
        let r = oracle_expost_full_infeasible(&two, 201, 0.4).unwrap();
        assert_eq!(r.status, LpStatus::Infeasible);
        assert!(r.phase_one_objective > 1e-6);
        // Only one buyer can reach 0.6.
        assert_eq!(oracle_expost_full_infeasible(&two, 201, 0.6).unwrap().status, LpStatus::Optimal);
        let one = uniform(vec![q()]);
        assert_eq!(oracle_expost_full_infeasible(&one, 201, 0.4).unwrap().status, LpStatus::Optimal);
    }
}
