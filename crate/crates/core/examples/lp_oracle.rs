//! Solve the discretized ex-interim design problem as a sequence of LPs and
//! compare it with the closed-form mechanism.
//!
//!     cargo run --release --example lp_oracle -- [grid_m] [price_steps]

use std::time::Instant;

use fps_core::obedience::{check, ObedienceMode};
use fps_core::oracle::{oracle_exinterim, price_grid, DEFAULT_GRID_M, DEFAULT_PRICE_STEPS};
use fps_core::signaling::{optimal_ex_interim_multi, revenue_sig, SignalingMechanism};
use fps_core::{Market, QualityDistribution, Rationality, ValuationFunction};

fn main() -> fps_core::Result<()> {
    let mut args = std::env::args().skip(1);
    let m = args.next().and_then(|s| s.parse().ok()).unwrap_or(DEFAULT_GRID_M);
    let steps = args.next().and_then(|s| s.parse().ok()).unwrap_or(DEFAULT_PRICE_STEPS);

    let market = Market::new(
        QualityDistribution::uniform(0.0, 1.0)?,
        vec![ValuationFunction::linear(0.3, 0.4), ValuationFunction::linear(0.0, 1.0)],
    )?;
    let closed = optimal_ex_interim_multi(&market)?;
    println!("argmax recipient: price {:.4}, revenue {:.4}", closed.price, revenue_sig(&closed, &market)?);

    let prices = price_grid(&market, steps);
    for mode in [ObedienceMode::PerBuyer, ObedienceMode::Aggregated] {
        let t = Instant::now();
        let sol = oracle_exinterim(&market, m, &prices, mode)?;
        let mech = SignalingMechanism::new(sol.scheme.clone(), sol.price)?;
        let report = check(&mech, &market, Rationality::ExInterim, mode)?;
        println!(
            "{mode:?}: price {:.4} objective {:.4} ({} LPs, {} pivots, {:.2?}), verdict {:?}",
            sol.price,
            sol.objective,
            sol.lps_solved,
            sol.pivots,
            t.elapsed(),
            report.verdict_in(mode)
        );
    }
    Ok(())
}
