//! Several buyers. Ex-interim: recommending the buyer who values the item
//! most and charging the expected maximum beats any fixed price. Ex-post:
//! full obedience is impossible once two buyers clear the price, but the
//! restricted mechanism still works.
//!
//!     cargo run --example multi_buyer_signaling

use fps_core::fixed_price::optimize;
use fps_core::obedience::{check_exinterim_multi, check_expost_multi, check_expost_recommended_only, ObedienceMode};
use fps_core::signaling::{optimal_ex_interim_multi, optimal_ex_post_restricted, revenue_sig};
use fps_core::{Market, QualityDistribution, Rationality, ValuationFunction};

fn main() -> fps_core::Result<()> {
    let crossing = Market::new(
        QualityDistribution::uniform(0.0, 1.0)?,
        vec![ValuationFunction::linear(0.3, 0.4), ValuationFunction::linear(0.0, 1.0)],
    )?;
    let mech = optimal_ex_interim_multi(&crossing)?;
    let fixed = optimize(&crossing, Rationality::ExInterim)?;
    println!("ex-interim, crossing valuations");
    println!("  signaling revenue {:.6} vs fixed {:.6}", revenue_sig(&mech, &crossing)?, fixed.revenue);
    let report = check_exinterim_multi(&mech, &crossing)?;
    let agg = report.aggregate.as_ref().expect("aggregate present for several buyers");
    println!("  summed slacks {:+.4} / {:+.4}: {:?}", agg.signal1_slack, agg.signal0_slack, agg.verdict);
    for c in &report.constraints {
        println!("  buyer {} signal {}: {:+.4}", c.buyer, c.signal_bit, c.slack);
    }
    println!("  per-buyer verdict {:?}", report.verdict_in(ObedienceMode::PerBuyer));

    let expost = Market::new(
        QualityDistribution::uniform(0.0, 1.0)?,
        vec![ValuationFunction::linear(0.0, 1.0), ValuationFunction::linear(0.0, 0.5)],
    )?;
    println!("ex-post, v = q and 0.5q");
    for p in [0.4, 0.6] {
        let r = check_expost_multi(&expost, p, None)?;
        match &r.witness {
            Some(w) => println!(
                "  p = {p}: {:?}, buyers {:?} both forced on [{:.3}, {:.3}]",
                r.verdict, w.forced_buyers, w.interval.0, w.interval.1
            ),
            None => println!("  p = {p}: {:?}", r.verdict),
        }
    }
    let restricted = optimal_ex_post_restricted(&expost)?;
    let r = check_expost_recommended_only(&restricted, &expost)?;
    println!(
        "  restricted: price {:.6} revenue {:.6}, verdict {:?}",
        restricted.price,
        revenue_sig(&restricted, &expost)?,
        r.verdict
    );
    Ok(())
}
