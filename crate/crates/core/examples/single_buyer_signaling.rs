//! One buyer: the best signaling scheme earns exactly what the best fixed
//! price earns, under either rationality model.
//!
//!     cargo run --example single_buyer_signaling

use fps_core::fixed_price::optimize;
use fps_core::obedience::{check_exinterim_single, check_expost_single};
use fps_core::signaling::{optimal_ex_interim_single, optimal_ex_post_single, revenue_sig};
use fps_core::{Market, QualityDistribution, Rationality, ValuationFunction};

fn main() -> fps_core::Result<()> {
    let market = Market::new(
        QualityDistribution::scaled_beta(2.0, 2.0, 0.0, 1.0)?,
        vec![ValuationFunction::power(1.0, 2.0)],
    )?;

    let post = optimal_ex_post_single(&market)?;
    let report = check_expost_single(&post, &market)?;
    println!("ex-post threshold scheme: {:?}", post.scheme);
    println!(
        "  price {:.6} revenue {:.6}, fixed price earns {:.6}, verdict {:?}",
        post.price,
        revenue_sig(&post, &market)?,
        optimize(&market, Rationality::ExPost)?.revenue,
        report.verdict
    );

    let interim = optimal_ex_interim_single(&market)?;
    let report = check_exinterim_single(&interim, &market)?;
    println!("ex-interim: always recommend at the prior mean");
    println!(
        "  price {:.6} revenue {:.6}, fixed price earns {:.6}, verdict {:?}",
        interim.price,
        revenue_sig(&interim, &market)?,
        optimize(&market, Rationality::ExInterim)?.revenue,
        report.verdict
    );
    for c in &report.constraints {
        println!("    {:<60} slack {:+.3e}{}", c.label, c.slack, if c.vacuous { " (vacuous)" } else { "" });
    }
    Ok(())
}
