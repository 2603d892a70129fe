//! Side-by-side revenue of every mechanism space on a handful of markets.
//!
//!     cargo run --release --example revenue_table

use fps_core::fixed_price::optimize;
use fps_core::signaling::{
    optimal_ex_interim_multi, optimal_ex_interim_single, optimal_ex_post_restricted, optimal_ex_post_single, revenue_sig,
};
use fps_core::{Market, QualityDistribution, Rationality, ValuationFunction};

fn main() -> fps_core::Result<()> {
    let q = ValuationFunction::linear(0.0, 1.0);
    let q2 = ValuationFunction::power(1.0, 2.0);
    let beta = QualityDistribution::scaled_beta(2.0, 2.0, 0.0, 1.0)?;
    let unif = QualityDistribution::uniform(0.0, 1.0)?;
    let markets = [
        ("U[0,1] {q}", Market::new(unif.clone(), vec![q.clone()])?),
        ("Beta(2,2) {q^2}", Market::new(beta.clone(), vec![q2.clone()])?),
        ("U[0,1] {q, q}", Market::new(unif.clone(), vec![q.clone(), q.clone()])?),
        ("U[0,1] {0.3+0.4q, q}", Market::new(unif.clone(), vec![ValuationFunction::linear(0.3, 0.4), q.clone()])?),
        ("Beta(2,2) {q, q^2}", Market::new(beta, vec![q.clone(), q2])?),
    ];
    println!("{:<22} {:>10} {:>10} {:>10} {:>10}", "market", "fix/post", "sig/post", "fix/intr", "sig/intr");
    for (name, m) in &markets {
        let (sig_post, sig_interim) = if m.buyers() == 1 {
            (optimal_ex_post_single(m)?, optimal_ex_interim_single(m)?)
        } else {
            (optimal_ex_post_restricted(m)?, optimal_ex_interim_multi(m)?)
        };
        println!(
            "{name:<22} {:>10.6} {:>10.6} {:>10.6} {:>10.6}",
            optimize(m, Rationality::ExPost)?.revenue,
            revenue_sig(&sig_post, m)?,
            optimize(m, Rationality::ExInterim)?.revenue,
            revenue_sig(&sig_interim, m)?
        );
    }
    Ok(())
}
