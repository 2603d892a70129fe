//! Replays mechanisms trial by trial and compares the sample revenue with
//! the closed forms.
//!
//!     cargo run --release --example monte_carlo -- [trials] [seed]

use fps_core::fixed_price::{optimize_ex_post, revenue_ex_post, revenue_ex_post_common_quality};
use fps_core::signaling::{optimal_ex_interim_multi, optimal_ex_post_single, revenue_sig};
use fps_core::simulate::{Behavior, Mechanism, QualityObservation, RevenueEstimate, Simulator};
use fps_core::{Market, QualityDistribution, Rationality, ValuationFunction};

fn show(label: &str, est: &RevenueEstimate, exact: f64) {
    let z = if est.stderr > 0.0 { (est.mean - exact) / est.stderr } else { 0.0 };
    println!("{label:<44} {:.6} ± {:.6}  exact {exact:.6}  z {z:+.2}", est.mean, est.stderr);
}

fn main() -> fps_core::Result<()> {
    let mut args = std::env::args().skip(1);
    let trials = args.next().and_then(|s| s.parse().ok()).unwrap_or(100_000);
    let seed = args.next().and_then(|s| s.parse().ok()).unwrap_or(7);
    let q = ValuationFunction::linear(0.0, 1.0);

    let one = Market::new(QualityDistribution::uniform(0.0, 1.0)?, vec![q.clone()])?;
    let p = optimize_ex_post(&one).price;
    let est = Simulator::new(&one, &Mechanism::FixedPrice { price: p }, Rationality::ExPost, Behavior::default())?
        .run(trials, seed)?;
    show("fixed price, one buyer", &est, revenue_ex_post(&one, p));

    let mech = optimal_ex_post_single(&one)?;
    let exact = revenue_sig(&mech, &one)?;
    let sig = Mechanism::Signaling(mech);
    let est = Simulator::new(&one, &sig, Rationality::ExPost, Behavior::default())?.run(trials, seed)?;
    show("threshold scheme, one buyer", &est, exact);

    let two = Market::new(QualityDistribution::uniform(0.0, 1.0)?, vec![q.clone(), q.clone()])?;
    let p = optimize_ex_post(&two).price;
    let fixed = Mechanism::FixedPrice { price: p };
    let sim = Simulator::new(&two, &fixed, Rationality::ExPost, Behavior::default())?;
    show("fixed price, two buyers, common quality", &sim.run(trials, seed)?, revenue_ex_post_common_quality(&two, p));
    let sim = sim.with_observation(QualityObservation::IndependentPerBuyer);
    show("fixed price, two buyers, independent draws", &sim.run(trials, seed)?, revenue_ex_post(&two, p));

    let crossing = Market::new(QualityDistribution::uniform(0.0, 1.0)?, vec![ValuationFunction::linear(0.3, 0.4), q])?;
    let mech = optimal_ex_interim_multi(&crossing)?;
    let exact = revenue_sig(&mech, &crossing)?;
    let sig = Mechanism::Signaling(mech);
    for behavior in [Behavior::FollowRecommendation, Behavior::PerBuyerObedience] {
        let est = Simulator::new(&crossing, &sig, Rationality::ExInterim, behavior)?.run(trials, seed)?;
        show(&format!("argmax scheme, {behavior:?}"), &est, exact);
    }
    Ok(())
}
