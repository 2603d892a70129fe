//! Optimal posted prices without signaling, for one and two buyers and both
//! rationality models.
//!
//!     cargo run --example fixed_price

use fps_core::fixed_price::{optimize, revenue_ex_post, revenue_ex_post_common_quality};
use fps_core::{Market, QualityDistribution, Rationality, ValuationFunction};

fn main() -> fps_core::Result<()> {
    let q = ValuationFunction::linear(0.0, 1.0);
    let cases = [
        ("one buyer, v = q", vec![q.clone()]),
        ("two buyers, v = q", vec![q.clone(), q.clone()]),
        ("crossing, 0.3 + 0.4q and q", vec![ValuationFunction::linear(0.3, 0.4), q.clone()]),
    ];
    for (name, buyers) in cases {
        let market = Market::new(QualityDistribution::uniform(0.0, 1.0)?, buyers)?;
        println!("{name}");
        for r in [Rationality::ExPost, Rationality::ExInterim] {
            let s = optimize(&market, r)?;
            println!("  {r:?}: price {:.6} revenue {:.6}", s.price, s.revenue);
        }
    }

    // With several ex-post buyers the product formula treats each buyer's
    // quality as an independent draw. If all see one quality, sales only
    // depend on the lowest threshold.
    let two = Market::new(QualityDistribution::uniform(0.0, 1.0)?, vec![q.clone(), q])?;
    println!("price  independent  common");
    for p in [0.2, 0.4, 0.577, 0.8] {
        println!("{p:<6} {:<12.6} {:.6}", revenue_ex_post(&two, p), revenue_ex_post_common_quality(&two, p));
    }
    Ok(())
}
