//! The quality prior: CDF, quantile, sampling and discretization for each
//! supported family.
//!
//!     cargo run --example quality_prior

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use fps_core::QualityDistribution;

fn main() -> fps_core::Result<()> {
    let priors = [
        ("uniform [0,1]", QualityDistribution::uniform(0.0, 1.0)?),
        ("beta(2,2) on [0,1]", QualityDistribution::scaled_beta(2.0, 2.0, 0.0, 1.0)?),
        ("normal(0.5, 0.2) cut to [0,1]", QualityDistribution::truncated_normal(0.5, 0.2, 0.0, 1.0)?),
        ("piecewise cdf", QualityDistribution::piecewise_linear_cdf(vec![(0.0, 0.0), (0.5, 0.8), (1.0, 1.0)])?),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for (name, d) in &priors {
        let mean = d.expect(|q| q, d.breakpoints())?;
        let median = d.quantile(0.5)?;
        let n = 100_000;
        let sample_mean = (0..n).map(|_| d.sample(&mut rng)).sum::<f64>() / n as f64;
        let grid = d.discretize(4)?;
        println!("{name}");
        println!("  mean {mean:.6}  median {median:.6}  G(median) {:.6}", d.cdf(median));
        println!("  sample mean over {n} draws {sample_mean:.6}");
        println!("  4-point grid {:?}", grid.points().iter().map(|p| format!("{p:.4}")).collect::<Vec<_>>());
    }
    Ok(())
}
