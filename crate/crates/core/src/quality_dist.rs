//! The public quality prior over a bounded support `[lo, hi]`.

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta, Continuous, ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::numeric::{bisect_increasing, integrate_pieces, QUAD_TOL};

/// Parametric family of a [`QualityDistribution`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "params")]
pub enum Family {
    Uniform,
    /// Beta(alpha, beta) stretched onto the support.
    ScaledBeta { alpha: f64, beta: f64 },
    /// Normal(mean, sd) conditioned on the support.
    TruncatedNormal { mean: f64, sd: f64 },
    /// CDF interpolated linearly through `(quality, cdf)` knots.
    PiecewiseLinearCdf { knots: Vec<(f64, f64)> },
}

#[derive(Debug, Clone)]
enum Kernel {
    Uniform,
    Beta(Beta),
    TruncNormal { normal: Normal, cdf_lo: f64, mass: f64 },
    Pwl,
}

/// Immutable, validated prior `G` on `[lo, hi]`.
#[derive(Debug, Clone)]
pub struct QualityDistribution {
    family: Family,
    lo: f64,
    hi: f64,
    kernel: Kernel,
    kinks: Vec<f64>,
}

impl PartialEq for QualityDistribution {
    fn eq(&self, other: &Self) -> bool {
        self.family == other.family && self.lo == other.lo && self.hi == other.hi
    }
}

impl QualityDistribution {
    pub fn new(family: Family, lo: f64, hi: f64) -> Result<Self> {
        let bad = |msg: String| Err(Error::InvalidDistribution(msg));
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return bad(format!("support [{lo}, {hi}] must be finite with lo < hi"));
        }
        let mut kinks = Vec::new();
        let kernel = match &family {
            Family::Uniform => Kernel::Uniform,
            Family::ScaledBeta { alpha, beta } => {
                // Shapes below 1 make the density unbounded at an endpoint.
                if !(*alpha >= 1.0 && *beta >= 1.0 && alpha.is_finite() && beta.is_finite()) {
                    return bad(format!("beta shapes must be finite and >= 1, got ({alpha}, {beta})"));
                }
                Kernel::Beta(Beta::new(*alpha, *beta).map_err(|e| Error::InvalidDistribution(e.to_string()))?)
            }
            Family::TruncatedNormal { mean, sd } => {
                if !(mean.is_finite() && sd.is_finite() && *sd > 0.0) {
                    return bad(format!("truncated normal needs finite mean and sd > 0, got ({mean}, {sd})"));
                }
                let normal = Normal::new(*mean, *sd).map_err(|e| Error::InvalidDistribution(e.to_string()))?;
                let cdf_lo = normal.cdf(lo);
                let mass = normal.cdf(hi) - cdf_lo;
                if mass <= 1e-12 {
                    return bad("truncated normal puts no mass on the support".into());
                }
                Kernel::TruncNormal { normal, cdf_lo, mass }
            }
            Family::PiecewiseLinearCdf { knots } => {
                if knots.len() < 2 {
                    return bad("piecewise-linear cdf needs at least two knots".into());
                }
                let (q0, f0) = knots[0];
                let (qn, fnn) = knots[knots.len() - 1];
                if q0 != lo || qn != hi {
                    return bad(format!("knots must span the support [{lo}, {hi}]"));
                }
                if f0 != 0.0 || fnn != 1.0 {
                    return bad("cdf knots must start at 0 and end at 1".into());
                }
                if knots.windows(2).any(|w| !(w[1].0 > w[0].0 && w[1].1 > w[0].1)) {
                    return bad("cdf knots must be strictly increasing in quality and probability".into());
                }
                kinks = knots[1..knots.len() - 1].iter().map(|k| k.0).collect();
                Kernel::Pwl
            }
        };
        Ok(Self { family, lo, hi, kernel, kinks })
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        Self::new(Family::Uniform, lo, hi)
    }

    pub fn scaled_beta(alpha: f64, beta: f64, lo: f64, hi: f64) -> Result<Self> {
        Self::new(Family::ScaledBeta { alpha, beta }, lo, hi)
    }

    pub fn truncated_normal(mean: f64, sd: f64, lo: f64, hi: f64) -> Result<Self> {
        Self::new(Family::TruncatedNormal { mean, sd }, lo, hi)
    }

    pub fn piecewise_linear_cdf(knots: Vec<(f64, f64)>) -> Result<Self> {
        let lo = knots.first().map_or(0.0, |k| k.0);
        let hi = knots.last().map_or(0.0, |k| k.0);
        Self::new(Family::PiecewiseLinearCdf { knots }, lo, hi)
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn support(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    /// Points where the density is not smooth. Quadrature splits here.
    pub fn breakpoints(&self) -> &[f64] {
        &self.kinks
    }

    fn unit(&self, q: f64) -> f64 {
        (q - self.lo) / (self.hi - self.lo)
    }

    pub fn cdf(&self, q: f64) -> f64 {
        if q <= self.lo {
            return 0.0;
        }
        if q >= self.hi {
            return 1.0;
        }
        let g = match &self.kernel {
            Kernel::Uniform => self.unit(q),
            Kernel::Beta(b) => b.cdf(self.unit(q)),
            Kernel::TruncNormal { normal, cdf_lo, mass } => (normal.cdf(q) - cdf_lo) / mass,
            Kernel::Pwl => {
                let Family::PiecewiseLinearCdf { knots } = &self.family else { unreachable!() };
                let k = knots.partition_point(|kn| kn.0 <= q).clamp(1, knots.len() - 1);
                let (qa, fa) = knots[k - 1];
                let (qb, fb) = knots[k];
                fa + (fb - fa) * (q - qa) / (qb - qa)
            }
        };
        g.clamp(0.0, 1.0)
    }

    pub fn pdf(&self, q: f64) -> f64 {
        if q < self.lo || q > self.hi {
            return 0.0;
        }
        let width = self.hi - self.lo;
        match &self.kernel {
            Kernel::Uniform => 1.0 / width,
            Kernel::Beta(b) => b.pdf(self.unit(q)) / width,
            Kernel::TruncNormal { normal, mass, .. } => normal.pdf(q) / mass,
            Kernel::Pwl => {
                let Family::PiecewiseLinearCdf { knots } = &self.family else { unreachable!() };
                let k = knots.partition_point(|kn| kn.0 <= q).clamp(1, knots.len() - 1);
                let (qa, fa) = knots[k - 1];
                let (qb, fb) = knots[k];
                (fb - fa) / (qb - qa)
            }
        }
    }

    /// Probability of `[a, b)` under the prior.
    pub fn mass(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            0.0
        } else {
            (self.cdf(b) - self.cdf(a)).max(0.0)
        }
    }

    /// `∫_a^b f(q) g(q) dq`, split at `breakpoints` and the density's own kinks.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64, breakpoints: &[f64]) -> Result<f64> {
        let a = a.max(self.lo);
        let b = b.min(self.hi);
        if b <= a {
            return Ok(0.0);
        }
        let mut cuts = breakpoints.to_vec();
        cuts.extend_from_slice(&self.kinks);
        let width = self.hi - self.lo;
        integrate_pieces(&|q| f(q) * self.pdf(q), a, b, &cuts, QUAD_TOL * (b - a) / width)
    }

    /// `E_{q~G}[f(q)]`.
    pub fn expect<F: Fn(f64) -> f64>(&self, f: F, breakpoints: &[f64]) -> Result<f64> {
        self.integrate(f, self.lo, self.hi, breakpoints)
    }

    /// Smallest `q` with `cdf(q) >= u`.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&u) {
            return Err(Error::Domain(format!("quantile level {u} outside [0, 1]")));
        }
        Ok(self.quantile_unchecked(u))
    }

    fn quantile_unchecked(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return self.lo;
        }
        if u >= 1.0 {
            return self.hi;
        }
        match &self.kernel {
            Kernel::Uniform => self.lo + u * (self.hi - self.lo),
            Kernel::Pwl => {
                let Family::PiecewiseLinearCdf { knots } = &self.family else { unreachable!() };
                let k = knots.partition_point(|kn| kn.1 < u).clamp(1, knots.len() - 1);
                let (qa, fa) = knots[k - 1];
                let (qb, fb) = knots[k];
                qa + (qb - qa) * (u - fa) / (fb - fa)
            }
            _ => bisect_increasing(|q| self.cdf(q), u, self.lo, self.hi),
        }
    }

    /// Inverse-transform draw.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.quantile_unchecked(rng.random::<f64>())
    }

    /// Midpoints of `m` equal-probability bins, each with weight `1/m`.
    pub fn discretize(&self, m: usize) -> Result<DiscreteQualityGrid> {
        if m < 2 {
            return Err(Error::Domain(format!("grid size {m} must be at least 2")));
        }
        let points = (0..m)
            .map(|k| self.quantile_unchecked((k as f64 + 0.5) / m as f64))
            .collect();
        DiscreteQualityGrid::new(points, vec![1.0 / m as f64; m])
    }
}

/// Finite quality grid with probability weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteQualityGrid {
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl DiscreteQualityGrid {
    pub fn new(points: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if points.is_empty() || points.len() != weights.len() {
            return Err(Error::Domain("grid needs matching, nonempty points and weights".into()));
        }
        if points.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Domain("grid points must be strictly increasing".into()));
        }
        if weights.iter().any(|&w| !(w >= 0.0)) {
            return Err(Error::Domain("grid weights must be nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Domain(format!("grid weights sum to {total}, not 1")));
        }
        Ok(Self { points, weights })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn expect<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.points.iter().zip(&self.weights).map(|(&q, &w)| w * f(q)).sum()
    }

    /// Index of the grid cell a continuous quality falls in: the nearest point.
    pub fn locate(&self, q: f64) -> usize {
        let k = self.points.partition_point(|&x| x < q);
        if k == 0 {
            0
        } else if k == self.points.len() {
            k - 1
        } else if q - self.points[k - 1] <= self.points[k] - q {
            k - 1
        } else {
            k
        }
    }
}
