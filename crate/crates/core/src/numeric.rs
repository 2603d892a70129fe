//! Scalar numerical kernels shared by the rest of the crate: adaptive Simpson
//! quadrature, monotone bisection and a global-then-local scalar maximizer.

use crate::error::{Error, Result};

/// Absolute tolerance used by every expectation in the crate.
pub const QUAD_TOL: f64 = 1e-10;
/// Recursion cap for adaptive Simpson.
pub const QUAD_MAX_DEPTH: u32 = 40;

/// Initial panels per integration piece. Starting from a single Simpson panel
/// can stop early on integrands that happen to vanish at the five probe points.
const INITIAL_PANELS: usize = 8;

struct Panel {
    a: f64,
    fa: f64,
    m: f64,
    fm: f64,
    b: f64,
    fb: f64,
    whole: f64,
}

fn simpson(a: f64, fa: f64, fm: f64, b: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

// `scale` is a rough magnitude of the whole integral. A correction that
// vanishes when added to it is below what f64 can represent, so the panel is
// accepted even if `tol` has been halved past that point.
fn refine<F: Fn(f64) -> f64>(f: &F, p: Panel, tol: f64, scale: f64, depth: u32) -> Result<f64> {
    let lm = 0.5 * (p.a + p.m);
    let rm = 0.5 * (p.m + p.b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(p.a, p.fa, flm, p.m, p.fm);
    let right = simpson(p.m, p.fm, frm, p.b, p.fb);
    let delta = left + right - p.whole;
    if delta.abs() <= 15.0 * tol || scale + delta == scale {
        return Ok(left + right + delta / 15.0);
    }
    if depth >= QUAD_MAX_DEPTH {
        return Err(Error::QuadratureDidNotConverge { lo: p.a, hi: p.b });
    }
    let l = refine(
        f,
        Panel { a: p.a, fa: p.fa, m: lm, fm: flm, b: p.m, fb: p.fm, whole: left },
        0.5 * tol,
        scale,
        depth + 1,
    )?;
    let r = refine(
        f,
        Panel { a: p.m, fa: p.fm, m: rm, fm: frm, b: p.b, fb: p.fb, whole: right },
        0.5 * tol,
        scale,
        depth + 1,
    )?;
    Ok(l + r)
}

/// Adaptive Simpson integral of `f` over `[a, b]` with absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if b <= a {
        return Ok(0.0);
    }
    let h = (b - a) / INITIAL_PANELS as f64;
    let panel_tol = tol / INITIAL_PANELS as f64;
    let mut panels = Vec::with_capacity(INITIAL_PANELS);
    let mut lo = a;
    let mut flo = f(lo);
    for k in 0..INITIAL_PANELS {
        let hi = if k + 1 == INITIAL_PANELS { b } else { a + h * (k + 1) as f64 };
        let mid = 0.5 * (lo + hi);
        let fmid = f(mid);
        let fhi = f(hi);
        let whole = simpson(lo, flo, fmid, hi, fhi);
        panels.push(Panel { a: lo, fa: flo, m: mid, fm: fmid, b: hi, fb: fhi, whole });
        lo = hi;
        flo = fhi;
    }
    let scale = panels.iter().map(|p| p.whole.abs()).sum::<f64>().max(tol);
    panels.into_iter().map(|p| refine(f, p, panel_tol, scale, 0)).sum()
}

/// Integrates `f` over `[a, b]`, splitting at every breakpoint that falls
/// strictly inside the interval. The tolerance is shared in proportion to
/// piece length. Each piece sees one-sided values at its ends, so a jump
/// sitting exactly on a breakpoint does not leak into the neighbour.
pub fn integrate_pieces<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    tol: f64,
) -> Result<f64> {
    if b <= a {
        return Ok(0.0);
    }
    let mut cuts: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|&x| x > a && x < b)
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut total = 0.0;
    let mut lo = a;
    for hi in cuts.into_iter().chain(std::iter::once(b)) {
        if hi > lo {
            let (inner_lo, inner_hi) = (lo.next_up().min(hi), hi.next_down().max(lo));
            let g = |x: f64| f(x.clamp(inner_lo, inner_hi));
            total += adaptive_simpson(&g, lo, hi, tol * (hi - lo) / (b - a))?;
        }
        lo = hi;
    }
    Ok(total)
}

/// Smallest `x` in `[lo, hi]` with `f(x) >= target` for nondecreasing `f`,
/// bisected until the bracket is below floating-point resolution or 1e-14.
/// Returns `lo` when `f(lo) >= target` and `hi` when `f(hi) < target`.
pub fn bisect_increasing<F: Fn(f64) -> f64>(f: F, target: f64, lo: f64, hi: f64) -> f64 {
    if f(lo) >= target {
        return lo;
    }
    if f(hi) < target {
        return hi;
    }
    let (mut a, mut b) = (lo, hi);
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b || b - a <= 1e-14 {
            break;
        }
        if f(mid) >= target {
            b = mid;
        } else {
            a = mid;
        }
    }
    b
}

/// Golden-section search for a maximum of `f` on `[a, b]`; stops when the
/// bracket is narrower than `tol`.
pub fn golden_section_max<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while b - a > tol {
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarMax {
    pub argmax: f64,
    pub value: f64,
    /// Grid bracket that contained the winning candidate.
    pub bracket: (f64, f64),
    pub grid_points: usize,
}

/// Settings for [`maximize_on_interval`].
#[derive(Debug, Clone, Copy)]
pub struct MaximizerConfig {
    pub grid_points: usize,
    pub refine_tol: f64,
    /// Values within this distance of the best count as ties; the smallest
    /// argument among ties wins.
    pub tie_tol: f64,
    pub max_refinements: usize,
}

impl Default for MaximizerConfig {
    fn default() -> Self {
        Self { grid_points: 2001, refine_tol: 1e-8, tie_tol: 1e-9, max_refinements: 32 }
    }
}

/// Global maximization of a possibly multi-modal `f` on `[lo, hi]`: a uniform
/// grid locates the local maxima, each is polished by golden-section search
/// inside its neighbouring grid cells.
pub fn maximize_on_interval<F: Fn(f64) -> f64>(
    f: &F,
    lo: f64,
    hi: f64,
    cfg: MaximizerConfig,
) -> ScalarMax {
    let n = cfg.grid_points.max(2);
    if hi <= lo {
        return ScalarMax { argmax: lo, value: f(lo), bracket: (lo, lo), grid_points: 1 };
    }
    let step = (hi - lo) / (n - 1) as f64;
    let xs: Vec<f64> = (0..n)
        .map(|k| if k + 1 == n { hi } else { lo + step * k as f64 })
        .collect();
    let ys: Vec<f64> = xs.iter().map(|&x| f(x)).collect();

    // First point of every plateau/peak counts once.
    let mut peaks: Vec<usize> = (0..n)
        .filter(|&k| (k == 0 || ys[k] > ys[k - 1]) && (k + 1 == n || ys[k] >= ys[k + 1]))
        .collect();
    peaks.sort_by(|&i, &j| ys[j].total_cmp(&ys[i]).then(i.cmp(&j)));
    peaks.truncate(cfg.max_refinements.max(1));

    let mut candidates: Vec<(f64, f64, (f64, f64))> = Vec::with_capacity(peaks.len());
    for k in peaks {
        let a = xs[k.saturating_sub(1)];
        let b = xs[(k + 1).min(n - 1)];
        let (x, y) = golden_section_max(f, a, b, cfg.refine_tol);
        let (x, y) = if y > ys[k] { (x, y) } else { (xs[k], ys[k]) };
        candidates.push((x, y, (a, b)));
    }
    let best = candidates
        .iter()
        .map(|c| c.1)
        .fold(f64::NEG_INFINITY, f64::max);
    let (argmax, value, bracket) = candidates
        .into_iter()
        .filter(|c| c.1 >= best - cfg.tie_tol)
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .expect("at least one candidate");
    ScalarMax { argmax, value, bracket, grid_points: n }
}
