//! Dense two-phase tableau simplex.
//!
//! By default entering columns are chosen by largest reduced cost; after a
//! run of degenerate pivots the solver falls back to Bland's smallest-index
//! rule until the objective moves again, which rules out cycling. Pure
//! Bland is available through [`PivotRule::Bland`].
//!
//! Problems are `maximize c·x` subject to rows `a·x (<=|>=|=) b` and `x >= 0`.
//! Row operations skip zero entries of the pivot row, which keeps the many
//! near-unit rows of the discretized mechanism programs cheap.

use serde::{Deserialize, Serialize};

const EPS: f64 = 1e-11;
/// Degenerate pivots tolerated before switching to Bland's rule.
const STALL_LIMIT: usize = 50;
/// Phase-I optimum above this proves infeasibility.
pub const INFEASIBILITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

impl Constraint {
    pub fn new(coeffs: Vec<f64>, relation: Relation, rhs: f64) -> Self {
        Self { coeffs, relation, rhs }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
}

impl LinearProgram {
    pub fn new(objective: Vec<f64>) -> Self {
        Self { objective, constraints: Vec::new() }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn push(&mut self, coeffs: Vec<f64>, relation: Relation, rhs: f64) {
        self.constraints.push(Constraint::new(coeffs, relation, rhs));
    }

    /// Largest violation of any row or sign constraint at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst = x.iter().map(|&v| (-v).max(0.0)).fold(0.0, f64::max);
        for c in &self.constraints {
            let lhs: f64 = c.coeffs.iter().zip(x).map(|(a, b)| a * b).sum();
            let v = match c.relation {
                Relation::Le => lhs - c.rhs,
                Relation::Ge => c.rhs - lhs,
                Relation::Eq => (lhs - c.rhs).abs(),
            };
            worst = worst.max(v);
        }
        worst
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum PivotRule {
    /// Smallest-index entering column on every pivot.
    Bland,
    /// Largest reduced cost, Bland while stalled on a degenerate vertex.
    #[default]
    DantzigWithBlandFallback,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpResult {
    pub status: LpStatus,
    pub objective: f64,
    pub solution: Vec<f64>,
    /// Row multipliers for the original rows (meaningful when optimal).
    pub duals: Vec<f64>,
    /// Minimal total artificial infeasibility found by Phase I.
    pub phase_one_objective: f64,
    pub pivots: usize,
}

struct Tableau {
    /// Row-major constraint rows, `stride = width + 1` with the right-hand
    /// side last.
    data: Vec<f64>,
    rows: usize,
    /// Reduced costs `z_j - c_j`; the last entry holds the objective value.
    obj: Vec<f64>,
    basis: Vec<usize>,
    width: usize,
    artificial_start: usize,
    pivots: usize,
    rule: PivotRule,
    /// Scratch copy of the entering column.
    col: Vec<f64>,
}

impl Tableau {
    fn stride(&self) -> usize {
        self.width + 1
    }

    fn at(&self, r: usize, k: usize) -> f64 {
        self.data[r * self.stride() + k]
    }

    fn rhs(&self, r: usize) -> f64 {
        self.at(r, self.width)
    }

    fn row(&self, r: usize) -> &[f64] {
        let s = self.stride();
        &self.data[r * s..(r + 1) * s]
    }

    fn load_column(&mut self, j: usize) {
        let s = self.stride();
        for r in 0..self.rows {
            self.col[r] = self.data[r * s + j];
        }
    }

    /// Pivots on `(r, j)`; `self.col` must hold column `j`.
    fn pivot(&mut self, r: usize, j: usize) {
        let s = self.stride();
        let inv = 1.0 / self.col[r];
        let prow = &mut self.data[r * s..(r + 1) * s];
        let mut nz = Vec::new();
        for (k, v) in prow.iter_mut().enumerate() {
            if *v != 0.0 {
                *v *= inv;
                nz.push((k, *v));
            }
        }
        prow[j] = 1.0;
        for i in 0..self.rows {
            let f = self.col[i];
            if i == r || f == 0.0 {
                continue;
            }
            let row = &mut self.data[i * s..(i + 1) * s];
            for &(k, v) in &nz {
                row[k] -= f * v;
            }
            row[j] = 0.0;
        }
        let f = self.obj[j];
        if f != 0.0 {
            for &(k, v) in &nz {
                self.obj[k] -= f * v;
            }
            self.obj[j] = 0.0;
        }
        self.basis[r] = j;
        self.pivots += 1;
    }

    /// Runs simplex iterations on the current objective row with columns
    /// `[0, allowed)` eligible to enter. Returns false on unboundedness.
    fn optimize(&mut self, allowed: usize) -> bool {
        let mut stalled = 0;
        loop {
            let entering = if self.rule == PivotRule::Bland || stalled >= STALL_LIMIT {
                (0..allowed).find(|&j| self.obj[j] < -EPS)
            } else {
                let (j, v) = (0..allowed)
                    .map(|j| (j, self.obj[j]))
                    .fold((usize::MAX, -EPS), |b, c| if c.1 < b.1 { c } else { b });
                (v < -EPS).then_some(j)
            };
            let Some(j) = entering else {
                return true;
            };
            self.load_column(j);
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.rows {
                let a = self.col[r];
                if a > EPS {
                    let ratio = self.rhs(r) / a;
                    leave = match leave {
                        None => Some((r, ratio)),
                        Some((br, bratio)) => {
                            if ratio < bratio - EPS
                                || (ratio <= bratio + EPS && self.basis[r] < self.basis[br])
                            {
                                Some((r, ratio))
                            } else {
                                Some((br, bratio))
                            }
                        }
                    };
                }
            }
            let Some((r, ratio)) = leave else {
                return false;
            };
            if ratio > EPS {
                stalled = 0;
            } else {
                stalled += 1;
            }
            self.pivot(r, j);
        }
    }

    fn set_objective(&mut self, costs: &[f64]) {
        // z_j - c_j with the basic columns eliminated.
        let mut obj = vec![0.0; self.width + 1];
        for (j, &c) in costs.iter().enumerate() {
            obj[j] = -c;
        }
        for r in 0..self.rows {
            let cb = costs.get(self.basis[r]).copied().unwrap_or(0.0);
            if cb != 0.0 {
                for (o, &v) in obj.iter_mut().zip(self.row(r)) {
                    *o += cb * v;
                }
            }
        }
        self.obj = obj;
    }
}

/// Solves `lp` with the two-phase method and the default pivot rule.
pub fn solve(lp: &LinearProgram) -> LpResult {
    solve_with(lp, PivotRule::default())
}

pub fn solve_with(lp: &LinearProgram, rule: PivotRule) -> LpResult {
    let n = lp.num_vars();
    let m = lp.constraints.len();

    // Normalize to nonnegative right-hand sides; `a·x >= 0` becomes
    // `-a·x <= 0` so it needs no artificial column.
    let mut flips = Vec::with_capacity(m);
    let mut rels = Vec::with_capacity(m);
    for c in &lp.constraints {
        let flip = c.rhs < 0.0 || (c.rhs == 0.0 && c.relation == Relation::Ge);
        flips.push(if flip { -1.0 } else { 1.0 });
        rels.push(match (c.relation, flip) {
            (Relation::Le, true) => Relation::Ge,
            (Relation::Ge, true) => Relation::Le,
            (r, _) => r,
        });
    }
    let slack_count = rels.iter().filter(|r| **r != Relation::Eq).count();
    let art_count = rels.iter().filter(|r| **r != Relation::Le).count();
    let artificial_start = n + slack_count;
    let width = artificial_start + art_count;

    let mut data = vec![0.0; m * (width + 1)];
    let mut basis = Vec::with_capacity(m);
    // Column carrying each row's dual and its sign.
    let mut dual_col = Vec::with_capacity(m);
    let (mut s, mut a) = (n, artificial_start);
    for (r, c) in lp.constraints.iter().enumerate() {
        let row = &mut data[r * (width + 1)..(r + 1) * (width + 1)];
        for (j, &v) in c.coeffs.iter().enumerate().take(n) {
            row[j] = flips[r] * v;
        }
        row[width] = flips[r] * c.rhs;
        match rels[r] {
            Relation::Le => {
                row[s] = 1.0;
                basis.push(s);
                dual_col.push((s, 1.0));
                s += 1;
            }
            Relation::Ge => {
                row[s] = -1.0;
                row[a] = 1.0;
                basis.push(a);
                dual_col.push((s, -1.0));
                s += 1;
                a += 1;
            }
            Relation::Eq => {
                row[a] = 1.0;
                basis.push(a);
                dual_col.push((a, 1.0));
                a += 1;
            }
        }
    }

    let mut t = Tableau {
        data,
        rows: m,
        obj: Vec::new(),
        basis,
        width,
        artificial_start,
        pivots: 0,
        rule,
        col: vec![0.0; m],
    };

    let mut phase_one_objective = 0.0;
    if art_count > 0 {
        let mut costs = vec![0.0; width];
        for c in costs.iter_mut().skip(artificial_start) {
            *c = -1.0;
        }
        t.set_objective(&costs);
        t.optimize(width);
        phase_one_objective = (-t.obj[width]).max(0.0);
        if phase_one_objective > INFEASIBILITY_TOL {
            return LpResult {
                status: LpStatus::Infeasible,
                objective: f64::NAN,
                solution: extract(&t, n),
                duals: vec![0.0; m],
                phase_one_objective,
                pivots: t.pivots,
            };
        }
        // Drive zero-level artificials out of the basis where possible.
        for r in 0..m {
            if t.basis[r] >= t.artificial_start {
                if let Some(j) = (0..t.artificial_start).find(|&j| t.at(r, j).abs() > 1e-9) {
                    t.load_column(j);
                    t.pivot(r, j);
                }
            }
        }
    }

    let mut costs = lp.objective.clone();
    costs.resize(width, 0.0);
    t.set_objective(&costs);
    if !t.optimize(artificial_start) {
        return LpResult {
            status: LpStatus::Unbounded,
            objective: f64::INFINITY,
            solution: extract(&t, n),
            duals: vec![0.0; m],
            phase_one_objective,
            pivots: t.pivots,
        };
    }
    let solution = extract(&t, n);
    let objective = lp.objective.iter().zip(&solution).map(|(c, x)| c * x).sum();
    let duals = (0..m)
        .map(|r| {
            let (col, sign) = dual_col[r];
            flips[r] * sign * t.obj[col]
        })
        .collect();
    LpResult { status: LpStatus::Optimal, objective, solution, duals, phase_one_objective, pivots: t.pivots }
}

fn extract(t: &Tableau, n: usize) -> Vec<f64> {
    let mut x = vec![0.0; n];
    for (r, &b) in t.basis.iter().enumerate() {
        if b < n {
            x[b] = t.rhs(r).max(0.0);
        }
    }
    x
}

/// Largest complementary-slackness product `|y_r (b_r - a_r x)|` or
/// `|x_j (a_j^T y - c_j)|` at an optimal primal/dual pair.
pub fn complementary_slackness_residual(lp: &LinearProgram, result: &LpResult) -> f64 {
    let x = &result.solution;
    let y = &result.duals;
    let mut worst: f64 = 0.0;
    for (c, &yr) in lp.constraints.iter().zip(y) {
        let lhs: f64 = c.coeffs.iter().zip(x).map(|(a, b)| a * b).sum();
        worst = worst.max((yr * (c.rhs - lhs)).abs());
    }
    for j in 0..lp.num_vars() {
        let col: f64 = lp.constraints.iter().zip(y).map(|(c, &yr)| c.coeffs[j] * yr).sum();
        worst = worst.max((x[j] * (col - lp.objective[j])).abs());
    }
    worst
}
