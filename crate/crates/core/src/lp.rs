//! Small dense two-phase simplex.
//!
//! Maximizes `c·x` subject to `x ≥ 0` and rows `a·x {≤,≥,=} b`. Pivoting uses
//! Dantzig's rule and switches to Bland's rule after a run of degenerate
//! pivots, which rules out cycling.

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinearProgram {
    pub num_vars: usize,
    /// Maximized.
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, value: f64 },
    Infeasible,
    Unbounded,
}

impl LpOutcome {
    pub fn optimal(&self) -> Option<(&[f64], f64)> {
        match self {
            LpOutcome::Optimal { x, value } => Some((x, *value)),
            _ => None,
        }
    }
}

impl LinearProgram {
    pub fn new(num_vars: usize, objective: Vec<f64>) -> Self {
        assert_eq!(objective.len(), num_vars);
        LinearProgram {
            num_vars,
            objective,
            constraints: Vec::new(),
        }
    }

    pub fn push(&mut self, coeffs: Vec<f64>, relation: Relation, rhs: f64) {
        assert_eq!(coeffs.len(), self.num_vars);
        self.constraints.push(Constraint {
            coeffs,
            relation,
            rhs,
        });
    }

    pub fn solve(&self) -> LpOutcome {
        Tableau::build(self).run(&self.objective)
    }
}

const EPS: f64 = 1e-9;
const DEGENERATE_SWITCH: usize = 50;
const MAX_PIVOTS: usize = 100_000;

struct Tableau {
    /// `rows x (cols + 1)`; last column is the right-hand side.
    t: Vec<Vec<f64>>,
    basis: Vec<usize>,
    num_vars: usize,
    num_cols: usize,
    artificial_start: usize,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Self {
        let m = lp.constraints.len();
        let n = lp.num_vars;
        let num_slack = lp
            .constraints
            .iter()
            .filter(|c| c.relation != Relation::Eq)
            .count();
        // Rows are flipped so every right-hand side is non-negative.
        let rows: Vec<(Vec<f64>, Relation, f64)> = lp
            .constraints
            .iter()
            .map(|c| {
                if c.rhs < 0.0 {
                    let rel = match c.relation {
                        Relation::Le => Relation::Ge,
                        Relation::Ge => Relation::Le,
                        Relation::Eq => Relation::Eq,
                    };
                    (c.coeffs.iter().map(|v| -v).collect(), rel, -c.rhs)
                } else {
                    (c.coeffs.clone(), c.relation, c.rhs)
                }
            })
            .collect();
        let num_art = rows.iter().filter(|r| r.1 != Relation::Le).count();
        let artificial_start = n + num_slack;
        let num_cols = artificial_start + num_art;
        let mut t = vec![vec![0.0; num_cols + 1]; m];
        let mut basis = vec![0; m];
        let mut slack = n;
        let mut art = artificial_start;
        for (r, (coeffs, rel, rhs)) in rows.into_iter().enumerate() {
            t[r][..n].copy_from_slice(&coeffs);
            t[r][num_cols] = rhs;
            match rel {
                Relation::Le => {
                    t[r][slack] = 1.0;
                    basis[r] = slack;
                    slack += 1;
                }
                Relation::Ge => {
                    t[r][slack] = -1.0;
                    slack += 1;
                    t[r][art] = 1.0;
                    basis[r] = art;
                    art += 1;
                }
                Relation::Eq => {
                    t[r][art] = 1.0;
                    basis[r] = art;
                    art += 1;
                }
            }
        }
        Tableau {
            t,
            basis,
            num_vars: n,
            num_cols,
            artificial_start,
        }
    }

    fn rhs(&self, r: usize) -> f64 {
        self.t[r][self.num_cols]
    }

    /// Reduced costs for maximizing `cost` over columns `0..limit`.
    fn reduced_costs(&self, cost: &[f64], limit: usize) -> Vec<f64> {
        let mut d: Vec<f64> = cost[..limit].to_vec();
        for (r, &b) in self.basis.iter().enumerate() {
            let cb = cost[b];
            if cb != 0.0 {
                for (j, dj) in d.iter_mut().enumerate() {
                    *dj -= cb * self.t[r][j];
                }
            }
        }
        d
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let p = self.t[row][col];
        for v in self.t[row].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.t[row].clone();
        for (r, line) in self.t.iter_mut().enumerate() {
            if r == row {
                continue;
            }
            let f = line[col];
            if f != 0.0 {
                for (v, &pv) in line.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
                line[col] = 0.0;
            }
        }
        self.basis[row] = col;
    }

    /// Maximizes `cost` over columns `0..limit`. Returns false if unbounded.
    fn optimize(&mut self, cost: &[f64], limit: usize) -> bool {
        let mut degenerate_run = 0;
        for _ in 0..MAX_PIVOTS {
            let d = self.reduced_costs(cost, limit);
            let scale = d.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            let bland = degenerate_run >= DEGENERATE_SWITCH;
            let entering = if bland {
                (0..limit).find(|&j| d[j] > EPS * scale)
            } else {
                (0..limit)
                    .filter(|&j| d[j] > EPS * scale)
                    .max_by(|&a, &b| d[a].total_cmp(&d[b]).then(b.cmp(&a)))
            };
            let Some(col) = entering else {
                return true;
            };
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.t.len() {
                let a = self.t[r][col];
                if a > EPS {
                    let ratio = self.rhs(r) / a;
                    let better = match leave {
                        None => true,
                        Some((lr, lratio)) => {
                            ratio < lratio - EPS
                                || (ratio <= lratio + EPS && self.basis[r] < self.basis[lr])
                        }
                    };
                    if better {
                        leave = Some((r, ratio));
                    }
                }
            }
            let Some((row, ratio)) = leave else {
                return false;
            };
            degenerate_run = if ratio.abs() <= EPS { degenerate_run + 1 } else { 0 };
            self.pivot(row, col);
        }
        log::warn!("simplex pivot limit reached");
        true
    }

    fn run(mut self, objective: &[f64]) -> LpOutcome {
        let m = self.t.len();
        if self.num_cols > self.artificial_start {
            let mut phase1 = vec![0.0; self.num_cols];
            for c in phase1.iter_mut().skip(self.artificial_start) {
                *c = -1.0;
            }
            self.optimize(&phase1, self.num_cols);
            let infeas: f64 = (0..m)
                .filter(|&r| self.basis[r] >= self.artificial_start)
                .map(|r| self.rhs(r))
                .sum();
            let scale = (0..m).fold(1.0f64, |s, r| s.max(self.rhs(r).abs()));
            if infeas > 1e-8 * scale {
                return LpOutcome::Infeasible;
            }
            // Drive remaining (zero-valued) artificials out of the basis.
            let mut r = 0;
            while r < self.t.len() {
                if self.basis[r] >= self.artificial_start {
                    let col = (0..self.artificial_start)
                        .filter(|&j| self.t[r][j].abs() > EPS)
                        .max_by(|&a, &b| self.t[r][a].abs().total_cmp(&self.t[r][b].abs()));
                    match col {
                        Some(c) => self.pivot(r, c),
                        None => {
                            self.t.remove(r);
                            self.basis.remove(r);
                            continue;
                        }
                    }
                }
                r += 1;
            }
        }
        let mut cost = vec![0.0; self.num_cols];
        cost[..self.num_vars].copy_from_slice(objective);
        if !self.optimize(&cost, self.artificial_start) {
            return LpOutcome::Unbounded;
        }
        let mut x = vec![0.0; self.num_vars];
        for (r, &b) in self.basis.iter().enumerate() {
            if b < self.num_vars {
                x[b] = self.rhs(r).max(0.0);
            }
        }
        let value = x.iter().zip(objective).map(|(a, b)| a * b).sum();
        LpOutcome::Optimal { x, value }
    }
}
