use nalgebra::{DMatrix, DVector};

use super::{FractError, RateMatrix};
use crate::lp::{LinearProgram, LpOutcome, Relation};
use crate::objective::{Objective, PF_EPSILON};

/// Largest number of columns accepted by the proportional-fair solver,
/// whose Newton system is dense in the columns.
pub const MAX_PF_COLUMNS: usize = 1024;

#[derive(Clone, Debug, PartialEq)]
pub struct OracleSolution {
    pub alpha: Vec<f64>,
    pub value: f64,
}

/// Exact solution of the centralized share problem over the MIS classes.
pub fn centralized_oracle(
    rates: &RateMatrix,
    rmin: &[f64],
    objective: &Objective,
) -> Result<OracleSolution, FractError> {
    optimize_time_sharing(
        rates.num_ues(),
        rates.num_classes(),
        |i, k| rates.get(i, k),
        rmin,
        objective,
    )
}

/// Maximizes `W(Σ_j α_j r_{·j})` over the simplex subject to every UE's
/// minimum, where column `j` yields rate `rate(i, j)` for UE `i`.
pub fn optimize_time_sharing(
    num_ues: usize,
    num_cols: usize,
    rate: impl Fn(usize, usize) -> f64,
    rmin: &[f64],
    objective: &Objective,
) -> Result<OracleSolution, FractError> {
    if num_cols == 0 {
        return Err(FractError::BadInput("no columns".into()));
    }
    if rmin.len() != num_ues {
        return Err(FractError::BadInput(format!("{} minimums for {num_ues} UEs", rmin.len())));
    }
    match objective {
        Objective::WeightedSum(w) => {
            if w.len() != num_ues {
                return Err(FractError::BadInput(format!("{} weights for {num_ues} UEs", w.len())));
            }
            let c = (0..num_cols)
                .map(|j| (0..num_ues).map(|i| w[i] * rate(i, j)).sum())
                .collect();
            let mut lp = LinearProgram::new(num_cols, c);
            lp.push(vec![1.0; num_cols], Relation::Eq, 1.0);
            for (i, &m) in rmin.iter().enumerate() {
                lp.push((0..num_cols).map(|j| rate(i, j)).collect(), Relation::Ge, m);
            }
            solve_lp(&lp, num_cols)
        }
        Objective::MaxMin => {
            // Variables (α, t); maximize t with t ≤ r_i·α.
            let mut c = vec![0.0; num_cols + 1];
            c[num_cols] = 1.0;
            let mut lp = LinearProgram::new(num_cols + 1, c);
            let mut simplex = vec![1.0; num_cols + 1];
            simplex[num_cols] = 0.0;
            lp.push(simplex, Relation::Eq, 1.0);
            for (i, &m) in rmin.iter().enumerate() {
                let row: Vec<f64> = (0..num_cols).map(|j| rate(i, j)).collect();
                let mut with_t = row.clone();
                with_t.push(-1.0);
                lp.push(with_t, Relation::Ge, 0.0);
                let mut plain = row;
                plain.push(0.0);
                lp.push(plain, Relation::Ge, m);
            }
            let sol = solve_lp(&lp, num_cols)?;
            let thr: Vec<f64> = (0..num_ues)
                .map(|i| (0..num_cols).map(|j| sol.alpha[j] * rate(i, j)).sum())
                .collect();
            Ok(OracleSolution {
                value: objective.value(&thr),
                alpha: sol.alpha,
            })
        }
        Objective::ProportionalFair => {
            if num_cols > MAX_PF_COLUMNS {
                return Err(FractError::Unsupported(format!(
                    "proportional fairness over {num_cols} columns exceeds the limit of {MAX_PF_COLUMNS}"
                )));
            }
            let r = DMatrix::from_fn(num_ues, num_cols, rate);
            proportional_fair(&r, rmin)
        }
    }
}

fn solve_lp(lp: &LinearProgram, num_cols: usize) -> Result<OracleSolution, FractError> {
    match lp.solve() {
        LpOutcome::Optimal { x, value } => {
            let alpha = normalize(&x[..num_cols]);
            Ok(OracleSolution { alpha, value })
        }
        LpOutcome::Infeasible => Err(FractError::Infeasible),
        LpOutcome::Unbounded => Err(FractError::BadInput("unbounded share problem".into())),
    }
}

fn normalize(x: &[f64]) -> Vec<f64> {
    let clipped: Vec<f64> = x.iter().map(|v| v.max(0.0)).collect();
    let s: f64 = clipped.iter().sum();
    clipped.iter().map(|v| v / s).collect()
}

/// Interior start: maximize `s` with `α_j ≥ s` and `r_i·α − rmin_i ≥ s`.
fn interior_point(r: &DMatrix<f64>, rmin: &[f64]) -> Result<(Vec<f64>, f64), FractError> {
    let (n, j) = r.shape();
    let mut c = vec![0.0; j + 1];
    c[j] = 1.0;
    let mut lp = LinearProgram::new(j + 1, c);
    let mut simplex = vec![1.0; j + 1];
    simplex[j] = 0.0;
    lp.push(simplex, Relation::Eq, 1.0);
    for col in 0..j {
        let mut row = vec![0.0; j + 1];
        row[col] = 1.0;
        row[j] = -1.0;
        lp.push(row, Relation::Ge, 0.0);
    }
    for i in 0..n {
        let mut row: Vec<f64> = (0..j).map(|c| r[(i, c)]).collect();
        row.push(-1.0);
        lp.push(row, Relation::Ge, rmin[i]);
    }
    match lp.solve() {
        LpOutcome::Optimal { x, .. } => Ok((x[..j].to_vec(), x[j])),
        _ => Err(FractError::Infeasible),
    }
}

/// Log-barrier Newton method for `max Σ log(ε + r_i·α)` over the share
/// polytope.
fn proportional_fair(r: &DMatrix<f64>, rmin: &[f64]) -> Result<OracleSolution, FractError> {
    let (n, j) = r.shape();
    let (mut alpha, margin) = interior_point(r, rmin)?;
    let mut lower: Vec<f64> = rmin.to_vec();
    if margin <= 1e-12 {
        // The polytope has no interior; relax the minimums by a hair.
        for m in lower.iter_mut() {
            *m -= 1e-10 * m.abs().max(1.0);
        }
        let (a, s) = interior_point(r, &lower)?;
        if s <= 0.0 {
            return Err(FractError::Infeasible);
        }
        alpha = a;
    }
    let m = (n + j) as f64;
    let mut t = 1.0;
    let throughput = |a: &[f64]| -> Vec<f64> {
        (0..n).map(|i| (0..j).map(|c| r[(i, c)] * a[c]).sum()).collect()
    };
    let barrier = |a: &[f64], t: f64| -> f64 {
        let u = throughput(a);
        if a.iter().any(|&x| x <= 0.0) || u.iter().zip(&lower).any(|(ui, l)| ui - l <= 0.0) {
            return f64::INFINITY;
        }
        -t * u.iter().map(|ui| (PF_EPSILON + ui).ln()).sum::<f64>()
            - u.iter().zip(&lower).map(|(ui, l)| (ui - l).ln()).sum::<f64>()
            - a.iter().map(|x| x.ln()).sum::<f64>()
    };
    loop {
        for _ in 0..200 {
            let u = throughput(&alpha);
            let mut grad = DVector::zeros(j);
            let mut hess = DMatrix::zeros(j, j);
            for i in 0..n {
                let a1 = t / (PF_EPSILON + u[i]);
                let a2 = 1.0 / (u[i] - lower[i]);
                let coef_g = -a1 - a2;
                let coef_h = a1 * a1 / t + a2 * a2;
                let row = r.row(i).transpose();
                grad += &row * coef_g;
                hess += &row * row.transpose() * coef_h;
            }
            for c in 0..j {
                grad[c] -= 1.0 / alpha[c];
                hess[(c, c)] += 1.0 / (alpha[c] * alpha[c]);
            }
            let mut kkt = DMatrix::zeros(j + 1, j + 1);
            kkt.view_mut((0, 0), (j, j)).copy_from(&hess);
            for c in 0..j {
                kkt[(c, j)] = 1.0;
                kkt[(j, c)] = 1.0;
            }
            let mut rhs = DVector::zeros(j + 1);
            for c in 0..j {
                rhs[c] = -grad[c];
            }
            let Some(sol) = kkt.lu().solve(&rhs) else {
                return Err(FractError::BadInput("singular Newton system".into()));
            };
            let dx: Vec<f64> = (0..j).map(|c| sol[c]).collect();
            let decrement: f64 = -(0..j).map(|c| grad[c] * dx[c]).sum::<f64>();
            if decrement / 2.0 <= 1e-13 {
                break;
            }
            let f0 = barrier(&alpha, t);
            let mut step = 1.0;
            loop {
                let cand: Vec<f64> = alpha.iter().zip(&dx).map(|(a, d)| a + step * d).collect();
                if barrier(&cand, t) <= f0 - 0.25 * step * decrement {
                    alpha = cand;
                    break;
                }
                step *= 0.5;
                if step < 1e-16 {
                    break;
                }
            }
            if step < 1e-16 {
                break;
            }
        }
        if m / t < 1e-11 {
            break;
        }
        t *= 10.0;
    }
    let alpha = normalize(&alpha);
    let u = throughput(&alpha);
    let value = Objective::ProportionalFair.value(&u);
    Ok(OracleSolution { alpha, value })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_class() {
        let rates = RateMatrix::from_rows(&[vec![2.0], vec![1.0]]);
        let sol = centralized_oracle(&rates, &[1.0, 1.0], &Objective::sum(2)).unwrap();
        assert_eq!(sol.alpha, vec![1.0]);
        assert_eq!(
            centralized_oracle(&rates, &[1.0, 1.5], &Objective::sum(2)),
            Err(FractError::Infeasible)
        );
    }

    #[test]
    fn sum_picks_better_class() {
        let rates = RateMatrix::from_rows(&[vec![3.0, 0.0], vec![0.0, 1.0]]);
        let sol = centralized_oracle(&rates, &[0.0, 0.0], &Objective::sum(2)).unwrap();
        assert!((sol.alpha[0] - 1.0).abs() < 1e-12);
        assert!((sol.value - 3.0).abs() < 1e-12);
    }

    #[test]
    fn maxmin_symmetric_split() {
        let rates = RateMatrix::from_rows(&[vec![2.0, 0.0], vec![0.0, 2.0]]);
        let sol = centralized_oracle(&rates, &[0.1, 0.1], &Objective::MaxMin).unwrap();
        assert!((sol.alpha[0] - 0.5).abs() < 1e-12);
        assert!((sol.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pf_closed_form() {
        // Exclusive classes: Σ log(r_k α_k) is maximized by α_k = 1/H.
        let rates = RateMatrix::from_rows(&[vec![2.0, 0.0, 0.0], vec![0.0, 5.0, 0.0], vec![0.0, 0.0, 1.0]]);
        let sol = centralized_oracle(&rates, &[0.1, 0.1, 0.1], &Objective::ProportionalFair).unwrap();
        for a in &sol.alpha {
            assert!((a - 1.0 / 3.0).abs() < 1e-7, "{:?}", sol.alpha);
        }
        // A binding minimum moves the optimum to the boundary.
        let sol = centralized_oracle(&rates, &[0.1, 0.1, 0.5], &Objective::ProportionalFair).unwrap();
        assert!((sol.alpha[2] - 0.5).abs() < 1e-7);
        assert!((sol.alpha[0] - 0.25).abs() < 1e-7);
    }

    #[test]
    fn pf_infeasible() {
        let rates = RateMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]);
        assert_eq!(
            centralized_oracle(&rates, &[0.6, 0.6], &Objective::ProportionalFair),
            Err(FractError::Infeasible)
        );
    }
}
