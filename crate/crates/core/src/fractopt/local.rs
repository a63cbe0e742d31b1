//! Per-UE subproblem: a concave utility of the UE's own throughput plus a
//! quadratic proximity term, over the UE's feasible share polytope
//! `T = {β ≥ 0, Σβ = 1, R·β ≥ rmin}`.
//!
//! Every variant reduces to `β = P_T(c + s R / ρ)` for a scalar `s` that is
//! the utility's slope at the resulting throughput, so the solver is an
//! exact projection inside a monotone scalar bisection.

use super::FractError;
use crate::objective::PF_EPSILON;

/// Euclidean projection onto the probability simplex.
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut tau = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        cum += uj;
        let t = (cum - 1.0) / (j + 1) as f64;
        if uj - t > 0.0 {
            tau = t;
        }
    }
    v.iter().map(|&x| (x - tau).max(0.0)).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn shifted(v: &[f64], r: &[f64], mu: f64) -> Vec<f64> {
    v.iter().zip(r).map(|(a, b)| a + mu * b).collect()
}

/// Euclidean projection onto `{β ≥ 0, Σβ = 1, r·β ≥ rmin}`.
///
/// When the simplex projection violates the throughput row, the solution is
/// `P_simplex(v + μ r)` for the multiplier `μ > 0` that makes the row tight;
/// `μ` is bracketed by bisection and then solved exactly on the support.
pub fn project_feasible(v: &[f64], r: &[f64], rmin: f64) -> Option<Vec<f64>> {
    let rmax = r.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if rmax < rmin {
        return None;
    }
    let base = project_simplex(v);
    if dot(r, &base) >= rmin {
        return Some(base);
    }
    let f = |mu: f64| dot(r, &project_simplex(&shifted(v, r, mu)));
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while f(hi) < rmin {
        lo = hi;
        hi *= 2.0;
        if !hi.is_finite() {
            return None;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < rmin {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let fallback = project_simplex(&shifted(v, r, hi));
    let support: Vec<usize> = (0..v.len()).filter(|&k| fallback[k] > 0.0).collect();
    let s = support.len() as f64;
    let sv: f64 = support.iter().map(|&k| v[k]).sum();
    let sr: f64 = support.iter().map(|&k| r[k]).sum();
    let srv: f64 = support.iter().map(|&k| r[k] * v[k]).sum();
    let srr: f64 = support.iter().map(|&k| r[k] * r[k]).sum();
    let slope = srr - sr * sr / s;
    if slope > 0.0 {
        let intercept = srv + (1.0 - sv) * sr / s;
        let mu = (rmin - intercept) / slope;
        let nu = (1.0 - sv - mu * sr) / s;
        let mut exact = vec![0.0; v.len()];
        let mut ok = true;
        for &k in &support {
            let x = v[k] + mu * r[k] + nu;
            if x < -1e-13 {
                ok = false;
            }
            exact[k] = x.max(0.0);
        }
        let sum: f64 = exact.iter().sum();
        if ok && (sum - 1.0).abs() < 1e-12 && dot(r, &exact) >= rmin - 1e-12 * rmin.abs().max(1.0) {
            return Some(exact);
        }
    }
    Some(fallback)
}

/// Concave per-UE utility of throughput `u`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LocalUtility {
    /// `w u`.
    Linear(f64),
    /// `log(ε + u)`.
    Log,
    /// Auxiliary epigraph variable `t ≤ u`, utility `t`; adds one component.
    MaxMinAux,
}

/// `min −U(R·β) + (ρ/2)‖β − c‖²` over the feasible polytope.
#[derive(Clone, Copy, Debug)]
pub struct LocalProblem<'a> {
    pub ue: usize,
    pub rates: &'a [f64],
    pub rmin: f64,
    pub utility: LocalUtility,
    /// Length `H`, or `H + 1` for [`LocalUtility::MaxMinAux`].
    pub center: &'a [f64],
    pub rho: f64,
}

/// Finds the root of a nondecreasing `h` on `[lo, hi]` with `h(lo) ≤ 0 ≤ h(hi)`.
fn bisect(mut lo: f64, mut hi: f64, h: impl Fn(f64) -> f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if h(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

pub fn solve_local_subproblem(p: &LocalProblem<'_>) -> Result<Vec<f64>, FractError> {
    let h = p.rates.len();
    let r = p.rates;
    let max_rate = r.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if h == 0 || max_rate < p.rmin {
        return Err(FractError::LocalInfeasible {
            ue: p.ue,
            max_rate,
            rmin: p.rmin,
        });
    }
    let aux = matches!(p.utility, LocalUtility::MaxMinAux);
    let expected = if aux { h + 1 } else { h };
    if p.center.len() != expected {
        return Err(FractError::BadInput(format!(
            "center of UE {} has length {}, expected {expected}",
            p.ue,
            p.center.len()
        )));
    }
    let infeasible = || FractError::LocalInfeasible {
        ue: p.ue,
        max_rate,
        rmin: p.rmin,
    };

    if p.rho <= 0.0 {
        // No proximity term: every utility is maximized by the best class.
        let best = (0..h).fold(0, |b, k| if r[k] > r[b] { k } else { b });
        let mut beta = vec![0.0; expected];
        beta[best] = 1.0;
        if aux {
            beta[h] = max_rate;
        }
        return Ok(beta);
    }

    let c = &p.center[..h];
    let at = |s: f64| project_feasible(&shifted(c, r, s / p.rho), r, p.rmin);
    let throughput = |s: f64| at(s).map(|b| dot(r, &b));

    match p.utility {
        LocalUtility::Linear(w) => at(w).ok_or_else(infeasible),
        LocalUtility::Log => {
            let u0 = throughput(0.0).ok_or_else(infeasible)?;
            let lo = 1.0 / (PF_EPSILON + max_rate);
            let hi = 1.0 / (PF_EPSILON + u0);
            let s = bisect(lo, hi, |s| {
                s - 1.0 / (PF_EPSILON + throughput(s).unwrap_or(max_rate))
            });
            at(s).ok_or_else(infeasible)
        }
        LocalUtility::MaxMinAux => {
            let ct = p.center[h];
            let slope = |u: f64| (1.0 - p.rho * (u - ct)).max(0.0);
            let u0 = throughput(0.0).ok_or_else(infeasible)?;
            let hi = slope(u0);
            let s = if hi <= 0.0 {
                0.0
            } else {
                bisect(0.0, hi, |s| s - slope(throughput(s).unwrap_or(max_rate)))
            };
            let mut beta = at(s).ok_or_else(infeasible)?;
            let u = dot(r, &beta);
            beta.push(u.min(ct + 1.0 / p.rho));
            Ok(beta)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamKey;
    use rand::Rng;

    fn feasible(beta: &[f64], r: &[f64], rmin: f64) -> bool {
        let sum: f64 = beta.iter().sum();
        beta.iter().all(|&b| b >= 0.0) && (sum - 1.0).abs() <= 1e-10 && dot(r, beta) >= rmin - 1e-10
    }

    #[test]
    fn simplex_projection_basics() {
        assert_eq!(project_simplex(&[0.2, 0.8]), vec![0.2, 0.8]);
        let p = project_simplex(&[2.0, 0.0]);
        assert_eq!(p, vec![1.0, 0.0]);
        let p = project_simplex(&[0.0, 0.0, 0.0]);
        for x in p {
            assert!((x - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn projection_h2_closed_form() {
        // On H = 2 the polytope is β1 ∈ [a, b]; the projection of v is the
        // clamp of the simplex-line foot point (v1 − v2 + 1)/2.
        let mut rng = StreamKey::root(2).rng();
        for _ in 0..2000 {
            let r = [rng.random_range(0.1f64..5.0), rng.random_range(0.1f64..5.0)];
            let rmin = rng.random_range(0.05..r[0].max(r[1]));
            let v = [rng.random_range(-2.0f64..2.0), rng.random_range(-2.0f64..2.0)];
            // r1 β1 + r2 (1 − β1) ≥ rmin.
            let (mut a, mut b) = (0.0f64, 1.0f64);
            let d = r[0] - r[1];
            if d > 0.0 {
                a = a.max((rmin - r[1]) / d);
            } else if d < 0.0 {
                b = b.min((rmin - r[1]) / d);
            }
            let foot = ((v[0] - v[1] + 1.0) / 2.0).clamp(a, b);
            let p = project_feasible(&v, &r, rmin).unwrap();
            assert!((p[0] - foot).abs() < 1e-9, "{p:?} vs {foot}");
            assert!(feasible(&p, &r, rmin));
        }
    }

    #[test]
    fn projection_random_feasible_and_optimal() {
        let mut rng = StreamKey::root(4).rng();
        for _ in 0..500 {
            let h = rng.random_range(2..7);
            let r: Vec<f64> = (0..h).map(|_| rng.random_range(0.0..4.0)).collect();
            let rmax = r.iter().copied().fold(0.0, f64::max);
            let rmin = rng.random_range(0.0..rmax);
            let v: Vec<f64> = (0..h).map(|_| rng.random_range(-1.0..1.5)).collect();
            let p = project_feasible(&v, &r, rmin).unwrap();
            assert!(feasible(&p, &r, rmin));
            // Compare against random feasible points: none may be closer.
            let dist = |x: &[f64]| x.iter().zip(&v).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
            let best = dist(&p);
            for _ in 0..200 {
                let w: Vec<f64> = (0..h).map(|_| rng.random::<f64>()).collect();
                let s: f64 = w.iter().sum();
                let q: Vec<f64> = w.iter().map(|x| x / s).collect();
                if dot(&r, &q) >= rmin {
                    assert!(dist(&q) >= best - 1e-9);
                }
            }
        }
    }

    #[test]
    fn infeasible_polytope() {
        assert!(project_feasible(&[0.5, 0.5], &[1.0, 2.0], 2.5).is_none());
        let p = LocalProblem {
            ue: 3,
            rates: &[1.0, 2.0],
            rmin: 2.5,
            utility: LocalUtility::Linear(1.0),
            center: &[0.5, 0.5],
            rho: 1.0,
        };
        assert!(matches!(
            solve_local_subproblem(&p),
            Err(FractError::LocalInfeasible { ue: 3, .. })
        ));
    }

    #[test]
    fn no_proximity_is_lp_vertex() {
        let p = LocalProblem {
            ue: 0,
            rates: &[2.0, 1.0],
            rmin: 0.5,
            utility: LocalUtility::Linear(1.0),
            center: &[0.0, 0.0],
            rho: 0.0,
        };
        assert_eq!(solve_local_subproblem(&p).unwrap(), vec![1.0, 0.0]);
    }

    fn objective(p: &LocalProblem<'_>, beta: &[f64]) -> f64 {
        let h = p.rates.len();
        let u = dot(p.rates, &beta[..h]);
        let prox: f64 = beta.iter().zip(p.center).map(|(a, b)| (a - b).powi(2)).sum();
        let util = match p.utility {
            LocalUtility::Linear(w) => w * u,
            LocalUtility::Log => (PF_EPSILON + u).ln(),
            LocalUtility::MaxMinAux => beta[h],
        };
        -util + 0.5 * p.rho * prox
    }

    #[test]
    fn local_solutions_beat_perturbations() {
        let mut rng = StreamKey::root(8).rng();
        for trial in 0..300 {
            let h = rng.random_range(2..6);
            let r: Vec<f64> = (0..h).map(|_| rng.random_range(0.0..5.0)).collect();
            let rmax = r.iter().copied().fold(0.0, f64::max);
            let rmin = rng.random_range(0.01..rmax.max(0.02));
            if rmin > rmax {
                continue;
            }
            let utility = match trial % 3 {
                0 => LocalUtility::Linear(rng.random_range(0.0..2.0)),
                1 => LocalUtility::Log,
                _ => LocalUtility::MaxMinAux,
            };
            let len = if utility == LocalUtility::MaxMinAux { h + 1 } else { h };
            let center: Vec<f64> = (0..len).map(|_| rng.random_range(-0.5..1.5)).collect();
            let p = LocalProblem {
                ue: 0,
                rates: &r,
                rmin,
                utility,
                center: &center,
                rho: rng.random_range(0.5..8.0),
            };
            let beta = solve_local_subproblem(&p).unwrap();
            assert!(feasible(&beta[..h], &r, rmin));
            if utility == LocalUtility::MaxMinAux {
                assert!(beta[h] <= dot(&r, &beta[..h]) + 1e-12);
            }
            let f0 = objective(&p, &beta);
            for _ in 0..200 {
                let step: Vec<f64> = (0..h).map(|_| rng.random_range(-0.05..0.05)).collect();
                let moved: Vec<f64> = beta[..h].iter().zip(&step).map(|(a, b)| a + b).collect();
                let Some(mut q) = project_feasible(&moved, &r, rmin) else { continue };
                if utility == LocalUtility::MaxMinAux {
                    let u = dot(&r, &q);
                    q.push((beta[h] + rng.random_range(-0.05..0.05)).min(u));
                }
                assert!(objective(&p, &q) >= f0 - 1e-8, "trial {trial}");
            }
        }
    }
}
