use rayon::prelude::*;

use super::incidence::consensus_edges;
use super::local::{project_feasible, solve_local_subproblem, LocalProblem, LocalUtility};
use super::{FractError, RateMatrix};
use crate::intgraph::InterferenceGraph;
use crate::objective::Objective;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdmmConfig {
    /// Penalty `y`.
    pub penalty: f64,
    /// Exact number of iterations `P`.
    pub iterations: usize,
    /// Keep one [`IterationRecord`] per iteration.
    pub record_trace: bool,
}

impl Default for AdmmConfig {
    fn default() -> Self {
        AdmmConfig {
            penalty: 1.0,
            iterations: 2000,
            record_trace: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Objective of the averaged shares after this iteration.
    pub objective: f64,
    pub residual: f64,
    /// `R_i·γ − rmin_i` per UE.
    pub slack: Vec<f64>,
}

/// Local estimates, multipliers and auxiliaries after the last iteration.
#[derive(Clone, Debug, PartialEq)]
pub struct FractionState {
    /// Per UE, length `H` (or `H + 1` in max-min mode).
    pub betas: Vec<Vec<f64>>,
    /// Consensus edges, graph edges first then bridges.
    pub edges: Vec<(usize, usize)>,
    /// `[λ_{e,z}, λ_{e,t}]` per edge.
    pub duals: Vec<[Vec<f64>; 2]>,
    /// `[θ_{e,z}, θ_{e,t}]` per edge.
    pub aux: Vec<[Vec<f64>; 2]>,
    pub penalty: f64,
    pub iterations: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdmmOutcome {
    /// Consensus time shares on the simplex.
    pub gamma: Vec<f64>,
    pub objective: f64,
    /// `max |β_i^k − β_j^k|` over graph edges and share components.
    pub residual: f64,
    /// Same over every pair of UEs.
    pub global_spread: f64,
    /// Consensus residual of the auxiliary component (max-min only).
    pub aux_residual: f64,
    pub bridges: usize,
    /// Large residual together with a violated minimum at `gamma`.
    pub suspected_infeasible: bool,
    pub trace: Vec<IterationRecord>,
    pub state: FractionState,
}

fn utility_for(objective: &Objective, ue: usize) -> LocalUtility {
    match objective {
        Objective::WeightedSum(w) => LocalUtility::Linear(w[ue]),
        Objective::ProportionalFair => LocalUtility::Log,
        Objective::MaxMin => LocalUtility::MaxMinAux,
    }
}

fn average_shares(betas: &[Vec<f64>], h: usize) -> Vec<f64> {
    let n = betas.len() as f64;
    let mut g = vec![0.0; h];
    for b in betas {
        for k in 0..h {
            g[k] += b[k];
        }
    }
    for x in g.iter_mut() {
        *x = (*x / n).max(0.0);
    }
    let s: f64 = g.iter().sum();
    g.iter().map(|x| x / s).collect()
}

fn edge_residual(betas: &[Vec<f64>], edges: &[(usize, usize)], comps: std::ops::Range<usize>) -> f64 {
    edges
        .iter()
        .flat_map(|&(u, v)| comps.clone().map(move |k| (betas[u][k] - betas[v][k]).abs()))
        .fold(0.0, f64::max)
}

/// Consensus ADMM on the decoupled share problem.
///
/// Each UE minimizes its own augmented-Lagrangian terms over its feasible
/// polytope, then every edge averages its multipliers and recomputes the
/// auxiliaries. The multiplier enters the local step as `−λ·(Dβ − θ)`, the
/// sign under which the multiplier update is a dual ascent step.
pub fn admm_solve(
    rates: &RateMatrix,
    rmin: &[f64],
    objective: &Objective,
    graph: &InterferenceGraph,
    config: &AdmmConfig,
) -> Result<AdmmOutcome, FractError> {
    let n = rates.num_ues();
    let h = rates.num_classes();
    if n == 0 || h == 0 {
        return Err(FractError::BadInput("empty rate matrix".into()));
    }
    if rmin.len() != n || graph.num_vertices() != n {
        return Err(FractError::BadInput(format!(
            "{} UEs in rates, {} minimums, {} graph vertices",
            n,
            rmin.len(),
            graph.num_vertices()
        )));
    }
    if let Objective::WeightedSum(w) = objective {
        if w.len() != n {
            return Err(FractError::BadInput(format!("{} weights for {n} UEs", w.len())));
        }
    }
    if !(config.penalty > 0.0) {
        return Err(FractError::BadInput(format!("penalty {} must be positive", config.penalty)));
    }
    for i in 0..n {
        if rates.max_rate(i) < rmin[i] {
            return Err(FractError::LocalInfeasible {
                ue: i,
                max_rate: rates.max_rate(i),
                rmin: rmin[i],
            });
        }
    }

    let aux = matches!(objective, Objective::MaxMin);
    let width = if aux { h + 1 } else { h };
    let y = config.penalty;
    let (edges, bridges) = consensus_edges(graph);
    let graph_edges = edges.len() - bridges;
    if bridges > 0 {
        log::warn!("bridging {} disconnected components for consensus", bridges + 1);
    }
    let mut incident: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for (e, &(z, t)) in edges.iter().enumerate() {
        incident[z].push((e, 0));
        incident[t].push((e, 1));
    }

    let uniform = vec![1.0 / h as f64; h];
    let mut betas: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut b = project_feasible(&uniform, rates.row(i), rmin[i]).ok_or(FractError::LocalInfeasible {
                ue: i,
                max_rate: rates.max_rate(i),
                rmin: rmin[i],
            })?;
            if aux {
                let u: f64 = b.iter().zip(rates.row(i)).map(|(a, r)| a * r).sum();
                b.push(u);
            }
            Ok(b)
        })
        .collect::<Result<_, FractError>>()?;
    let mut duals: Vec<[Vec<f64>; 2]> = vec![[vec![0.0; width], vec![0.0; width]]; edges.len()];
    let mut thetas: Vec<[Vec<f64>; 2]> = edges
        .iter()
        .map(|&(z, t)| {
            let avg: Vec<f64> = (0..width).map(|k| 0.5 * (betas[z][k] + betas[t][k])).collect();
            let neg: Vec<f64> = avg.iter().map(|x| -x).collect();
            [avg, neg]
        })
        .collect();

    let mut trace = Vec::new();
    for iteration in 1..=config.iterations {
        let next: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|i| {
                let d = incident[i].len();
                let mut center = vec![0.0; width];
                for &(e, side) in &incident[i] {
                    let sign = if side == 0 { 1.0 } else { -1.0 };
                    for k in 0..width {
                        center[k] += sign * (thetas[e][side][k] + duals[e][side][k] / y);
                    }
                }
                if d > 0 {
                    for c in center.iter_mut() {
                        *c /= d as f64;
                    }
                }
                solve_local_subproblem(&LocalProblem {
                    ue: i,
                    rates: rates.row(i),
                    rmin: rmin[i],
                    utility: utility_for(objective, i),
                    center: &center,
                    rho: y * d as f64,
                })
            })
            .collect::<Result<_, _>>()?;
        betas = next;

        for (e, &(z, t)) in edges.iter().enumerate() {
            for k in 0..width {
                let az = betas[z][k];
                let at = -betas[t][k];
                let (lz, lt) = (duals[e][0][k], duals[e][1][k]);
                let l = 0.5 * (lz + lt) - 0.5 * y * (az + at);
                thetas[e][0][k] = (l - lz) / y + az;
                thetas[e][1][k] = (l - lt) / y + at;
                duals[e][0][k] = l;
                duals[e][1][k] = l;
            }
        }

        if config.record_trace {
            let gamma = average_shares(&betas, h);
            let thr = rates.throughputs(&gamma);
            trace.push(IterationRecord {
                iteration,
                objective: objective.value(&thr),
                residual: edge_residual(&betas, &edges[..graph_edges], 0..h),
                slack: thr.iter().zip(rmin).map(|(r, m)| r - m).collect(),
            });
        }
    }

    let gamma = average_shares(&betas, h);
    let thr = rates.throughputs(&gamma);
    let residual = edge_residual(&betas, &edges[..graph_edges], 0..h);
    let aux_residual = if aux {
        edge_residual(&betas, &edges[..graph_edges], h..h + 1)
    } else {
        0.0
    };
    let global_spread = (0..h)
        .map(|k| {
            let (lo, hi) = betas
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), b| (lo.min(b[k]), hi.max(b[k])));
            hi - lo
        })
        .fold(0.0, f64::max);
    let violated = thr.iter().zip(rmin).any(|(r, m)| *r < m - 1e-6);
    let suspected_infeasible = violated && global_spread > 1e-3;
    if suspected_infeasible {
        log::warn!("ADMM did not reach consensus and minimums are violated; problem may be infeasible");
    }
    Ok(AdmmOutcome {
        objective: objective.value(&thr),
        gamma,
        residual,
        global_spread,
        aux_residual,
        bridges,
        suspected_infeasible,
        trace,
        state: FractionState {
            betas,
            edges,
            duals,
            aux: thetas,
            penalty: y,
            iterations: config.iterations,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_ue_lp_vertex() {
        let rates = RateMatrix::from_rows(&[vec![2.0, 1.0]]);
        let g = InterferenceGraph::empty(1);
        let out = admm_solve(&rates, &[0.5], &Objective::sum(1), &g, &AdmmConfig::default()).unwrap();
        assert_eq!(out.gamma, vec![1.0, 0.0]);
        assert_eq!(out.objective, 2.0);
    }

    #[test]
    fn symmetric_edge_reaches_consensus() {
        let rates = RateMatrix::from_rows(&[vec![2.0, 0.0], vec![0.0, 2.0]]);
        let g = InterferenceGraph::from_edges(2, &[(0, 1)]).unwrap();
        let cfg = AdmmConfig {
            iterations: 500,
            ..AdmmConfig::default()
        };
        let out = admm_solve(&rates, &[0.2, 0.2], &Objective::sum(2), &g, &cfg).unwrap();
        assert!(out.residual < 1e-6, "{}", out.residual);
        let out = admm_solve(&rates, &[0.2, 0.2], &Objective::MaxMin, &g, &cfg).unwrap();
        assert!((out.gamma[0] - 0.5).abs() < 1e-4, "{:?}", out.gamma);
    }

    #[test]
    fn theta_stays_antisymmetric() {
        let rates = RateMatrix::from_rows(&[vec![1.0, 0.0, 0.5], vec![0.0, 2.0, 0.5], vec![1.5, 0.0, 1.0]]);
        let g = InterferenceGraph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let cfg = AdmmConfig {
            iterations: 50,
            ..AdmmConfig::default()
        };
        let out = admm_solve(&rates, &[0.1, 0.1, 0.1], &Objective::ProportionalFair, &g, &cfg).unwrap();
        for th in &out.state.aux {
            for k in 0..3 {
                assert!((th[0][k] + th[1][k]).abs() < 1e-12);
                assert!(th[0][k].abs() <= 1.0 + 1e-12);
            }
        }
    }

    #[test]
    fn infeasible_ue_named() {
        let rates = RateMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 0.5]]);
        let g = InterferenceGraph::from_edges(2, &[(0, 1)]).unwrap();
        let err = admm_solve(&rates, &[0.1, 0.6], &Objective::sum(2), &g, &AdmmConfig::default()).unwrap_err();
        assert!(matches!(err, FractError::LocalInfeasible { ue: 1, .. }));
    }
}
