//! Comparison policies: requirement-blind STDMA, exhaustive constant power
//! control, power-matched scheduling, and the on/off enumeration benchmark.

use rayon::prelude::*;
use thiserror::Error;

use crate::fractopt::{optimize_time_sharing, FractError};
use crate::objective::Objective;
use crate::scheduler::CyclicPolicy;
use crate::topology::{throughputs, GainMatrix, PowerProfile, Scenario};

/// Largest grid the constant-power search will enumerate.
pub const MAX_GRID_POINTS: u128 = 10_000_000;
/// Largest network the benchmark enumerates.
pub const MAX_BENCHMARK_UES: usize = 16;
/// Longest PMS cycle accepted.
pub const MAX_PMS_CYCLE: usize = 1_000_000;

#[derive(Debug, Error, PartialEq)]
pub enum BaselineError {
    #[error("search space of {points} points exceeds the limit of {limit}")]
    TooLarge { points: u128, limit: u128 },
    #[error("no policy in the search space meets every minimum")]
    Infeasible,
    #[error("{0} minimums for {1} UEs")]
    ShapeMismatch(usize, usize),
    #[error(transparent)]
    Fract(#[from] FractError),
}

/// Equal share for every color class.
pub fn stdma_equal(num_classes: usize) -> Vec<f64> {
    vec![1.0 / num_classes as f64; num_classes]
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConstantPower {
    pub profile: PowerProfile,
    pub value: f64,
    pub throughputs: Vec<f64>,
}

/// Exhaustive search over `p_i ∈ {0, p_i^max/L, …, p_i^max}`. Ties keep
/// the profile with the smallest grid index.
pub fn centralized_constant_power(
    scenario: &Scenario,
    gains: &GainMatrix,
    levels: usize,
    objective: &Objective,
    rmin: &[f64],
) -> Result<ConstantPower, BaselineError> {
    let n = scenario.num_ues();
    if rmin.len() != n {
        return Err(BaselineError::ShapeMismatch(rmin.len(), n));
    }
    let base = levels as u128 + 1;
    let points = (0..n).try_fold(1u128, |acc, _| acc.checked_mul(base).filter(|&p| p <= MAX_GRID_POINTS));
    let Some(points) = points.filter(|_| levels > 0) else {
        return Err(BaselineError::TooLarge {
            points: base.saturating_pow(n as u32),
            limit: MAX_GRID_POINTS,
        });
    };
    let decode = |mut idx: u64| -> PowerProfile {
        let mut p = vec![0.0; n];
        for (i, v) in p.iter_mut().enumerate() {
            let level = idx % base as u64;
            idx /= base as u64;
            *v = scenario.pmax[i] * level as f64 / levels as f64;
        }
        PowerProfile(p)
    };
    let best = (0..points as u64)
        .into_par_iter()
        .filter_map(|idx| {
            let r = throughputs(scenario, gains, &decode(idx));
            if r.iter().zip(rmin).all(|(r, m)| *r >= *m) {
                Some((objective.value(&r), idx))
            } else {
                None
            }
        })
        .reduce_with(|a, b| {
            if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
                b
            } else {
                a
            }
        });
    let (value, idx) = best.ok_or(BaselineError::Infeasible)?;
    let profile = decode(idx);
    Ok(ConstantPower {
        throughputs: throughputs(scenario, gains, &profile),
        profile,
        value,
    })
}

/// Power-matched scheduling: each cell serves its UEs in turn, strongest
/// own-gain first, and all cells transmit at once at full power.
pub fn pms(scenario: &Scenario, gains: &GainMatrix) -> Result<CyclicPolicy, BaselineError> {
    let cells: Vec<Vec<usize>> = (0..scenario.num_sbs())
        .map(|j| {
            let mut members = scenario.served_by(j);
            members.sort_by(|&a, &b| gains.get(b, j).total_cmp(&gains.get(a, j)).then(a.cmp(&b)));
            members
        })
        .filter(|m| !m.is_empty())
        .collect();
    let mut period = 1usize;
    for c in &cells {
        period = lcm(period, c.len());
        if period > MAX_PMS_CYCLE {
            return Err(BaselineError::TooLarge {
                points: period as u128,
                limit: MAX_PMS_CYCLE as u128,
            });
        }
    }
    let profiles: Vec<PowerProfile> = (0..period)
        .map(|t| {
            let on: Vec<usize> = cells.iter().map(|c| c[t % c.len()]).collect();
            PowerProfile::on_set(scenario, &on)
        })
        .collect();
    Ok(CyclicPolicy::new(profiles, (0..period).collect()))
}

fn lcm(a: usize, b: usize) -> usize {
    fn gcd(a: usize, b: usize) -> usize {
        if b == 0 {
            a
        } else {
            gcd(b, a % b)
        }
    }
    a / gcd(a, b) * b
}

#[derive(Clone, Debug, PartialEq)]
pub struct Benchmark {
    pub value: f64,
    /// `(on-set bitmask, share)` for every profile with positive share.
    pub support: Vec<(u32, f64)>,
    pub throughputs: Vec<f64>,
}

/// Optimal time sharing over all `2^N` on/off profiles.
pub fn benchmark_bp(
    scenario: &Scenario,
    gains: &GainMatrix,
    objective: &Objective,
    rmin: &[f64],
    limit: usize,
) -> Result<Benchmark, BaselineError> {
    let n = scenario.num_ues();
    if rmin.len() != n {
        return Err(BaselineError::ShapeMismatch(rmin.len(), n));
    }
    let limit = limit.min(MAX_BENCHMARK_UES);
    if n > limit {
        return Err(BaselineError::TooLarge {
            points: 1u128 << n.min(127),
            limit: 1u128 << limit,
        });
    }
    let masks = 1usize << n;
    let columns: Vec<Vec<f64>> = (0..masks)
        .into_par_iter()
        .map(|mask| {
            let on: Vec<usize> = (0..n).filter(|&i| mask >> i & 1 == 1).collect();
            throughputs(scenario, gains, &PowerProfile::on_set(scenario, &on))
        })
        .collect();
    let sol = optimize_time_sharing(n, masks, |i, j| columns[j][i], rmin, objective).map_err(|e| match e {
        FractError::Infeasible => BaselineError::Infeasible,
        other => BaselineError::Fract(other),
    })?;
    let thr: Vec<f64> = (0..n)
        .map(|i| (0..masks).map(|j| sol.alpha[j] * columns[j][i]).sum())
        .collect();
    Ok(Benchmark {
        value: objective.value(&thr),
        support: sol
            .alpha
            .iter()
            .enumerate()
            .filter(|(_, &a)| a > 1e-9)
            .map(|(j, &a)| (j as u32, a))
            .collect(),
        throughputs: thr,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scheduler::{evaluate, PowerPolicy};
    use crate::topology::{channel_gain, Scenario};

    fn scenario(ues: &[[f64; 3]], sbs: &[[f64; 3]], serving: &[usize]) -> Scenario {
        let n = ues.len();
        Scenario {
            ue_positions: ues.to_vec(),
            sbs_positions: sbs.to_vec(),
            serving: serving.to_vec(),
            pmax: vec![10.0; n],
            rmin: vec![0.01; n],
            noise: vec![0.1; sbs.len()],
            path_loss_exponent: 2.0,
            wall_counts: None,
            wall_planes: None,
            wall_coeff: 1.0,
            fading_scale: None,
        }
    }

    #[test]
    fn stdma_is_uniform() {
        assert_eq!(stdma_equal(2), vec![0.5, 0.5]);
        assert_eq!(stdma_equal(5), vec![0.2; 5]);
    }

    #[test]
    fn single_ue_uses_full_power() {
        let s = scenario(&[[0.0, 0.0, 0.0]], &[[0.0, 1.0, 0.0]], &[0]);
        let g = channel_gain(&s, None).unwrap();
        let best = centralized_constant_power(&s, &g, 4, &Objective::MaxMin, &s.rmin).unwrap();
        assert_eq!(best.profile.0, vec![10.0]);
        let bp = benchmark_bp(&s, &g, &Objective::sum(1), &s.rmin, 16).unwrap();
        assert_eq!(bp.support.len(), 1);
        assert_eq!(bp.support[0].0, 1);
        assert!((bp.support[0].1 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn symmetric_pair_gets_symmetric_optimum() {
        let s = scenario(
            &[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]],
            &[[0.0, 0.5, 0.0], [1.0, 0.5, 0.0]],
            &[0, 1],
        );
        let g = channel_gain(&s, None).unwrap();
        let best = centralized_constant_power(&s, &g, 6, &Objective::MaxMin, &s.rmin).unwrap();
        assert_eq!(best.profile.0[0], best.profile.0[1]);
    }

    #[test]
    fn grid_guard() {
        let ues: Vec<[f64; 3]> = (0..8).map(|i| [i as f64, 0.0, 0.0]).collect();
        let sbs: Vec<[f64; 3]> = (0..8).map(|i| [i as f64, 1.0, 0.0]).collect();
        let s = scenario(&ues, &sbs, &(0..8).collect::<Vec<_>>());
        let g = channel_gain(&s, None).unwrap();
        // 8 levels per UE -> 9^8 ≈ 4.3e7 points.
        let err = centralized_constant_power(&s, &g, 8, &Objective::MaxMin, &s.rmin).unwrap_err();
        assert!(matches!(err, BaselineError::TooLarge { .. }));
    }

    #[test]
    fn finer_grid_never_worse() {
        let s = scenario(
            &[[0.0, 0.0, 0.0], [1.5, 0.0, 0.0], [3.0, 0.2, 0.0]],
            &[[0.0, 0.7, 0.0], [1.5, 0.7, 0.0], [3.0, 0.7, 0.0]],
            &[0, 1, 2],
        );
        let g = channel_gain(&s, None).unwrap();
        let mut last = f64::NEG_INFINITY;
        for levels in [1, 2, 4, 8] {
            let v = centralized_constant_power(&s, &g, levels, &Objective::sum(3), &s.rmin)
                .unwrap()
                .value;
            assert!(v >= last);
            last = v;
        }
    }

    #[test]
    fn pms_single_ue_cells_is_constant() {
        let s = scenario(
            &[[0.0, 0.0, 0.0], [5.0, 0.0, 0.0]],
            &[[0.0, 1.0, 0.0], [5.0, 1.0, 0.0]],
            &[0, 1],
        );
        let g = channel_gain(&s, None).unwrap();
        let p = pms(&s, &g).unwrap();
        assert_eq!(p.profiles().len(), 1);
        assert_eq!(p.profiles()[0].0, vec![10.0, 10.0]);
    }

    #[test]
    fn pms_rotates_within_cell() {
        let s = scenario(
            &[[0.0, 0.0, 0.0], [0.3, 0.0, 0.0], [5.0, 0.0, 0.0]],
            &[[0.0, 1.0, 0.0], [5.0, 1.0, 0.0]],
            &[0, 0, 1],
        );
        let g = channel_gain(&s, None).unwrap();
        let p = pms(&s, &g).unwrap();
        assert_eq!(p.order(), &[0, 1]);
        // UE 0 is closer to its SBS, so it goes first.
        assert_eq!(p.profiles()[0].0, vec![10.0, 0.0, 10.0]);
        assert_eq!(p.profiles()[1].0, vec![0.0, 10.0, 10.0]);
        let avg = evaluate(&s, &g, &p, 0, 2, false).average;
        let first = throughputs(&s, &g, &p.profiles()[0]);
        assert!((avg[0] - first[0] / 2.0).abs() < 1e-12);
    }

    #[test]
    fn isolated_pair_both_on() {
        let mut s = scenario(
            &[[0.0, 0.0, 0.0], [1e4, 0.0, 0.0]],
            &[[0.0, 1.0, 0.0], [1e4, 1.0, 0.0]],
            &[0, 1],
        );
        s.path_loss_exponent = 6.0;
        let g = channel_gain(&s, None).unwrap();
        let bp = benchmark_bp(&s, &g, &Objective::sum(2), &s.rmin, 16).unwrap();
        assert_eq!(bp.support.len(), 1);
        assert_eq!(bp.support[0].0, 0b11);
    }
}
