//! Network utility functions over per-UE average throughputs.

use serde::{Deserialize, Serialize};

/// Smoothing added inside the logarithm of the proportional-fair utility.
pub const PF_EPSILON: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Objective {
    /// `Σ w_i R_i`.
    WeightedSum(Vec<f64>),
    /// `Σ log(ε + R_i)`.
    ProportionalFair,
    /// `min_i R_i`.
    MaxMin,
}

impl Objective {
    /// Unit weights.
    pub fn sum(n: usize) -> Self {
        Objective::WeightedSum(vec![1.0; n])
    }

    pub fn value(&self, throughputs: &[f64]) -> f64 {
        match self {
            Objective::WeightedSum(w) => w.iter().zip(throughputs).map(|(w, r)| w * r).sum(),
            Objective::ProportionalFair => throughputs.iter().map(|r| (PF_EPSILON + r).ln()).sum(),
            Objective::MaxMin => throughputs.iter().copied().fold(f64::INFINITY, f64::min),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Objective::WeightedSum(w) if w.iter().all(|&x| x == 1.0) => "sum",
            Objective::WeightedSum(_) => "weighted",
            Objective::ProportionalFair => "pf",
            Objective::MaxMin => "maxmin",
        }
    }
}
