use crate::scheduler::{evaluate, CyclicPolicy};
use crate::topology::{throughputs, GainMatrix, PowerProfile, Scenario};

/// Instantaneous rate of every UE in every class, `N x H`.
#[derive(Clone, Debug, PartialEq)]
pub struct RateMatrix {
    num_ues: usize,
    num_classes: usize,
    data: Vec<f64>,
}

impl RateMatrix {
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let num_classes = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == num_classes), "ragged rate rows");
        RateMatrix {
            num_ues: rows.len(),
            num_classes,
            data: rows.iter().flatten().copied().collect(),
        }
    }

    pub fn num_ues(&self) -> usize {
        self.num_ues
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    #[inline]
    pub fn get(&self, ue: usize, class: usize) -> f64 {
        self.data[ue * self.num_classes + class]
    }

    pub fn row(&self, ue: usize) -> &[f64] {
        &self.data[ue * self.num_classes..(ue + 1) * self.num_classes]
    }

    pub fn max_rate(&self, ue: usize) -> f64 {
        self.row(ue).iter().copied().fold(0.0, f64::max)
    }

    /// `Σ_k α_k R_i^k` for every UE.
    pub fn throughputs(&self, alpha: &[f64]) -> Vec<f64> {
        (0..self.num_ues)
            .map(|i| self.row(i).iter().zip(alpha).map(|(r, a)| r * a).sum())
            .collect()
    }
}

/// Rates with class `k` transmitting at full power and everyone else silent.
pub fn compute_rates(scenario: &Scenario, gains: &GainMatrix, classes: &[Vec<usize>]) -> RateMatrix {
    let n = scenario.num_ues();
    let h = classes.len();
    let mut data = vec![0.0; n * h];
    for (k, class) in classes.iter().enumerate() {
        let r = throughputs(scenario, gains, &PowerProfile::on_set(scenario, class));
        for &i in class {
            data[i * h + k] = r[i];
        }
    }
    RateMatrix {
        num_ues: n,
        num_classes: h,
        data,
    }
}

/// Rates obtained by simulating one measurement slot per class.
pub fn measure_rates(scenario: &Scenario, gains: &GainMatrix, classes: &[Vec<usize>]) -> RateMatrix {
    let n = scenario.num_ues();
    let h = classes.len();
    let profiles = classes
        .iter()
        .map(|c| PowerProfile::on_set(scenario, c))
        .collect();
    let policy = CyclicPolicy::new(profiles, (0..h).collect());
    let trace = evaluate(scenario, gains, &policy, 0, h, true);
    let slots = trace.slots.expect("slot records requested");
    let mut data = vec![0.0; n * h];
    for (k, slot) in slots.iter().enumerate() {
        for i in 0..n {
            data[i * h + k] = slot.rates[i];
        }
    }
    RateMatrix {
        num_ues: n,
        num_classes: h,
        data,
    }
}
