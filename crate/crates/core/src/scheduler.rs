//! Cyclic slot schedules and finite-horizon policy evaluation.

use std::io::Write;

use rand::Rng;
use thiserror::Error;

use crate::objective::Objective;
use crate::topology::{channel_gain, sample_fading_matrix, throughputs, GainMatrix, PowerProfile, Scenario};

#[derive(Debug, Error)]
pub enum ScheduleError {
    #[error("fractions must contain a positive entry")]
    AllZero,
    #[error("fraction {index} is {value}; fractions must be finite and non-negative")]
    BadFraction { index: usize, value: f64 },
    #[error("trace output failed: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Topology(#[from] crate::topology::TopologyError),
}

/// Longest cycle ever built.
pub const MAX_CYCLE: u64 = 1_000_000;

/// Slot sequence for one cycle.
#[derive(Clone, Debug, PartialEq)]
pub struct Schedule {
    /// Class index per slot; classes appear in index order.
    pub cycle: Vec<usize>,
    pub slots_per_class: Vec<u64>,
    /// Precision actually used (may be below the requested one after capping).
    pub precision: u32,
    /// Classes dropped for having a negligible share.
    pub dropped: Vec<usize>,
    /// Normalized share mass of the dropped classes.
    pub dropped_mass: f64,
    /// Set when even `d = 0` exceeded [`MAX_CYCLE`] and slots were scaled down.
    pub capped: bool,
}

impl Schedule {
    pub fn cycle_length(&self) -> usize {
        self.cycle.len()
    }

    pub fn realized_fractions(&self) -> Vec<f64> {
        let l = self.cycle.len() as f64;
        self.slots_per_class.iter().map(|&s| s as f64 / l).collect()
    }

    /// `max_k |realized_k − γ_k / Σγ|`.
    pub fn max_fraction_error(&self, gamma: &[f64]) -> f64 {
        let total: f64 = gamma.iter().sum();
        self.realized_fractions()
            .iter()
            .zip(gamma)
            .map(|(r, g)| (r - g / total).abs())
            .fold(0.0, f64::max)
    }
}

fn slot_counts(norm: &[f64], kept: &[usize], min_pos: f64, d: u32) -> Vec<u64> {
    let scale = 10f64.powi(d as i32);
    let mut slots = vec![0u64; norm.len()];
    for &k in kept {
        let x = norm[k] / min_pos * scale;
        slots[k] = (x - 1e-9 * x).ceil().max(1.0) as u64;
    }
    slots
}

/// Slots per class `ceil(γ_k / min_{γ>0} γ · 10^d)`.
///
/// Classes whose normalized share is below `10^-(d+2)` are dropped. If the
/// cycle would exceed [`MAX_CYCLE`] the precision is lowered; if that is not
/// enough, slots are scaled down proportionally.
pub fn build_cycle(gamma: &[f64], d: u32) -> Result<Schedule, ScheduleError> {
    for (index, &value) in gamma.iter().enumerate() {
        if !(value.is_finite() && value >= 0.0) {
            return Err(ScheduleError::BadFraction { index, value });
        }
    }
    let total: f64 = gamma.iter().sum();
    if total <= 0.0 {
        return Err(ScheduleError::AllZero);
    }
    let norm: Vec<f64> = gamma.iter().map(|g| g / total).collect();
    let threshold = 10f64.powi(-(d as i32) - 2);
    let (kept, dropped): (Vec<usize>, Vec<usize>) = (0..norm.len())
        .filter(|&k| norm[k] > 0.0)
        .partition(|&k| norm[k] >= threshold);
    let kept = if kept.is_empty() {
        // Every positive share is tiny; keep the largest one.
        let best = (0..norm.len()).fold(0, |b, k| if norm[k] > norm[b] { k } else { b });
        vec![best]
    } else {
        kept
    };
    let dropped: Vec<usize> = dropped.into_iter().filter(|k| !kept.contains(k)).collect();
    let dropped_mass = dropped.iter().map(|&k| norm[k]).sum();
    if !dropped.is_empty() {
        log::info!("dropping classes {dropped:?} with total share {dropped_mass:.3e}");
    }
    let min_pos = kept.iter().map(|&k| norm[k]).fold(f64::INFINITY, f64::min);

    let mut precision = d;
    let mut capped = false;
    let mut slots = slot_counts(&norm, &kept, min_pos, precision);
    while slots.iter().sum::<u64>() > MAX_CYCLE && precision > 0 {
        precision -= 1;
        slots = slot_counts(&norm, &kept, min_pos, precision);
    }
    if slots.iter().sum::<u64>() > MAX_CYCLE {
        capped = true;
        let budget = MAX_CYCLE as f64;
        let kept_mass: f64 = kept.iter().map(|&k| norm[k]).sum();
        slots = vec![0; norm.len()];
        for &k in &kept {
            slots[k] = ((norm[k] / kept_mass * budget).floor() as u64).max(1);
        }
        log::warn!("cycle capped at {MAX_CYCLE} slots; shares rounded proportionally");
    }
    if precision != d {
        log::warn!("cycle precision lowered from {d} to {precision}");
    }
    let common = slots.iter().copied().filter(|&s| s > 0).fold(0, gcd);
    if common > 1 {
        for s in slots.iter_mut() {
            *s /= common;
        }
    }
    let mut cycle = Vec::with_capacity(slots.iter().sum::<u64>() as usize);
    for (k, &s) in slots.iter().enumerate() {
        cycle.extend(std::iter::repeat_n(k, s as usize));
    }
    Ok(Schedule {
        cycle,
        slots_per_class: slots,
        precision,
        dropped,
        dropped_mass,
        capped,
    })
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// A source of per-slot power profiles drawn from a finite set.
pub trait PowerPolicy: Sync {
    fn profiles(&self) -> &[PowerProfile];
    /// Index into [`PowerPolicy::profiles`] used in `slot`.
    fn profile_index(&self, slot: usize) -> usize;
}

/// Profiles played in a fixed repeating order.
#[derive(Clone, Debug, PartialEq)]
pub struct CyclicPolicy {
    profiles: Vec<PowerProfile>,
    order: Vec<usize>,
}

impl CyclicPolicy {
    pub fn new(profiles: Vec<PowerProfile>, order: Vec<usize>) -> Self {
        assert!(!order.is_empty(), "empty slot order");
        assert!(order.iter().all(|&i| i < profiles.len()), "order names a missing profile");
        CyclicPolicy { profiles, order }
    }

    /// MIS policy: class `k` transmits at full power in its slots.
    pub fn from_schedule(scenario: &Scenario, classes: &[Vec<usize>], schedule: &Schedule) -> Self {
        let profiles = classes
            .iter()
            .map(|c| PowerProfile::on_set(scenario, c))
            .collect();
        Self::new(profiles, schedule.cycle.clone())
    }

    /// One profile forever.
    pub fn constant(profile: PowerProfile) -> Self {
        Self::new(vec![profile], vec![0])
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }
}

impl PowerPolicy for CyclicPolicy {
    fn profiles(&self) -> &[PowerProfile] {
        &self.profiles
    }

    fn profile_index(&self, slot: usize) -> usize {
        self.order[slot % self.order.len()]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SlotRecord {
    pub slot: usize,
    pub profile: usize,
    pub rates: Vec<f64>,
}

/// Evaluated average throughputs over a horizon.
#[derive(Clone, Debug, PartialEq)]
pub struct PolicyTrace {
    pub horizon: usize,
    pub average: Vec<f64>,
    pub slots: Option<Vec<SlotRecord>>,
}

/// Neumaier-compensated accumulator.
#[derive(Clone, Copy, Debug, Default)]
struct Compensated {
    sum: f64,
    comp: f64,
}

impl Compensated {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(self) -> f64 {
        self.sum + self.comp
    }
}

fn profile_rates(scenario: &Scenario, gains: &GainMatrix, policy: &dyn PowerPolicy, used: &[bool]) -> Vec<Option<Vec<f64>>> {
    policy
        .profiles()
        .iter()
        .zip(used)
        .map(|(p, &u)| u.then(|| throughputs(scenario, gains, p)))
        .collect()
}

/// Simulates slots `start..start + len` with fixed gains.
pub fn evaluate(
    scenario: &Scenario,
    gains: &GainMatrix,
    policy: &dyn PowerPolicy,
    start: usize,
    len: usize,
    record: bool,
) -> PolicyTrace {
    let n = scenario.num_ues();
    let mut counts = vec![0u64; policy.profiles().len()];
    for slot in start..start + len {
        counts[policy.profile_index(slot)] += 1;
    }
    let used: Vec<bool> = counts.iter().map(|&c| c > 0).collect();
    let rates = profile_rates(scenario, gains, policy, &used);
    let average = if len == 0 {
        vec![0.0; n]
    } else {
        (0..n)
            .map(|i| {
                let mut acc = Compensated::default();
                for (p, r) in rates.iter().enumerate() {
                    if let Some(r) = r {
                        acc.add(counts[p] as f64 * r[i]);
                    }
                }
                acc.value() / len as f64
            })
            .collect()
    };
    let slots = record.then(|| {
        (start..start + len)
            .map(|slot| {
                let profile = policy.profile_index(slot);
                SlotRecord {
                    slot,
                    profile,
                    rates: rates[profile].clone().expect("profile used"),
                }
            })
            .collect()
    });
    PolicyTrace {
        horizon: len,
        average,
        slots,
    }
}

/// Simulates `horizon` slots, redrawing Rayleigh fading every `block` slots.
pub fn evaluate_block_fading<R: Rng + ?Sized>(
    scenario: &Scenario,
    policy: &dyn PowerPolicy,
    horizon: usize,
    block: usize,
    beta: f64,
    rng: &mut R,
    record: bool,
) -> Result<PolicyTrace, ScheduleError> {
    let n = scenario.num_ues();
    let block = block.max(1);
    let mut acc = vec![Compensated::default(); n];
    let mut slots = record.then(Vec::new);
    let mut start = 0;
    while start < horizon {
        let len = block.min(horizon - start);
        let fading = sample_fading_matrix(n, scenario.num_sbs(), beta, rng);
        let gains = channel_gain(scenario, Some(&fading))?;
        let part = evaluate(scenario, &gains, policy, start, len, record);
        for i in 0..n {
            acc[i].add(part.average[i] * len as f64);
        }
        if let (Some(all), Some(mut s)) = (slots.as_mut(), part.slots) {
            all.append(&mut s);
        }
        start += len;
    }
    Ok(PolicyTrace {
        horizon,
        average: acc
            .into_iter()
            .map(|a| if horizon == 0 { 0.0 } else { a.value() / horizon as f64 })
            .collect(),
        slots,
    })
}

/// Writes `slot,class,rate_0..rate_{N-1}`.
pub fn write_trace_csv<W: Write>(trace: &PolicyTrace, out: W) -> Result<(), ScheduleError> {
    let mut w = csv::Writer::from_writer(out);
    let n = trace.average.len();
    let mut header = vec!["slot".to_string(), "class".to_string()];
    header.extend((0..n).map(|i| format!("rate_{i}")));
    w.write_record(&header).map_err(csv_io)?;
    for s in trace.slots.iter().flatten() {
        let mut row = vec![s.slot.to_string(), s.profile.to_string()];
        row.extend(s.rates.iter().map(|r| format!("{r:.12e}")));
        w.write_record(&row).map_err(csv_io)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_io(e: csv::Error) -> ScheduleError {
    ScheduleError::Io(std::io::Error::other(e))
}

/// Value of a criterion plus the UEs below their minimum.
#[derive(Clone, Debug, PartialEq)]
pub struct Metrics {
    pub value: f64,
    pub sum: f64,
    pub min: f64,
    pub violations: Vec<usize>,
}

pub fn metrics(average: &[f64], objective: &Objective, rmin: &[f64]) -> Metrics {
    Metrics {
        value: objective.value(average),
        sum: average.iter().sum(),
        min: average.iter().copied().fold(f64::INFINITY, f64::min),
        violations: average
            .iter()
            .zip(rmin)
            .enumerate()
            .filter(|(_, (r, m))| **r < **m - 1e-9)
            .map(|(i, _)| i)
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamKey;
    use crate::topology::{build_grid_scenario, LinkParams};

    #[test]
    fn trivial_cycles() {
        let s = build_cycle(&[1.0], 2).unwrap();
        assert_eq!(s.cycle, vec![0]);
        let s = build_cycle(&[2.0 / 3.0, 1.0 / 3.0], 0).unwrap();
        assert_eq!(s.slots_per_class, vec![2, 1]);
        assert_eq!(s.cycle, vec![0, 0, 1]);
        for d in 0..4 {
            let s = build_cycle(&[0.5, 0.5], d).unwrap();
            assert_eq!(s.slots_per_class[0], s.slots_per_class[1]);
        }
    }

    #[test]
    fn zero_and_tiny_classes() {
        assert!(matches!(build_cycle(&[0.0, 0.0], 2), Err(ScheduleError::AllZero)));
        let s = build_cycle(&[0.7, 0.0, 0.3], 1).unwrap();
        assert_eq!(s.slots_per_class[1], 0);
        assert_eq!(s.cycle, [vec![0; 12], vec![2; 5]].concat());
        let s = build_cycle(&[0.5, 1e-6, 0.5], 2).unwrap();
        assert_eq!(s.dropped, vec![1]);
        assert!((s.dropped_mass - 1e-6 / (1.0 + 1e-6)).abs() < 1e-15);
    }

    #[test]
    fn cap_lowers_precision() {
        let s = build_cycle(&[0.999, 0.001], 4).unwrap();
        assert!(s.cycle_length() as u64 <= MAX_CYCLE);
        assert!(s.precision < 4);
    }

    fn scenario() -> Scenario {
        let p = LinkParams {
            pmax: 100.0,
            rmin: 0.1,
            noise: 3.0,
            path_loss_exponent: 4.0,
        };
        build_grid_scenario(2, 5.0, 1.0, &p).unwrap()
    }

    #[test]
    fn silent_and_single_ue() {
        let sc = scenario();
        let g = channel_gain(&sc, None).unwrap();
        let silent = CyclicPolicy::constant(PowerProfile::silent(4));
        assert!(evaluate(&sc, &g, &silent, 0, 10, false).average.iter().all(|&r| r == 0.0));
        let one = CyclicPolicy::constant(PowerProfile::on_set(&sc, &[2]));
        let t = evaluate(&sc, &g, &one, 0, 7, false);
        let free = (1.0 + g.get(2, 2) * 100.0 / 3.0).log2();
        assert!((t.average[2] - free).abs() < 1e-12);
    }

    #[test]
    fn block_fading_is_seeded() {
        let sc = scenario();
        let pol = CyclicPolicy::constant(PowerProfile::on_set(&sc, &[0, 3]));
        let key = StreamKey::root(1).stream("fading");
        let a = evaluate_block_fading(&sc, &pol, 250, 100, 1.0, &mut key.rng(), false).unwrap();
        let b = evaluate_block_fading(&sc, &pol, 250, 100, 1.0, &mut key.rng(), false).unwrap();
        assert_eq!(a, b);
        assert!(a.average[0] > 0.0 && a.average[1] == 0.0);
    }

    #[test]
    fn metric_values() {
        let m = metrics(&[1.0, 3.0], &Objective::WeightedSum(vec![0.5, 0.5]), &[1.5, 1.5]);
        assert_eq!(m.value, 2.0);
        assert_eq!(m.min, 1.0);
        assert_eq!(m.violations, vec![0]);
        assert_eq!(metrics(&[1.0, 3.0], &Objective::MaxMin, &[0.0, 0.0]).value, 1.0);
    }

    #[test]
    fn trace_csv_shape() {
        let sc = scenario();
        let g = channel_gain(&sc, None).unwrap();
        let pol = CyclicPolicy::new(
            vec![PowerProfile::on_set(&sc, &[0, 3]), PowerProfile::on_set(&sc, &[1, 2])],
            vec![0, 1, 1],
        );
        let t = evaluate(&sc, &g, &pol, 0, 3, true);
        let mut buf = Vec::new();
        write_trace_csv(&t, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "slot,class,rate_0,rate_1,rate_2,rate_3");
        assert_eq!(lines.len(), 4);
        assert!(lines[2].starts_with("1,1,"));
    }
}
