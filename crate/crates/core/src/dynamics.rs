//! Incremental adjustment to single-UE entry and exit.
//!
//! Each color `c` owns a timeline `[0, γ_c)` within the cycle. A UE holding
//! the color owns a set of intervals on that timeline; adjacent UEs never
//! own overlapping time. Entry carves time for the newcomer out of unused
//! time and out of the surplus of UEs above their minimum; exit hands the
//! leaver's time to a co-served UE.
//!
//! A holder's accounted rate in a color assumes every non-adjacent holder of
//! that color transmits, so it never exceeds what the UE actually gets.
//! Rates are re-measured whenever a color's holders change, and a holder
//! refuses a newcomer whose interference would take it below
//! `min(current, rmin)`.

use thiserror::Error;

use crate::fractopt::RateMatrix;
use crate::intgraph::{neighbors_by_distance, InterferenceGraph};
use crate::topology::{channel_gain, throughputs, GainMatrix, PowerProfile, Scenario, TopologyError};

const TIME_EPS: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum DynamicsError {
    #[error("UE {0} is not in the network")]
    UnknownUe(usize),
    #[error("SBS {sbs} does not exist ({num_sbs} SBSs)")]
    UnknownSbs { sbs: usize, num_sbs: usize },
    #[error("{0} colors but {1} shares")]
    ShapeMismatch(usize, usize),
    #[error("event script line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error(transparent)]
    Topology(#[from] TopologyError),
}

/// Sorted, disjoint half-open intervals.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct IntervalSet(Vec<(f64, f64)>);

impl IntervalSet {
    pub fn span(a: f64, b: f64) -> Self {
        if b - a > TIME_EPS {
            IntervalSet(vec![(a, b)])
        } else {
            IntervalSet::default()
        }
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.0
    }

    pub fn measure(&self) -> f64 {
        self.0.iter().map(|(a, b)| b - a).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, t: f64) -> bool {
        self.0.iter().any(|&(a, b)| a <= t && t < b)
    }

    pub fn insert(&mut self, a: f64, b: f64) {
        if b - a <= TIME_EPS {
            return;
        }
        self.0.push((a, b));
        self.0.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(self.0.len());
        for &(a, b) in &self.0 {
            match merged.last_mut() {
                Some(last) if a <= last.1 + TIME_EPS => last.1 = last.1.max(b),
                _ => merged.push((a, b)),
            }
        }
        self.0 = merged;
    }

    pub fn remove(&mut self, a: f64, b: f64) {
        let mut out = Vec::with_capacity(self.0.len() + 1);
        for &(x, y) in &self.0 {
            if y <= a || x >= b {
                out.push((x, y));
                continue;
            }
            if x < a && a - x > TIME_EPS {
                out.push((x, a));
            }
            if y > b && y - b > TIME_EPS {
                out.push((b, y));
            }
        }
        self.0 = out;
    }

    pub fn overlap(&self, other: &IntervalSet) -> f64 {
        let mut total = 0.0;
        for &(a, b) in &self.0 {
            for &(c, d) in &other.0 {
                total += (b.min(d) - a.max(c)).max(0.0);
            }
        }
        total
    }

    pub fn within(&self, lo: f64, hi: f64) -> bool {
        self.0.iter().all(|&(a, b)| a >= lo - TIME_EPS && b <= hi + TIME_EPS)
    }
}

/// A single network change.
#[derive(Clone, Debug, PartialEq)]
pub enum Event {
    Enter(EntrySpec),
    Exit(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct EntrySpec {
    pub sbs: usize,
    pub rmin: f64,
    pub pmax: f64,
    pub position: [f64; 3],
}

/// Parses `enter <sbs> <rmin> <pmax> <x> <y>` and `exit <ue>` lines.
pub fn parse_event_script(text: &str) -> Result<Vec<Event>, DynamicsError> {
    let mut events = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |reason: String| DynamicsError::Parse {
            line: idx + 1,
            reason,
        };
        let fields: Vec<&str> = line.split_whitespace().collect();
        match fields[0] {
            "enter" => {
                if fields.len() != 6 {
                    return Err(err(format!("expected 5 fields after `enter`, got {}", fields.len() - 1)));
                }
                let sbs = fields[1].parse().map_err(|e| err(format!("sbs: {e}")))?;
                let num = |k: usize, name: &str| -> Result<f64, DynamicsError> {
                    fields[k].parse().map_err(|e| err(format!("{name}: {e}")))
                };
                events.push(Event::Enter(EntrySpec {
                    sbs,
                    rmin: num(2, "rmin")?,
                    pmax: num(3, "pmax")?,
                    position: [num(4, "x")?, num(5, "y")?, 0.0],
                }));
            }
            "exit" => {
                if fields.len() != 2 {
                    return Err(err("expected `exit <ue>`".into()));
                }
                events.push(Event::Exit(fields[1].parse().map_err(|e| err(format!("ue: {e}")))?));
            }
            other => return Err(err(format!("unknown event `{other}`"))),
        }
    }
    Ok(events)
}

#[derive(Clone, Debug, PartialEq)]
pub struct EventRecord {
    pub index: usize,
    pub event: Event,
    pub ue: usize,
    /// Entry only: whether the newcomer reached its minimum.
    pub satisfied: Option<bool>,
    /// Accounted throughput of the entrant (entry) or zero (exit).
    pub achieved: f64,
    /// Smallest accounted throughput among incumbents that met their minimum before the event.
    pub worst_incumbent_accounted: f64,
    /// Smallest interference-aware throughput among those incumbents.
    pub worst_incumbent_actual: f64,
}

/// Network state maintained across events.
#[derive(Clone, Debug)]
pub struct LiveState {
    pub scenario: Scenario,
    pub graph: InterferenceGraph,
    pub threshold: f64,
    pub active: Vec<bool>,
    /// Length of each color's timeline.
    pub shares: Vec<f64>,
    /// `holdings[ue][color]`.
    pub holdings: Vec<Vec<IntervalSet>>,
    /// Per-slot rate each UE accounts for in each color.
    pub known_rates: Vec<Vec<f64>>,
    pub log: Vec<EventRecord>,
    gains: GainMatrix,
}

impl LiveState {
    /// State after the static pipeline: class `k` members hold all of `[0, γ_k)`.
    pub fn new(
        scenario: Scenario,
        graph: InterferenceGraph,
        threshold: f64,
        classes: &[Vec<usize>],
        shares: &[f64],
        rates: &RateMatrix,
    ) -> Result<Self, DynamicsError> {
        if classes.len() != shares.len() {
            return Err(DynamicsError::ShapeMismatch(classes.len(), shares.len()));
        }
        let n = scenario.num_ues();
        let h = shares.len();
        let mut holdings = vec![vec![IntervalSet::default(); h]; n];
        for (k, class) in classes.iter().enumerate() {
            for &i in class {
                holdings[i][k] = IntervalSet::span(0.0, shares[k]);
            }
        }
        let known_rates = (0..n).map(|i| rates.row(i).to_vec()).collect();
        let gains = channel_gain(&scenario, None)?;
        Ok(LiveState {
            scenario,
            graph,
            threshold,
            active: vec![true; n],
            shares: shares.to_vec(),
            holdings,
            known_rates,
            log: Vec::new(),
            gains,
        })
    }

    pub fn num_colors(&self) -> usize {
        self.shares.len()
    }

    pub fn active_ues(&self) -> Vec<usize> {
        (0..self.active.len()).filter(|&i| self.active[i]).collect()
    }

    fn holds(&self, ue: usize, color: usize) -> bool {
        self.active[ue] && !self.holdings[ue][color].is_empty()
    }

    /// `Σ_c |A_{i,c}| R̂_{i,c}`.
    pub fn accounted(&self, ue: usize) -> f64 {
        (0..self.num_colors())
            .map(|c| self.holdings[ue][c].measure() * self.known_rates[ue][c])
            .sum()
    }

    /// Rate of `ue` in `color` with every other non-adjacent holder
    /// transmitting, minus `excluded` and plus `extra`.
    fn rate_in_color(&self, ue: usize, color: usize, excluded: Option<usize>, extra: Option<usize>) -> f64 {
        let mut on: Vec<usize> = (0..self.active.len())
            .filter(|&j| {
                j != ue
                    && Some(j) != excluded
                    && (self.holds(j, color) || Some(j) == extra)
                    && !self.graph.has_edge(ue, j)
            })
            .collect();
        on.push(ue);
        let profile = PowerProfile::on_set(&self.scenario, &on);
        crate::topology::throughput(&self.scenario, &self.gains, &profile, ue)
    }

    /// Whether `newcomer` starting to transmit in `color` (with `leaving`
    /// stopping) would push another holder below its floor.
    fn vetoed(&self, newcomer: usize, color: usize, leaving: Option<usize>, floor: &[f64]) -> bool {
        (0..self.active.len())
            .filter(|&v| v != newcomer && Some(v) != leaving && self.holds(v, color))
            .any(|v| {
                let r = self.rate_in_color(v, color, leaving, Some(newcomer));
                let loss = self.holdings[v][color].measure() * (self.known_rates[v][color] - r);
                self.accounted(v) - loss < floor[v] - 1e-12
            })
    }

    /// Re-measures every holder's rate in `color` against the current holders.
    fn refresh_color(&mut self, color: usize) {
        for j in 0..self.active.len() {
            if self.holds(j, color) {
                self.known_rates[j][color] = self.rate_in_color(j, color, None, None);
            }
        }
    }

    /// Throughput each active UE may not drop below during one event.
    fn floors(&self) -> Vec<f64> {
        (0..self.active.len())
            .map(|j| {
                if self.active[j] {
                    self.accounted(j).min(self.scenario.rmin[j])
                } else {
                    f64::NEG_INFINITY
                }
            })
            .collect()
    }

    /// Per-UE throughput with the interference actually present in every
    /// elementary time segment.
    pub fn actual_throughputs(&self) -> Vec<f64> {
        let n = self.active.len();
        let mut out = vec![0.0; n];
        for c in 0..self.num_colors() {
            let mut cuts = vec![0.0, self.shares[c]];
            for i in 0..n {
                if self.holds(i, c) {
                    for &(a, b) in self.holdings[i][c].intervals() {
                        cuts.push(a);
                        cuts.push(b);
                    }
                }
            }
            cuts.sort_by(f64::total_cmp);
            cuts.dedup_by(|a, b| (*a - *b).abs() <= TIME_EPS);
            for w in cuts.windows(2) {
                let (a, b) = (w[0], w[1]);
                let mid = 0.5 * (a + b);
                let on: Vec<usize> = (0..n)
                    .filter(|&i| self.holds(i, c) && self.holdings[i][c].contains(mid))
                    .collect();
                if on.is_empty() {
                    continue;
                }
                let r = throughputs(&self.scenario, &self.gains, &PowerProfile::on_set(&self.scenario, &on));
                for &i in &on {
                    out[i] += (b - a) * r[i];
                }
            }
        }
        out
    }

    /// First pair of adjacent active UEs owning overlapping time in a color.
    pub fn find_clash(&self) -> Option<(usize, usize, usize)> {
        for (u, v) in self.graph.edges() {
            if !(self.active[u] && self.active[v]) {
                continue;
            }
            for c in 0..self.num_colors() {
                if self.holdings[u][c].overlap(&self.holdings[v][c]) > TIME_EPS {
                    return Some((u, v, c));
                }
            }
        }
        None
    }

    /// Every holding lies inside its color's timeline.
    pub fn conserves_shares(&self) -> bool {
        self.holdings
            .iter()
            .all(|row| row.iter().zip(&self.shares).all(|(set, &g)| set.within(0.0, g)))
    }

    fn guaranteed_incumbents(&self) -> Vec<usize> {
        self.active_ues()
            .into_iter()
            .filter(|&i| self.accounted(i) >= self.scenario.rmin[i] - 1e-9)
            .collect()
    }

    fn record(&mut self, event: Event, ue: usize, satisfied: Option<bool>, achieved: f64, incumbents: &[usize]) {
        let actual = self.actual_throughputs();
        let live: Vec<usize> = incumbents.iter().copied().filter(|&j| self.active[j] && j != ue).collect();
        let worst_incumbent_accounted = live.iter().map(|&j| self.accounted(j)).fold(f64::INFINITY, f64::min);
        let worst_incumbent_actual = live.iter().map(|&j| actual[j]).fold(f64::INFINITY, f64::min);
        let index = self.log.len();
        self.log.push(EventRecord {
            index,
            event,
            ue,
            satisfied,
            achieved,
            worst_incumbent_accounted,
            worst_incumbent_actual,
        });
    }

    pub fn apply(&mut self, event: &Event) -> Result<&EventRecord, DynamicsError> {
        match event {
            Event::Exit(ue) => self.handle_exit(*ue)?,
            Event::Enter(spec) => {
                self.handle_entry(spec)?;
            }
        }
        Ok(self.log.last().expect("event recorded"))
    }

    /// Removes `ue` and hands each of its colors to the co-served UE with
    /// the best rate in it, among those that can take it without a clash.
    pub fn handle_exit(&mut self, ue: usize) -> Result<(), DynamicsError> {
        if ue >= self.active.len() || !self.active[ue] {
            return Err(DynamicsError::UnknownUe(ue));
        }
        let incumbents = self.guaranteed_incumbents();
        let floor = self.floors();
        let sbs = self.scenario.serving[ue];
        for c in 0..self.num_colors() {
            if self.holdings[ue][c].is_empty() {
                continue;
            }
            let candidates: Vec<usize> = (0..self.active.len())
                .filter(|&j| {
                    j != ue
                        && self.active[j]
                        && self.scenario.serving[j] == sbs
                        && self.holdings[j][c].is_empty()
                        && !self.graph.neighbors(j).any(|k| k != ue && self.holds(k, c))
                })
                .collect();
            let mut ranked: Vec<(usize, f64)> = candidates
                .into_iter()
                .map(|j| (j, self.rate_in_color(j, c, Some(ue), None)))
                .collect();
            ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            let heir = ranked.into_iter().find(|&(j, _)| !self.vetoed(j, c, Some(ue), &floor));
            let time = std::mem::take(&mut self.holdings[ue][c]);
            if let Some((j, _)) = heir {
                self.holdings[j][c] = time;
            }
            self.refresh_color(c);
        }
        self.active[ue] = false;
        self.graph.isolate(ue);
        self.record(Event::Exit(ue), ue, None, 0.0, &incumbents);
        Ok(())
    }

    /// Gives `ue` time in `color`: all unused time, then donor time up to
    /// the remaining need and the donors' surplus. Returns throughput gained.
    fn carve(
        &mut self,
        ue: usize,
        color: usize,
        donors: &[usize],
        need: f64,
        surplus: &mut [f64],
        floor: &[f64],
    ) -> f64 {
        let rate = self.known_rates[ue][color];
        if rate <= 0.0 {
            return 0.0;
        }
        if self.holdings[ue][color].is_empty() && self.vetoed(ue, color, None, floor) {
            return 0.0;
        }
        let gamma = self.shares[color];
        let nbrs: Vec<usize> = self.graph.neighbors(ue).filter(|&j| self.holds(j, color)).collect();
        let mut cuts = vec![0.0, gamma];
        for &j in &nbrs {
            for &(a, b) in self.holdings[j][color].intervals() {
                cuts.push(a);
                cuts.push(b);
            }
        }
        for &(a, b) in self.holdings[ue][color].intervals() {
            cuts.push(a);
            cuts.push(b);
        }
        cuts.sort_by(f64::total_cmp);
        cuts.dedup_by(|a, b| (*a - *b).abs() <= TIME_EPS);
        let segments: Vec<(f64, f64, Vec<usize>)> = cuts
            .windows(2)
            .filter(|w| w[1] - w[0] > TIME_EPS)
            .filter_map(|w| {
                let mid = 0.5 * (w[0] + w[1]);
                if self.holdings[ue][color].contains(mid) {
                    return None;
                }
                let holders = nbrs
                    .iter()
                    .copied()
                    .filter(|&j| self.holdings[j][color].contains(mid))
                    .collect();
                Some((w[0], w[1], holders))
            })
            .collect();

        let mut gained = 0.0;
        for (a, b, holders) in &segments {
            if holders.is_empty() {
                self.holdings[ue][color].insert(*a, *b);
                gained += (b - a) * rate;
            }
        }
        for (a, b, holders) in &segments {
            let remaining = need - gained;
            if remaining <= 1e-15 {
                break;
            }
            if holders.is_empty() || !holders.iter().all(|j| donors.contains(j)) {
                continue;
            }
            let mut take = (b - a).min(remaining / rate);
            for &j in holders {
                let rj = self.known_rates[j][color];
                if rj > 0.0 {
                    take = take.min(surplus[j] / rj);
                }
            }
            if take <= TIME_EPS {
                continue;
            }
            let end = a + take;
            for &j in holders {
                self.holdings[j][color].remove(*a, end);
                surplus[j] -= take * self.known_rates[j][color];
            }
            self.holdings[ue][color].insert(*a, end);
            gained += take * rate;
        }
        self.refresh_color(color);
        gained
    }

    /// Admits a new UE; returns its index and whether its minimum was met.
    pub fn handle_entry(&mut self, spec: &EntrySpec) -> Result<(usize, bool), DynamicsError> {
        let k = self.scenario.num_sbs();
        if spec.sbs >= k {
            return Err(DynamicsError::UnknownSbs { sbs: spec.sbs, num_sbs: k });
        }
        let incumbents = self.guaranteed_incumbents();
        let mut floor = self.floors();
        let h = self.num_colors();
        let i = self.scenario.push_ue(spec.position, spec.sbs, spec.pmax, spec.rmin);
        if let Err(e) = self.scenario.validate() {
            self.scenario.ue_positions.pop();
            self.scenario.serving.pop();
            self.scenario.pmax.pop();
            self.scenario.rmin.pop();
            self.scenario.refresh_wall_counts();
            if self.scenario.wall_planes.is_none() {
                if let Some(w) = &mut self.scenario.wall_counts {
                    w.pop();
                }
            }
            return Err(e.into());
        }
        self.graph.add_vertex();
        self.active.push(true);
        self.holdings.push(vec![IntervalSet::default(); h]);
        for j in 0..i {
            if self.active[j] && neighbors_by_distance(&self.scenario, i, j, self.threshold) {
                self.graph.add_edge(i, j);
            }
        }
        self.gains = channel_gain(&self.scenario, None)?;
        let rates = (0..h).map(|c| self.rate_in_color(i, c, None, None)).collect();
        self.known_rates.push(rates);
        floor.push(f64::NEG_INFINITY);

        let n = self.active.len();
        let mut surplus: Vec<f64> = (0..n)
            .map(|j| {
                if self.active[j] && j != i {
                    (self.accounted(j) - self.scenario.rmin[j]).max(0.0)
                } else {
                    0.0
                }
            })
            .collect();

        // Steps i-iii: co-served UEs with surplus, and colors they can share.
        let ue_enter: Vec<usize> = (0..n)
            .filter(|&j| j != i && self.active[j] && self.scenario.serving[j] == spec.sbs && surplus[j] > 1e-12)
            .collect();
        let cell_colors: Vec<bool> = (0..h)
            .map(|c| (0..n).any(|j| j != i && self.scenario.serving[j] == spec.sbs && self.holds(j, c)))
            .collect();
        let valid: Vec<usize> = (0..h)
            .filter(|&c| ue_enter.iter().any(|&j| self.holds(j, c)) || !cell_colors[c])
            .filter(|&c| {
                self.graph
                    .neighbors(i)
                    .all(|j| ue_enter.contains(&j) || !self.holds(j, c))
            })
            .collect();
        let need = spec.rmin;
        let mut achieved = 0.0;
        for &c in &valid {
            achieved += self.carve(i, c, &ue_enter, need - achieved, &mut surplus, &floor);
        }

        // Steps iv-v: ask neighbors in other cells for spare time.
        if achieved < need - 1e-12 {
            let announcers: Vec<usize> = self
                .graph
                .neighbors(i)
                .filter(|&j| self.scenario.serving[j] != spec.sbs && surplus[j] > 1e-12)
                .collect();
            let outside: Vec<usize> = self
                .graph
                .neighbors(i)
                .filter(|&j| self.scenario.serving[j] != spec.sbs)
                .collect();
            let donors: Vec<usize> = announcers.iter().chain(&ue_enter).copied().collect();
            let listed: Vec<usize> = (0..h)
                .filter(|&c| {
                    outside
                        .iter()
                        .any(|&j| !self.holds(j, c) || announcers.contains(&j))
                })
                .filter(|&c| self.graph.neighbors(i).all(|j| donors.contains(&j) || !self.holds(j, c)))
                .collect();
            for &c in &listed {
                if achieved >= need - 1e-12 {
                    break;
                }
                achieved += self.carve(i, c, &donors, need - achieved, &mut surplus, &floor);
            }
        }
        let achieved = self.accounted(i);
        let satisfied = achieved >= need - 1e-9;
        self.record(Event::Enter(spec.clone()), i, Some(satisfied), achieved, &incumbents);
        Ok((i, satisfied))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line_scenario(xs: &[f64], serving: &[usize], sbs_xs: &[f64]) -> Scenario {
        let n = xs.len();
        Scenario {
            ue_positions: xs.iter().map(|&x| [x, 0.0, 0.0]).collect(),
            sbs_positions: sbs_xs.iter().map(|&x| [x, 1.0, 0.0]).collect(),
            serving: serving.to_vec(),
            pmax: vec![10.0; n],
            rmin: vec![0.1; n],
            noise: vec![1e-3; sbs_xs.len()],
            path_loss_exponent: 2.0,
            wall_counts: None,
            wall_planes: None,
            wall_coeff: 1.0,
            fading_scale: None,
        }
    }

    fn state_for(s: Scenario, classes: &[Vec<usize>], shares: &[f64], rates: Vec<Vec<f64>>) -> LiveState {
        let g = crate::intgraph::build_graph_distance(&s, 5.0);
        LiveState::new(s, g, 5.0, classes, shares, &RateMatrix::from_rows(&rates)).unwrap()
    }

    #[test]
    fn interval_algebra() {
        let mut s = IntervalSet::span(0.0, 1.0);
        s.remove(0.25, 0.5);
        assert_eq!(s.intervals(), &[(0.0, 0.25), (0.5, 1.0)]);
        s.insert(0.2, 0.6);
        assert_eq!(s.intervals(), &[(0.0, 1.0)]);
        let t = IntervalSet::span(0.9, 2.0);
        assert!((s.overlap(&t) - 0.1).abs() < 1e-15);
        assert!(s.within(0.0, 1.0));
    }

    #[test]
    fn exit_alone_frees_colors() {
        let s = line_scenario(&[0.0, 100.0], &[0, 1], &[0.0, 100.0]);
        let mut st = state_for(s, &[vec![0, 1]], &[1.0], vec![vec![3.0], vec![3.0]]);
        st.handle_exit(0).unwrap();
        assert!(st.holdings[0][0].is_empty());
        assert!(!st.active[0]);
        assert_eq!(st.find_clash(), None);
        assert_eq!(st.handle_exit(0), Err(DynamicsError::UnknownUe(0)));
    }

    #[test]
    fn exit_hands_color_to_best_rate() {
        // Three UEs in one cell at different distances; UE 0 leaves color 0.
        let s = line_scenario(&[0.1, 2.0, 0.5], &[0, 0, 0], &[0.0]);
        let mut st = state_for(
            s,
            &[vec![0], vec![1], vec![2]],
            &[0.4, 0.3, 0.3],
            vec![vec![9.0, 0.0, 0.0], vec![0.0, 2.0, 0.0], vec![0.0, 0.0, 3.0]],
        );
        st.handle_exit(0).unwrap();
        // UE 2 is closer to the SBS, so it gets the better rate.
        assert_eq!(st.holdings[2][0].intervals(), &[(0.0, 0.4)]);
        assert!(st.holdings[1][0].is_empty());
        assert_eq!(st.find_clash(), None);
    }

    #[test]
    fn entry_takes_unused_color_in_full() {
        // Two far cells; color 1 is unused by cell 0.
        let s = line_scenario(&[0.0, 100.0], &[0, 1], &[0.0, 100.0]);
        let mut st = state_for(s, &[vec![0], vec![1]], &[0.6, 0.4], vec![vec![3.0, 0.0], vec![0.0, 3.0]]);
        st.handle_exit(0).unwrap();
        let (i, ok) = st
            .handle_entry(&EntrySpec {
                sbs: 0,
                rmin: 0.1,
                pmax: 10.0,
                position: [0.5, 0.0, 0.0],
            })
            .unwrap();
        assert!(ok);
        // Both colors are free of neighbors in cell 0: the entrant takes all.
        assert!((st.holdings[i][0].measure() - 0.6).abs() < 1e-12);
        assert!((st.holdings[i][1].measure() - 0.4).abs() < 1e-12);
    }

    #[test]
    fn donor_at_minimum_gives_nothing() {
        let mut s = line_scenario(&[0.5], &[0], &[0.0]);
        s.rmin = vec![3.0];
        let mut st = state_for(s, &[vec![0]], &[1.0], vec![vec![3.0]]);
        let (i, ok) = st
            .handle_entry(&EntrySpec {
                sbs: 0,
                rmin: 0.5,
                pmax: 10.0,
                position: [0.6, 0.0, 0.0],
            })
            .unwrap();
        assert!(!ok);
        assert_eq!(st.accounted(i), 0.0);
        assert!((st.accounted(0) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn donor_surplus_is_shared_exactly() {
        let mut s = line_scenario(&[0.5], &[0], &[0.0]);
        s.rmin = vec![1.0];
        let mut st = state_for(s, &[vec![0]], &[1.0], vec![vec![4.0]]);
        let (i, ok) = st
            .handle_entry(&EntrySpec {
                sbs: 0,
                rmin: 0.5,
                pmax: 10.0,
                position: [0.5, 0.0, 0.0],
            })
            .unwrap();
        assert!(ok);
        assert!((st.accounted(i) - 0.5).abs() < 1e-9);
        assert!(st.accounted(0) >= 1.0 - 1e-9);
        assert_eq!(st.find_clash(), None);
        assert!(st.conserves_shares());
    }

    #[test]
    fn holder_at_minimum_vetoes_interferer() {
        // Cells 10 m apart are not adjacent at threshold 5, but an entrant at
        // x = 9 still interferes heavily with UE 0 at its minimum.
        let mut s = line_scenario(&[0.0], &[0], &[0.0, 10.0]);
        let r0 = (1.0f64 + 10.0 / 1e-3).log2();
        s.rmin = vec![r0];
        let mut st = state_for(s, &[vec![0]], &[1.0], vec![vec![r0]]);
        let (i, ok) = st
            .handle_entry(&EntrySpec {
                sbs: 1,
                rmin: 0.1,
                pmax: 10.0,
                position: [9.0, 0.0, 0.0],
            })
            .unwrap();
        assert!(!ok);
        assert!(st.holdings[i][0].is_empty());
        assert!((st.accounted(0) - r0).abs() < 1e-12);

        // With slack the entrant gets in and UE 0's rate is re-measured.
        let mut s = line_scenario(&[0.0], &[0], &[0.0, 10.0]);
        s.rmin = vec![1.0];
        let mut st = state_for(s, &[vec![0]], &[1.0], vec![vec![r0]]);
        let (i, ok) = st
            .handle_entry(&EntrySpec {
                sbs: 1,
                rmin: 0.1,
                pmax: 10.0,
                position: [9.0, 0.0, 0.0],
            })
            .unwrap();
        assert!(ok);
        assert!(st.known_rates[0][0] < r0 - 1.0);
        let actual = st.actual_throughputs();
        assert!(actual[0] >= st.accounted(0) - 1e-12);
        assert!(actual[i] >= st.accounted(i) - 1e-12);
    }

    #[test]
    fn script_parsing() {
        let ev = parse_event_script("# churn\nenter 1 0.25 1000 45.5 0\nexit 3\n").unwrap();
        assert_eq!(ev.len(), 2);
        assert_eq!(ev[1], Event::Exit(3));
        match &ev[0] {
            Event::Enter(e) => {
                assert_eq!(e.sbs, 1);
                assert_eq!(e.position, [45.5, 0.0, 0.0]);
            }
            _ => panic!("expected entry"),
        }
        assert!(parse_event_script("leave 3").is_err());
        assert!(parse_event_script("enter 1 2").is_err());
    }
}
