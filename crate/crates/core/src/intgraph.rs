//! Interference graph construction and the analytic bounds built on it.

use std::collections::BTreeSet;
use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::topology::{GainMatrix, Scenario};

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("edge ({0}, {1}) is a self-loop")]
    SelfLoop(usize, usize),
    #[error("edge ({0}, {1}) listed twice")]
    DuplicateEdge(usize, usize),
    #[error("edge ({u}, {v}) references a vertex outside 0..{n}")]
    OutOfRange { u: usize, v: usize, n: usize },
    #[error("edge list line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("bound `{0}` is not positive or lower bound exceeds upper bound")]
    BadBounds(&'static str),
}

/// Undirected simple graph on UE-SBS pairs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InterferenceGraph {
    adjacency: Vec<BTreeSet<usize>>,
}

impl InterferenceGraph {
    pub fn empty(n: usize) -> Self {
        InterferenceGraph {
            adjacency: vec![BTreeSet::new(); n],
        }
    }

    pub fn complete(n: usize) -> Self {
        let mut g = Self::empty(n);
        for u in 0..n {
            for v in u + 1..n {
                g.adjacency[u].insert(v);
                g.adjacency[v].insert(u);
            }
        }
        g
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self, GraphError> {
        let mut g = Self::empty(n);
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(GraphError::OutOfRange { u, v, n });
            }
            if u == v {
                return Err(GraphError::SelfLoop(u, v));
            }
            if !g.adjacency[u].insert(v) {
                return Err(GraphError::DuplicateEdge(u, v));
            }
            g.adjacency[v].insert(u);
        }
        Ok(g)
    }

    pub fn num_vertices(&self) -> usize {
        self.adjacency.len()
    }

    pub fn num_edges(&self) -> usize {
        self.adjacency.iter().map(BTreeSet::len).sum::<usize>() / 2
    }

    /// Neighbors of `v` in ascending order.
    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.adjacency[v].iter().copied()
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adjacency.iter().map(BTreeSet::len).max().unwrap_or(0)
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adjacency[u].contains(&v)
    }

    /// Edges as `(min, max)` pairs in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.num_edges());
        for (u, adj) in self.adjacency.iter().enumerate() {
            for &v in adj.range(u + 1..) {
                out.push((u, v));
            }
        }
        out
    }

    /// Inserts an edge; returns false if it already existed.
    pub fn add_edge(&mut self, u: usize, v: usize) -> bool {
        assert!(u != v, "self-loop {u}");
        let fresh = self.adjacency[u].insert(v);
        self.adjacency[v].insert(u);
        fresh
    }

    pub fn add_vertex(&mut self) -> usize {
        self.adjacency.push(BTreeSet::new());
        self.adjacency.len() - 1
    }

    /// Removes every edge touching `v`; the vertex index stays valid.
    pub fn isolate(&mut self, v: usize) {
        let nbrs = std::mem::take(&mut self.adjacency[v]);
        for u in nbrs {
            self.adjacency[u].remove(&v);
        }
    }

    /// Connected components, each sorted, ordered by smallest vertex.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.num_vertices();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for s in 0..n {
            if seen[s] {
                continue;
            }
            seen[s] = true;
            let mut comp = vec![s];
            let mut stack = vec![s];
            while let Some(u) = stack.pop() {
                for v in self.neighbors(u) {
                    if !seen[v] {
                        seen[v] = true;
                        comp.push(v);
                        stack.push(v);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        self.components().len() <= 1
    }

    pub fn is_independent(&self, set: &[usize]) -> bool {
        set.iter()
            .enumerate()
            .all(|(a, &u)| set[a + 1..].iter().all(|&v| !self.has_edge(u, v)))
    }

    pub fn is_clique(&self, set: &[usize]) -> bool {
        set.iter()
            .enumerate()
            .all(|(a, &u)| set[a + 1..].iter().all(|&v| u != v && self.has_edge(u, v)))
    }

    /// One `"u v"` line per edge, 0-indexed.
    pub fn to_edge_list(&self) -> String {
        let mut s = String::new();
        for (u, v) in self.edges() {
            s.push_str(&format!("{u} {v}\n"));
        }
        s
    }

    /// Parses an edge list; blank lines and `#` comments are skipped.
    pub fn parse_edge_list(n: usize, text: &str) -> Result<Self, GraphError> {
        let mut edges = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut it = line.split_whitespace();
            let mut field = |name: &str| -> Result<usize, GraphError> {
                it.next()
                    .ok_or_else(|| GraphError::Parse {
                        line: idx + 1,
                        reason: format!("missing {name}"),
                    })?
                    .parse()
                    .map_err(|e| GraphError::Parse {
                        line: idx + 1,
                        reason: format!("{name}: {e}"),
                    })
            };
            let u = field("u")?;
            let v = field("v")?;
            edges.push((u, v));
        }
        Self::from_edges(n, &edges)
    }
}

/// Edge between distinct UEs whose serving SBSs are within `dth` meters.
/// Co-served UEs are at SBS distance 0 and always adjacent.
pub fn build_graph_distance(scenario: &Scenario, dth: f64) -> InterferenceGraph {
    let n = scenario.num_ues();
    let mut g = InterferenceGraph::empty(n);
    for u in 0..n {
        for v in u + 1..n {
            if neighbors_by_distance(scenario, u, v, dth) {
                g.add_edge(u, v);
            }
        }
    }
    g
}

pub fn neighbors_by_distance(scenario: &Scenario, u: usize, v: usize, dth: f64) -> bool {
    let (a, b) = (scenario.serving[u], scenario.serving[v]);
    a == b || scenario.sbs_distance(a, b) <= dth
}

/// Random simple graph with every degree at most `max_degree`, built by
/// attempting `attempts` uniformly random vertex pairs.
pub fn random_bounded_degree<R: Rng + ?Sized>(
    n: usize,
    max_degree: usize,
    attempts: usize,
    rng: &mut R,
) -> InterferenceGraph {
    let mut g = InterferenceGraph::empty(n);
    if n < 2 {
        return g;
    }
    for _ in 0..attempts {
        let u = rng.random_range(0..n);
        let v = rng.random_range(0..n);
        if u != v && g.degree(u) < max_degree && g.degree(v) < max_degree {
            g.add_edge(u, v);
        }
    }
    g
}

/// Outcome of the weak-non-neighboring-interference test.
#[derive(Clone, Debug, PartialEq)]
pub struct WniReport {
    pub pass: bool,
    pub threshold: f64,
    /// Non-neighbor interference at each UE's serving SBS.
    pub sums: Vec<f64>,
    pub worst_ue: Option<usize>,
    pub worst_sum: f64,
}

/// Checks `Σ_{j ∉ N(i), j ≠ i} g_{j,T(i)} p_j^max ≤ (2^ζ − 1) σ_ub²` for every
/// UE, with `σ_ub²` the largest noise power in the scenario.
pub fn check_wni(graph: &InterferenceGraph, scenario: &Scenario, gains: &GainMatrix, zeta: f64) -> WniReport {
    let noise_ub = scenario.noise.iter().copied().fold(0.0, f64::max);
    let threshold = (zeta * std::f64::consts::LN_2).exp_m1() * noise_ub;
    let n = scenario.num_ues();
    let mut sums = Vec::with_capacity(n);
    let mut worst: Option<(usize, f64)> = None;
    for i in 0..n {
        let sbs = scenario.serving[i];
        let s: f64 = (0..n)
            .filter(|&j| j != i && !graph.has_edge(i, j))
            .map(|j| gains.get(j, sbs) * scenario.pmax[j])
            .sum();
        if worst.is_none_or(|(_, w)| s > w) {
            worst = Some((i, s));
        }
        sums.push(s);
    }
    let worst_sum = worst.map_or(0.0, |(_, s)| s);
    WniReport {
        pass: worst_sum <= threshold,
        threshold,
        sums,
        worst_ue: worst.map(|(i, _)| i),
        worst_sum,
    }
}

/// Lower/upper bounds on the network parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundParams {
    pub pmax_lb: f64,
    pub pmax_ub: f64,
    pub rmin_lb: f64,
    pub rmin_ub: f64,
    /// Bounds on the UE-to-serving-SBS distance.
    pub dist_lb: f64,
    pub dist_ub: f64,
    pub noise_lb: f64,
    pub noise_ub: f64,
    pub path_loss_exponent: f64,
    pub zeta: f64,
    pub dth: f64,
}

impl BoundParams {
    /// Every bound equal to the same value.
    pub fn uniform(pmax: f64, rmin: f64, dist: f64, noise: f64, np: f64, zeta: f64, dth: f64) -> Self {
        BoundParams {
            pmax_lb: pmax,
            pmax_ub: pmax,
            rmin_lb: rmin,
            rmin_ub: rmin,
            dist_lb: dist,
            dist_ub: dist,
            noise_lb: noise,
            noise_ub: noise,
            path_loss_exponent: np,
            zeta,
            dth,
        }
    }

    /// Tightest bounds enclosing the scenario's parameters.
    pub fn from_scenario(scenario: &Scenario, zeta: f64, dth: f64) -> Self {
        let fold = |v: &mut dyn Iterator<Item = f64>| {
            v.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)))
        };
        let (pmax_lb, pmax_ub) = fold(&mut scenario.pmax.iter().copied());
        let (rmin_lb, rmin_ub) = fold(&mut scenario.rmin.iter().copied());
        let (noise_lb, noise_ub) = fold(&mut scenario.noise.iter().copied());
        let (dist_lb, dist_ub) =
            fold(&mut (0..scenario.num_ues()).map(|i| scenario.ue_sbs_distance(i, scenario.serving[i])));
        BoundParams {
            pmax_lb,
            pmax_ub,
            rmin_lb,
            rmin_ub,
            dist_lb,
            dist_ub,
            noise_lb,
            noise_ub,
            path_loss_exponent: scenario.path_loss_exponent,
            zeta,
            dth,
        }
    }

    pub fn validate(&self) -> Result<(), GraphError> {
        let pairs = [
            ("pmax", self.pmax_lb, self.pmax_ub),
            ("rmin", self.rmin_lb, self.rmin_ub),
            ("dist", self.dist_lb, self.dist_ub),
            ("noise", self.noise_lb, self.noise_ub),
        ];
        for (name, lo, hi) in pairs {
            if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
                return Err(GraphError::BadBounds(name));
            }
        }
        if !(self.zeta >= 0.0 && self.dth > 0.0 && self.path_loss_exponent >= 0.0) {
            return Err(GraphError::BadBounds("zeta/dth/np"));
        }
        Ok(())
    }

    /// Worst-case rate of an isolated MIS member: `log2(1 + p_lb/(D_ub^np 2^ζ σ_ub²))`.
    pub fn worst_rate(&self) -> f64 {
        log2_1p(self.pmax_lb / (self.dist_ub.powf(self.path_loss_exponent) * self.zeta.exp2() * self.noise_ub))
    }

    /// Best-case interference-free rate: `log2(1 + p_ub/(D_lb^np σ_lb²))`.
    pub fn best_rate(&self) -> f64 {
        log2_1p(self.pmax_ub / (self.dist_lb.powf(self.path_loss_exponent) * self.noise_lb))
    }
}

fn log2_1p(x: f64) -> f64 {
    x.ln_1p() / std::f64::consts::LN_2
}

/// `worst_rate / rmin_ub − 1`, not floored.
pub fn delta_max(b: &BoundParams) -> f64 {
    b.worst_rate() / b.rmin_ub - 1.0
}

/// `floor(delta_max)`, the largest admissible integer degree.
pub fn delta_max_floor(b: &BoundParams) -> i64 {
    delta_max(b).floor() as i64
}

/// Size-independent guarantee `Γ = rmin_ub / best_rate`.
pub fn competitive_ratio(b: &BoundParams) -> f64 {
    b.rmin_ub / b.best_rate()
}

/// Degree-aware guarantee `worst_rate / ((Δ+1) best_rate)`.
pub fn proof_ratio(b: &BoundParams, degree: usize) -> f64 {
    b.worst_rate() / ((degree as f64 + 1.0) * b.best_rate())
}

/// `η = ceil(best_rate / rmin_lb)`.
pub fn eta(b: &BoundParams) -> u64 {
    (b.best_rate() / b.rmin_lb).ceil() as u64
}

/// `Δ* = 6η`.
pub fn delta_star(b: &BoundParams) -> u64 {
    6 * eta(b)
}

/// Smallest clique size `m` with `m · rmin_lb > best_rate`.
pub fn infeasible_clique_size(b: &BoundParams) -> usize {
    (b.best_rate() / b.rmin_lb).floor() as usize + 1
}

/// A clique whose members cannot all meet their minimum throughput under
/// any MIS policy.
#[derive(Clone, Debug, PartialEq)]
pub struct Certificate {
    pub clique: Vec<usize>,
    pub center: usize,
    /// `|C| · rmin_lb / best_rate`; exceeds 1 for a valid certificate.
    pub load: f64,
}

/// Searches for an infeasibility clique around each maximum-degree vertex.
///
/// The neighbors of a center are split into six angular sectors of width
/// π/3 by the bearing of their serving SBS. Members of a sector (plus the
/// center) are pairwise within `dth` and form a clique, which is then
/// greedily extended by any remaining neighbor adjacent to all members.
pub fn infeasibility_certificate(
    graph: &InterferenceGraph,
    scenario: &Scenario,
    bounds: &BoundParams,
) -> Option<Certificate> {
    let need = infeasible_clique_size(bounds);
    let best_rate = bounds.best_rate();
    let delta = graph.max_degree();
    if graph.num_vertices() == 0 || delta + 1 < need {
        return None;
    }
    let mut best: Option<Vec<usize>> = None;
    for center in (0..graph.num_vertices()).filter(|&v| graph.degree(v) == delta) {
        let here = scenario.sbs_positions[scenario.serving[center]];
        let mut sectors: Vec<Vec<usize>> = vec![Vec::new(); 6];
        for u in graph.neighbors(center) {
            let there = scenario.sbs_positions[scenario.serving[u]];
            let (dx, dy) = (there[0] - here[0], there[1] - here[1]);
            if dx == 0.0 && dy == 0.0 {
                for s in sectors.iter_mut() {
                    s.push(u);
                }
            } else {
                let angle = dy.atan2(dx).rem_euclid(2.0 * PI);
                let idx = ((angle / (PI / 3.0)) as usize).min(5);
                sectors[idx].push(u);
            }
        }
        for members in sectors {
            let mut clique = vec![center];
            for u in members.into_iter().chain(graph.neighbors(center)) {
                if !clique.contains(&u) && clique.iter().all(|&c| graph.has_edge(c, u)) {
                    clique.push(u);
                }
            }
            if clique.len() >= need && best.as_ref().is_none_or(|b| clique.len() > b.len()) {
                best = Some(clique);
            }
        }
    }
    best.map(|mut clique| {
        let center = clique[0];
        clique.sort_unstable();
        let load = clique.len() as f64 * bounds.rmin_lb / best_rate;
        Certificate { clique, center, load }
    })
}

/// `ceil(N / (Δ+1))`, a lower bound on the size of every maximal independent set.
pub fn mis_size_lower_bound(graph: &InterferenceGraph) -> usize {
    graph.num_vertices().div_ceil(graph.max_degree() + 1)
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum MisCheckError {
    #[error("vertices {0} and {1} are adjacent")]
    NotIndependent(usize, usize),
    #[error("vertex {0} could be added to the set")]
    NotMaximal(usize),
    #[error("set has {size} vertices, below the bound {bound}")]
    TooSmall { size: usize, bound: usize },
}

/// Verifies that `set` is a maximal independent set meeting the size bound.
pub fn verify_mis_size(graph: &InterferenceGraph, set: &[usize]) -> Result<(), MisCheckError> {
    for (a, &u) in set.iter().enumerate() {
        for &v in &set[a + 1..] {
            if graph.has_edge(u, v) {
                return Err(MisCheckError::NotIndependent(u, v));
            }
        }
    }
    let inside: BTreeSet<usize> = set.iter().copied().collect();
    for v in 0..graph.num_vertices() {
        if !inside.contains(&v) && !graph.neighbors(v).any(|u| inside.contains(&u)) {
            return Err(MisCheckError::NotMaximal(v));
        }
    }
    let bound = mis_size_lower_bound(graph);
    if inside.len() < bound {
        return Err(MisCheckError::TooSmall {
            size: inside.len(),
            bound,
        });
    }
    Ok(())
}
