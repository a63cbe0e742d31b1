//! Two-phase randomized distributed coloring that yields `H` maximal
//! independent sets covering every UE.
//!
//! Phase 1 gives each UE one color from a short list; Phase 2 lets UEs pick
//! up additional colors until no color can be added anywhere. Each color
//! class is then a maximal independent set. Rounds are synchronous: tentative
//! claims are exchanged inside a round and fixes are applied at its end.

use std::fmt;

use rand::Rng;
use thiserror::Error;

use crate::intgraph::InterferenceGraph;
use crate::rng::StreamKey;

#[derive(Debug, Error, PartialEq)]
pub enum ColoringError {
    #[error("number of colors H must be at least 1")]
    NoColors,
    #[error("claim probability c = {0} must lie strictly between 0 and 1")]
    BadClaimProbability(f64),
    #[error("round multiplier {name} = {value} must be positive")]
    BadMultiplier { name: &'static str, value: f64 },
    #[error("Phase-2 base x is not above 1 (c^H (1-c)^(H^2) underflowed)")]
    DegenerateBase,
    #[error("injected color {color} of UE {ue} is outside 0..{h}")]
    BadInjectedColor { ue: usize, color: usize, h: usize },
    #[error("injected coloring gives adjacent UEs {0} and {1} the same color")]
    InjectedClash(usize, usize),
    #[error("coloring failed after {attempts} attempts")]
    Exhausted { attempts: usize },
}

/// Fixed-capacity set of colors `0..H`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ColorSet {
    words: Vec<u64>,
}

impl ColorSet {
    pub fn empty(h: usize) -> Self {
        ColorSet {
            words: vec![0; h.div_ceil(64)],
        }
    }

    /// `{0, ..., upto-1}`.
    pub fn prefix(h: usize, upto: usize) -> Self {
        let mut s = Self::empty(h);
        for c in 0..upto.min(h) {
            s.insert(c);
        }
        s
    }

    pub fn insert(&mut self, c: usize) -> bool {
        let (w, b) = (c / 64, c % 64);
        let fresh = self.words[w] & (1 << b) == 0;
        self.words[w] |= 1 << b;
        fresh
    }

    pub fn remove(&mut self, c: usize) -> bool {
        let (w, b) = (c / 64, c % 64);
        let had = self.words[w] & (1 << b) != 0;
        self.words[w] &= !(1 << b);
        had
    }

    pub fn contains(&self, c: usize) -> bool {
        self.words
            .get(c / 64)
            .is_some_and(|w| w & (1 << (c % 64)) != 0)
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// Ascending.
    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut rest = w;
            std::iter::from_fn(move || {
                if rest == 0 {
                    None
                } else {
                    let b = rest.trailing_zeros() as usize;
                    rest &= rest - 1;
                    Some(wi * 64 + b)
                }
            })
        })
    }

    pub fn nth(&self, n: usize) -> Option<usize> {
        self.iter().nth(n)
    }

    pub fn is_subset(&self, other: &ColorSet) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    pub fn is_disjoint(&self, other: &ColorSet) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| a & b == 0)
    }
}

impl fmt::Debug for ColorSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

impl fmt::Display for ColorSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for c in self.iter() {
            if !first {
                f.write_str(",")?;
            }
            write!(f, "{c}")?;
            first = false;
        }
        if first {
            f.write_str("-")?;
        }
        Ok(())
    }
}

/// Per-UE coloring state. Colors are 0-based.
#[derive(Clone, Debug, PartialEq)]
pub struct ColorState {
    pub h: usize,
    /// Phase-1 color.
    pub final_color: Vec<Option<usize>>,
    /// Colors held so far.
    pub acquired: Vec<ColorSet>,
    /// Phase-1 candidates, a subset of `0..min(H, d_i+1)`.
    pub short_list: Vec<ColorSet>,
    /// Phase-2 candidates.
    pub full_list: Vec<ColorSet>,
}

impl ColorState {
    pub fn initial(graph: &InterferenceGraph, h: usize) -> Self {
        let n = graph.num_vertices();
        ColorState {
            h,
            final_color: vec![None; n],
            acquired: vec![ColorSet::empty(h); n],
            short_list: (0..n)
                .map(|i| ColorSet::prefix(h, graph.degree(i) + 1))
                .collect(),
            full_list: vec![ColorSet::prefix(h, h); n],
        }
    }

    /// The state Phase 1 would leave behind had it produced `colors`.
    pub fn from_phase1_colors(
        graph: &InterferenceGraph,
        h: usize,
        colors: &[Option<usize>],
    ) -> Result<Self, ColoringError> {
        let mut state = Self::initial(graph, h);
        for (ue, c) in colors.iter().enumerate() {
            if let Some(c) = *c {
                if c >= h {
                    return Err(ColoringError::BadInjectedColor { ue, color: c, h });
                }
                if let Some(v) = graph.neighbors(ue).find(|&v| colors[v] == Some(c)) {
                    return Err(ColoringError::InjectedClash(ue.min(v), ue.max(v)));
                }
            }
        }
        for (ue, c) in colors.iter().enumerate() {
            if let Some(c) = *c {
                state.final_color[ue] = Some(c);
                state.acquired[ue].insert(c);
                state.delete_fixed(graph, ue, c);
            }
        }
        Ok(state)
    }

    fn delete_fixed(&mut self, graph: &InterferenceGraph, ue: usize, c: usize) {
        self.short_list[ue].remove(c);
        self.full_list[ue].remove(c);
        for v in graph.neighbors(ue) {
            self.short_list[v].remove(c);
            self.full_list[v].remove(c);
        }
    }

    pub fn uncolored(&self) -> Vec<usize> {
        (0..self.final_color.len())
            .filter(|&i| self.final_color[i].is_none())
            .collect()
    }

    /// `{i : k ∈ C_i}` for every color `k`.
    pub fn classes(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.h];
        for (i, set) in self.acquired.iter().enumerate() {
            for c in set.iter() {
                out[c].push(i);
            }
        }
        out
    }

    /// Adjacent UEs holding a common color, if any.
    pub fn find_clash(&self, graph: &InterferenceGraph) -> Option<(usize, usize, usize)> {
        for (u, v) in graph.edges() {
            if let Some(c) = self.acquired[u].iter().find(|&c| self.acquired[v].contains(c)) {
                return Some((u, v, c));
            }
        }
        None
    }
}

/// Parameters of the two phases.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MisParams {
    pub h: usize,
    pub c: f64,
    pub c1: f64,
    pub c2: f64,
}

impl MisParams {
    /// `H = Δ+1`, `c = 0.5`, `c1 = c2 = 2`.
    pub fn for_graph(graph: &InterferenceGraph) -> Self {
        MisParams {
            h: graph.max_degree() + 1,
            c: 0.5,
            c1: 2.0,
            c2: 2.0,
        }
    }

    pub fn validate(&self) -> Result<(), ColoringError> {
        if self.h == 0 {
            return Err(ColoringError::NoColors);
        }
        if !(self.c > 0.0 && self.c < 1.0) {
            return Err(ColoringError::BadClaimProbability(self.c));
        }
        for (name, value) in [("c1", self.c1), ("c2", self.c2)] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(ColoringError::BadMultiplier { name, value });
            }
        }
        Ok(())
    }
}

/// Round counts of both phases.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RoundBudget {
    pub phase1: u64,
    /// Saturates at `u64::MAX` when the exact value does not fit.
    pub phase2: u64,
}

impl RoundBudget {
    pub fn total(&self) -> u64 {
        self.phase1.saturating_add(self.phase2)
    }
}

fn ceil_rounds(x: f64) -> u64 {
    // Guard against values like 4.000000000000001 produced by the log ratio.
    let r = (x - 1e-9 * x.abs().max(1.0)).ceil().max(0.0);
    if r >= u64::MAX as f64 {
        u64::MAX
    } else {
        r as u64
    }
}

/// `ln x` for the Phase-2 base `x = 1/(1 − c^H (1−c)^(H²))`.
pub fn phase2_log_base(h: usize, c: f64) -> Result<f64, ColoringError> {
    let hf = h as f64;
    let ln_q = hf * c.ln() + hf * hf * (-c).ln_1p();
    let q = ln_q.exp();
    if q <= 0.0 || q >= 1.0 {
        return Err(ColoringError::DegenerateBase);
    }
    Ok(-(-q).ln_1p())
}

/// `ceil(c1 log_{4/3} N) + 1` and `ceil(c2 log_x N) + 1`.
pub fn round_budget(n: usize, params: &MisParams) -> Result<RoundBudget, ColoringError> {
    params.validate()?;
    let ln_n = (n.max(1) as f64).ln();
    let phase1 = ceil_rounds(params.c1 * ln_n / (4.0f64 / 3.0).ln()).saturating_add(1);
    let ln_x = phase2_log_base(params.h, params.c)?;
    let phase2 = ceil_rounds(params.c2 * ln_n / ln_x).saturating_add(1);
    Ok(RoundBudget { phase1, phase2 })
}

/// One line of the optional round trace.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceEvent {
    pub phase: u8,
    pub round: u64,
    pub ue: usize,
    pub tentative: ColorSet,
    pub fixed: ColorSet,
    pub deleted: ColorSet,
}

impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "phase={} round={} ue={} tentative={} fixed={} deleted={}",
            self.phase, self.round, self.ue, self.tentative, self.fixed, self.deleted
        )
    }
}

fn round_rng(key: StreamKey, round: u64, ue: usize) -> rand_chacha::ChaCha8Rng {
    key.child(round).child(ue as u64).rng()
}

/// Outcome of Phase 1.
#[derive(Clone, Debug, PartialEq)]
pub struct Phase1Outcome {
    pub state: ColorState,
    pub rounds_used: u64,
    /// UEs left without a color.
    pub uncolored: Vec<usize>,
}

/// Runs Phase 1 for `rounds` synchronous rounds.
///
/// Once every UE is colored or has an empty short list no further state
/// change or random draw can happen, so the remaining rounds are counted
/// without being simulated.
pub fn run_phase1(
    graph: &InterferenceGraph,
    h: usize,
    rounds: u64,
    key: StreamKey,
    mut trace: Option<&mut Vec<TraceEvent>>,
) -> Phase1Outcome {
    let n = graph.num_vertices();
    if h < graph.max_degree() + 1 {
        log::warn!("H = {h} is below max degree + 1 = {}", graph.max_degree() + 1);
    }
    let mut state = ColorState::initial(graph, h);
    let mut tentative: Vec<Option<usize>> = vec![None; n];
    for round in 0..rounds {
        let active: Vec<usize> = (0..n)
            .filter(|&i| state.final_color[i].is_none() && !state.short_list[i].is_empty())
            .collect();
        if active.is_empty() {
            break;
        }
        for &i in &active {
            let list = &state.short_list[i];
            let pick = round_rng(key, round, i).random_range(0..list.len());
            tentative[i] = list.nth(pick);
        }
        let mut fixes = Vec::new();
        for &i in &active {
            let t = tentative[i];
            if graph.neighbors(i).all(|j| tentative[j] != t) {
                fixes.push((i, t.expect("active UE drew a color")));
            }
        }
        let before: Option<Vec<ColorSet>> = trace.as_ref().map(|_| state.short_list.clone());
        for &(i, c) in &fixes {
            state.final_color[i] = Some(c);
            state.acquired[i].insert(c);
        }
        for &(i, c) in &fixes {
            state.delete_fixed(graph, i, c);
        }
        if let (Some(t), Some(before)) = (trace.as_deref_mut(), before) {
            for i in 0..n {
                let mut tent = ColorSet::empty(h);
                if let Some(c) = tentative[i] {
                    tent.insert(c);
                }
                let mut fixed = ColorSet::empty(h);
                if let Some(&(_, c)) = fixes.iter().find(|&&(u, _)| u == i) {
                    fixed.insert(c);
                }
                let mut deleted = before[i].clone();
                for c in state.short_list[i].iter() {
                    deleted.remove(c);
                }
                if !tent.is_empty() || !deleted.is_empty() {
                    t.push(TraceEvent {
                        phase: 1,
                        round,
                        ue: i,
                        tentative: tent,
                        fixed,
                        deleted,
                    });
                }
            }
        }
        for &i in &active {
            tentative[i] = None;
        }
    }
    let uncolored = state.uncolored();
    Phase1Outcome {
        state,
        rounds_used: rounds,
        uncolored,
    }
}

/// Result of the full coloring.
#[derive(Clone, Debug, PartialEq)]
pub struct MisFamily {
    /// `classes[k]` = UEs holding color `k`, ascending.
    pub classes: Vec<Vec<usize>>,
    pub success: bool,
    pub rounds_used: u64,
    /// UEs whose Phase-2 list is still non-empty.
    pub pending: Vec<usize>,
    /// UEs without a Phase-1 color.
    pub uncolored: Vec<usize>,
    pub state: ColorState,
}

impl MisFamily {
    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }
}

/// Runs Phase 2 for `rounds` rounds starting from `state`.
pub fn run_phase2(
    graph: &InterferenceGraph,
    mut state: ColorState,
    c: f64,
    rounds: u64,
    key: StreamKey,
    mut trace: Option<&mut Vec<TraceEvent>>,
) -> MisFamily {
    let n = graph.num_vertices();
    let h = state.h;
    let mut claims: Vec<ColorSet> = vec![ColorSet::empty(h); n];
    for round in 0..rounds {
        let active: Vec<usize> = (0..n).filter(|&i| !state.full_list[i].is_empty()).collect();
        if active.is_empty() {
            break;
        }
        for &i in &active {
            let mut rng = round_rng(key, round, i);
            let mut set = ColorSet::empty(h);
            for col in state.full_list[i].iter() {
                if rng.random::<f64>() < c {
                    set.insert(col);
                }
            }
            claims[i] = set;
        }
        let mut fixes: Vec<(usize, ColorSet)> = Vec::new();
        for &i in &active {
            let mut fixed = ColorSet::empty(h);
            for col in claims[i].iter() {
                if graph.neighbors(i).all(|j| !claims[j].contains(col)) {
                    fixed.insert(col);
                }
            }
            if !fixed.is_empty() {
                fixes.push((i, fixed));
            }
        }
        let before: Option<Vec<ColorSet>> = trace.as_ref().map(|_| state.full_list.clone());
        for (i, fixed) in &fixes {
            for col in fixed.iter() {
                state.acquired[*i].insert(col);
            }
        }
        for (i, fixed) in &fixes {
            for col in fixed.iter() {
                state.delete_fixed(graph, *i, col);
            }
        }
        if let (Some(t), Some(before)) = (trace.as_deref_mut(), before) {
            for i in 0..n {
                let fixed = fixes
                    .iter()
                    .find(|(u, _)| *u == i)
                    .map_or_else(|| ColorSet::empty(h), |(_, f)| f.clone());
                let mut deleted = before[i].clone();
                for col in state.full_list[i].iter() {
                    deleted.remove(col);
                }
                if !claims[i].is_empty() || !deleted.is_empty() {
                    t.push(TraceEvent {
                        phase: 2,
                        round,
                        ue: i,
                        tentative: claims[i].clone(),
                        fixed,
                        deleted,
                    });
                }
            }
        }
        for &i in &active {
            claims[i] = ColorSet::empty(h);
        }
    }
    let pending: Vec<usize> = (0..n).filter(|&i| !state.full_list[i].is_empty()).collect();
    let uncolored = state.uncolored();
    MisFamily {
        classes: state.classes(),
        success: pending.is_empty() && uncolored.is_empty(),
        rounds_used: rounds,
        pending,
        uncolored,
        state,
    }
}

/// Both phases with the exact round budget.
pub fn generate_family(
    graph: &InterferenceGraph,
    params: &MisParams,
    key: StreamKey,
    mut trace: Option<&mut Vec<TraceEvent>>,
) -> Result<MisFamily, ColoringError> {
    let budget = round_budget(graph.num_vertices(), params)?;
    let p1 = run_phase1(
        graph,
        params.h,
        budget.phase1,
        key.stream("phase1"),
        trace.as_deref_mut(),
    );
    let mut family = run_phase2(
        graph,
        p1.state,
        params.c,
        budget.phase2,
        key.stream("phase2"),
        trace,
    );
    family.rounds_used = budget.total();
    Ok(family)
}

/// A successful family plus the number of attempts it took.
#[derive(Clone, Debug, PartialEq)]
pub struct MisRun {
    pub family: MisFamily,
    pub attempts: usize,
    /// `(attempt, uncolored, pending)` for each failed attempt.
    pub failures: Vec<(usize, usize, usize)>,
}

/// Reruns with fresh per-attempt streams until success, at most
/// `1 + retries` attempts.
pub fn generate_with_retries(
    graph: &InterferenceGraph,
    params: &MisParams,
    key: StreamKey,
    retries: usize,
) -> Result<MisRun, ColoringError> {
    let mut failures = Vec::new();
    for attempt in 0..=retries {
        let family = generate_family(graph, params, key.child(attempt as u64), None)?;
        if family.success {
            if attempt > 0 {
                log::info!("coloring succeeded on attempt {}", attempt + 1);
            }
            return Ok(MisRun {
                family,
                attempts: attempt + 1,
                failures,
            });
        }
        log::warn!(
            "coloring attempt {} failed: {} uncolored, {} pending",
            attempt + 1,
            family.uncolored.len(),
            family.pending.len()
        );
        failures.push((attempt, family.uncolored.len(), family.pending.len()));
    }
    Err(ColoringError::Exhausted {
        attempts: retries + 1,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum FamilyViolation {
    #[error("class {class}: UEs {u} and {v} are adjacent")]
    NotIndependent { class: usize, u: usize, v: usize },
    #[error("class {class}: UE {ue} has no neighbor in the class")]
    NotMaximal { class: usize, ue: usize },
    #[error("UE {0} belongs to no class")]
    NotSpanning(usize),
    #[error("class {class} names UE {ue}, outside the graph")]
    OutOfRange { class: usize, ue: usize },
}

/// Checks independence and maximality of every class, then coverage.
pub fn verify_family(graph: &InterferenceGraph, classes: &[Vec<usize>]) -> Result<(), FamilyViolation> {
    let n = graph.num_vertices();
    let mut covered = vec![false; n];
    for (k, class) in classes.iter().enumerate() {
        let mut inside = vec![false; n];
        for &u in class {
            if u >= n {
                return Err(FamilyViolation::OutOfRange { class: k, ue: u });
            }
            inside[u] = true;
            covered[u] = true;
        }
        for &u in class {
            if let Some(v) = graph.neighbors(u).find(|&v| inside[v]) {
                return Err(FamilyViolation::NotIndependent {
                    class: k,
                    u: u.min(v),
                    v: u.max(v),
                });
            }
        }
        for v in 0..n {
            if !inside[v] && !graph.neighbors(v).any(|u| inside[u]) {
                return Err(FamilyViolation::NotMaximal { class: k, ue: v });
            }
        }
    }
    match covered.iter().position(|&c| !c) {
        Some(v) => Err(FamilyViolation::NotSpanning(v)),
        None => Ok(()),
    }
}
