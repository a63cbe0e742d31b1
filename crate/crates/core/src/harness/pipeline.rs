use thiserror::Error;

use super::config::{BaselineKind, Config, ObjectiveKind, RateMode, ScenarioSpec};
use crate::baselines::{benchmark_bp, centralized_constant_power, pms, stdma_equal, BaselineError};
use crate::fractopt::{admm_solve, compute_rates, measure_rates, AdmmConfig, AdmmOutcome, FractError, RateMatrix};
use crate::intgraph::{
    build_graph_distance, check_wni, competitive_ratio, delta_max, delta_max_floor, delta_star, eta, proof_ratio,
    BoundParams, GraphError, InterferenceGraph,
};
use crate::miscolor::{generate_with_retries, round_budget, ColoringError, MisParams, MisRun};
use crate::objective::Objective;
use crate::rng::StreamKey;
use crate::scheduler::{build_cycle, evaluate, CyclicPolicy, Schedule, ScheduleError};
use crate::topology::{
    build_grid_scenario, build_rooms_scenario, channel_gain, sample_fading_matrix, throughputs, GainMatrix,
    PowerProfile, Scenario, TopologyError,
};

/// A failure, attributed to the pipeline step that raised it.
#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(String),
    #[error("scenario: {0}")]
    Scenario(#[from] TopologyError),
    #[error("step 1 (interference graph): {0}")]
    Graph(#[from] GraphError),
    #[error("step 2 (MIS generation): {0}")]
    Coloring(#[from] ColoringError),
    #[error("step 3 (time shares, {objective}): {source}")]
    Fractions {
        objective: &'static str,
        #[source]
        source: FractError,
    },
    #[error("step 4 (schedule): {0}")]
    Schedule(#[from] ScheduleError),
    #[error("baseline {policy}: {source}")]
    Baseline {
        policy: &'static str,
        #[source]
        source: BaselineError,
    },
    #[error("output: {0}")]
    Io(#[from] std::io::Error),
}

/// Evaluated performance of one policy under one criterion.
#[derive(Clone, Debug, PartialEq)]
pub struct PolicyRow {
    pub policy: String,
    pub objective: String,
    pub value: f64,
    pub min_throughput: f64,
    pub sum_throughput: f64,
    pub violations: usize,
    pub feasible: bool,
    pub throughputs: Vec<f64>,
}

impl PolicyRow {
    fn new(policy: &str, objective: &Objective, thr: Vec<f64>, rmin: &[f64], feasible: bool) -> Self {
        let violations = thr.iter().zip(rmin).filter(|(r, m)| **r < **m - 1e-9).count();
        PolicyRow {
            policy: policy.to_string(),
            objective: objective.name().to_string(),
            value: if feasible { objective.value(&thr) } else { f64::NAN },
            min_throughput: thr.iter().copied().fold(f64::INFINITY, f64::min),
            sum_throughput: thr.iter().sum(),
            violations,
            feasible,
            throughputs: thr,
        }
    }
}

/// Analytic guarantees evaluated on the built scenario and graph.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundsReport {
    pub params: BoundParams,
    pub max_degree: usize,
    pub wni_pass: bool,
    pub wni_threshold: f64,
    pub wni_worst_sum: f64,
    pub delta_max: f64,
    pub delta_max_floor: i64,
    pub competitive_ratio: f64,
    pub proof_ratio: f64,
    pub eta: u64,
    pub delta_star: u64,
}

pub fn bounds_report(scenario: &Scenario, graph: &InterferenceGraph, gains: &GainMatrix, zeta: f64, dth: f64) -> BoundsReport {
    let params = BoundParams::from_scenario(scenario, zeta, dth);
    let wni = check_wni(graph, scenario, gains, zeta);
    let max_degree = graph.max_degree();
    BoundsReport {
        params,
        max_degree,
        wni_pass: wni.pass,
        wni_threshold: wni.threshold,
        wni_worst_sum: wni.worst_sum,
        delta_max: delta_max(&params),
        delta_max_floor: delta_max_floor(&params),
        competitive_ratio: competitive_ratio(&params),
        proof_ratio: proof_ratio(&params, max_degree),
        eta: eta(&params),
        delta_star: delta_star(&params),
    }
}

/// Step 3 and 4 output for one criterion.
#[derive(Clone, Debug)]
pub struct ObjectiveRun {
    pub kind: ObjectiveKind,
    pub objective: Objective,
    /// ADMM on the nominal (first) block.
    pub admm: Option<AdmmOutcome>,
    pub gamma: Vec<f64>,
    pub schedule: Schedule,
    /// Blocks where ADMM failed and equal shares were used instead.
    pub fallback_blocks: usize,
    pub rows: Vec<PolicyRow>,
}

#[derive(Clone, Debug)]
pub struct RunResults {
    pub config: Config,
    pub scenario: Scenario,
    pub gains: GainMatrix,
    pub graph: InterferenceGraph,
    pub coloring: MisRun,
    pub params: MisParams,
    pub rates: RateMatrix,
    pub bounds: Option<BoundsReport>,
    pub objectives: Vec<ObjectiveRun>,
}

impl RunResults {
    pub fn classes(&self) -> &[Vec<usize>] {
        &self.coloring.family.classes
    }

    pub fn rows(&self) -> impl Iterator<Item = &PolicyRow> {
        self.objectives.iter().flat_map(|o| o.rows.iter())
    }

    pub fn row(&self, policy: &str, objective: &str) -> Option<&PolicyRow> {
        self.rows().find(|r| r.policy == policy && r.objective == objective)
    }
}

pub fn build_scenario(config: &Config) -> Result<Scenario, PipelineError> {
    let link = || {
        config
            .link
            .ok_or_else(|| PipelineError::Config("grid and rooms scenarios need a [link] table".into()))
    };
    let scenario = match &config.scenario {
        ScenarioSpec::Grid { k, spacing, offset } => build_grid_scenario(*k, *spacing, *offset, &link()?)?,
        ScenarioSpec::Rooms {
            rooms,
            ues_per_room,
            room_length,
            sbs_height,
            wall_coeff,
        } => build_rooms_scenario(*rooms, *ues_per_room, *room_length, *sbs_height, *wall_coeff, &link()?)?,
        ScenarioSpec::Explicit(s) => {
            s.validate()?;
            s.clone()
        }
    };
    Ok(scenario)
}

fn mis_params(config: &Config, graph: &InterferenceGraph) -> Result<MisParams, PipelineError> {
    let mut p = MisParams::for_graph(graph);
    let spec = &config.coloring;
    if let Some(h) = spec.h {
        p.h = h;
    }
    if let Some(c) = spec.c {
        p.c = c;
    }
    if let Some(c1) = spec.c1 {
        p.c1 = c1;
    }
    if let Some(c2) = spec.c2 {
        p.c2 = c2;
    }
    p.validate()?;
    Ok(p)
}

struct Block {
    gains: GainMatrix,
    rates: RateMatrix,
}

/// Runs the four steps plus the configured baselines and bounds.
pub fn run_pipeline(config: &Config) -> Result<RunResults, PipelineError> {
    let root = StreamKey::root(config.seed);
    let scenario = build_scenario(config)?;
    let n = scenario.num_ues();
    if let Some(w) = &config.weights {
        if w.len() != n {
            return Err(PipelineError::Config(format!("{} weights for {n} UEs", w.len())));
        }
    }
    let gains = channel_gain(&scenario, None)?;

    let graph = build_graph_distance(&scenario, config.graph.dth);
    let params = mis_params(config, &graph)?;
    round_budget(n, &params)?;
    let coloring = generate_with_retries(&graph, &params, root.stream("coloring"), config.coloring.retries)?;
    let classes = coloring.family.classes.clone();

    let rates_for = |g: &GainMatrix| match config.rates {
        RateMode::Direct => compute_rates(&scenario, g, &classes),
        RateMode::Measured => measure_rates(&scenario, g, &classes),
    };
    let mut blocks = vec![Block {
        rates: rates_for(&gains),
        gains: gains.clone(),
    }];
    if let Some(f) = &config.fading {
        blocks.clear();
        let key = root.stream("fading");
        for b in 0..f.blocks.max(1) {
            let draws = sample_fading_matrix(n, scenario.num_sbs(), f.beta, &mut key.child(b as u64).rng());
            let g = channel_gain(&scenario, Some(&draws))?;
            blocks.push(Block {
                rates: rates_for(&g),
                gains: g,
            });
        }
    }

    let bounds = config
        .bounds
        .map(|b| bounds_report(&scenario, &graph, &gains, b.zeta, config.graph.dth));

    let mut objectives = Vec::new();
    for &kind in &config.objectives {
        objectives.push(run_objective(config, kind, &scenario, &graph, &classes, &blocks)?);
    }

    Ok(RunResults {
        config: config.clone(),
        rates: blocks[0].rates.clone(),
        scenario,
        gains,
        graph,
        coloring,
        params,
        bounds,
        objectives,
    })
}

/// Per-UE average of per-block throughputs.
fn mean_rows(parts: &[Vec<f64>], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n];
    for p in parts {
        for i in 0..n {
            out[i] += p[i];
        }
    }
    let count = parts.len().max(1) as f64;
    out.iter().map(|v| v / count).collect()
}

fn cycle_throughputs(scenario: &Scenario, gains: &GainMatrix, classes: &[Vec<usize>], schedule: &Schedule, cycles: usize) -> Vec<f64> {
    let policy = CyclicPolicy::from_schedule(scenario, classes, schedule);
    evaluate(scenario, gains, &policy, 0, schedule.cycle_length() * cycles.max(1), false).average
}

fn run_objective(
    config: &Config,
    kind: ObjectiveKind,
    scenario: &Scenario,
    graph: &InterferenceGraph,
    classes: &[Vec<usize>],
    blocks: &[Block],
) -> Result<ObjectiveRun, PipelineError> {
    let n = scenario.num_ues();
    let objective = config.objective(kind, n);
    let rmin = &scenario.rmin;
    let d = config.schedule.precision;
    // With fading every block is evaluated over one whole cycle of its own schedule.
    let cycles = if config.fading.is_some() { 1 } else { config.schedule.cycles };
    let admm_cfg = AdmmConfig {
        penalty: config.admm.penalty,
        iterations: config.admm.iterations,
        record_trace: true,
    };

    let mut nominal: Option<(Option<AdmmOutcome>, Vec<f64>, Schedule)> = None;
    let mut fallback_blocks = 0;
    let mut proposed = Vec::with_capacity(blocks.len());
    for (b, block) in blocks.iter().enumerate() {
        let cfg = AdmmConfig {
            record_trace: b == 0,
            ..admm_cfg
        };
        let (outcome, gamma) = match admm_solve(&block.rates, rmin, &objective, graph, &cfg) {
            Ok(out) => {
                let g = out.gamma.clone();
                (Some(out), g)
            }
            Err(e @ FractError::LocalInfeasible { .. }) if config.fading.is_some() => {
                log::warn!("block {b}: {e}; using equal shares");
                fallback_blocks += 1;
                (None, stdma_equal(classes.len()))
            }
            Err(source) => {
                return Err(PipelineError::Fractions {
                    objective: objective.name(),
                    source,
                })
            }
        };
        let schedule = build_cycle(&gamma, d)?;
        proposed.push(cycle_throughputs(scenario, &block.gains, classes, &schedule, cycles));
        if nominal.is_none() {
            nominal = Some((outcome, gamma, schedule));
        }
    }
    let (admm, gamma, schedule) = nominal.expect("at least one block");
    let mut rows = vec![PolicyRow::new("proposed", &objective, mean_rows(&proposed, n), rmin, true)];

    for &baseline in &config.baselines {
        let label = baseline.label();
        let wrap = |source: BaselineError| PipelineError::Baseline { policy: label, source };
        let mut parts = Vec::with_capacity(blocks.len());
        let mut feasible = true;
        for block in blocks {
            let thr = match baseline {
                BaselineKind::Stdma => {
                    let schedule = build_cycle(&stdma_equal(classes.len()), d)?;
                    cycle_throughputs(scenario, &block.gains, classes, &schedule, cycles)
                }
                BaselineKind::Pms => {
                    let policy = pms(scenario, &block.gains).map_err(wrap)?;
                    let len = policy.order().len() * cycles.max(1);
                    evaluate(scenario, &block.gains, &policy, 0, len, false).average
                }
                BaselineKind::Constant => {
                    match centralized_constant_power(scenario, &block.gains, config.constant.levels, &objective, rmin) {
                        Ok(best) => best.throughputs,
                        Err(BaselineError::Infeasible) => {
                            feasible = false;
                            throughputs(scenario, &block.gains, &PowerProfile::silent(n))
                        }
                        Err(e) => return Err(wrap(e)),
                    }
                }
                BaselineKind::Bp => {
                    match benchmark_bp(scenario, &block.gains, &objective, rmin, config.benchmark.limit) {
                        Ok(bp) => bp.throughputs,
                        Err(BaselineError::Infeasible) => {
                            feasible = false;
                            vec![0.0; n]
                        }
                        Err(e) => return Err(wrap(e)),
                    }
                }
            };
            parts.push(thr);
        }
        rows.push(PolicyRow::new(label, &objective, mean_rows(&parts, n), rmin, feasible));
    }

    Ok(ObjectiveRun {
        kind,
        objective,
        admm,
        gamma,
        schedule,
        fallback_blocks,
        rows,
    })
}
