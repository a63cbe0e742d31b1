use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use super::pipeline::{PipelineError, PolicyRow, RunResults};
use crate::fractopt::AdmmOutcome;

fn csv_err(e: csv::Error) -> PipelineError {
    PipelineError::Io(std::io::Error::other(e))
}

/// `policy,objective,value,min_throughput,sum_throughput,violations,feasible,r_0..`.
pub fn write_metrics_csv<'a, W: Write>(
    rows: impl IntoIterator<Item = &'a PolicyRow>,
    num_ues: usize,
    out: W,
) -> Result<(), PipelineError> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = [
        "policy",
        "objective",
        "value",
        "min_throughput",
        "sum_throughput",
        "violations",
        "feasible",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    header.extend((0..num_ues).map(|i| format!("r_{i}")));
    w.write_record(&header).map_err(csv_err)?;
    for row in rows {
        let mut rec = vec![
            row.policy.clone(),
            row.objective.clone(),
            row.value.to_string(),
            row.min_throughput.to_string(),
            row.sum_throughput.to_string(),
            row.violations.to_string(),
            row.feasible.to_string(),
        ];
        rec.extend(row.throughputs.iter().map(|r| r.to_string()));
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// `iteration,objective,residual,min_slack`.
pub fn write_admm_trace_csv<W: Write>(outcome: &AdmmOutcome, out: W) -> Result<(), PipelineError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["iteration", "objective", "residual", "min_slack"])
        .map_err(csv_err)?;
    for rec in &outcome.trace {
        let slack = rec.slack.iter().copied().fold(f64::INFINITY, f64::min);
        w.write_record([
            rec.iteration.to_string(),
            rec.objective.to_string(),
            rec.residual.to_string(),
            slack.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Plain-text record of everything needed to rerun and audit a run.
pub fn manifest(results: &RunResults) -> String {
    let mut m = String::new();
    let cfg = &results.config;
    let fam = &results.coloring.family;
    let _ = writeln!(m, "name = {}", cfg.name);
    let _ = writeln!(m, "version = {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(m, "seed = {}", cfg.seed);
    let _ = writeln!(m, "streams = coloring/<attempt>/phase1|phase2, fading/<block>");
    let _ = writeln!(m, "ues = {}", results.scenario.num_ues());
    let _ = writeln!(m, "sbss = {}", results.scenario.num_sbs());
    let _ = writeln!(m, "graph.edges = {}", results.graph.num_edges());
    let _ = writeln!(m, "graph.max_degree = {}", results.graph.max_degree());
    let _ = writeln!(m, "graph.connected = {}", results.graph.is_connected());
    let p = &results.params;
    let _ = writeln!(m, "coloring.h = {}", p.h);
    let _ = writeln!(m, "coloring.c = {}", p.c);
    let _ = writeln!(m, "coloring.c1 = {}", p.c1);
    let _ = writeln!(m, "coloring.c2 = {}", p.c2);
    let _ = writeln!(m, "coloring.attempts = {}", results.coloring.attempts);
    let _ = writeln!(m, "coloring.rounds = {}", fam.rounds_used);
    for (k, class) in fam.classes.iter().enumerate() {
        let _ = writeln!(m, "coloring.class.{k} = {class:?}");
    }
    if let Some(b) = &results.bounds {
        let _ = writeln!(m, "bounds.zeta = {}", b.params.zeta);
        let _ = writeln!(m, "bounds.max_degree = {}", b.max_degree);
        let _ = writeln!(m, "bounds.wni_pass = {}", b.wni_pass);
        let _ = writeln!(m, "bounds.wni_threshold = {}", b.wni_threshold);
        let _ = writeln!(m, "bounds.wni_worst_sum = {}", b.wni_worst_sum);
        let _ = writeln!(m, "bounds.delta_max = {}", b.delta_max);
        let _ = writeln!(m, "bounds.delta_max_floor = {}", b.delta_max_floor);
        let _ = writeln!(m, "bounds.competitive_ratio = {}", b.competitive_ratio);
        let _ = writeln!(m, "bounds.proof_ratio = {}", b.proof_ratio);
        let _ = writeln!(m, "bounds.eta = {}", b.eta);
        let _ = writeln!(m, "bounds.delta_star = {}", b.delta_star);
    }
    for o in &results.objectives {
        let name = o.objective.name();
        if let Some(a) = &o.admm {
            let _ = writeln!(m, "{name}.admm.iterations = {}", a.state.iterations);
            let _ = writeln!(m, "{name}.admm.residual = {}", a.residual);
            let _ = writeln!(m, "{name}.admm.bridges = {}", a.bridges);
            let _ = writeln!(m, "{name}.admm.suspected_infeasible = {}", a.suspected_infeasible);
        }
        let _ = writeln!(m, "{name}.gamma = {:?}", o.gamma);
        let _ = writeln!(m, "{name}.fallback_blocks = {}", o.fallback_blocks);
        let _ = writeln!(m, "{name}.schedule.cycle_length = {}", o.schedule.cycle_length());
        let _ = writeln!(m, "{name}.schedule.precision = {}", o.schedule.precision);
        let _ = writeln!(m, "{name}.schedule.dropped = {:?}", o.schedule.dropped);
        let _ = writeln!(m, "{name}.schedule.capped = {}", o.schedule.capped);
    }
    let _ = writeln!(m, "\n[config]\n{}", cfg.to_toml());
    m
}

/// Writes metrics, ADMM traces, the edge list and the manifest into `dir`.
/// Returns the paths written.
pub fn write_outputs(results: &RunResults, dir: &Path) -> Result<Vec<PathBuf>, PipelineError> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let path = dir.join("metrics.csv");
    write_metrics_csv(results.rows(), results.scenario.num_ues(), fs::File::create(&path)?)?;
    written.push(path);
    for o in &results.objectives {
        if let Some(a) = &o.admm {
            let path = dir.join(format!("admm_trace_{}.csv", o.objective.name()));
            write_admm_trace_csv(a, fs::File::create(&path)?)?;
            written.push(path);
        }
    }
    let path = dir.join("graph.txt");
    fs::write(&path, results.graph.to_edge_list())?;
    written.push(path);
    let path = dir.join("manifest.txt");
    fs::write(&path, manifest(results))?;
    written.push(path);
    Ok(written)
}
