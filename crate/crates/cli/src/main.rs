use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use cellmis::dynamics::parse_event_script;
use cellmis::harness::config::ObjectiveKind;
use cellmis::harness::events::{live_state, write_events_csv};
use cellmis::harness::{
    bounds_report, preset, random_churn, replay, run_pipeline, sweep, write_outputs, write_sweep_csv, BaselineKind,
    Config, SweepAxis, PRESETS,
};
use cellmis::intgraph::build_graph_distance;
use cellmis::topology::channel_gain;
use cellmis::StreamKey;

#[derive(Parser)]
#[command(name = "cellmis", version, about = "MIS-based interference management simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the pipeline and baselines once.
    Run {
        #[command(flatten)]
        source: Source,
        /// Output directory.
        #[arg(short, long, default_value = "out")]
        out: PathBuf,
    },
    /// Run once per value of a config parameter.
    Sweep {
        #[command(flatten)]
        source: Source,
        /// `path=v1,v2,...`, e.g. `fading.beta=0.5,1,1.5`.
        #[arg(short, long)]
        axis: String,
        /// Output CSV file.
        #[arg(short, long, default_value = "sweep.csv")]
        out: PathBuf,
    },
    /// Replay UE entry/exit events after the pipeline.
    Events {
        #[command(flatten)]
        source: Source,
        /// Event script (`enter <sbs> <rmin> <pmax> <x> <y>` / `exit <ue>`).
        #[arg(long, conflicts_with = "random")]
        script: Option<PathBuf>,
        /// Generate this many random churn events instead (rooms scenarios).
        #[arg(long)]
        random: Option<usize>,
        #[arg(short, long, default_value = "events.csv")]
        out: PathBuf,
    },
    /// Print the analytic bounds for a scenario.
    Bounds {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value_t = 0.15)]
        zeta: f64,
    },
    /// List presets, or print one.
    Presets { name: Option<String> },
}

#[derive(Args)]
struct Source {
    /// TOML config file.
    config: Option<PathBuf>,
    /// Use a built-in preset instead of a file.
    #[arg(short, long, conflicts_with = "config")]
    preset: Option<String>,
    #[arg(short, long)]
    seed: Option<u64>,
    /// Comma-separated objectives: sum, weighted, pf, maxmin.
    #[arg(long, value_delimiter = ',')]
    objective: Vec<String>,
    /// Comma-separated baselines: stdma, constant, pms, bp.
    #[arg(long, value_delimiter = ',')]
    baselines: Option<Vec<String>>,
}

impl Source {
    fn load(&self) -> Result<Config> {
        let mut cfg = match (&self.config, &self.preset) {
            (Some(path), _) => {
                let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                Config::from_toml(&text).with_context(|| format!("parsing {}", path.display()))?
            }
            (None, Some(name)) => {
                let p = preset(name).with_context(|| format!("unknown preset `{name}`"))?;
                Config::from_toml(p.toml)?
            }
            (None, None) => bail!("give a config file or --preset"),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if !self.objective.is_empty() {
            cfg.objectives = self
                .objective
                .iter()
                .map(|s| parse_objective(s))
                .collect::<Result<_>>()?;
        }
        if let Some(b) = &self.baselines {
            cfg.baselines = b
                .iter()
                .filter(|s| !s.is_empty())
                .map(|s| parse_baseline(s))
                .collect::<Result<_>>()?;
        }
        Ok(cfg)
    }
}

fn parse_objective(s: &str) -> Result<ObjectiveKind> {
    Ok(match s.trim() {
        "sum" => ObjectiveKind::Sum,
        "weighted" => ObjectiveKind::Weighted,
        "pf" => ObjectiveKind::Pf,
        "maxmin" => ObjectiveKind::Maxmin,
        other => bail!("unknown objective `{other}`"),
    })
}

fn parse_baseline(s: &str) -> Result<BaselineKind> {
    Ok(match s.trim() {
        "stdma" => BaselineKind::Stdma,
        "constant" => BaselineKind::Constant,
        "pms" => BaselineKind::Pms,
        "bp" => BaselineKind::Bp,
        other => bail!("unknown baseline `{other}`"),
    })
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::Run { source, out } => {
            let cfg = source.load()?;
            let results = run_pipeline(&cfg)?;
            for row in results.rows() {
                println!(
                    "{:<10} {:<8} value={:.6} min={:.6} sum={:.6} violations={}{}",
                    row.policy,
                    row.objective,
                    row.value,
                    row.min_throughput,
                    row.sum_throughput,
                    row.violations,
                    if row.feasible { "" } else { " infeasible" }
                );
            }
            for path in write_outputs(&results, &out)? {
                log::info!("wrote {}", path.display());
            }
        }
        Command::Sweep { source, axis, out } => {
            let cfg = source.load()?;
            let axis = SweepAxis::parse(&axis)?;
            let table = sweep(&cfg, &axis)?;
            for cell in &table.cells {
                if let Err(e) = &cell.outcome {
                    log::warn!("{} = {}: {e}", table.axis, cell.value);
                }
            }
            write_sweep_csv(&table, fs::File::create(&out)?)?;
            println!("{} cells written to {}", table.cells.len(), out.display());
        }
        Command::Events {
            source,
            script,
            random,
            out,
        } => {
            let cfg = source.load()?;
            let events = match (script, random) {
                (Some(path), _) => parse_event_script(&fs::read_to_string(&path)?)?,
                (None, Some(count)) => {
                    random_churn(&cfg, count, &mut StreamKey::root(cfg.seed).stream("churn").rng())?
                }
                (None, None) => bail!("give --script or --random"),
            };
            let results = run_pipeline(&cfg)?;
            let outcome = replay(live_state(&results)?, &events)?;
            write_events_csv(&outcome.records, fs::File::create(&out)?)?;
            let entries = outcome.records.iter().filter(|r| r.satisfied.is_some()).count();
            let satisfied = outcome.records.iter().filter(|r| r.satisfied == Some(true)).count();
            println!("events: {}", outcome.records.len());
            println!("entries satisfied: {satisfied}/{entries}");
            println!("worst incumbent throughput: {:.6}", outcome.worst_incumbent());
            println!("color clashes: {}", outcome.clashes.len());
            println!("safety violations: {}", outcome.safety_violations.len());
        }
        Command::Bounds { source, zeta } => {
            let cfg = source.load()?;
            let scenario = cellmis::harness::build_scenario(&cfg)?;
            let gains = channel_gain(&scenario, None)?;
            let graph = build_graph_distance(&scenario, cfg.graph.dth);
            let zeta = cfg.bounds.map_or(zeta, |b| b.zeta);
            let b = bounds_report(&scenario, &graph, &gains, zeta, cfg.graph.dth);
            println!("max degree        {}", b.max_degree);
            println!("zeta-WNI          {} (worst {:.6e} vs {:.6e})", b.wni_pass, b.wni_worst_sum, b.wni_threshold);
            println!("delta_max         {:.6} (floor {})", b.delta_max, b.delta_max_floor);
            println!("competitive ratio {:.6}", b.competitive_ratio);
            println!("proof ratio       {:.6}", b.proof_ratio);
            println!("eta               {}", b.eta);
            println!("delta_star        {}", b.delta_star);
        }
        Command::Presets { name } => match name {
            Some(n) => print!("{}", preset(&n).with_context(|| format!("unknown preset `{n}`"))?.toml.trim_start()),
            None => {
                for p in PRESETS {
                    println!("{:<16} {}", p.name, p.description);
                }
            }
        },
    }
    Ok(())
}
