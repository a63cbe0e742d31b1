use std::io::Write;

use rayon::prelude::*;

use super::config::Config;
use super::pipeline::{run_pipeline, PipelineError, PolicyRow};

/// A dotted config path (`fading.beta`, `scenario.spacing`, `seed`, ...) and
/// the values it takes.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepAxis {
    pub path: String,
    pub values: Vec<f64>,
}

impl SweepAxis {
    /// Parses `path=v1,v2,...`.
    pub fn parse(spec: &str) -> Result<Self, PipelineError> {
        let (path, values) = spec
            .split_once('=')
            .ok_or_else(|| PipelineError::Config(format!("sweep axis `{spec}` is not `path=v1,v2,...`")))?;
        let values = values
            .split(',')
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|e| PipelineError::Config(format!("sweep value `{v}`: {e}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(PipelineError::Config("sweep values must be finite".into()));
        }
        Ok(SweepAxis {
            path: path.trim().to_string(),
            values,
        })
    }
}

#[derive(Clone, Debug)]
pub struct SweepCell {
    pub value: f64,
    pub outcome: Result<Vec<PolicyRow>, String>,
}

#[derive(Clone, Debug)]
pub struct SweepTable {
    pub axis: String,
    pub cells: Vec<SweepCell>,
}

/// `config` with the value at `path` replaced.
pub fn with_value(config: &Config, path: &str, value: f64) -> Result<Config, PipelineError> {
    let mut root = toml::Value::try_from(config).map_err(|e| PipelineError::Config(e.to_string()))?;
    let keys: Vec<&str> = path.split('.').collect();
    let (last, parents) = keys.split_last().expect("split yields one key");
    let mut node = &mut root;
    for key in parents {
        let table = node
            .as_table_mut()
            .ok_or_else(|| PipelineError::Config(format!("`{path}`: `{key}` is not inside a table")))?;
        node = table
            .entry(key.to_string())
            .or_insert_with(|| toml::Value::Table(Default::default()));
    }
    let table = node
        .as_table_mut()
        .ok_or_else(|| PipelineError::Config(format!("`{path}` does not name a table entry")))?;
    let replacement = if value.fract() == 0.0 && value.abs() < 9.0e15 {
        toml::Value::Integer(value as i64)
    } else {
        toml::Value::Float(value)
    };
    table.insert(last.to_string(), replacement);
    root.try_into()
        .map_err(|e: toml::de::Error| PipelineError::Config(format!("`{path}` = {value}: {e}")))
}

/// One pipeline run per axis value, in parallel. Failed cells are kept
/// with their error.
pub fn sweep(config: &Config, axis: &SweepAxis) -> Result<SweepTable, PipelineError> {
    let configs = axis
        .values
        .iter()
        .map(|&v| with_value(config, &axis.path, v))
        .collect::<Result<Vec<_>, _>>()?;
    let cells = configs
        .par_iter()
        .zip(&axis.values)
        .map(|(cfg, &value)| SweepCell {
            value,
            outcome: run_pipeline(cfg)
                .map(|r| r.rows().cloned().collect())
                .map_err(|e| e.to_string()),
        })
        .collect();
    Ok(SweepTable {
        axis: axis.path.clone(),
        cells,
    })
}

/// `axis,value,policy,objective,metric,min_throughput,sum_throughput,violations,feasible,error`.
pub fn write_sweep_csv<W: Write>(table: &SweepTable, out: W) -> Result<(), PipelineError> {
    let err = |e: csv::Error| PipelineError::Io(std::io::Error::other(e));
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "axis",
        "value",
        "policy",
        "objective",
        "metric",
        "min_throughput",
        "sum_throughput",
        "violations",
        "feasible",
        "error",
    ])
    .map_err(err)?;
    for cell in &table.cells {
        match &cell.outcome {
            Ok(rows) => {
                for r in rows {
                    w.write_record([
                        table.axis.clone(),
                        cell.value.to_string(),
                        r.policy.clone(),
                        r.objective.clone(),
                        r.value.to_string(),
                        r.min_throughput.to_string(),
                        r.sum_throughput.to_string(),
                        r.violations.to_string(),
                        r.feasible.to_string(),
                        String::new(),
                    ])
                    .map_err(err)?;
                }
            }
            Err(e) => {
                let mut rec = vec![table.axis.clone(), cell.value.to_string()];
                rec.extend(std::iter::repeat_n(String::new(), 7));
                rec.push(e.clone());
                w.write_record(&rec).map_err(err)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}
