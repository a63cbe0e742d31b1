use serde::{Deserialize, Serialize};

use crate::objective::Objective;
use crate::topology::{LinkParams, Scenario};

/// One experiment, read from a TOML file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default = "default_name")]
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_objectives")]
    pub objectives: Vec<ObjectiveKind>,
    /// Weights for `weighted`; unit weights otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    #[serde(default)]
    pub baselines: Vec<BaselineKind>,
    pub scenario: ScenarioSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub link: Option<LinkParams>,
    pub graph: GraphSpec,
    #[serde(default)]
    pub coloring: ColoringSpec,
    #[serde(default)]
    pub rates: RateMode,
    #[serde(default)]
    pub admm: AdmmSpec,
    #[serde(default)]
    pub schedule: ScheduleSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fading: Option<FadingSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<BoundsSpec>,
    #[serde(default)]
    pub constant: ConstantSpec,
    #[serde(default)]
    pub benchmark: BenchmarkSpec,
}

fn default_name() -> String {
    "run".into()
}

fn default_objectives() -> Vec<ObjectiveKind> {
    vec![ObjectiveKind::Sum, ObjectiveKind::Maxmin]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObjectiveKind {
    Sum,
    Weighted,
    Pf,
    Maxmin,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaselineKind {
    Stdma,
    Constant,
    Pms,
    Bp,
}

impl BaselineKind {
    pub fn label(self) -> &'static str {
        match self {
            BaselineKind::Stdma => "stdma",
            BaselineKind::Constant => "constant",
            BaselineKind::Pms => "pms",
            BaselineKind::Bp => "bp",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ScenarioSpec {
    Grid {
        k: usize,
        spacing: f64,
        offset: f64,
    },
    Rooms {
        rooms: usize,
        ues_per_room: usize,
        #[serde(default = "default_room_length")]
        room_length: f64,
        #[serde(default = "default_sbs_height")]
        sbs_height: f64,
        #[serde(default = "default_wall_coeff")]
        wall_coeff: f64,
    },
    Explicit(Scenario),
}

fn default_room_length() -> f64 {
    20.0
}

fn default_sbs_height() -> f64 {
    2.0
}

fn default_wall_coeff() -> f64 {
    10f64.powf(0.25)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSpec {
    /// SBS distance below which two UE-SBS pairs interfere strongly, m.
    pub dth: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColoringSpec {
    /// Number of colors; `Δ + 1` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c2: Option<f64>,
    #[serde(default = "default_retries")]
    pub retries: usize,
}

fn default_retries() -> usize {
    10
}

impl Default for ColoringSpec {
    fn default() -> Self {
        ColoringSpec {
            h: None,
            c: None,
            c1: None,
            c2: None,
            retries: default_retries(),
        }
    }
}

/// How per-class rates are obtained.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RateMode {
    #[default]
    Direct,
    Measured,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdmmSpec {
    #[serde(default = "default_penalty")]
    pub penalty: f64,
    #[serde(default = "default_iterations")]
    pub iterations: usize,
}

fn default_penalty() -> f64 {
    1.0
}

fn default_iterations() -> usize {
    2000
}

impl Default for AdmmSpec {
    fn default() -> Self {
        AdmmSpec {
            penalty: default_penalty(),
            iterations: default_iterations(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSpec {
    #[serde(default = "default_precision")]
    pub precision: u32,
    /// Horizon in cycles when there is no fading.
    #[serde(default = "default_cycles")]
    pub cycles: usize,
}

fn default_precision() -> u32 {
    2
}

fn default_cycles() -> usize {
    100
}

impl Default for ScheduleSpec {
    fn default() -> Self {
        ScheduleSpec {
            precision: default_precision(),
            cycles: default_cycles(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FadingSpec {
    pub beta: f64,
    /// Slots per fading block.
    #[serde(default = "default_block")]
    pub block: usize,
    #[serde(default = "default_blocks")]
    pub blocks: usize,
}

fn default_block() -> usize {
    100
}

fn default_blocks() -> usize {
    20
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsSpec {
    pub zeta: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantSpec {
    #[serde(default = "default_levels")]
    pub levels: usize,
}

fn default_levels() -> usize {
    4
}

impl Default for ConstantSpec {
    fn default() -> Self {
        ConstantSpec {
            levels: default_levels(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkSpec {
    #[serde(default = "default_bp_limit")]
    pub limit: usize,
}

fn default_bp_limit() -> usize {
    12
}

impl Default for BenchmarkSpec {
    fn default() -> Self {
        BenchmarkSpec {
            limit: default_bp_limit(),
        }
    }
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn objective(&self, kind: ObjectiveKind, n: usize) -> Objective {
        match kind {
            ObjectiveKind::Sum => Objective::sum(n),
            ObjectiveKind::Weighted => match &self.weights {
                Some(w) => Objective::WeightedSum(w.clone()),
                None => Objective::sum(n),
            },
            ObjectiveKind::Pf => Objective::ProportionalFair,
            ObjectiveKind::Maxmin => Objective::MaxMin,
        }
    }
}
