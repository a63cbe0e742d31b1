//! Ready-made experiment configs.

use super::config::Config;

pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    pub toml: &'static str,
}

pub const PRESETS: &[Preset] = &[
    Preset {
        name: "minimal",
        description: "one UE and one SBS",
        toml: r#"
name = "minimal"
seed = 1
objectives = ["sum"]
[scenario]
kind = "grid"
k = 1
spacing = 1.0
offset = 1.0
[link]
pmax = 100.0
rmin = 0.1
noise = 3.0
path_loss_exponent = 4.0
[graph]
dth = 6.0
"#,
    },
    Preset {
        name: "motivating",
        description: "two PBS and two FBS cells whose graph is a 4-cycle with two MISs",
        toml: MOTIVATING,
    },
    Preset {
        name: "grid-bounds",
        description: "3x3 SBS grid, 5 m spacing, with the analytic guarantees",
        toml: r#"
name = "grid-bounds"
seed = 3
baselines = ["stdma", "constant", "bp"]
[scenario]
kind = "grid"
k = 3
spacing = 5.0
offset = 1.0
[link]
pmax = 100.0
rmin = 0.1
noise = 3.0
path_loss_exponent = 4.0
[graph]
dth = 6.0
[bounds]
zeta = 0.15
[constant]
levels = 2
[benchmark]
limit = 9
"#,
    },
    Preset {
        name: "fading-grid",
        description: "3x3 grid, 4.7 m spacing, Rayleigh block fading",
        toml: r#"
name = "fading-grid"
seed = 5
baselines = ["stdma", "constant"]
[scenario]
kind = "grid"
k = 3
spacing = 4.7
offset = 3.1622776601683795
[link]
pmax = 1000.0
rmin = 0.45
noise = 1.6e-3
path_loss_exponent = 2.0
[graph]
dth = 7.0
[admm]
iterations = 2000
[fading]
beta = 1.0
block = 100
blocks = 10
[constant]
levels = 2
"#,
    },
    Preset {
        name: "rooms",
        description: "12 adjacent rooms with wall loss, 5 UEs per room",
        toml: r#"
name = "rooms"
seed = 7
baselines = ["stdma", "pms"]
[scenario]
kind = "rooms"
rooms = 12
ues_per_room = 5
room_length = 20.0
sbs_height = 2.0
wall_coeff = 1.7782794100389228
[link]
pmax = 50.0
rmin = 0.025
noise = 1e-11
path_loss_exponent = 2.0
[graph]
dth = 30.0
[admm]
iterations = 2000
penalty = 5.0
"#,
    },
    Preset {
        name: "rooms-dynamics",
        description: "3 rooms with at most 3 UEs each, for entry/exit scripts",
        toml: r#"
name = "rooms-dynamics"
seed = 11
objectives = ["maxmin"]
baselines = ["stdma"]
[scenario]
kind = "rooms"
rooms = 3
ues_per_room = 3
room_length = 20.0
sbs_height = 2.0
wall_coeff = 1.7782794100389228
[link]
pmax = 1000.0
rmin = 0.25
noise = 1e-11
path_loss_exponent = 2.0
[graph]
dth = 30.0
"#,
    },
];

const MOTIVATING: &str = r#"
name = "motivating"
seed = 2
baselines = ["stdma", "constant", "bp"]
[scenario]
kind = "explicit"
ue_positions = [[-0.7236, 0.0722, 0.0], [-0.5292, 0.0851, 0.0], [0.7336, 0.0117, 0.0], [0.3689, -1.1587, 0.0]]
sbs_positions = [[-0.6217, 0.0, 0.0], [0.0, 0.8433, 0.0], [0.6217, 0.0, 0.0], [0.0, -0.8433, 0.0]]
serving = [0, 1, 2, 3]
pmax = [80.0, 80.0, 80.0, 80.0]
rmin = [0.4, 0.2, 0.4, 0.2]
noise = [1.6e-3, 1.6e-3, 1.6e-3, 1.6e-3]
path_loss_exponent = 4.0
[graph]
dth = 1.2
[coloring]
h = 2
[schedule]
precision = 4
[constant]
levels = 8
"#;

pub fn preset(name: &str) -> Option<&'static Preset> {
    PRESETS.iter().find(|p| p.name == name)
}

pub fn preset_config(name: &str) -> Option<Config> {
    preset(name).map(|p| Config::from_toml(p.toml).expect("preset parses"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_parse() {
        for p in PRESETS {
            let cfg = Config::from_toml(p.toml).unwrap_or_else(|e| panic!("{}: {e}", p.name));
            assert_eq!(cfg.name, p.name);
        }
        assert!(preset("nope").is_none());
    }
}
