//! Network geometry, channel gains and SINR-based throughput.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum TopologyError {
    #[error("invalid geometry parameter `{name}` = {value}")]
    BadParameter { name: &'static str, value: f64 },
    #[error("scenario field `{field}` has length {got}, expected {expected}")]
    LengthMismatch {
        field: &'static str,
        got: usize,
        expected: usize,
    },
    #[error("UE {ue} is served by SBS {sbs}, but only {num_sbs} SBSs exist")]
    BadServing { ue: usize, sbs: usize, num_sbs: usize },
    #[error("UE {ue}: {what} must be positive, got {value}")]
    NonPositive {
        ue: usize,
        what: &'static str,
        value: f64,
    },
    #[error("zero distance between UE {ue} and SBS {sbs}")]
    ZeroDistance { ue: usize, sbs: usize },
    #[error("fading draw for (UE {ue}, SBS {sbs}) is {value}, must be positive")]
    BadFading { ue: usize, sbs: usize, value: f64 },
    #[error("power {value} of UE {ue} outside [0, {pmax}]")]
    BadPower { ue: usize, value: f64, pmax: f64 },
}

fn default_wall_coeff() -> f64 {
    1.0
}

/// The physical world: positions, serving map, per-UE and per-SBS radio
/// parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub ue_positions: Vec<[f64; 3]>,
    pub sbs_positions: Vec<[f64; 3]>,
    /// `serving[i]` is the SBS index `T(i)`.
    pub serving: Vec<usize>,
    /// mW.
    pub pmax: Vec<f64>,
    /// bits/s/Hz.
    pub rmin: Vec<f64>,
    /// Noise power per SBS, mW.
    pub noise: Vec<f64>,
    pub path_loss_exponent: f64,
    /// Walls crossed between UE `i` and SBS `j`, row-major `N x K`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_counts: Option<Vec<Vec<u32>>>,
    /// x-coordinates of vertical wall planes; lets wall counts be derived
    /// for UEs added after construction.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_planes: Option<Vec<f64>>,
    #[serde(default = "default_wall_coeff")]
    pub wall_coeff: f64,
    /// Rayleigh scale; `None` disables fading.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fading_scale: Option<f64>,
}

/// Radio parameters shared by every UE/SBS of a preset.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkParams {
    pub pmax: f64,
    pub rmin: f64,
    pub noise: f64,
    pub path_loss_exponent: f64,
}

pub fn distance(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    (dx * dx + dy * dy + dz * dz).sqrt()
}

/// Number of wall planes crossed between a UE at `x_ue` and an SBS at `x_sbs`.
///
/// An SBS mounted exactly on a plane sits on that plane's +x face, so the
/// plane separates it from UEs on the -x side only.
pub fn walls_between(x_ue: f64, x_sbs: f64, planes: &[f64]) -> u32 {
    planes
        .iter()
        .filter(|&&c| {
            if x_ue >= x_sbs {
                c > x_sbs && c < x_ue
            } else {
                c > x_ue && c <= x_sbs
            }
        })
        .count() as u32
}

impl Scenario {
    pub fn num_ues(&self) -> usize {
        self.ue_positions.len()
    }

    pub fn num_sbs(&self) -> usize {
        self.sbs_positions.len()
    }

    pub fn ue_sbs_distance(&self, ue: usize, sbs: usize) -> f64 {
        distance(&self.ue_positions[ue], &self.sbs_positions[sbs])
    }

    pub fn sbs_distance(&self, a: usize, b: usize) -> f64 {
        distance(&self.sbs_positions[a], &self.sbs_positions[b])
    }

    pub fn walls(&self, ue: usize, sbs: usize) -> u32 {
        self.wall_counts.as_ref().map_or(0, |w| w[ue][sbs])
    }

    /// UEs served by `sbs`, ascending.
    pub fn served_by(&self, sbs: usize) -> Vec<usize> {
        (0..self.num_ues()).filter(|&i| self.serving[i] == sbs).collect()
    }

    pub fn validate(&self) -> Result<(), TopologyError> {
        let n = self.num_ues();
        let k = self.num_sbs();
        let check_len = |field, got, expected| {
            if got == expected {
                Ok(())
            } else {
                Err(TopologyError::LengthMismatch {
                    field,
                    got,
                    expected,
                })
            }
        };
        check_len("serving", self.serving.len(), n)?;
        check_len("pmax", self.pmax.len(), n)?;
        check_len("rmin", self.rmin.len(), n)?;
        check_len("noise", self.noise.len(), k)?;
        if let Some(w) = &self.wall_counts {
            check_len("wall_counts", w.len(), n)?;
            for row in w {
                check_len("wall_counts row", row.len(), k)?;
            }
        }
        if !(self.path_loss_exponent.is_finite() && self.path_loss_exponent >= 0.0) {
            return Err(TopologyError::BadParameter {
                name: "path_loss_exponent",
                value: self.path_loss_exponent,
            });
        }
        if !(self.wall_coeff.is_finite() && self.wall_coeff > 0.0) {
            return Err(TopologyError::BadParameter {
                name: "wall_coeff",
                value: self.wall_coeff,
            });
        }
        if let Some(beta) = self.fading_scale {
            if !(beta.is_finite() && beta > 0.0) {
                return Err(TopologyError::BadParameter {
                    name: "fading_scale",
                    value: beta,
                });
            }
        }
        for (j, &s) in self.noise.iter().enumerate() {
            if !(s.is_finite() && s > 0.0) {
                return Err(TopologyError::BadParameter {
                    name: "noise",
                    value: self.noise[j],
                });
            }
        }
        for i in 0..n {
            if self.serving[i] >= k {
                return Err(TopologyError::BadServing {
                    ue: i,
                    sbs: self.serving[i],
                    num_sbs: k,
                });
            }
            for (what, value) in [("pmax", self.pmax[i]), ("rmin", self.rmin[i])] {
                if !(value.is_finite() && value > 0.0) {
                    return Err(TopologyError::NonPositive { ue: i, what, value });
                }
            }
            for j in 0..k {
                if self.ue_sbs_distance(i, j) <= 0.0 {
                    return Err(TopologyError::ZeroDistance { ue: i, sbs: j });
                }
            }
        }
        Ok(())
    }

    /// Recompute `wall_counts` from `wall_planes`, if planes are present.
    pub fn refresh_wall_counts(&mut self) {
        if let Some(planes) = &self.wall_planes {
            let counts = self
                .ue_positions
                .iter()
                .map(|u| {
                    self.sbs_positions
                        .iter()
                        .map(|s| walls_between(u[0], s[0], planes))
                        .collect()
                })
                .collect();
            self.wall_counts = Some(counts);
        }
    }

    /// Append a UE and return its index.
    pub fn push_ue(&mut self, position: [f64; 3], serving: usize, pmax: f64, rmin: f64) -> usize {
        self.ue_positions.push(position);
        self.serving.push(serving);
        self.pmax.push(pmax);
        self.rmin.push(rmin);
        if self.wall_planes.is_some() {
            self.refresh_wall_counts();
        } else if let Some(w) = &mut self.wall_counts {
            w.push(vec![0; self.sbs_positions.len()]);
        }
        self.ue_positions.len() - 1
    }
}

fn positive(name: &'static str, value: f64) -> Result<(), TopologyError> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(TopologyError::BadParameter { name, value })
    }
}

/// `k x k` SBS lattice at height `offset`, one UE on the ground directly
/// below each SBS. Row-major indexing.
pub fn build_grid_scenario(
    k: usize,
    spacing: f64,
    offset: f64,
    params: &LinkParams,
) -> Result<Scenario, TopologyError> {
    if k == 0 {
        return Err(TopologyError::BadParameter {
            name: "k",
            value: 0.0,
        });
    }
    positive("spacing", spacing)?;
    positive("offset", offset)?;
    let mut sbs = Vec::with_capacity(k * k);
    let mut ues = Vec::with_capacity(k * k);
    for r in 0..k {
        for c in 0..k {
            let x = c as f64 * spacing;
            let y = r as f64 * spacing;
            sbs.push([x, y, offset]);
            ues.push([x, y, 0.0]);
        }
    }
    let n = k * k;
    let scenario = Scenario {
        ue_positions: ues,
        sbs_positions: sbs,
        serving: (0..n).collect(),
        pmax: vec![params.pmax; n],
        rmin: vec![params.rmin; n],
        noise: vec![params.noise; n],
        path_loss_exponent: params.path_loss_exponent,
        wall_counts: None,
        wall_planes: None,
        wall_coeff: 1.0,
        fading_scale: None,
    };
    scenario.validate()?;
    Ok(scenario)
}

/// Positions of the `P` UE slots in room `room` of a rooms layout.
pub fn room_slot_positions(room: usize, ues_per_room: usize, room_length: f64) -> Vec<[f64; 3]> {
    let gap = room_length / (1 + ues_per_room) as f64;
    (1..=ues_per_room)
        .map(|m| [room as f64 * room_length + m as f64 * gap, 0.0, 0.0])
        .collect()
}

/// Rooms on a line along x. Each room's SBS is mounted on its left wall at
/// height `sbs_height`; its UEs sit on the floor, evenly spaced.
pub fn build_rooms_scenario(
    num_rooms: usize,
    ues_per_room: usize,
    room_length: f64,
    sbs_height: f64,
    wall_coeff: f64,
    params: &LinkParams,
) -> Result<Scenario, TopologyError> {
    if num_rooms == 0 {
        return Err(TopologyError::BadParameter {
            name: "num_rooms",
            value: 0.0,
        });
    }
    if ues_per_room == 0 {
        return Err(TopologyError::BadParameter {
            name: "ues_per_room",
            value: 0.0,
        });
    }
    positive("room_length", room_length)?;
    positive("sbs_height", sbs_height)?;
    positive("wall_coeff", wall_coeff)?;
    let sbs: Vec<[f64; 3]> = (0..num_rooms)
        .map(|r| [r as f64 * room_length, sbs_height, 0.0])
        .collect();
    let mut ues = Vec::new();
    let mut serving = Vec::new();
    for r in 0..num_rooms {
        for p in room_slot_positions(r, ues_per_room, room_length) {
            ues.push(p);
            serving.push(r);
        }
    }
    let n = ues.len();
    let planes: Vec<f64> = (1..num_rooms).map(|r| r as f64 * room_length).collect();
    let mut scenario = Scenario {
        ue_positions: ues,
        sbs_positions: sbs,
        serving,
        pmax: vec![params.pmax; n],
        rmin: vec![params.rmin; n],
        noise: vec![params.noise; num_rooms],
        path_loss_exponent: params.path_loss_exponent,
        wall_counts: None,
        wall_planes: Some(planes),
        wall_coeff,
        fading_scale: None,
    };
    scenario.refresh_wall_counts();
    scenario.validate()?;
    Ok(scenario)
}

/// Linear channel gains, `N x K`.
#[derive(Clone, Debug, PartialEq)]
pub struct GainMatrix {
    num_ues: usize,
    num_sbs: usize,
    data: Vec<f64>,
}

impl GainMatrix {
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let num_ues = rows.len();
        let num_sbs = rows.first().map_or(0, Vec::len);
        GainMatrix {
            num_ues,
            num_sbs,
            data: rows.iter().flatten().copied().collect(),
        }
    }

    #[inline]
    pub fn get(&self, ue: usize, sbs: usize) -> f64 {
        self.data[ue * self.num_sbs + sbs]
    }

    pub fn num_ues(&self) -> usize {
        self.num_ues
    }

    pub fn num_sbs(&self) -> usize {
        self.num_sbs
    }

    pub fn row(&self, ue: usize) -> &[f64] {
        &self.data[ue * self.num_sbs..(ue + 1) * self.num_sbs]
    }
}

/// Multiplicative fading factors `f_ij`, `N x K`.
pub type FadingDraws = Vec<Vec<f64>>;

/// `g_ij = f_ij / (D_ij^np * wall_coeff^n_ij)`.
pub fn channel_gain(
    scenario: &Scenario,
    fading: Option<&FadingDraws>,
) -> Result<GainMatrix, TopologyError> {
    let n = scenario.num_ues();
    let k = scenario.num_sbs();
    if let Some(f) = fading {
        if f.len() != n || f.iter().any(|r| r.len() != k) {
            return Err(TopologyError::LengthMismatch {
                field: "fading",
                got: f.len(),
                expected: n,
            });
        }
    }
    let mut data = Vec::with_capacity(n * k);
    for i in 0..n {
        for j in 0..k {
            let d = scenario.ue_sbs_distance(i, j);
            if d <= 0.0 {
                return Err(TopologyError::ZeroDistance { ue: i, sbs: j });
            }
            let f = match fading {
                Some(f) => {
                    let v = f[i][j];
                    if !(v.is_finite() && v > 0.0) {
                        return Err(TopologyError::BadFading {
                            ue: i,
                            sbs: j,
                            value: v,
                        });
                    }
                    v
                }
                None => 1.0,
            };
            let walls = scenario.walls(i, j);
            let wall_loss = if walls == 0 {
                1.0
            } else {
                scenario.wall_coeff.powi(walls as i32)
            };
            data.push(f / (d.powf(scenario.path_loss_exponent) * wall_loss));
        }
    }
    Ok(GainMatrix {
        num_ues: n,
        num_sbs: k,
        data,
    })
}

/// One Rayleigh(β) draw by inverse CDF: `β sqrt(-2 ln U)`, `U ∈ (0, 1]`.
pub fn sample_fading<R: Rng + ?Sized>(beta: f64, rng: &mut R) -> f64 {
    let u: f64 = 1.0 - rng.random::<f64>();
    beta * (-2.0 * u.ln()).sqrt()
}

/// A full `N x K` fading matrix. Zero draws (probability ~2^-53) are nudged
/// up to the smallest positive normal so gains stay positive.
pub fn sample_fading_matrix<R: Rng + ?Sized>(
    num_ues: usize,
    num_sbs: usize,
    beta: f64,
    rng: &mut R,
) -> FadingDraws {
    (0..num_ues)
        .map(|_| {
            (0..num_sbs)
                .map(|_| sample_fading(beta, rng).max(f64::MIN_POSITIVE))
                .collect()
        })
        .collect()
}

/// Transmit powers of all UEs in one slot, mW.
#[derive(Clone, Debug, PartialEq)]
pub struct PowerProfile(pub Vec<f64>);

impl PowerProfile {
    pub fn silent(n: usize) -> Self {
        PowerProfile(vec![0.0; n])
    }

    /// Members transmit at full power, everyone else is silent.
    pub fn on_set(scenario: &Scenario, members: &[usize]) -> Self {
        let mut p = vec![0.0; scenario.num_ues()];
        for &i in members {
            p[i] = scenario.pmax[i];
        }
        PowerProfile(p)
    }

    pub fn validate(&self, scenario: &Scenario) -> Result<(), TopologyError> {
        if self.0.len() != scenario.num_ues() {
            return Err(TopologyError::LengthMismatch {
                field: "profile",
                got: self.0.len(),
                expected: scenario.num_ues(),
            });
        }
        for (i, &p) in self.0.iter().enumerate() {
            if !(p >= 0.0 && p <= scenario.pmax[i]) {
                return Err(TopologyError::BadPower {
                    ue: i,
                    value: p,
                    pmax: scenario.pmax[i],
                });
            }
        }
        Ok(())
    }
}

/// SINR of `ue` at its serving SBS.
pub fn sinr(scenario: &Scenario, gains: &GainMatrix, profile: &PowerProfile, ue: usize) -> f64 {
    let p = &profile.0;
    if p[ue] == 0.0 {
        return 0.0;
    }
    let sbs = scenario.serving[ue];
    let interference: f64 = p
        .iter()
        .enumerate()
        .filter(|&(k, &pk)| k != ue && pk > 0.0)
        .map(|(k, &pk)| gains.get(k, sbs) * pk)
        .sum();
    gains.get(ue, sbs) * p[ue] / (interference + scenario.noise[sbs])
}

/// `log2(1 + SINR)`.
pub fn throughput(scenario: &Scenario, gains: &GainMatrix, profile: &PowerProfile, ue: usize) -> f64 {
    sinr(scenario, gains, profile, ue).ln_1p() / std::f64::consts::LN_2
}

pub fn throughputs(scenario: &Scenario, gains: &GainMatrix, profile: &PowerProfile) -> Vec<f64> {
    (0..scenario.num_ues())
        .map(|i| throughput(scenario, gains, profile, i))
        .collect()
}
