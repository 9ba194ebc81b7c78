//! Run configuration in a flat `key = value` grammar.
//!
//! * one assignment per line, `#` starts a comment,
//! * `[section]` lines group keys for readability and are otherwise ignored,
//! * numbers may be written as fractions (`1/3`) or `inf`,
//! * lists are comma separated,
//! * unknown and repeated keys are errors.
//!
//! Frequencies and rates are in units of the flat-vacuum rate `γ`.
//!
//! | key | default | meaning |
//! |-----|---------|---------|
//! | `scenario` | `nojump` | `nojump`, `ensemble`, `montecarlo`, `scan`, `oracle`, `branching` |
//! | `gamma` | 1 | flat-vacuum decay rate of `b → a` |
//! | `V_ab` | 1 | laser coupling |
//! | `C` / `C_pow23` | `C_pow23 = 1/3` | band-edge coupling, directly or as `C^{2/3}` |
//! | `band_index`, `band_radius`, `light_speed`, `dipole_moment`, `permittivity` | | microscopic coupling instead of `C` |
//! | `omega_b` | 0 | excited-state energy |
//! | `omega_e_minus_omega_b` | 0 | band edge relative to `ω_b` |
//! | `detuning` | 0 | `ω_L − ω_b` |
//! | `omega_c` | 0 | energy of `|c⟩` (informational) |
//! | `reservoir` | `band_edge` | `band_edge` or `flat` |
//! | `gamma_prime` | 0 | flat `b → c` rate when `reservoir = flat` |
//! | `window_halfwidth`, `contour_offset`, `grid_points`, `edge_refinement`, `asymptote_subtraction` | 200, 0, 65536, 8, true | inversion contour |
//! | `horizon`, `dt` | 30, 0.01 | no-jump time grid |
//! | `trajectory_horizon` | `horizon` | Monte Carlo population window |
//! | `photon_horizon` | inf | Monte Carlo photon-counting window |
//! | `n_traj`, `seed` | 10000, 0 | ensemble size and master seed |
//! | `output`, `format` | stdout, `csv` | destination and `csv` or `jsonl` |
//! | `scan_delta_min`, `scan_delta_max`, `scan_points`, `scan_V` | −3, 3, 61, `0.5, 3` | detuning scan |
//! | `branching_gamma_prime`, `branching_V` | `0, 0.5, 1, 2`, `0.5, 1, 3` | flat-vacuum table |
//! | `oracle_modes`, `oracle_bandwidth`, `oracle_horizon` | 2000, 100, 10 | discretised continuum |

use std::collections::HashMap;
use std::fmt::{self, Write as _};
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::inversion::ContourSpec;
use crate::resolvent::{ReservoirKind, SystemParams};
use crate::spectral::{BandModel, CouplingModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    NoJump,
    Ensemble,
    MonteCarlo,
    Scan,
    Oracle,
    Branching,
}

impl Scenario {
    pub const ALL: [Scenario; 6] = [
        Scenario::NoJump,
        Scenario::Ensemble,
        Scenario::MonteCarlo,
        Scenario::Scan,
        Scenario::Oracle,
        Scenario::Branching,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::NoJump => "nojump",
            Scenario::Ensemble => "ensemble",
            Scenario::MonteCarlo => "montecarlo",
            Scenario::Scan => "scan",
            Scenario::Oracle => "oracle",
            Scenario::Branching => "branching",
        }
    }
}

impl FromStr for Scenario {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| format!("unknown scenario `{s}`"))
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Jsonl,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(Format::Csv),
            "jsonl" | "json-lines" => Ok(Format::Jsonl),
            _ => Err(format!("unknown format `{s}` (expected csv or jsonl)")),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Csv => "csv",
            Format::Jsonl => "jsonl",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReservoirChoice {
    BandEdge,
    Flat,
}

impl fmt::Display for ReservoirChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReservoirChoice::BandEdge => "band_edge",
            ReservoirChoice::Flat => "flat",
        })
    }
}

/// Where the band-edge coupling constant comes from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CouplingSource {
    Direct(f64),
    Band {
        index: f64,
        radius: f64,
        light_speed: f64,
        dipole_moment: f64,
        permittivity: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub gamma: f64,
    pub laser_coupling: f64,
    pub coupling: CouplingSource,
    pub omega_b: f64,
    pub edge_offset: f64,
    pub detuning: f64,
    pub omega_c: f64,
    pub reservoir: ReservoirChoice,
    pub gamma_prime: f64,
    pub contour: ContourSpec,
    pub horizon: f64,
    pub dt: f64,
    pub trajectory_horizon: f64,
    pub photon_horizon: f64,
    pub n_traj: usize,
    pub seed: u64,
    /// Not echoed in output headers, so a run's bytes do not depend on
    /// where they are written.
    pub output: Option<PathBuf>,
    pub format: Format,
    pub scan_delta_min: f64,
    pub scan_delta_max: f64,
    pub scan_points: usize,
    pub scan_couplings: Vec<f64>,
    pub branching_rates: Vec<f64>,
    pub branching_couplings: Vec<f64>,
    pub oracle_modes: usize,
    pub oracle_bandwidth: f64,
    pub oracle_horizon: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        parse_config("").expect("defaults are valid")
    }
}

impl RunConfig {
    /// Band-edge coupling constant `C`.
    pub fn pbg_coupling(&self) -> Result<f64> {
        match self.coupling {
            CouplingSource::Direct(c) => Ok(c),
            CouplingSource::Band {
                index,
                radius,
                light_speed,
                dipole_moment,
                permittivity,
            } => {
                let band = BandModel::new(radius, index, light_speed)?;
                CouplingModel::Microscopic {
                    dipole_moment,
                    permittivity,
                }
                .effective_coupling(&band)
            }
        }
    }

    pub fn params(&self) -> Result<SystemParams> {
        Ok(SystemParams {
            gamma: self.gamma,
            laser_coupling: self.laser_coupling,
            pbg_coupling: self.pbg_coupling()?,
            omega_b: self.omega_b,
            omega_l: self.omega_b + self.detuning,
            omega_e: self.omega_b + self.edge_offset,
            omega_c: self.omega_c,
        })
    }

    pub fn reservoir_kind(&self) -> Result<ReservoirKind> {
        Ok(match self.reservoir {
            ReservoirChoice::BandEdge => self.params()?.band_edge(),
            ReservoirChoice::Flat => ReservoirKind::Flat {
                rate: self.gamma_prime,
            },
        })
    }

    pub fn scan_deltas(&self) -> Vec<f64> {
        if self.scan_points == 1 {
            return vec![self.scan_delta_min];
        }
        let step = (self.scan_delta_max - self.scan_delta_min) / (self.scan_points - 1) as f64;
        (0..self.scan_points)
            .map(|i| self.scan_delta_min + i as f64 * step)
            .collect()
    }

    /// The resolved configuration in the input grammar. Parsing it again
    /// gives back this configuration with `output` cleared.
    pub fn to_config_text(&self) -> String {
        let list = |v: &[f64]| v.iter().map(f64::to_string).collect::<Vec<_>>().join(", ");
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("scenario", self.scenario.to_string());
        kv("gamma", self.gamma.to_string());
        kv("V_ab", self.laser_coupling.to_string());
        match self.coupling {
            CouplingSource::Direct(c) => kv("C", c.to_string()),
            CouplingSource::Band {
                index,
                radius,
                light_speed,
                dipole_moment,
                permittivity,
            } => {
                kv("band_index", index.to_string());
                kv("band_radius", radius.to_string());
                kv("light_speed", light_speed.to_string());
                kv("dipole_moment", dipole_moment.to_string());
                kv("permittivity", permittivity.to_string());
            }
        }
        kv("omega_b", self.omega_b.to_string());
        kv("omega_e_minus_omega_b", self.edge_offset.to_string());
        kv("detuning", self.detuning.to_string());
        kv("omega_c", self.omega_c.to_string());
        kv("reservoir", self.reservoir.to_string());
        kv("gamma_prime", self.gamma_prime.to_string());
        kv(
            "window_halfwidth",
            self.contour.window_halfwidth.to_string(),
        );
        kv("contour_offset", self.contour.offset.to_string());
        kv("grid_points", self.contour.grid_points.to_string());
        kv("edge_refinement", self.contour.edge_refinement.to_string());
        kv(
            "asymptote_subtraction",
            self.contour.asymptote_subtraction.to_string(),
        );
        kv("horizon", self.horizon.to_string());
        kv("dt", self.dt.to_string());
        kv("trajectory_horizon", self.trajectory_horizon.to_string());
        kv("photon_horizon", self.photon_horizon.to_string());
        kv("n_traj", self.n_traj.to_string());
        kv("seed", self.seed.to_string());
        kv("format", self.format.to_string());
        kv("scan_delta_min", self.scan_delta_min.to_string());
        kv("scan_delta_max", self.scan_delta_max.to_string());
        kv("scan_points", self.scan_points.to_string());
        kv("scan_V", list(&self.scan_couplings));
        kv("branching_gamma_prime", list(&self.branching_rates));
        kv("branching_V", list(&self.branching_couplings));
        kv("oracle_modes", self.oracle_modes.to_string());
        kv("oracle_bandwidth", self.oracle_bandwidth.to_string());
        kv("oracle_horizon", self.oracle_horizon.to_string());
        s
    }
}

const KEYS: &[&str] = &[
    "scenario",
    "gamma",
    "V_ab",
    "C",
    "C_pow23",
    "band_index",
    "band_radius",
    "light_speed",
    "dipole_moment",
    "permittivity",
    "omega_b",
    "omega_e_minus_omega_b",
    "detuning",
    "omega_c",
    "reservoir",
    "gamma_prime",
    "window_halfwidth",
    "contour_offset",
    "grid_points",
    "edge_refinement",
    "asymptote_subtraction",
    "horizon",
    "dt",
    "trajectory_horizon",
    "photon_horizon",
    "n_traj",
    "seed",
    "output",
    "format",
    "scan_delta_min",
    "scan_delta_max",
    "scan_points",
    "scan_V",
    "branching_gamma_prime",
    "branching_V",
    "oracle_modes",
    "oracle_bandwidth",
    "oracle_horizon",
];

struct Entries<'a> {
    values: HashMap<&'a str, (usize, &'a str)>,
}

fn config_error(line: usize, key: &str, message: impl Into<String>) -> Error {
    Error::Config {
        line,
        key: key.to_string(),
        message: message.into(),
    }
}

fn parse_number(text: &str) -> Option<f64> {
    match text.split_once('/') {
        Some((num, den)) => {
            let (num, den): (f64, f64) = (num.trim().parse().ok()?, den.trim().parse().ok()?);
            (den != 0.0).then_some(num / den)
        }
        None => text.parse().ok().filter(|v: &f64| !v.is_nan()),
    }
}

impl<'a> Entries<'a> {
    fn line(&self, key: &str) -> usize {
        self.values.get(key).map_or(0, |(l, _)| *l)
    }

    fn has(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }

    fn raw(&self, key: &str) -> Option<(usize, &'a str)> {
        self.values.get(key).copied()
    }

    fn parsed<T>(
        &self,
        key: &str,
        default: T,
        what: &str,
        parse: impl Fn(&str) -> Option<T>,
    ) -> Result<T> {
        match self.raw(key) {
            None => Ok(default),
            Some((line, text)) => parse(text)
                .ok_or_else(|| config_error(line, key, format!("expected {what}, got `{text}`"))),
        }
    }

    fn number(&self, key: &str, default: f64) -> Result<f64> {
        self.parsed(key, default, "a number", parse_number)
    }

    fn count(&self, key: &str, default: usize) -> Result<usize> {
        self.parsed(key, default, "a non-negative integer", |t| t.parse().ok())
    }

    fn flag(&self, key: &str, default: bool) -> Result<bool> {
        self.parsed(key, default, "true or false", |t| t.parse().ok())
    }

    fn list(&self, key: &str, default: &[f64]) -> Result<Vec<f64>> {
        self.parsed(
            key,
            default.to_vec(),
            "a comma-separated list of numbers",
            |t| t.split(',').map(|x| parse_number(x.trim())).collect(),
        )
    }

    fn choice<T: FromStr<Err = String>>(&self, key: &str, default: T) -> Result<T> {
        match self.raw(key) {
            None => Ok(default),
            Some((line, text)) => text.parse().map_err(|m| config_error(line, key, m)),
        }
    }
}

fn tokenize(text: &str) -> Result<Entries<'_>> {
    let mut values = HashMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(section) = content.strip_prefix('[') {
            let name = section
                .strip_suffix(']')
                .ok_or_else(|| config_error(line, content, "unterminated section header"))?;
            if name.trim().is_empty() {
                return Err(config_error(line, content, "empty section name"));
            }
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| config_error(line, content, "expected `key = value`"))?;
        let key = key.trim();
        let value = value.trim();
        let value = value
            .strip_prefix('"')
            .and_then(|v| v.strip_suffix('"'))
            .unwrap_or(value);
        if !KEYS.contains(&key) {
            return Err(config_error(line, key, "unknown key"));
        }
        if value.is_empty() {
            return Err(config_error(line, key, "missing value"));
        }
        if let Some((first, _)) = values.insert(key, (line, value)) {
            return Err(config_error(
                line,
                key,
                format!("repeated key (first set on line {first})"),
            ));
        }
    }
    Ok(Entries { values })
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    let e = tokenize(text)?;

    let band_keys = [
        "band_index",
        "band_radius",
        "light_speed",
        "dipole_moment",
        "permittivity",
    ];
    let given: Vec<&str> = ["C", "C_pow23"]
        .into_iter()
        .filter(|k| e.has(k))
        .chain(band_keys.iter().copied().filter(|k| e.has(k)).take(1))
        .collect();
    if given.len() > 1 {
        let key = given[1];
        return Err(config_error(
            e.line(key),
            key,
            format!("the coupling is already set by `{}`", given[0]),
        ));
    }
    let coupling = if e.has("C") {
        CouplingSource::Direct(e.number("C", 0.0)?)
    } else if given.first().is_some_and(|k| band_keys.contains(k)) {
        for k in ["band_index", "dipole_moment", "permittivity"] {
            if !e.has(k) {
                return Err(config_error(
                    0,
                    k,
                    "required by the microscopic coupling block",
                ));
            }
        }
        CouplingSource::Band {
            index: e.number("band_index", 0.0)?,
            radius: e.number("band_radius", 1.0)?,
            light_speed: e.number("light_speed", 1.0)?,
            dipole_moment: e.number("dipole_moment", 0.0)?,
            permittivity: e.number("permittivity", 0.0)?,
        }
    } else {
        let pow23 = e.number("C_pow23", 1.0 / 3.0)?;
        if pow23 < 0.0 {
            return Err(config_error(e.line("C_pow23"), "C_pow23", "must be >= 0"));
        }
        CouplingSource::Direct(pow23.powf(1.5))
    };

    let reservoir = match e.raw("reservoir") {
        None | Some((_, "band_edge")) => ReservoirChoice::BandEdge,
        Some((_, "flat")) => ReservoirChoice::Flat,
        Some((line, other)) => {
            return Err(config_error(
                line,
                "reservoir",
                format!("expected band_edge or flat, got `{other}`"),
            ))
        }
    };

    let defaults = ContourSpec::default();
    let horizon = e.number("horizon", 30.0)?;
    let cfg = RunConfig {
        scenario: e.choice("scenario", Scenario::NoJump)?,
        gamma: e.number("gamma", 1.0)?,
        laser_coupling: e.number("V_ab", 1.0)?,
        coupling,
        omega_b: e.number("omega_b", 0.0)?,
        edge_offset: e.number("omega_e_minus_omega_b", 0.0)?,
        detuning: e.number("detuning", 0.0)?,
        omega_c: e.number("omega_c", 0.0)?,
        reservoir,
        gamma_prime: e.number("gamma_prime", 0.0)?,
        contour: ContourSpec {
            window_halfwidth: e.number("window_halfwidth", defaults.window_halfwidth)?,
            offset: e.number("contour_offset", defaults.offset)?,
            grid_points: e.count("grid_points", defaults.grid_points)?,
            edge_refinement: e.count("edge_refinement", defaults.edge_refinement)?,
            asymptote_subtraction: e
                .flag("asymptote_subtraction", defaults.asymptote_subtraction)?,
        },
        horizon,
        dt: e.number("dt", 0.01)?,
        trajectory_horizon: e.number("trajectory_horizon", horizon)?,
        photon_horizon: e.number("photon_horizon", f64::INFINITY)?,
        n_traj: e.count("n_traj", 10_000)?,
        seed: e.parsed("seed", 0, "a 64-bit unsigned integer", |t| t.parse().ok())?,
        output: e.raw("output").map(|(_, p)| PathBuf::from(p)),
        format: e.choice("format", Format::Csv)?,
        scan_delta_min: e.number("scan_delta_min", -3.0)?,
        scan_delta_max: e.number("scan_delta_max", 3.0)?,
        scan_points: e.count("scan_points", 61)?,
        scan_couplings: e.list("scan_V", &[0.5, 3.0])?,
        branching_rates: e.list("branching_gamma_prime", &[0.0, 0.5, 1.0, 2.0])?,
        branching_couplings: e.list("branching_V", &[0.5, 1.0, 3.0])?,
        oracle_modes: e.count("oracle_modes", 2000)?,
        oracle_bandwidth: e.number("oracle_bandwidth", 100.0)?,
        oracle_horizon: e.number("oracle_horizon", 10.0)?,
    };
    validate(&cfg, &e)?;
    Ok(cfg)
}

fn validate(cfg: &RunConfig, e: &Entries<'_>) -> Result<()> {
    let check = |ok: bool, key: &str, message: &str| -> Result<()> {
        if ok {
            Ok(())
        } else {
            Err(config_error(e.line(key), key, message))
        }
    };
    let finite = |v: f64| v.is_finite();
    check(
        finite(cfg.gamma) && cfg.gamma >= 0.0,
        "gamma",
        "gamma must be finite and >= 0",
    )?;
    check(
        finite(cfg.laser_coupling) && cfg.laser_coupling >= 0.0,
        "V_ab",
        "V_ab must be finite and >= 0",
    )?;
    if let CouplingSource::Direct(c) = cfg.coupling {
        check(finite(c) && c >= 0.0, "C", "C must be finite and >= 0")?;
    }
    for key in ["omega_b", "omega_e_minus_omega_b", "detuning", "omega_c"] {
        let v = match key {
            "omega_b" => cfg.omega_b,
            "omega_e_minus_omega_b" => cfg.edge_offset,
            "detuning" => cfg.detuning,
            _ => cfg.omega_c,
        };
        check(finite(v), key, "must be finite")?;
    }
    check(
        finite(cfg.gamma_prime) && cfg.gamma_prime >= 0.0,
        "gamma_prime",
        "gamma_prime must be finite and >= 0",
    )?;
    check(
        finite(cfg.contour.window_halfwidth) && cfg.contour.window_halfwidth > 0.0,
        "window_halfwidth",
        "window half-width must be > 0",
    )?;
    check(
        finite(cfg.contour.offset) && cfg.contour.offset >= 0.0,
        "contour_offset",
        "contour offset must be >= 0",
    )?;
    check(
        cfg.contour.grid_points >= 2,
        "grid_points",
        "need at least 2 grid points",
    )?;
    check(
        finite(cfg.horizon) && cfg.horizon > 0.0,
        "horizon",
        "horizon must be > 0",
    )?;
    check(finite(cfg.dt) && cfg.dt > 0.0, "dt", "dt must be > 0")?;
    check(
        cfg.dt <= cfg.horizon,
        "dt",
        "dt must not exceed the horizon",
    )?;
    check(
        cfg.trajectory_horizon > 0.0 && cfg.trajectory_horizon <= cfg.horizon,
        "trajectory_horizon",
        "trajectory horizon must lie in (0, horizon]",
    )?;
    check(
        cfg.photon_horizon > 0.0,
        "photon_horizon",
        "photon horizon must be > 0",
    )?;
    check(cfg.n_traj >= 1, "n_traj", "need at least one trajectory")?;
    check(
        finite(cfg.scan_delta_min)
            && finite(cfg.scan_delta_max)
            && cfg.scan_delta_min <= cfg.scan_delta_max,
        "scan_delta_max",
        "scan range must be finite with min <= max",
    )?;
    check(
        cfg.scan_points >= 1,
        "scan_points",
        "need at least one scan point",
    )?;
    check(
        !cfg.scan_couplings.is_empty() && cfg.scan_couplings.iter().all(|&v| finite(v) && v >= 0.0),
        "scan_V",
        "scan couplings must be finite and >= 0",
    )?;
    check(
        cfg.branching_rates.iter().all(|&v| finite(v) && v >= 0.0),
        "branching_gamma_prime",
        "branching rates must be finite and >= 0",
    )?;
    check(
        cfg.branching_couplings
            .iter()
            .all(|&v| finite(v) && v >= 0.0),
        "branching_V",
        "branching couplings must be finite and >= 0",
    )?;
    check(
        cfg.oracle_modes >= 100,
        "oracle_modes",
        "the oracle needs at least 100 modes",
    )?;
    check(
        finite(cfg.oracle_bandwidth) && cfg.oracle_bandwidth >= 50.0 * cfg.gamma,
        "oracle_bandwidth",
        "oracle bandwidth must be at least 50 gamma",
    )?;
    check(
        finite(cfg.oracle_horizon) && cfg.oracle_horizon > 0.0,
        "oracle_horizon",
        "oracle horizon must be > 0",
    )?;
    if let CouplingSource::Band { .. } = cfg.coupling {
        cfg.pbg_coupling()
            .map_err(|err| config_error(e.line("band_index"), "band_index", err.to_string()))?;
    }
    Ok(())
}
