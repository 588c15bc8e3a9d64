//! Run configuration, read from TOML.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use sqvac::polariton::TransmonCavityParams;

/// Bundled configuration with the measured device and reservoir constants.
pub const BUNDLED_CONF: &str = include_str!("../paper.conf");

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub system: Option<SystemBlock>,
    pub reservoir: Option<ReservoirBlock>,
    #[serde(default)]
    pub protocol: ProtocolBlock,
    #[serde(default)]
    pub estimate: EstimateBlock,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SystemBlock {
    pub direct: Option<DirectSystem>,
    pub polariton: Option<PolaritonSystemBlock>,
}

/// Two-level rates given directly.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct DirectSystem {
    pub t1_us: f64,
    /// Omit for no pure dephasing.
    pub t_phi_us: Option<f64>,
}

/// Rates derived from the transmon-cavity device; `t1_us` calibrates the
/// vacuum radiative rate of the qubit-like transition.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct PolaritonSystemBlock {
    pub e_c_ghz: f64,
    pub e_j_ghz: f64,
    pub omega_c_ghz: f64,
    pub g_ghz: f64,
    #[serde(default = "default_n_transmon")]
    pub n_transmon: usize,
    #[serde(default = "default_n_photon")]
    pub n_photon: usize,
    #[serde(default = "default_n_charge")]
    pub n_charge: usize,
    pub t1_us: f64,
    pub t_phi_us: Option<f64>,
}

fn default_n_transmon() -> usize {
    5
}

fn default_n_photon() -> usize {
    6
}

fn default_n_charge() -> usize {
    20
}

impl PolaritonSystemBlock {
    pub fn params(&self) -> TransmonCavityParams {
        TransmonCavityParams {
            e_c: self.e_c_ghz,
            e_j: self.e_j_ghz,
            omega_c: self.omega_c_ghz,
            g: self.g_ghz,
            n_transmon: self.n_transmon,
            n_photon: self.n_photon,
            n_charge: self.n_charge,
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ReservoirBlock {
    pub n: f64,
    pub m: f64,
    #[serde(default = "default_bandwidth")]
    pub bandwidth_mhz: f64,
    /// Squeezing center relative to the qubit line.
    #[serde(default)]
    pub delta_mhz: f64,
    #[serde(default = "default_eta")]
    pub eta: f64,
}

fn default_bandwidth() -> f64 {
    13.0
}

fn default_eta() -> f64 {
    1.0
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProtocolBlock {
    pub omega_mod_mhz: f64,
    /// Ramsey preparation azimuths, radians.
    pub phi: Vec<f64>,
    pub t_end_us: f64,
    pub samples: usize,
    /// Tomography preparation `(θ, φ)`, radians.
    pub prep: [f64; 2],
    /// Continuous drive for the trajectory, kHz; zero disables it.
    pub rabi_khz: f64,
    /// Detuning grid in units of `γ|M|/2π`.
    pub delta_multiples: Vec<f64>,
    pub n_grid: Vec<f64>,
    pub wigner_points: usize,
    pub wigner_sigmas: f64,
}

impl Default for ProtocolBlock {
    fn default() -> Self {
        Self {
            omega_mod_mhz: 5.0,
            phi: vec![std::f64::consts::FRAC_PI_2, std::f64::consts::PI],
            t_end_us: 5.0,
            samples: 201,
            prep: [0.67 * std::f64::consts::PI, 0.18 * std::f64::consts::PI],
            rabi_khz: 0.0,
            delta_multiples: vec![-10.0, -5.0, -3.0, -2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0, 3.0, 5.0, 10.0],
            n_grid: (0..=20).map(|k| 0.1 * k as f64).collect(),
            wigner_points: 101,
            wigner_sigmas: 4.0,
        }
    }
}

/// Inputs for the inverse pipeline. Without trace files the traces are
/// simulated from the configured system.
#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateBlock {
    pub n_th: Option<f64>,
    pub p_excited: Option<f64>,
    pub traces: Option<TraceFiles>,
}

/// CSV files with a time column and a value column; `#` lines are skipped.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct TraceFiles {
    pub vacuum_ramsey: PathBuf,
    pub vacuum_relaxation: PathBuf,
    pub squeezed_x: PathBuf,
    pub squeezed_y: PathBuf,
    pub squeezed_relaxation: PathBuf,
}

#[derive(Clone, Debug)]
pub enum System {
    Direct(DirectSystem),
    Polariton(PolaritonSystemBlock),
}

impl System {
    pub fn t1(&self) -> f64 {
        match self {
            System::Direct(d) => d.t1_us,
            System::Polariton(p) => p.t1_us,
        }
    }

    pub fn t_phi(&self) -> f64 {
        match self {
            System::Direct(d) => d.t_phi_us,
            System::Polariton(p) => p.t_phi_us,
        }
        .unwrap_or(f64::INFINITY)
    }
}

/// Validated configuration.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub system: System,
    pub reservoir: ReservoirBlock,
    pub protocol: ProtocolBlock,
    pub estimate: EstimateBlock,
    /// Directory relative trace paths are resolved against.
    pub base_dir: PathBuf,
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

fn field(name: &str, msg: impl std::fmt::Display) -> ConfigError {
    ConfigError(format!("{name}: {msg}"))
}

fn positive(name: &str, v: f64) -> Result<(), ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(field(name, format!("must be positive and finite, got {v}")))
    }
}

fn non_empty<T>(name: &str, v: &[T]) -> Result<(), ConfigError> {
    if v.is_empty() {
        Err(field(name, "grid must not be empty"))
    } else {
        Ok(())
    }
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, base)
    }

    pub fn bundled() -> Self {
        Self::parse(BUNDLED_CONF, PathBuf::from(".")).expect("bundled config is valid")
    }

    pub fn parse(text: &str, base_dir: PathBuf) -> Result<Self, ConfigError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError(format!("parse error: {e}")))?;
        let system = match raw.system {
            Some(SystemBlock { direct: Some(d), polariton: None }) => System::Direct(d),
            Some(SystemBlock { direct: None, polariton: Some(p) }) => System::Polariton(p),
            Some(SystemBlock { direct: Some(_), polariton: Some(_) }) => {
                return Err(ConfigError("system: give only one of [system.direct] or [system.polariton]".into()))
            }
            _ => {
                return Err(ConfigError(
                    "missing system block: add exactly one of [system.direct] or [system.polariton]".into(),
                ))
            }
        };
        let reservoir = raw.reservoir.ok_or_else(|| ConfigError("missing [reservoir] block".into()))?;
        let cfg = RunConfig { system, reservoir, protocol: raw.protocol, estimate: raw.estimate, base_dir };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        match &self.system {
            System::Direct(d) => positive("system.direct.t1_us", d.t1_us)?,
            System::Polariton(p) => {
                positive("system.polariton.t1_us", p.t1_us)?;
                p.params().validate().map_err(|e| field("system.polariton", e))?;
            }
        }
        let t_phi = self.system.t_phi();
        if !(t_phi > 0.0) {
            return Err(field("system.t_phi_us", format!("must be positive, got {t_phi}")));
        }
        let r = &self.reservoir;
        if !(r.n >= 0.0) {
            return Err(field("reservoir.n", format!("must be non-negative, got {}", r.n)));
        }
        if !(r.m >= 0.0) {
            return Err(field("reservoir.m", format!("must be non-negative, got {}", r.m)));
        }
        positive("reservoir.bandwidth_mhz", r.bandwidth_mhz)?;
        if !(r.eta > 0.0 && r.eta <= 1.0) {
            return Err(field("reservoir.eta", format!("must lie in (0, 1], got {}", r.eta)));
        }
        if !r.delta_mhz.is_finite() {
            return Err(field("reservoir.delta_mhz", "must be finite"));
        }
        let p = &self.protocol;
        positive("protocol.omega_mod_mhz", p.omega_mod_mhz)?;
        positive("protocol.t_end_us", p.t_end_us)?;
        if p.samples < 8 {
            return Err(field("protocol.samples", format!("need at least 8, got {}", p.samples)));
        }
        non_empty("protocol.phi", &p.phi)?;
        non_empty("protocol.delta_multiples", &p.delta_multiples)?;
        non_empty("protocol.n_grid", &p.n_grid)?;
        if p.wigner_points < 2 {
            return Err(field("protocol.wigner_points", "need at least 2"));
        }
        positive("protocol.wigner_sigmas", p.wigner_sigmas)?;
        if !(p.rabi_khz >= 0.0) {
            return Err(field("protocol.rabi_khz", "must be non-negative"));
        }
        if let (Some(_), Some(_)) = (self.estimate.n_th, self.estimate.p_excited) {
            return Err(ConfigError("estimate: give only one of n_th or p_excited".into()));
        }
        Ok(())
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }
}
