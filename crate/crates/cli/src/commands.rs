//! Subcommand implementations. Each returns the artifacts it produced; the
//! caller writes them.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};

use sqvac::blochdyn::{axis_timescales, steady_state, DecayRates, Drive};
use sqvac::estimation::{
    estimate_decays, estimate_moments, fit_damped_sinusoid, reconstruct_wigner, Trace, TraceSet,
};
use sqvac::fmt_sig9;
use sqvac::polariton::{calibrate_base_rate, polariton_system, two_level_reduction};
use sqvac::protocols::{
    detuning_csv, detuning_sweep, detuning_trace_grid, driven_trajectory, gain_csv, gain_sweep, ramsey,
    simulate_trace_set, tomography_trajectory, trace_grid_csv, SweepWindow,
};
use sqvac::reservoir::{thermal_from_population, variances_from_moments, wigner, GridSpec, SqueezedReservoir};
use sqvac_validation::{reference, Setup};

use crate::config::{RunConfig, System};

/// One output file stem with its CSV and/or JSON body.
pub struct Artifact {
    pub stem: String,
    pub csv: Option<String>,
    pub json: Option<Value>,
}

impl Artifact {
    fn new(stem: impl Into<String>, csv: Option<String>, json: Option<Value>) -> Self {
        Self { stem: stem.into(), csv, json }
    }
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numerical { op: &'static str, msg: String },
    Io(String),
    AcceptanceFailed(usize),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical { .. } => 3,
            CliError::Io(_) | CliError::AcceptanceFailed(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Numerical { op, msg } => write!(f, "numerical failure in {op}: {msg}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::AcceptanceFailed(n) => write!(f, "{n} acceptance criteria failed"),
        }
    }
}

/// Tags a core error with the operation that raised it.
fn num<T>(op: &'static str, r: sqvac::Result<T>) -> Result<T, CliError> {
    r.map_err(|e| CliError::Numerical { op, msg: e.to_string() })
}

fn to_json<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("plain data serializes")
}

/// Effective two-level rates for the configured system.
pub fn decay_rates(cfg: &RunConfig) -> Result<DecayRates, CliError> {
    let res = &cfg.reservoir;
    let gamma_phi = if cfg.system.t_phi().is_finite() { 1.0 / cfg.system.t_phi() } else { 0.0 };
    match &cfg.system {
        System::Direct(d) => {
            Ok(num("decay rates", DecayRates::new(1.0 / d.t1_us, gamma_phi, res.n, res.m, res.delta_mhz))?)
        }
        System::Polariton(p) => {
            let ps = num("polariton diagonalization", polariton_system(&p.params()))?;
            let base = num("rate calibration", calibrate_base_rate(&ps, p.t1_us))?;
            let center = ps.qubit_frequency() + 1e-3 * res.delta_mhz;
            let r = num("reservoir", SqueezedReservoir::real(res.n, res.m, center, res.bandwidth_mhz))?;
            let red = num("two-level reduction", two_level_reduction(&ps, base, &r))?;
            Ok(num("decay rates", DecayRates::new(red.gamma, gamma_phi, red.n, red.m_abs, red.delta_mhz))?)
        }
    }
}

fn window(cfg: &RunConfig) -> SweepWindow {
    SweepWindow { t_start: 0.0, t_end: cfg.protocol.t_end_us, samples: cfg.protocol.samples }
}

fn thermal_floor(cfg: &RunConfig) -> Result<f64, CliError> {
    match (cfg.estimate.n_th, cfg.estimate.p_excited) {
        (Some(n), _) => Ok(n),
        (None, Some(p)) => thermal_from_population(p).map_err(|e| CliError::Config(format!("estimate.p_excited: {e}"))),
        (None, None) => Ok(0.0),
    }
}

pub fn polariton(cfg: &RunConfig) -> Result<Vec<Artifact>, CliError> {
    let System::Polariton(p) = &cfg.system else {
        return Err(CliError::Config("polariton: needs a [system.polariton] block".into()));
    };
    let ps = num("polariton diagonalization", polariton_system(&p.params()))?;
    let summary = ps.summary();
    let f_q = summary.qubit_frequency_ghz;
    let split = summary.polariton_splitting_mhz;
    println!("g -> - transition: {f_q:.6} GHz (reference {} GHz)", reference::QUBIT_GHZ);
    println!("polariton splitting: {split:.3} MHz (reference {} MHz)", reference::SPLITTING_MHZ);
    let mut csv = String::from("#schema=polariton/v1\nindex,label,energy_ghz,abs_a_from_ground\n");
    for (k, (label, e)) in summary.labels.iter().zip(&summary.energies_ghz).enumerate() {
        csv.push_str(&format!("{k},{label},{},{}\n", fmt_sig9(*e), fmt_sig9(summary.abs_a[0][k])));
    }
    let json = json!({
        "summary": to_json(&summary),
        "checks": {
            "qubit_frequency_ok": (f_q - reference::QUBIT_GHZ).abs() <= 0.015,
            "splitting_ok": (split - reference::SPLITTING_MHZ).abs() <= 10.0,
        },
    });
    Ok(vec![Artifact::new("polariton", Some(csv), Some(json))])
}

pub fn ramsey_panels(cfg: &RunConfig) -> Result<Vec<Artifact>, CliError> {
    let r = decay_rates(cfg)?;
    let times = num("sample grid", window(cfg).times())?;
    let w = cfg.protocol.omega_mod_mhz;
    let mut out = Vec::new();
    let mut fits = Vec::new();
    let mut fit_csv = String::from("#schema=ramsey-fits/v1\nphi,squeezing,t_us,t_std_err_us,phase\n");
    for (k, &phi) in cfg.protocol.phi.iter().enumerate() {
        for squeezing in [false, true] {
            let tr = num("ramsey", ramsey(&r, phi, w, &times, squeezing))?;
            let fit = num("ramsey fit", fit_damped_sinusoid(&tr.times, &tr.sz_values, w))?;
            let tag = if squeezing { "squeezed" } else { "vacuum" };
            if !squeezing {
                println!("phi = {phi:.4}: T2* = {:.4} us", fit.t);
            } else {
                println!("phi = {phi:.4}: squeezed T = {:.4} us", fit.t);
            }
            fit_csv.push_str(&format!(
                "{},{},{},{},{}\n",
                fmt_sig9(phi),
                squeezing,
                fmt_sig9(fit.t),
                fmt_sig9(fit.t_std_err),
                fmt_sig9(fit.phase)
            ));
            fits.push(json!({ "phi": phi, "squeezing": squeezing, "fit": to_json(&fit) }));
            out.push(Artifact::new(format!("ramsey_phi{k}_{tag}"), Some(tr.to_csv()), Some(to_json(&tr))));
        }
    }
    let ts = num("axis timescales", axis_timescales(&r))?;
    out.push(Artifact::new("ramsey_fits", Some(fit_csv), Some(json!({ "fits": fits, "closed_form": to_json(&ts) }))));
    Ok(out)
}

pub fn trajectory(cfg: &RunConfig) -> Result<Vec<Artifact>, CliError> {
    let r = decay_rates(cfg)?;
    let times = num("sample grid", window(cfg).times())?;
    let prep = (cfg.protocol.prep[0], cfg.protocol.prep[1]);
    let tr = num("tomography trajectory", tomography_trajectory(&r, prep, &times))?;
    let ss = num("steady state", steady_state(&r, None))?;
    println!("steady state <sz> = {:.4}", ss.sz);
    let mut out = vec![Artifact::new(
        "trajectory",
        Some(tr.to_csv()),
        Some(json!({ "trajectory": to_json(&tr), "steady_state": to_json(&ss) })),
    )];
    if cfg.protocol.rabi_khz > 0.0 {
        let drive = Drive::about_x(TAU * 1e-3 * cfg.protocol.rabi_khz);
        let dr = num("driven trajectory", driven_trajectory(&r, &drive, prep, &times))?;
        let dss = num("driven steady state", steady_state(&r, Some(&drive)))?;
        println!("driven steady state <sy> = {:.5}", dss.sy);
        out.push(Artifact::new(
            "trajectory_driven",
            Some(dr.to_csv()),
            Some(json!({ "trajectory": to_json(&dr), "steady_state": to_json(&dss), "rabi_khz": cfg.protocol.rabi_khz })),
        ));
    }
    Ok(out)
}

pub fn wigner_grid(cfg: &RunConfig) -> Result<Vec<Artifact>, CliError> {
    let v = num("quadrature variances", variances_from_moments(cfg.reservoir.n, cfg.reservoir.m))?;
    let p = &cfg.protocol;
    let grid = GridSpec::covering(&v, p.wigner_sigmas, p.wigner_points, p.wigner_points);
    let w = num("wigner", wigner(&v, &grid))?;
    println!("sigma_I^2 = {:.4}, sigma_Q^2 = {:.4}", v.sigma_i_sq, v.sigma_q_sq);
    let json = json!({ "variances": to_json(&v), "integral": w.integral(), "max": w.max_value() });
    Ok(vec![Artifact::new("wigner", Some(w.to_csv()), Some(json))])
}

pub fn sweep_detuning(cfg: &RunConfig) -> Result<Vec<Artifact>, CliError> {
    let r = decay_rates(cfg)?;
    let gm_mhz = r.gamma_m() / TAU;
    if gm_mhz <= 0.0 {
        return Err(CliError::Config("sweep-detuning: reservoir.m must be positive to set the detuning scale".into()));
    }
    let deltas: Vec<f64> = cfg.protocol.delta_multiples.iter().map(|k| k * gm_mhz).collect();
    let win = window(cfg);
    let times = num("sample grid", win.times())?;
    let w = cfg.protocol.omega_mod_mhz;
    let mut out = Vec::new();
    for (axis, phi) in [("x", FRAC_PI_2), ("y", PI)] {
        let pts = num("detuning sweep", detuning_sweep(&r, &deltas, phi, w, &win))?;
        let failed = pts.iter().filter(|p| p.fit.is_none()).count();
        if failed > 0 {
            eprintln!("warning: {failed} {axis}-axis fits failed; marked in the output");
        }
        let grid = num("detuning traces", detuning_trace_grid(&r, &deltas, phi, w, &times))?;
        out.push(Artifact::new(
            format!("detuning_{axis}"),
            Some(detuning_csv(&pts, phi)),
            Some(json!({ "phi": phi, "gamma_m_over_2pi_mhz": gm_mhz, "points": to_json(&pts) })),
        ));
        out.push(Artifact::new(format!("detuning_traces_{axis}"), Some(trace_grid_csv(&grid, phi)), None));
    }
    println!("swept {} detunings in units of gM/2pi = {:.4} MHz", deltas.len(), gm_mhz);
    Ok(out)
}

pub fn sweep_gain(cfg: &RunConfig) -> Result<Vec<Artifact>, CliError> {
    let eta = cfg.reservoir.eta;
    let rows = num("gain sweep", gain_sweep(&cfg.protocol.n_grid, eta, cfg.system.t1(), cfg.system.t_phi()))?;
    println!("{} gain points at eta = {eta}", rows.len());
    Ok(vec![Artifact::new("gain", Some(gain_csv(&rows, eta)), Some(json!({ "eta": eta, "rows": to_json(&rows) })))])
}

fn read_trace(path: &Path, label: &str) -> Result<Trace, CliError> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let (mut times, mut values) = (Vec::new(), Vec::new());
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let parse = |k: usize| -> Result<f64, CliError> {
            rec.get(k).and_then(|s| s.trim().parse().ok()).ok_or_else(|| {
                CliError::Config(format!("{}: row {} column {} is not a number", path.display(), row + 1, k + 1))
            })
        };
        times.push(parse(0)?);
        values.push(parse(1)?);
    }
    Ok(Trace { label: label.to_string(), times, values })
}

fn trace_csv(tr: &Trace) -> String {
    let mut s = format!("#schema=trace/v1 label={}\nt_us,value\n", tr.label);
    for (t, v) in tr.times.iter().zip(&tr.values) {
        s.push_str(&format!("{},{}\n", fmt_sig9(*t), fmt_sig9(*v)));
    }
    s
}

pub fn estimate(cfg: &RunConfig) -> Result<Vec<Artifact>, CliError> {
    let mut out = Vec::new();
    let set = match &cfg.estimate.traces {
        Some(f) => TraceSet {
            vacuum_ramsey: read_trace(&cfg.resolve(&f.vacuum_ramsey), "ramsey_vacuum")?,
            vacuum_relaxation: read_trace(&cfg.resolve(&f.vacuum_relaxation), "relaxation_vacuum")?,
            squeezed_x: read_trace(&cfg.resolve(&f.squeezed_x), "ramsey_x")?,
            squeezed_y: read_trace(&cfg.resolve(&f.squeezed_y), "ramsey_y")?,
            squeezed_relaxation: read_trace(&cfg.resolve(&f.squeezed_relaxation), "relaxation_squeezed")?,
            omega_mod_mhz: cfg.protocol.omega_mod_mhz,
        },
        None => {
            let r = decay_rates(cfg)?;
            let set = num("trace simulation", simulate_trace_set(&r, cfg.protocol.omega_mod_mhz, &window(cfg)))?;
            for tr in [&set.vacuum_ramsey, &set.vacuum_relaxation, &set.squeezed_x, &set.squeezed_y, &set.squeezed_relaxation] {
                out.push(Artifact::new(format!("estimate_trace_{}", tr.label), Some(trace_csv(tr)), None));
            }
            set
        }
    };
    let n_th = thermal_floor(cfg)?;
    let decays = num("decay fits", estimate_decays(&set))?;
    let t_phi = num("dephasing time", decays.t_phi())?;
    let (tx_tilde, ty_tilde) = num("dephasing subtraction", decays.radiative_transverse())?;
    let me = num("moment inversion", estimate_moments(&decays, n_th))?;
    println!("N = {:.4}, M = {:.4} (N_th = {n_th:.4}); uncorrected N = {:.4}, M = {:.4}", me.n, me.m, me.n_uncorrected, me.m_uncorrected);
    if !me.physical {
        eprintln!("warning: inferred moments violate M^2 <= N(N+1)");
    }
    let rows = [
        ("t1_us", decays.t1.value),
        ("t2_star_us", decays.t2_star.value),
        ("t_phi_us", t_phi),
        ("tx_us", decays.tx.value),
        ("ty_us", decays.ty.value),
        ("tz_us", decays.tz.value),
        ("tx_tilde_us", tx_tilde),
        ("ty_tilde_us", ty_tilde),
        ("n_th", n_th),
        ("t1_intrinsic_us", me.t1_intrinsic),
        ("n", me.n),
        ("m", me.m),
        ("n_uncorrected", me.n_uncorrected),
        ("m_uncorrected", me.m_uncorrected),
        ("eta", me.eta_inferred.unwrap_or(f64::NAN)),
    ];
    let mut csv = String::from("#schema=estimate/v1\nquantity,value\n");
    for (k, v) in rows {
        csv.push_str(&format!("{k},{}\n", fmt_sig9(v)));
    }
    let json = json!({
        "decays": to_json(&decays),
        "t_phi_us": if t_phi.is_finite() { json!(t_phi) } else { Value::Null },
        "tx_tilde_us": tx_tilde,
        "ty_tilde_us": ty_tilde,
        "moments": to_json(&me),
    });
    out.push(Artifact::new("estimate", Some(csv), Some(json)));
    if me.physical && me.n > 0.0 {
        let v = num("quadrature variances", variances_from_moments(me.n, me.m.abs()))?;
        let p = &cfg.protocol;
        let grid = GridSpec::covering(&v, p.wigner_sigmas, p.wigner_points, p.wigner_points);
        let w = num("wigner reconstruction", reconstruct_wigner(&me, &grid))?;
        out.push(Artifact::new("estimate_wigner", Some(w.to_csv()), None));
    }
    Ok(out)
}

pub fn setup(cfg: &RunConfig) -> Setup {
    let mut s = Setup {
        t1: cfg.system.t1(),
        t_phi: cfg.system.t_phi(),
        n: cfg.reservoir.n,
        m: cfg.reservoir.m,
        eta: cfg.reservoir.eta,
        bandwidth_mhz: cfg.reservoir.bandwidth_mhz,
        omega_mod_mhz: cfg.protocol.omega_mod_mhz,
        ..Setup::default()
    };
    if let System::Polariton(p) = &cfg.system {
        s.device = p.params();
    }
    if let Some(p) = cfg.estimate.p_excited {
        s.p_excited = p;
    } else if let Some(n) = cfg.estimate.n_th {
        s.p_excited = sqvac::reservoir::population_from_thermal(n);
    }
    s
}

pub fn validate(cfg: &RunConfig) -> Result<(Vec<Artifact>, usize), CliError> {
    let reports = sqvac_validation::all(&setup(cfg));
    let mut table = String::new();
    for r in &reports {
        table.push_str(&r.render());
    }
    let failed = reports.iter().filter(|r| !r.pass()).count();
    table.push_str(&format!("{} of {} criteria passed\n", reports.len() - failed, reports.len()));
    print!("{table}");
    let json = json!({ "criteria": to_json(&reports), "failed": failed });
    Ok((vec![Artifact::new("validation", None, Some(json))], failed))
}
