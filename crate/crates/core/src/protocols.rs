//! Pulse-sequence experiments: Ramsey fringes, tomography trajectories,
//! detuning and gain sweeps.
//!
//! Pulses are instantaneous rotations about equatorial axes. A rotation by
//! `θ` about `n̂` maps `s → cos θ s + sin θ (n̂ × s) + (1 − cos θ)(n̂·s) n̂`.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::blochdyn::{axis_timescales, bloch_rhs, evolve_from, BlochState, DecayRates, Drive};
use crate::error::{invalid, Result};
use crate::estimation::{fit_exp, ExpFit, Trace, TraceSet};
use crate::fmt_sig9;
use crate::numerics::{integrate_ode, OdeOptions};
use crate::reservoir::eta_curve;

/// Rotation by `angle` about the equatorial axis `(cos azimuth, sin azimuth, 0)`.
pub fn apply_rotation(s: &BlochState, angle: f64, azimuth: f64) -> BlochState {
    let (nx, ny) = (azimuth.cos(), azimuth.sin());
    let (c, sn) = (angle.cos(), angle.sin());
    let cross = [ny * s.sz, -nx * s.sz, nx * s.sy - ny * s.sx];
    let dot = nx * s.sx + ny * s.sy;
    BlochState {
        sx: c * s.sx + sn * cross[0] + (1.0 - c) * dot * nx,
        sy: c * s.sy + sn * cross[1] + (1.0 - c) * dot * ny,
        sz: c * s.sz + sn * cross[2],
    }
}

/// Azimuth of the preparation axis `−x̂ cos φ + ŷ sin φ`.
pub fn prep_azimuth(phi: f64) -> f64 {
    PI - phi
}

/// Azimuth of the Ramsey analysis axis `−x̂ sin α − ŷ cos α`.
pub fn analysis_azimuth(alpha: f64) -> f64 {
    -FRAC_PI_2 - alpha
}

/// `|θ, φ⟩` reached from the ground state by a θ rotation about the
/// preparation axis; equals `(sin θ sin φ, sin θ cos φ, cos θ)`.
pub fn prep_state(theta: f64, phi: f64) -> BlochState {
    apply_rotation(&BlochState::GROUND, theta, prep_azimuth(phi))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Readout {
    Z,
    /// π/2 about −ŷ maps `sx` onto `sz`.
    XViaRotation,
    /// π/2 about +x̂ maps `sy` onto `sz`.
    YViaRotation,
}

/// `⟨σz⟩` after the readout rotation.
pub fn measure(s: &BlochState, readout: Readout) -> f64 {
    match readout {
        Readout::Z => s.sz,
        Readout::XViaRotation => apply_rotation(s, FRAC_PI_2, -FRAC_PI_2).sz,
        Readout::YViaRotation => apply_rotation(s, FRAC_PI_2, 0.0).sz,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pulse {
    pub angle: f64,
    pub azimuth: f64,
    /// µs
    pub time: f64,
}

/// Ideal pulses separated by free evolution, with squeezing switched on only
/// inside `squeezing_window`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseSequence {
    pulses: Vec<Pulse>,
    squeezing_window: Option<(f64, f64)>,
    readout: Readout,
}

impl PulseSequence {
    pub fn new(pulses: Vec<Pulse>, squeezing_window: Option<(f64, f64)>, readout: Readout) -> Result<Self> {
        if pulses.iter().any(|p| !(p.angle > 0.0 && p.angle <= TAU) || !p.azimuth.is_finite()) {
            return Err(invalid("pulse angles must lie in (0, 2π]"));
        }
        if pulses.iter().any(|p| !(p.time >= 0.0)) || pulses.windows(2).any(|w| w[1].time < w[0].time) {
            return Err(invalid("pulse times must be non-negative and nondecreasing"));
        }
        if let Some((on, off)) = squeezing_window {
            if !(on >= 0.0 && off >= on) {
                return Err(invalid("squeezing window must satisfy 0 <= on <= off"));
            }
        }
        Ok(Self { pulses, squeezing_window, readout })
    }

    pub fn pulses(&self) -> &[Pulse] {
        &self.pulses
    }

    /// State just after the last pulse, starting from `s0` at `t = 0`.
    pub fn final_state(&self, r: &DecayRates, s0: &BlochState) -> BlochState {
        let vac = r.vacuum();
        let mut s = *s0;
        let mut t = 0.0;
        for p in &self.pulses {
            s = self.free_evolution(r, &vac, s, t, p.time);
            s = apply_rotation(&s, p.angle, p.azimuth);
            t = p.time;
        }
        s
    }

    pub fn run(&self, r: &DecayRates, s0: &BlochState) -> f64 {
        measure(&self.final_state(r, s0), self.readout)
    }

    fn free_evolution(&self, r: &DecayRates, vac: &DecayRates, mut s: BlochState, from: f64, to: f64) -> BlochState {
        let mut cuts = vec![from, to];
        if let Some((on, off)) = self.squeezing_window {
            cuts.extend([on, off].into_iter().filter(|&c| c > from && c < to));
        }
        cuts.sort_by(f64::total_cmp);
        for w in cuts.windows(2) {
            let (a, b) = (w[0], w[1]);
            if b <= a {
                continue;
            }
            let mid = 0.5 * (a + b);
            let squeezed = self.squeezing_window.is_some_and(|(on, off)| mid > on && mid < off);
            s = evolve_from(if squeezed { r } else { vac }, &s, a, b - a);
        }
        s
    }
}

/// `⟨σz⟩(t)` of an angle-resolved Ramsey measurement.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RamseyTrace {
    pub phi: f64,
    pub omega_mod_mhz: f64,
    /// Extra azimuth of the analysis pulse; π/2 gives the quadrature trace.
    pub readout_phase: f64,
    pub times: Vec<f64>,
    pub sz_values: Vec<f64>,
    pub squeezing_on: bool,
}

impl RamseyTrace {
    pub fn to_csv(&self) -> String {
        let mut out = format!(
            "#schema=ramsey/v1 phi={} omega_mod_mhz={} readout_phase={} squeezing={}\nt_us,sz\n",
            fmt_sig9(self.phi),
            fmt_sig9(self.omega_mod_mhz),
            fmt_sig9(self.readout_phase),
            if self.squeezing_on { "on" } else { "off" }
        );
        for (t, v) in self.times.iter().zip(&self.sz_values) {
            out.push_str(&format!("{},{}\n", fmt_sig9(*t), fmt_sig9(*v)));
        }
        out
    }
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(invalid("sample times must not be empty"));
    }
    if times.iter().any(|t| !(*t >= 0.0) || !t.is_finite()) || times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid("sample times must be finite, non-negative and strictly increasing"));
    }
    Ok(())
}

/// Ramsey trace with an explicit analysis-pulse phase offset.
pub fn ramsey_with_phase(
    r: &DecayRates,
    phi: f64,
    omega_mod_mhz: f64,
    times: &[f64],
    squeezing_on: bool,
    readout_phase: f64,
) -> Result<RamseyTrace> {
    check_times(times)?;
    let s0 = BlochState::GROUND;
    let mut sz_values = Vec::with_capacity(times.len());
    for &t in times {
        let alpha = TAU * omega_mod_mhz * t + readout_phase;
        let mut pulses = vec![Pulse { angle: FRAC_PI_2, azimuth: prep_azimuth(phi), time: 0.0 }];
        pulses.push(Pulse { angle: FRAC_PI_2, azimuth: analysis_azimuth(alpha), time: t });
        let seq = PulseSequence::new(pulses, squeezing_on.then_some((0.0, t)), Readout::Z)?;
        sz_values.push(seq.run(r, &s0));
    }
    Ok(RamseyTrace { phi, omega_mod_mhz, readout_phase, times: times.to_vec(), sz_values, squeezing_on })
}

/// Prepares `|π/2, φ⟩`, evolves for each `t` (with or without squeezing),
/// then applies the modulated analysis pulse and reads `⟨σz⟩`.
pub fn ramsey(r: &DecayRates, phi: f64, omega_mod_mhz: f64, times: &[f64], squeezing_on: bool) -> Result<RamseyTrace> {
    ramsey_with_phase(r, phi, omega_mod_mhz, times, squeezing_on, 0.0)
}

/// Bloch vector sampled along free evolution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlochTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<BlochState>,
    pub prep: (f64, f64),
}

impl BlochTrajectory {
    pub fn to_csv(&self) -> String {
        let mut out = format!(
            "#schema=trajectory/v1 theta={} phi={}\nt_us,sx,sy,sz\n",
            fmt_sig9(self.prep.0),
            fmt_sig9(self.prep.1)
        );
        for (t, s) in self.times.iter().zip(&self.states) {
            out.push_str(&format!("{},{},{},{}\n", fmt_sig9(*t), fmt_sig9(s.sx), fmt_sig9(s.sy), fmt_sig9(s.sz)));
        }
        out
    }
}

/// Squeezed-vacuum evolution of `|θ, φ⟩` read out by ideal tomography.
pub fn tomography_trajectory(r: &DecayRates, prep: (f64, f64), times: &[f64]) -> Result<BlochTrajectory> {
    check_times(times)?;
    let s0 = prep_state(prep.0, prep.1);
    let states = times
        .iter()
        .map(|&t| {
            let s = evolve_from(r, &s0, 0.0, t);
            // Tomography: three settings, each a rotation followed by a z readout.
            BlochState::new(measure(&s, Readout::XViaRotation), measure(&s, Readout::YViaRotation), measure(&s, Readout::Z))
        })
        .collect();
    Ok(BlochTrajectory { times: times.to_vec(), states, prep })
}

/// Trajectory under a continuous resonant drive, integrated numerically.
pub fn driven_trajectory(r: &DecayRates, drive: &Drive, prep: (f64, f64), times: &[f64]) -> Result<BlochTrajectory> {
    check_times(times)?;
    let s0 = prep_state(prep.0, prep.1);
    let t_end = times[times.len() - 1];
    if t_end == 0.0 {
        return Ok(BlochTrajectory { times: times.to_vec(), states: vec![s0; times.len()], prep });
    }
    let traj = integrate_ode(
        |_, y, dy| {
            let d = bloch_rhs(&BlochState::new(y[0], y[1], y[2]), r, Some(drive));
            dy.copy_from_slice(&d.as_array());
        },
        &s0.as_array(),
        (0.0, t_end),
        times,
        &OdeOptions::with_tol(1e-10),
    )?;
    let states = traj.states.iter().map(|y| BlochState::new(y[0], y[1], y[2])).collect();
    Ok(BlochTrajectory { times: times.to_vec(), states, prep })
}

/// `⟨σz⟩(t)` after a π pulse from the ground state.
pub fn relaxation_trace(r: &DecayRates, times: &[f64], squeezing_on: bool) -> Result<Vec<f64>> {
    check_times(times)?;
    let rates = if squeezing_on { *r } else { r.vacuum() };
    let excited = prep_state(PI, 0.0);
    Ok(times.iter().map(|&t| evolve_from(&rates, &excited, 0.0, t).sz).collect())
}

/// Forward-simulates every trace the estimation pipeline consumes.
pub fn simulate_trace_set(r: &DecayRates, omega_mod_mhz: f64, window: &SweepWindow) -> Result<TraceSet> {
    let times = window.times()?;
    let trace = |label: &str, values: Vec<f64>| Trace { label: label.to_string(), times: times.clone(), values };
    Ok(TraceSet {
        vacuum_ramsey: trace("ramsey_vacuum", ramsey(r, FRAC_PI_2, omega_mod_mhz, &times, false)?.sz_values),
        vacuum_relaxation: trace("relaxation_vacuum", relaxation_trace(r, &times, false)?),
        squeezed_x: trace("ramsey_x", ramsey(r, FRAC_PI_2, omega_mod_mhz, &times, true)?.sz_values),
        squeezed_y: trace("ramsey_y", ramsey(r, PI, omega_mod_mhz, &times, true)?.sz_values),
        squeezed_relaxation: trace("relaxation_squeezed", relaxation_trace(r, &times, true)?),
        omega_mod_mhz,
    })
}

/// Uniform sampling window used for sweep fits.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepWindow {
    pub t_start: f64,
    pub t_end: f64,
    pub samples: usize,
}

impl Default for SweepWindow {
    fn default() -> Self {
        Self { t_start: 0.0, t_end: 5.0, samples: 201 }
    }
}

impl SweepWindow {
    pub fn times(&self) -> Result<Vec<f64>> {
        if self.samples < 2 || !(self.t_end > self.t_start) || !(self.t_start >= 0.0) {
            return Err(invalid("sweep window needs 0 <= t_start < t_end and at least 2 samples"));
        }
        let dt = (self.t_end - self.t_start) / (self.samples - 1) as f64;
        Ok((0..self.samples).map(|k| self.t_start + k as f64 * dt).collect())
    }
}

/// Envelope `|c̃(t)|` of the transverse coherence recovered from in-phase and
/// quadrature Ramsey traces.
///
/// With readout phases 0 and π/2 the two traces give `I + iQ = conj(c e^{iα})`
/// for the qubit-frame coherence `c`; rotating by `e^{−iΔt}` moves it into
/// the frame of the squeezing, where the envelope is read off.
pub fn coherence_envelope(r: &DecayRates, phi: f64, omega_mod_mhz: f64, times: &[f64]) -> Result<Vec<f64>> {
    let i_trace = ramsey_with_phase(r, phi, omega_mod_mhz, times, true, 0.0)?;
    let q_trace = ramsey_with_phase(r, phi, omega_mod_mhz, times, true, FRAC_PI_2)?;
    Ok(times
        .iter()
        .zip(i_trace.sz_values.iter().zip(&q_trace.sz_values))
        .map(|(&t, (&i, &q))| {
            let alpha = TAU * omega_mod_mhz * t;
            let c = C64::new(i, q).conj() * C64::from_polar(1.0, -alpha);
            (c * C64::from_polar(1.0, -r.delta_rad() * t)).norm()
        })
        .collect())
}

/// One point of a detuning sweep; failed fits keep their message.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetuningPoint {
    pub delta_mhz: f64,
    pub fit: Option<ExpFit>,
    pub error: Option<String>,
}

impl DetuningPoint {
    pub fn t_eff(&self) -> Option<f64> {
        self.fit.as_ref().map(|f| f.t)
    }
}

/// Effective decay constant versus detuning from single-exponential fits of
/// the coherence envelope (amplitude, rate and offset).
pub fn detuning_sweep(
    r_base: &DecayRates,
    deltas_mhz: &[f64],
    phi: f64,
    omega_mod_mhz: f64,
    window: &SweepWindow,
) -> Result<Vec<DetuningPoint>> {
    if deltas_mhz.is_empty() {
        return Err(invalid("detuning grid must not be empty"));
    }
    let times = window.times()?;
    Ok(deltas_mhz
        .iter()
        .map(|&d| {
            let r = r_base.with_delta(d);
            match coherence_envelope(&r, phi, omega_mod_mhz, &times).and_then(|env| fit_exp(&times, &env)) {
                Ok(fit) => DetuningPoint { delta_mhz: d, fit: Some(fit), error: None },
                Err(e) => DetuningPoint { delta_mhz: d, fit: None, error: Some(e.to_string()) },
            }
        })
        .collect())
}

pub fn detuning_csv(points: &[DetuningPoint], phi: f64) -> String {
    let mut out = format!("#schema=detuning/v1 phi={}\ndelta_mhz,t_eff_us,t_std_err_us,status\n", fmt_sig9(phi));
    for p in points {
        match &p.fit {
            Some(f) => out.push_str(&format!("{},{},{},ok\n", fmt_sig9(p.delta_mhz), fmt_sig9(f.t), fmt_sig9(f.t_std_err))),
            None => out.push_str(&format!("{},nan,nan,failed\n", fmt_sig9(p.delta_mhz))),
        }
    }
    out
}

/// Squeezed Ramsey traces over a detuning grid.
pub fn detuning_trace_grid(
    r_base: &DecayRates,
    deltas_mhz: &[f64],
    phi: f64,
    omega_mod_mhz: f64,
    times: &[f64],
) -> Result<Vec<(f64, RamseyTrace)>> {
    deltas_mhz
        .iter()
        .map(|&d| Ok((d, ramsey(&r_base.with_delta(d), phi, omega_mod_mhz, times, true)?)))
        .collect()
}

pub fn trace_grid_csv(grid: &[(f64, RamseyTrace)], phi: f64) -> String {
    let mut out = format!("#schema=detuning-traces/v1 phi={} rows=delta cols=t value=sz\ndelta_mhz\\t_us", fmt_sig9(phi));
    if let Some((_, first)) = grid.first() {
        for t in &first.times {
            out.push(',');
            out.push_str(&fmt_sig9(*t));
        }
    }
    out.push('\n');
    for (d, tr) in grid {
        out.push_str(&fmt_sig9(*d));
        for v in &tr.sz_values {
            out.push(',');
            out.push_str(&fmt_sig9(*v));
        }
        out.push('\n');
    }
    out
}

/// Timescales for an ideal source attenuated to photon number `n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GainRow {
    pub n: f64,
    pub m: f64,
    pub m_minus_n: f64,
    pub tx: f64,
    pub ty: f64,
    pub tz: f64,
    pub tx_tilde: f64,
    pub ty_tilde: f64,
}

pub fn gain_sweep(n_values: &[f64], eta: f64, t1: f64, t_phi: f64) -> Result<Vec<GainRow>> {
    if n_values.is_empty() {
        return Err(invalid("N grid must not be empty"));
    }
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(invalid(format!("eta must lie in (0, 1], got {eta}")));
    }
    n_values
        .iter()
        .map(|&n| {
            let gap = eta_curve(n, eta)?;
            let m = n + gap;
            let ts = axis_timescales(&DecayRates::from_times(t1, t_phi, n, m)?)?;
            Ok(GainRow { n, m, m_minus_n: gap, tx: ts.tx, ty: ts.ty, tz: ts.tz, tx_tilde: ts.tx_tilde, ty_tilde: ts.ty_tilde })
        })
        .collect()
}

pub fn gain_csv(rows: &[GainRow], eta: f64) -> String {
    let mut out = format!("#schema=gain/v1 eta={}\nn,m,m_minus_n,tx_us,ty_us,tz_us,tx_tilde_us,ty_tilde_us\n", fmt_sig9(eta));
    for r in rows {
        let vals = [r.n, r.m, r.m_minus_n, r.tx, r.ty, r.tz, r.tx_tilde, r.ty_tilde];
        out.push_str(&vals.iter().map(|v| fmt_sig9(*v)).collect::<Vec<_>>().join(","));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &BlochState, b: &BlochState, tol: f64) -> bool {
        a.distance(b) <= tol
    }

    #[test]
    fn pi_twice_is_identity() {
        let s = BlochState::new(0.3, -0.4, 0.5);
        for az in [0.0, 0.7, 2.0] {
            let back = apply_rotation(&apply_rotation(&s, PI, az), PI, az);
            assert!(close(&back, &s, 1e-15));
        }
    }

    #[test]
    fn right_handed_about_x() {
        let s = apply_rotation(&BlochState::GROUND, FRAC_PI_2, 0.0);
        assert!(close(&s, &BlochState::new(0.0, -1.0, 0.0), 1e-15));
    }

    #[test]
    fn preparation_matches_angles() {
        for (theta, phi) in [(FRAC_PI_2, FRAC_PI_2), (FRAC_PI_2, PI), (0.67 * PI, 0.83 * PI)] {
            assert!(close(&prep_state(theta, phi), &BlochState::from_angles(theta, phi), 1e-15));
        }
        assert!((prep_state(0.67 * PI, 0.83 * PI).sz - (-0.5090)).abs() < 1e-4);
        // φ = π/2 is +x̂ and φ = π is −ŷ.
        assert!(close(&prep_state(FRAC_PI_2, FRAC_PI_2), &BlochState::new(1.0, 0.0, 0.0), 1e-15));
        assert!(close(&prep_state(FRAC_PI_2, PI), &BlochState::new(0.0, -1.0, 0.0), 1e-15));
    }

    #[test]
    fn sequence_validation() {
        let p = |angle, time| Pulse { angle, azimuth: 0.0, time };
        assert!(PulseSequence::new(vec![p(0.0, 0.0)], None, Readout::Z).is_err());
        assert!(PulseSequence::new(vec![p(1.0, 1.0), p(1.0, 0.5)], None, Readout::Z).is_err());
        assert!(PulseSequence::new(vec![p(1.0, 0.0)], Some((2.0, 1.0)), Readout::Z).is_err());
        assert!(PulseSequence::new(vec![p(TAU, 0.0)], Some((0.0, 1.0)), Readout::Z).is_ok());
    }

    #[test]
    fn ramsey_without_squeezing_is_uniform_in_phi() {
        let r = DecayRates::from_times(0.65, 6.6, 0.88, 1.08).unwrap();
        let times: Vec<f64> = (0..201).map(|k| 0.025 * k as f64).collect();
        let t2 = 1.0 / (0.5 / 0.65 + 1.0 / 6.6);
        for phi in [0.0, FRAC_PI_2, PI, 1.3] {
            let tr = ramsey(&r, phi, 5.0, &times, false).unwrap();
            for (t, v) in tr.times.iter().zip(&tr.sz_values) {
                let expected = (-t / t2).exp() * (phi - TAU * 5.0 * t).sin();
                assert!((v - expected).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn squeezing_window_switches_moments() {
        let r = DecayRates::from_times(0.65, 6.6, 0.88, 1.08).unwrap();
        let s0 = prep_state(FRAC_PI_2, FRAC_PI_2);
        let full = PulseSequence::new(vec![Pulse { angle: TAU, azimuth: 0.0, time: 2.0 }], Some((0.0, 2.0)), Readout::Z)
            .unwrap()
            .final_state(&r, &s0);
        let half = PulseSequence::new(vec![Pulse { angle: TAU, azimuth: 0.0, time: 2.0 }], Some((0.0, 1.0)), Readout::Z)
            .unwrap()
            .final_state(&r, &s0);
        let ts = axis_timescales(&r).unwrap();
        let t2 = 1.0 / r.vacuum().rate_x();
        assert!((full.sx - (-2.0 / ts.tx).exp()).abs() < 1e-12);
        assert!((half.sx - (-1.0 / ts.tx - 1.0 / t2).exp()).abs() < 1e-12);
    }

    #[test]
    fn gain_examples() {
        let rows = gain_sweep(&[0.0, 0.88], 0.5, 0.65, 6.6).unwrap();
        let t2 = 1.0 / (0.5 / 0.65 + 1.0 / 6.6);
        assert!((rows[0].tx - t2).abs() < 1e-12 && (rows[0].ty - t2).abs() < 1e-12);
        assert!((rows[0].tz - 0.65).abs() < 1e-12);
        assert!((rows[1].m_minus_n - 0.222).abs() < 1e-3);
        assert!((rows[1].tx_tilde - 2.34).abs() < 0.01, "{}", rows[1].tx_tilde);
        let ideal = gain_sweep(&[0.5, 2.0], 1.0, 0.65, 6.6).unwrap();
        for row in ideal {
            assert!((row.m_minus_n - ((row.n * (row.n + 1.0)).sqrt() - row.n)).abs() < 1e-12);
        }
    }

    #[test]
    fn csv_has_schema_line() {
        let r = DecayRates::from_times(0.65, 6.6, 0.0, 0.0).unwrap();
        let tr = ramsey(&r, 0.0, 5.0, &[0.0, 0.1], false).unwrap();
        let csv = tr.to_csv();
        assert!(csv.starts_with("#schema=ramsey/v1"));
        assert_eq!(csv.lines().count(), 4);
    }
}
