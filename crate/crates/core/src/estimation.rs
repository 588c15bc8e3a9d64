//! Inverse problem: decay constants from traces, then reservoir moments.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::numerics::{fit_least_squares, solve_spd, FitOptions, FitResult};
use crate::reservoir::{variances_from_moments, wigner, GridSpec, WignerGrid};

/// Minimum number of samples accepted by the trace fitters.
pub const MIN_SAMPLES: usize = 8;

/// Value with a linearized standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_err: f64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Self { value, std_err: 0.0 }
    }
}

/// `a·e^{−t/T} + c`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpFit {
    pub amplitude: f64,
    /// Decay time in µs; infinite when the trace does not decay.
    pub t: f64,
    pub offset: f64,
    pub t_std_err: f64,
    pub no_decay: bool,
    /// The samples span less than one fitted decay time.
    pub short_window: bool,
    pub residual_norm: f64,
}

/// `A·e^{−t/T}·sin(φ − ωt) + c` with `ω` fixed by the modulation frequency.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SinusoidFit {
    pub amplitude: f64,
    pub t: f64,
    /// Phase in `[0, 2π)`.
    pub phase: f64,
    pub offset: f64,
    pub t_std_err: f64,
    pub short_window: bool,
    pub residual_norm: f64,
}

fn check_trace(t: &[f64], y: &[f64]) -> Result<()> {
    if t.len() != y.len() {
        return Err(invalid("times and values differ in length"));
    }
    if t.len() < MIN_SAMPLES {
        return Err(Error::DegenerateFit(format!("need at least {MIN_SAMPLES} samples, got {}", t.len())));
    }
    if t.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid("times must be strictly increasing"));
    }
    if y.iter().chain(t).any(|v| !v.is_finite()) {
        return Err(invalid("trace contains non-finite values"));
    }
    Ok(())
}

fn exp_model(t: f64, p: &[f64]) -> f64 {
    p[0] * (-p[1] * t).exp() + p[2]
}

/// Fits a single exponential with offset.
///
/// The rate is initialized from a log-linear regression of `|y − y_last|`;
/// the fit itself runs in the rate parameterization so slow decays stay
/// well-conditioned.
pub fn fit_exp(t: &[f64], y: &[f64]) -> Result<ExpFit> {
    check_trace(t, y)?;
    let span = t[t.len() - 1] - t[0];
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let spread = y.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max);
    if spread <= 1e-12 * mean.abs().max(1.0) {
        return Ok(ExpFit {
            amplitude: 0.0,
            t: f64::INFINITY,
            offset: mean,
            t_std_err: 0.0,
            no_decay: true,
            short_window: false,
            residual_norm: 0.0,
        });
    }

    let t0 = t[0];
    let last = y[y.len() - 1];
    let floor = 1e-3 * spread;
    let (mut sx, mut sy, mut sxx, mut sxy, mut cnt) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (&ti, &yi) in t.iter().zip(y) {
        let d = (yi - last).abs();
        if d > floor {
            let x = ti - t0;
            let l = d.ln();
            sx += x;
            sy += l;
            sxx += x * x;
            sxy += x * l;
            cnt += 1.0;
        }
    }
    let denom = cnt * sxx - sx * sx;
    let slope = if cnt >= 2.0 && denom > 0.0 { (cnt * sxy - sx * sy) / denom } else { f64::NAN };
    let k0 = if slope.is_finite() && slope < 0.0 { -slope } else { 1.0 / span };
    let guess = [y[0] - last, k0, last];

    // Fit in shifted time so the amplitude refers to the first sample.
    let ts: Vec<f64> = t.iter().map(|v| v - t0).collect();
    let fit = fit_least_squares(exp_model, &ts, y, &guess, &FitOptions::default())?;
    let (a, k, c) = (fit.params[0], fit.params[1], fit.params[2]);
    if !(k > 0.0) {
        return Err(Error::DegenerateFit(format!("fitted rate {k:e} does not describe a decay")));
    }
    let k_err = std_err(&fit, 1);
    let tau = 1.0 / k;
    Ok(ExpFit {
        amplitude: a * (k * t0).exp(),
        t: tau,
        offset: c,
        t_std_err: k_err * tau * tau,
        no_decay: false,
        short_window: span < tau,
        residual_norm: fit.residual_norm,
    })
}

fn std_err(fit: &FitResult, i: usize) -> f64 {
    fit.std_errors().map_or(f64::NAN, |e| e[i])
}

fn sinusoid_model(omega: f64) -> impl Fn(f64, &[f64]) -> f64 {
    move |t, p| p[0] * (-p[1] * t).exp() * (p[2] - omega * t).sin() + p[3]
}

/// Linear least squares for `(A, φ, c)` at a fixed decay time.
fn linear_sinusoid(t: &[f64], y: &[f64], omega: f64, tau: f64) -> Option<([f64; 3], f64)> {
    let basis = |ti: f64| {
        let e = (-ti / tau).exp();
        [e * (omega * ti).cos(), e * (omega * ti).sin(), 1.0]
    };
    let mut ata = [0.0; 9];
    let mut atb = [0.0; 3];
    for (&ti, &yi) in t.iter().zip(y) {
        let b = basis(ti);
        for i in 0..3 {
            atb[i] += b[i] * yi;
            for j in 0..3 {
                ata[i * 3 + j] += b[i] * b[j];
            }
        }
    }
    let x = solve_spd(&ata, &atb)?;
    let res: f64 = t
        .iter()
        .zip(y)
        .map(|(&ti, &yi)| {
            let b = basis(ti);
            (yi - b[0] * x[0] - b[1] * x[1] - x[2]).powi(2)
        })
        .sum();
    // sin(φ − ωt) = sin φ cos ωt − cos φ sin ωt.
    let amp = x[0].hypot(x[1]);
    let phase = x[0].atan2(-x[1]);
    Some(([amp, phase, x[2]], res))
}

/// Fits a damped sinusoid at the known modulation frequency.
///
/// Initialization scans a geometric grid of decay times and solves the
/// remaining parameters linearly at each.
pub fn fit_damped_sinusoid(t: &[f64], y: &[f64], omega_mod_mhz: f64) -> Result<SinusoidFit> {
    check_trace(t, y)?;
    if !(omega_mod_mhz > 0.0 && omega_mod_mhz.is_finite()) {
        return Err(invalid("modulation frequency must be positive"));
    }
    let omega = TAU * omega_mod_mhz;
    let t0 = t[0];
    let ts: Vec<f64> = t.iter().map(|v| v - t0).collect();
    let span = ts[ts.len() - 1];

    let mut best: Option<([f64; 3], f64, f64)> = None;
    for k in 0..=60 {
        let tau = span / 50.0 * (500.0f64).powf(k as f64 / 60.0);
        if let Some((p, res)) = linear_sinusoid(&ts, y, omega, tau) {
            if best.is_none_or(|b| res < b.1) {
                best = Some((p, res, tau));
            }
        }
    }
    let (lin, _, tau0) = best.ok_or_else(|| Error::DegenerateFit("no initial sinusoid found".into()))?;
    if lin[0] <= 1e-12 {
        return Err(Error::DegenerateFit("trace has no oscillating component".into()));
    }
    let guess = [lin[0], 1.0 / tau0, lin[1], lin[2]];
    let fit = fit_least_squares(sinusoid_model(omega), &ts, y, &guess, &FitOptions::default())?;
    let (mut a, k, mut phase, c) = (fit.params[0], fit.params[1], fit.params[2], fit.params[3]);
    if !(k > 0.0) {
        return Err(Error::DegenerateFit(format!("fitted rate {k:e} does not describe a decay")));
    }
    if a < 0.0 {
        a = -a;
        phase += PI;
    }
    // Refer amplitude and phase back to the original time origin.
    a *= (k * t0).exp();
    phase = (phase + omega * t0).rem_euclid(TAU);
    let tau = 1.0 / k;
    Ok(SinusoidFit {
        amplitude: a,
        t: tau,
        phase,
        offset: c,
        t_std_err: std_err(&fit, 1) * tau * tau,
        short_window: span < tau,
        residual_norm: fit.residual_norm,
    })
}

/// `1/T̃ = 1/T_measured − 1/T_φ`; an infinite `T_φ` is the identity.
pub fn subtract_dephasing(t_measured: f64, t_phi: f64) -> Result<f64> {
    if !(t_measured > 0.0) || !(t_phi > 0.0) {
        return Err(invalid("decay times must be positive"));
    }
    if t_phi.is_infinite() {
        return Ok(t_measured);
    }
    let rate = 1.0 / t_measured - 1.0 / t_phi;
    if !(rate > 0.0) {
        return Err(Error::NonPositiveRate { measured: t_measured, t_phi });
    }
    Ok(1.0 / rate)
}

/// `1/T = 1/T̃ + 1/T_φ`.
pub fn add_dephasing(t_tilde: f64, t_phi: f64) -> Result<f64> {
    if !(t_tilde > 0.0) || !(t_phi > 0.0) {
        return Err(invalid("decay times must be positive"));
    }
    Ok(1.0 / (1.0 / t_tilde + 1.0 / t_phi))
}

/// Pure-dephasing time from `1/T_φ = 1/T2* − 1/(2T1)`.
pub fn dephasing_time(t2_star: f64, t1: f64) -> Result<f64> {
    if !(t2_star > 0.0 && t1 > 0.0) {
        return Err(invalid("decay times must be positive"));
    }
    let rate = 1.0 / t2_star - 0.5 / t1;
    // Fitted times at the vacuum limit can overshoot 2T1 by fit noise.
    if rate < -1e-6 / t2_star {
        return Err(Error::InconsistentInputs(format!("T2* = {t2_star} exceeds 2T1 = {}", 2.0 * t1)));
    }
    Ok(if rate <= 0.0 { f64::INFINITY } else { 1.0 / rate })
}

/// A sampled expectation value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub label: String,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

/// Traces needed to infer the reservoir moments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceSet {
    /// Ramsey fringes without squeezing (gives T2*).
    pub vacuum_ramsey: Trace,
    /// `⟨σz⟩` relaxing from the excited state without squeezing (gives T1).
    pub vacuum_relaxation: Trace,
    /// Squeezed Ramsey fringes prepared along +x̂ (gives Tx).
    pub squeezed_x: Trace,
    /// Squeezed Ramsey fringes prepared along −ŷ (gives Ty).
    pub squeezed_y: Trace,
    /// Squeezed `⟨σz⟩` relaxation (gives Tz).
    pub squeezed_relaxation: Trace,
    pub omega_mod_mhz: f64,
}

/// Measured decay constants.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayEstimate {
    pub tx: Estimate,
    pub ty: Estimate,
    pub tz: Estimate,
    pub t2_star: Estimate,
    pub t1: Estimate,
    pub sources: Vec<String>,
}

impl DecayEstimate {
    /// `T_φ` implied by `T2*` and `T1`.
    pub fn t_phi(&self) -> Result<f64> {
        dephasing_time(self.t2_star.value, self.t1.value)
    }

    /// `(T̃x, T̃y)` after removing pure dephasing.
    pub fn radiative_transverse(&self) -> Result<(f64, f64)> {
        let t_phi = self.t_phi()?;
        Ok((subtract_dephasing(self.tx.value, t_phi)?, subtract_dephasing(self.ty.value, t_phi)?))
    }
}

/// Fits every trace of the set.
pub fn estimate_decays(set: &TraceSet) -> Result<DecayEstimate> {
    let sinus = |tr: &Trace| {
        fit_damped_sinusoid(&tr.times, &tr.values, set.omega_mod_mhz)
            .map(|f| Estimate { value: f.t, std_err: f.t_std_err })
            .map_err(|e| with_label(e, &tr.label))
    };
    let expo = |tr: &Trace| {
        fit_exp(&tr.times, &tr.values)
            .map(|f| Estimate { value: f.t, std_err: f.t_std_err })
            .map_err(|e| with_label(e, &tr.label))
    };
    Ok(DecayEstimate {
        tx: sinus(&set.squeezed_x)?,
        ty: sinus(&set.squeezed_y)?,
        tz: expo(&set.squeezed_relaxation)?,
        t2_star: sinus(&set.vacuum_ramsey)?,
        t1: expo(&set.vacuum_relaxation)?,
        sources: [&set.squeezed_x, &set.squeezed_y, &set.squeezed_relaxation, &set.vacuum_ramsey, &set.vacuum_relaxation]
            .iter()
            .map(|t| t.label.clone())
            .collect(),
    })
}

fn with_label(e: Error, label: &str) -> Error {
    match e {
        Error::DegenerateFit(m) => Error::DegenerateFit(format!("{label}: {m}")),
        Error::InvalidInput(m) => Error::InvalidInput(format!("{label}: {m}")),
        other => other,
    }
}

/// `(N, M)` from `Tz` and the dephasing-corrected `T̃x`.
pub fn estimate_moments(d: &DecayEstimate, n_th: f64) -> Result<MomentEstimate> {
    let (tx_tilde, _) = d.radiative_transverse()?;
    moments_from_decays(d.t1.value, d.tz.value, tx_tilde, n_th)
}

/// Reservoir moments inferred from decay constants.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub n: f64,
    pub m: f64,
    pub n_th: f64,
    /// `T1·(2N_th + 1)`.
    pub t1_intrinsic: f64,
    /// Moments with no thermal correction applied.
    pub n_uncorrected: f64,
    pub m_uncorrected: f64,
    pub eta_inferred: Option<f64>,
    /// `|M|² ≤ N(N+1)` holds for the corrected moments.
    pub physical: bool,
}

/// Inverts `Tz = T1/(2N+1)` and `T̃x = T1/(N − M + ½)`.
///
/// Thermal photons shorten the measured `T1` by `1/(2N_th + 1)` and add to
/// the photon number seen by the qubit; both are undone here.
pub fn moments_from_decays(t1: f64, tz: f64, tx_tilde: f64, n_th: f64) -> Result<MomentEstimate> {
    if !(t1 > 0.0 && tz > 0.0 && tx_tilde > 0.0) {
        return Err(invalid("T1, Tz and T̃x must be positive"));
    }
    if !(n_th >= 0.0) {
        return Err(invalid("N_th must be non-negative"));
    }
    let invert = |t1_int: f64| {
        let n_tot = 0.5 * (t1_int / tz - 1.0);
        (n_tot, n_tot + 0.5 - t1_int / tx_tilde)
    };
    let t1_int = t1 * (2.0 * n_th + 1.0);
    let (n_tot, m) = invert(t1_int);
    let n = n_tot - n_th;
    if n < -1e-9 {
        return Err(Error::InconsistentInputs(format!(
            "inversion gives N = {n:.6} < 0 (Tz = {tz} us is longer than the thermal floor allows)"
        )));
    }
    let n = n.max(0.0);
    let (n_unc, m_unc) = invert(t1);
    let eta_inferred = (n > 0.0 && m > n).then(|| infer_eta(n, m).ok()).flatten();
    Ok(MomentEstimate {
        n,
        m,
        n_th,
        t1_intrinsic: t1_int,
        n_uncorrected: n_unc,
        m_uncorrected: m_unc,
        eta_inferred,
        physical: m * m <= n * (n + 1.0) + 1e-12,
    })
}

/// Solves `M = √(N² + ηN)` for the efficiency `η = (M² − N²)/N`.
pub fn infer_eta(n: f64, m: f64) -> Result<f64> {
    if !(n >= 0.0) {
        return Err(invalid("N must be non-negative"));
    }
    if n == 0.0 {
        return Err(invalid("efficiency is undefined at N = 0"));
    }
    if !(m > n) {
        return Err(Error::NotSqueezed { n, m });
    }
    Ok((m * m - n * n) / n)
}

/// Gaussian Wigner distribution of the inferred reservoir.
pub fn reconstruct_wigner(me: &MomentEstimate, grid: &GridSpec) -> Result<WignerGrid> {
    let v = variances_from_moments(me.n, me.m.abs())?;
    wigner(&v, grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize, dt: f64) -> Vec<f64> {
        (0..n).map(|k| k as f64 * dt).collect()
    }

    #[test]
    fn exponential_round_trip() {
        let t = grid(101, 0.05);
        let y: Vec<f64> = t.iter().map(|&x| (-x / 1.086).exp()).collect();
        let f = fit_exp(&t, &y).unwrap();
        assert!((f.t - 1.086).abs() < 1e-6 * 1.086, "{}", f.t);
        assert!((f.amplitude - 1.0).abs() < 1e-6);
        assert!(f.offset.abs() < 1e-6);
        assert!(!f.short_window);
    }

    #[test]
    fn exponential_with_shifted_origin() {
        let t: Vec<f64> = (0..60).map(|k| 1.0 + 0.05 * k as f64).collect();
        let y: Vec<f64> = t.iter().map(|&x| 0.7 * (-x / 0.8).exp() + 0.2).collect();
        let f = fit_exp(&t, &y).unwrap();
        assert!((f.t - 0.8).abs() < 1e-6);
        assert!((f.amplitude - 0.7).abs() < 1e-6);
        assert!((f.offset - 0.2).abs() < 1e-6);
    }

    #[test]
    fn constant_trace_has_no_decay() {
        let t = grid(20, 0.1);
        let f = fit_exp(&t, &[0.3; 20]).unwrap();
        assert!(f.no_decay && f.t.is_infinite());
        assert!((f.offset - 0.3).abs() < 1e-15);
    }

    #[test]
    fn too_few_samples() {
        let t = grid(5, 0.1);
        assert!(matches!(fit_exp(&t, &[1.0, 0.9, 0.8, 0.7, 0.6]), Err(Error::DegenerateFit(_))));
        assert!(fit_exp(&[0.0, 0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0], &[1.0; 8]).is_err());
    }

    #[test]
    fn sinusoid_round_trip() {
        let t = grid(201, 0.025);
        let w = TAU * 5.0;
        let y: Vec<f64> = t.iter().map(|&x| 0.9 * (-x / 1.086).exp() * (1.2 - w * x).sin() + 0.05).collect();
        let f = fit_damped_sinusoid(&t, &y, 5.0).unwrap();
        assert!((f.t - 1.086).abs() < 1e-6, "{}", f.t);
        assert!((f.amplitude - 0.9).abs() < 1e-6);
        assert!((f.phase - 1.2).abs() < 1e-6);
        assert!((f.offset - 0.05).abs() < 1e-6);
    }

    #[test]
    fn sinusoid_negative_amplitude_is_normalized() {
        let t = grid(201, 0.025);
        let w = TAU * 5.0;
        let y: Vec<f64> = t.iter().map(|&x| -(-x / 2.0).exp() * (0.3 - w * x).sin()).collect();
        let f = fit_damped_sinusoid(&t, &y, 5.0).unwrap();
        assert!(f.amplitude > 0.0);
        assert!((f.phase - (0.3 + PI)).abs() < 1e-6);
    }

    #[test]
    fn dephasing_examples() {
        assert!((subtract_dephasing(1.67, 6.6).unwrap() - 2.236).abs() < 1e-3);
        assert!((subtract_dephasing(0.28, 6.6).unwrap() - 0.292).abs() < 1e-3);
        assert_eq!(subtract_dephasing(1.3, f64::INFINITY).unwrap(), 1.3);
        assert!(matches!(subtract_dephasing(7.0, 6.6), Err(Error::NonPositiveRate { .. })));
        assert!((dephasing_time(1.0861, 0.65).unwrap() - 6.6).abs() < 1e-3);
    }

    #[test]
    fn moments_examples() {
        let me = moments_from_decays(0.65, 0.2355, 2.167, 0.0).unwrap();
        assert!((me.n - 0.88).abs() < 1e-3, "{}", me.n);
        assert!((me.m - 1.08).abs() < 1e-3, "{}", me.m);
        let vac = moments_from_decays(0.65, 0.65, 1.3, 0.0).unwrap();
        assert!(vac.n.abs() < 1e-12 && vac.m.abs() < 1e-12);
        let th = moments_from_decays(0.65, 0.65, 1.3, 0.019).unwrap();
        assert!(th.n.abs() < 1e-9 && th.m.abs() < 1e-9);
        assert!((th.t1_intrinsic - 0.6747).abs() < 1e-4);
        assert!(th.t1_intrinsic <= 0.675);
        assert!(matches!(moments_from_decays(0.65, 0.7, 1.3, 0.0), Err(Error::InconsistentInputs(_))));
    }

    #[test]
    fn eta_examples() {
        assert!((infer_eta(0.88, 1.08).unwrap() - 0.44545).abs() < 1e-4);
        let n: f64 = 0.7;
        assert!((infer_eta(n, (n * (n + 1.0)).sqrt()).unwrap() - 1.0).abs() < 1e-12);
        assert!(matches!(infer_eta(1.0, 1.0), Err(Error::NotSqueezed { .. })));
        assert!(infer_eta(0.0, 0.5).is_err());
    }

    #[test]
    fn wigner_examples() {
        let me = moments_from_decays(0.65, 0.2355, 2.167, 0.0).unwrap();
        let v = variances_from_moments(me.n, me.m).unwrap();
        let (si, sq) = v.half_widths();
        assert!((si / sq - 2.86).abs() < 0.02, "{}", si / sq);
        let w = reconstruct_wigner(&me, &GridSpec::covering(&v, 8.0, 161, 161)).unwrap();
        assert!((w.integral() - 1.0).abs() < 1e-3);
    }
}
