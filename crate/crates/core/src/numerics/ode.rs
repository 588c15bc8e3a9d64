//! Dormand-Prince 5(4) with PI step-size control and the standard
//! fourth-order continuous extension for dense output.

use crate::error::{invalid, Error, Result};

// Butcher tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// Difference between 5th and embedded 4th order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

// Dense output.
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

#[derive(Clone, Debug)]
pub struct OdeOptions {
    /// Local error bound per step, applied as `tol * max(1, |y_i|)`.
    pub tol: f64,
    /// Upper bound on |h|; `None` means the full span.
    pub max_step: Option<f64>,
    pub max_steps: usize,
}

impl OdeOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self { tol: 1e-9, max_step: None, max_steps: 5_000_000 }
    }
}

/// States sampled at the requested times.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

impl Trajectory {
    pub fn last(&self) -> Option<&[f64]> {
        self.states.last().map(Vec::as_slice)
    }

    /// Time series of one state component.
    pub fn component(&self, i: usize) -> Vec<f64> {
        self.states.iter().map(|s| s[i]).collect()
    }
}

/// Integrates `y' = f(t, y)` from `t_span.0` to `t_span.1` and returns the
/// solution at `sample_times`, which must lie inside the span and be ordered
/// in the direction of integration.
///
/// Complex-valued systems are integrated by interleaving real and imaginary
/// parts in `y`.
pub fn integrate_ode<F>(
    mut f: F,
    y0: &[f64],
    t_span: (f64, f64),
    sample_times: &[f64],
    opts: &OdeOptions,
) -> Result<Trajectory>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let (t0, t1) = t_span;
    if !(opts.tol > 0.0) {
        return Err(invalid("tolerance must be positive"));
    }
    if !(t0.is_finite() && t1.is_finite()) || t0 == t1 {
        return Err(invalid("time span must be finite and non-degenerate"));
    }
    let dir = (t1 - t0).signum();
    let (lo, hi) = if dir > 0.0 { (t0, t1) } else { (t1, t0) };
    for w in sample_times.windows(2) {
        if (w[1] - w[0]) * dir < 0.0 {
            return Err(invalid("sample times must be ordered along the integration direction"));
        }
    }
    if sample_times.iter().any(|&t| t < lo || t > hi || !t.is_finite()) {
        return Err(invalid("sample times must lie within the time span"));
    }

    let n = y0.len();
    let mut out = Trajectory {
        times: sample_times.to_vec(),
        states: Vec::with_capacity(sample_times.len()),
        accepted_steps: 0,
        rejected_steps: 0,
    };
    let mut next_sample = 0;
    while next_sample < sample_times.len() && sample_times[next_sample] == t0 {
        out.states.push(y0.to_vec());
        next_sample += 1;
    }
    if n == 0 {
        while out.states.len() < sample_times.len() {
            out.states.push(Vec::new());
        }
        return Ok(out);
    }

    let span = (t1 - t0).abs();
    let max_step = opts.max_step.unwrap_or(span).min(span);

    let mut y = y0.to_vec();
    let mut t = t0;
    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut k5 = vec![0.0; n];
    let mut k6 = vec![0.0; n];
    let mut k7 = vec![0.0; n];
    let mut ytmp = vec![0.0; n];
    let mut ynew = vec![0.0; n];
    let mut dense = [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]];

    f(t, &y, &mut k1);
    let mut h = initial_step(&mut f, t, &y, &k1, dir, opts.tol, max_step);

    const SAFE: f64 = 0.9;
    const BETA: f64 = 0.04;
    const EXPO1: f64 = 0.2 - BETA * 0.75;
    const FAC_MIN: f64 = 0.2; // largest shrink: h/5
    const FAC_MAX: f64 = 10.0; // largest growth: 10h
    let mut err_old: f64 = 1e-4;
    let mut last_rejected = false;
    let mut steps = 0usize;

    while (t1 - t) * dir > 0.0 {
        if steps >= opts.max_steps {
            return Err(Error::Convergence(format!("exceeded {} ODE steps", opts.max_steps)));
        }
        steps += 1;
        if h.abs() <= 1e-14 * t.abs().max(span) {
            return Err(Error::StepSizeUnderflow { t, h });
        }
        if (t + h - t1) * dir > 0.0 {
            h = t1 - t;
        }

        for i in 0..n {
            ytmp[i] = y[i] + h * A21 * k1[i];
        }
        f(t + C2 * h, &ytmp, &mut k2);
        for i in 0..n {
            ytmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
        }
        f(t + C3 * h, &ytmp, &mut k3);
        for i in 0..n {
            ytmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        f(t + C4 * h, &ytmp, &mut k4);
        for i in 0..n {
            ytmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        f(t + C5 * h, &ytmp, &mut k5);
        for i in 0..n {
            ytmp[i] = y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        f(t + h, &ytmp, &mut k6);
        for i in 0..n {
            ynew[i] = y[i] + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
        }
        f(t + h, &ynew, &mut k7);

        let mut err = 0.0_f64;
        for i in 0..n {
            let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = opts.tol * 1f64.max(y[i].abs()).max(ynew[i].abs());
            err = err.max((e / sc).abs());
        }
        if !err.is_finite() {
            h *= FAC_MIN;
            last_rejected = true;
            out.rejected_steps += 1;
            continue;
        }

        let fac11 = err.powf(EXPO1);
        if err <= 1.0 {
            // Accepted: build dense output for [t, t+h].
            for i in 0..n {
                let ydiff = ynew[i] - y[i];
                let bspl = h * k1[i] - ydiff;
                dense[0][i] = y[i];
                dense[1][i] = ydiff;
                dense[2][i] = bspl;
                dense[3][i] = ydiff - h * k7[i] - bspl;
                dense[4][i] = h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
            }
            let t_new = t + h;
            while next_sample < sample_times.len() && (t_new - sample_times[next_sample]) * dir >= 0.0 {
                let ts = sample_times[next_sample];
                let theta = (ts - t) / h;
                let theta1 = 1.0 - theta;
                let ys: Vec<f64> = (0..n)
                    .map(|i| {
                        dense[0][i]
                            + theta
                                * (dense[1][i]
                                    + theta1 * (dense[2][i] + theta * (dense[3][i] + theta1 * dense[4][i])))
                    })
                    .collect();
                out.states.push(ys);
                next_sample += 1;
            }

            let mut fac = fac11 / err_old.powf(BETA);
            err_old = err.max(1e-4);
            fac = (fac / SAFE).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
            let mut h_new = h / fac;
            if h_new.abs() > max_step {
                h_new = max_step * dir;
            }
            if last_rejected && h_new.abs() > h.abs() {
                h_new = h;
            }
            std::mem::swap(&mut k1, &mut k7); // FSAL
            std::mem::swap(&mut y, &mut ynew);
            t = t_new;
            h = h_new;
            last_rejected = false;
            out.accepted_steps += 1;
        } else {
            h /= (fac11 / SAFE).min(1.0 / FAC_MIN);
            last_rejected = true;
            out.rejected_steps += 1;
        }
    }

    // Samples at exactly t1 that rounding left behind.
    while out.states.len() < sample_times.len() {
        out.states.push(y.clone());
    }
    Ok(out)
}

fn initial_step<F>(f: &mut F, t: f64, y: &[f64], f0: &[f64], dir: f64, tol: f64, max_step: f64) -> f64
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let n = y.len();
    let sc: Vec<f64> = y.iter().map(|v| tol * v.abs().max(1.0)).collect();
    let rms = |v: &[f64]| (v.iter().zip(&sc).map(|(a, s)| (a / s).powi(2)).sum::<f64>() / n as f64).sqrt();
    let d0 = rms(y);
    let d1 = rms(f0);
    let mut h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h0 = h0.min(max_step);
    let y1: Vec<f64> = y.iter().zip(f0).map(|(a, b)| a + dir * h0 * b).collect();
    let mut f1 = vec![0.0; n];
    f(t + dir * h0, &y1, &mut f1);
    let diff: Vec<f64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
    let d2 = rms(&diff) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(1.0 / 5.0)
    };
    dir * (100.0 * h0).min(h1).min(max_step)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_exponential() {
        let tol = 1e-10;
        let tr = integrate_ode(|_, y, dy| dy[0] = -y[0], &[1.0], (0.0, 1.0), &[0.5, 1.0], &OdeOptions::with_tol(tol))
            .unwrap();
        assert!((tr.states[1][0] - (-1.0f64).exp()).abs() < 10.0 * tol);
        assert!((tr.states[0][0] - (-0.5f64).exp()).abs() < 10.0 * tol);
    }

    #[test]
    fn null_dynamics_is_exact() {
        let y0 = [0.3, -2.0, 7.5];
        let times: Vec<f64> = (0..=10).map(|i| i as f64 * 0.3).collect();
        let tr = integrate_ode(|_, _, dy| dy.fill(0.0), &y0, (0.0, 3.0), &times, &OdeOptions::default()).unwrap();
        for s in &tr.states {
            assert_eq!(s.as_slice(), &y0);
        }
    }

    #[test]
    fn backward_integration() {
        let tr = integrate_ode(|_, y, dy| dy[0] = y[0], &[1.0], (0.0, -2.0), &[-1.0, -2.0], &OdeOptions::with_tol(1e-10))
            .unwrap();
        assert!((tr.states[1][0] - (-2.0f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn dense_output_between_steps() {
        // Harmonic oscillator sampled densely; one step covers many samples.
        let times: Vec<f64> = (0..=400).map(|i| i as f64 * 0.025).collect();
        let tol = 1e-9;
        let tr = integrate_ode(
            |_, y, dy| {
                dy[0] = y[1];
                dy[1] = -y[0];
            },
            &[1.0, 0.0],
            (0.0, 10.0),
            &times,
            &OdeOptions::with_tol(tol),
        )
        .unwrap();
        let worst = tr.times.iter().zip(&tr.states).map(|(t, s)| (s[0] - t.cos()).abs()).fold(0.0, f64::max);
        assert!(worst < 1e-7, "worst {worst}");
        assert!(tr.accepted_steps < 400);
    }

    #[test]
    fn rejects_bad_arguments() {
        let f = |_: f64, _: &[f64], dy: &mut [f64]| dy.fill(0.0);
        assert!(integrate_ode(f, &[1.0], (0.0, 0.0), &[], &OdeOptions::default()).is_err());
        assert!(integrate_ode(f, &[1.0], (0.0, 1.0), &[], &OdeOptions::with_tol(0.0)).is_err());
        assert!(integrate_ode(f, &[1.0], (0.0, 1.0), &[2.0], &OdeOptions::default()).is_err());
        assert!(integrate_ode(f, &[1.0], (0.0, 1.0), &[0.5, 0.2], &OdeOptions::default()).is_err());
    }

    #[test]
    fn blow_up_reports_underflow() {
        // y' = y^2 from y = 1 blows up at t = 1.
        let r = integrate_ode(|_, y, dy| dy[0] = y[0] * y[0], &[1.0], (0.0, 2.0), &[2.0], &OdeOptions::with_tol(1e-8));
        assert!(matches!(r, Err(Error::StepSizeUnderflow { .. }) | Err(Error::Convergence(_))), "{r:?}");
    }
}
