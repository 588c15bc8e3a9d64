//! Levenberg-Marquardt minimization of squared residuals.

use crate::error::{invalid, Error, Result};

#[derive(Clone, Debug)]
pub struct FitOptions {
    pub max_iterations: usize,
    /// Convergence threshold on `max_j |(Jᵀ r)_j|`.
    pub gradient_tol: f64,
    /// Relative parameter-step threshold.
    pub step_tol: f64,
    pub initial_damping: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { max_iterations: 500, gradient_tol: 1e-10, step_tol: 1e-15, initial_damping: 1e-3 }
    }
}

#[derive(Clone, Debug)]
pub struct FitResult {
    pub params: Vec<f64>,
    /// `sqrt(Σ r_i²)` at `params`.
    pub residual_norm: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Infinity norm of the gradient of `½ Σ r_i²` at `params`.
    pub gradient_norm: f64,
    /// Linearized covariance `s² (JᵀJ)⁻¹`, row-major; `None` if singular.
    pub covariance: Option<Vec<f64>>,
}

impl FitResult {
    pub fn std_errors(&self) -> Option<Vec<f64>> {
        let n = self.params.len();
        self.covariance.as_ref().map(|c| (0..n).map(|i| c[i * n + i].max(0.0).sqrt()).collect())
    }
}

/// Fits `model(t, params)` to `(t, y)` samples starting from `initial_guess`.
///
/// The Jacobian is taken by central differences; the damping matrix is the
/// diagonal of `JᵀJ` with a small floor so flat directions stay solvable.
pub fn fit_least_squares<M>(
    model: M,
    t: &[f64],
    y: &[f64],
    initial_guess: &[f64],
    opts: &FitOptions,
) -> Result<FitResult>
where
    M: Fn(f64, &[f64]) -> f64,
{
    let m = t.len();
    let n = initial_guess.len();
    if y.len() != m {
        return Err(invalid("t and y must have equal length"));
    }
    if n == 0 {
        return Err(invalid("no parameters to fit"));
    }
    if m < n {
        return Err(invalid(format!("{m} samples cannot determine {n} parameters")));
    }
    if initial_guess.iter().any(|p| !p.is_finite()) {
        return Err(invalid("initial guess must be finite"));
    }
    if t.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(invalid("data must be finite"));
    }

    let residuals = |p: &[f64]| -> Vec<f64> { t.iter().zip(y).map(|(&ti, &yi)| yi - model(ti, p)).collect() };
    let cost_of = |r: &[f64]| 0.5 * r.iter().map(|v| v * v).sum::<f64>();

    let mut p = initial_guess.to_vec();
    let mut r = residuals(&p);
    let mut cost = cost_of(&r);
    if !cost.is_finite() {
        return Err(invalid("model is not finite at the initial guess"));
    }
    let mut lambda = opts.initial_damping;
    let mut iterations = 0;
    let mut converged = false;

    let (mut jtj, mut jtr) = normal_equations(&model, t, &r, &p);
    if let Some(j) = (0..n).find(|&j| jtj[j * n + j] == 0.0) {
        return Err(Error::DegenerateFit(format!("parameter {j} has no influence on the model at the initial guess")));
    }
    while iterations < opts.max_iterations {
        iterations += 1;
        let gnorm = jtr.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        if gnorm <= opts.gradient_tol {
            converged = true;
            break;
        }
        let dmax = (0..n).map(|i| jtj[i * n + i]).fold(0.0_f64, f64::max);
        if dmax == 0.0 {
            return Err(Error::DegenerateFit("Jacobian vanishes identically".into()));
        }
        let floor = 1e-12 * dmax;

        let mut improved = false;
        let mut stalled = false;
        while lambda <= 1e16 {
            let mut a = jtj.clone();
            for i in 0..n {
                a[i * n + i] += lambda * jtj[i * n + i].max(floor);
            }
            let Some(step) = solve_spd(&a, &jtr) else {
                lambda *= 10.0;
                continue;
            };
            let trial: Vec<f64> = p.iter().zip(&step).map(|(a, b)| a + b).collect();
            let r_trial = residuals(&trial);
            let c_trial = cost_of(&r_trial);
            let pnorm = p.iter().map(|v| v * v).sum::<f64>().sqrt();
            let snorm = step.iter().map(|v| v * v).sum::<f64>().sqrt();
            if c_trial.is_finite() && c_trial < cost {
                stalled = snorm <= opts.step_tol * (pnorm + opts.step_tol);
                p = trial;
                r = r_trial;
                cost = c_trial;
                lambda = (lambda / 3.0).max(1e-15);
                improved = true;
                break;
            }
            if snorm <= opts.step_tol * (pnorm + opts.step_tol) {
                stalled = true;
                break;
            }
            lambda *= if c_trial.is_finite() { 4.0 } else { 10.0 };
        }
        if improved {
            (jtj, jtr) = normal_equations(&model, t, &r, &p);
        }
        if stalled || !improved || cost == 0.0 {
            if lambda > 1e16 && !improved {
                let gnorm = jtr.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
                if gnorm > opts.gradient_tol && solve_spd(&jtj, &jtr).is_none() {
                    return Err(Error::DegenerateFit(
                        "normal equations stay singular under maximal damping".into(),
                    ));
                }
            }
            break;
        }
    }

    let gradient_norm = jtr.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    converged = converged || gradient_norm <= opts.gradient_tol;
    let dof = (m - n).max(1) as f64;
    let s2 = 2.0 * cost / dof;
    let covariance = invert_spd(&jtj, n).map(|inv| inv.into_iter().map(|v| v * s2).collect());
    Ok(FitResult {
        params: p,
        residual_norm: (2.0 * cost).sqrt(),
        converged,
        iterations,
        gradient_norm,
        covariance,
    })
}

/// `JᵀJ` and `Jᵀr` with `J` the model Jacobian (so `Jᵀr` is minus the
/// gradient of the cost).
fn normal_equations<M>(model: &M, t: &[f64], r: &[f64], p: &[f64]) -> (Vec<f64>, Vec<f64>)
where
    M: Fn(f64, &[f64]) -> f64,
{
    let n = p.len();
    let m = t.len();
    let mut jac = vec![0.0; m * n];
    let mut pp = p.to_vec();
    for j in 0..n {
        let h = 1e-6 * p[j].abs().max(1e-3);
        pp[j] = p[j] + h;
        let up: Vec<f64> = t.iter().map(|&ti| model(ti, &pp)).collect();
        pp[j] = p[j] - h;
        let dn: Vec<f64> = t.iter().map(|&ti| model(ti, &pp)).collect();
        pp[j] = p[j];
        for i in 0..m {
            jac[i * n + j] = (up[i] - dn[i]) / (2.0 * h);
        }
    }
    let mut jtj = vec![0.0; n * n];
    let mut jtr = vec![0.0; n];
    for i in 0..m {
        let row = &jac[i * n..(i + 1) * n];
        for a in 0..n {
            jtr[a] += row[a] * r[i];
            for b in 0..n {
                jtj[a * n + b] += row[a] * row[b];
            }
        }
    }
    (jtj, jtr)
}

/// Cholesky solve of a symmetric positive-definite system (row-major `a`).
/// Returns `None` if `a` is not numerically positive definite.
pub fn solve_spd(a: &[f64], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let l = cholesky(a, n)?;
    let mut z = vec![0.0; n];
    for i in 0..n {
        let s: f64 = (0..i).map(|k| l[i * n + k] * z[k]).sum();
        z[i] = (b[i] - s) / l[i * n + i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = ((i + 1)..n).map(|k| l[k * n + i] * x[k]).sum();
        x[i] = (z[i] - s) / l[i * n + i];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

fn cholesky(a: &[f64], n: usize) -> Option<Vec<f64>> {
    let dmax = (0..n).map(|i| a[i * n + i].abs()).fold(0.0_f64, f64::max);
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i * n + k] * l[j * n + k]).sum();
            if i == j {
                let d = a[i * n + i] - s;
                if !(d > 1e-14 * dmax) {
                    return None;
                }
                l[i * n + i] = d.sqrt();
            } else {
                l[i * n + j] = (a[i * n + j] - s) / l[j * n + j];
            }
        }
    }
    Some(l)
}

fn invert_spd(a: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut inv = vec![0.0; n * n];
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        let col = solve_spd(a, &e)?;
        for i in 0..n {
            inv[i * n + j] = col[i];
        }
    }
    Some(inv)
}
