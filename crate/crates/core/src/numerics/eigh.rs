use num_complex::Complex64 as C64;

use super::matrix::ComplexMatrix;
use crate::error::{invalid, Error, Result};

const MAX_SWEEPS: usize = 100;

/// Eigenvalues in ascending order with the matching unit eigenvectors stored
/// as the columns of `vectors`.
#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

impl EigenDecomposition {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn vector(&self, k: usize) -> Vec<C64> {
        self.vectors.column(k)
    }

    /// `V Λ V†`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let lambda = ComplexMatrix::diagonal(&self.values);
        &(&self.vectors * &lambda) * &self.vectors.adjoint()
    }
}

/// Diagonalizes a Hermitian matrix by cyclic complex Jacobi rotations.
///
/// Ordering is ascending in eigenvalue; inside a degenerate cluster vectors
/// are ordered by the index of their largest-magnitude component. Each
/// eigenvector is rephased so that component is real and positive.
pub fn eigh(h: &ComplexMatrix) -> Result<EigenDecomposition> {
    if !h.is_square() {
        return Err(invalid(format!("eigh needs a square matrix, got {}x{}", h.rows(), h.cols())));
    }
    if !h.is_hermitian() {
        return Err(invalid(format!(
            "eigh needs a Hermitian matrix (defect {:e})",
            h.hermitian_defect()
        )));
    }
    let n = h.rows();
    let mut a = h.clone();
    // Enforce exact Hermiticity so rotations stay consistent.
    for i in 0..n {
        a[(i, i)] = C64::new(a[(i, i)].re, 0.0);
        for j in (i + 1)..n {
            let avg = 0.5 * (a[(i, j)] + a[(j, i)].conj());
            a[(i, j)] = avg;
            a[(j, i)] = avg.conj();
        }
    }
    let mut v = ComplexMatrix::identity(n);
    let scale = a.frobenius_norm();
    let target = (1e2 * f64::EPSILON * scale).powi(2);

    let mut converged = n <= 1 || scale == 0.0;
    for _sweep in 0..MAX_SWEEPS {
        if converged {
            break;
        }
        if off_diagonal_sqr(&a) <= target {
            converged = true;
            break;
        }
        for p in 0..n - 1 {
            for q in (p + 1)..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
    }
    if !converged && off_diagonal_sqr(&a) > target {
        return Err(Error::Convergence(format!(
            "Jacobi eigensolver did not converge in {MAX_SWEEPS} sweeps"
        )));
    }

    let raw: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
    Ok(order_and_rephase(raw, v, scale))
}

fn off_diagonal_sqr(a: &ComplexMatrix) -> f64 {
    let n = a.rows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)].norm_sqr();
            }
        }
    }
    s
}

/// One complex Jacobi rotation annihilating `a[p][q]`.
///
/// The phase of `a[p][q]` is removed by `diag(1, e^{-iφ})` on (p, q), after
/// which a real symmetric rotation finishes the job. `V = D R` is applied as
/// `A ← V† A V` and accumulated into the eigenvector matrix.
fn rotate(a: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    let b = apq.norm();
    if b == 0.0 {
        return;
    }
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    // Skip rotations that would be lost in rounding.
    if b <= f64::EPSILON * 1e-3 * (app.abs() + aqq.abs()) {
        a[(p, q)] = C64::new(0.0, 0.0);
        a[(q, p)] = C64::new(0.0, 0.0);
        return;
    }
    let phase = apq / b; // e^{iφ}
    let theta = (aqq - app) / (2.0 * b);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let t = if theta == 0.0 { 1.0 } else { t };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    let vpp = C64::new(c, 0.0);
    let vpq = C64::new(s, 0.0);
    let vqp = -s * phase.conj();
    let vqq = c * phase.conj();

    let n = a.rows();
    // A ← A V (columns p, q)
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * vpp + akq * vqp;
        a[(k, q)] = akp * vpq + akq * vqq;
    }
    // A ← V† A (rows p, q)
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = vpp.conj() * apk + vqp.conj() * aqk;
        a[(q, k)] = vpq.conj() * apk + vqq.conj() * aqk;
    }
    a[(p, q)] = C64::new(0.0, 0.0);
    a[(q, p)] = C64::new(0.0, 0.0);
    a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
    a[(q, q)] = C64::new(a[(q, q)].re, 0.0);
    // V_acc ← V_acc V
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * vpp + vkq * vqp;
        v[(k, q)] = vkp * vpq + vkq * vqq;
    }
}

/// Index of the largest-magnitude component, ties to the lower index.
fn dominant_index(col: &[C64]) -> usize {
    let max = col.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let tol = 1e-12 * max.max(f64::MIN_POSITIVE);
    col.iter().position(|z| z.norm() >= max - tol).unwrap_or(0)
}

fn order_and_rephase(values: Vec<f64>, v: ComplexMatrix, scale: f64) -> EigenDecomposition {
    let n = values.len();
    let cols: Vec<Vec<C64>> = (0..n).map(|j| v.column(j)).collect();
    let dominant: Vec<usize> = cols.iter().map(|c| dominant_index(c)).collect();

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]).then(i.cmp(&j)));

    // Re-sort each degenerate cluster by dominant component index.
    let degen_tol = 1e-10 * scale.max(1.0);
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && values[order[end]] - values[order[end - 1]] <= degen_tol {
            end += 1;
        }
        order[start..end].sort_by(|&i, &j| dominant[i].cmp(&dominant[j]).then(i.cmp(&j)));
        start = end;
    }

    let mut vectors = ComplexMatrix::zeros(n, n);
    let mut sorted = Vec::with_capacity(n);
    for (dst, &src) in order.iter().enumerate() {
        sorted.push(values[src]);
        let col = &cols[src];
        let lead = col[dominant[src]];
        let gauge = if lead.norm() > 0.0 { lead.conj() / lead.norm() } else { C64::new(1.0, 0.0) };
        for (i, z) in col.iter().enumerate() {
            vectors[(i, dst)] = z * gauge;
        }
        // The dominant entry is real-positive exactly.
        let d = dominant[src];
        vectors[(d, dst)] = C64::new(vectors[(d, dst)].norm(), 0.0);
    }
    EigenDecomposition { values: sorted, vectors }
}
