//! Iterative and direct linear solvers for the assembled systems.
//!
//! Symmetric positive (semi-)definite systems go through Jacobi-preconditioned
//! conjugate gradients, optionally restricted to the complement of the
//! constant null space (pure-Neumann pressure problem). Nonsymmetric systems
//! use BiCGSTAB with Jacobi preconditioning, falling back to a dense LU
//! factorization below a size threshold where the direct solve is both
//! cheaper and exact to rounding.

use super::sparse::CsrMatrix;
use thiserror::Error;

/// Systems at or below this size are solved by dense LU in `solve_general`.
pub const DENSE_FALLBACK_LIMIT: usize = 3000;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("system is incompatible with the constant null space: |1^T b| = {imbalance:e} exceeds tolerance")]
    Incompatible { imbalance: f64 },
    #[error("no convergence after {iterations} iterations, relative residual {residual:e}")]
    NoConvergence { iterations: usize, residual: f64, history: Vec<f64> },
    #[error("matrix is numerically singular at pivot {pivot}")]
    Singular { pivot: usize },
    #[error("dimension mismatch: matrix is {rows}x{cols}, rhs has length {rhs}")]
    Dimension { rows: usize, cols: usize, rhs: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NullSpace {
    None,
    /// Solution and right-hand side are orthogonalized against constants.
    Constants,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SolveStats {
    pub iterations: usize,
    pub residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn project_out_mean(v: &mut [f64]) {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    for x in v.iter_mut() {
        *x -= mean;
    }
}

/// Jacobi-preconditioned conjugate gradient solve of A x = b.
///
/// `tol` is a relative residual bound: the returned iterate satisfies
/// ||b - A x|| <= tol * ||b||. With `NullSpace::Constants` the right-hand
/// side must be compatible (orthogonal to constants up to rounding) and the
/// returned solution has zero coefficient mean.
pub fn solve_spd(
    a: &CsrMatrix,
    b: &[f64],
    tol: f64,
    max_iter: usize,
    null_space: NullSpace,
) -> Result<(Vec<f64>, SolveStats), SolverError> {
    let n = a.n_rows;
    if a.n_cols != n || b.len() != n {
        return Err(SolverError::Dimension { rows: a.n_rows, cols: a.n_cols, rhs: b.len() });
    }
    let b_norm = norm(b);
    if b_norm == 0.0 {
        return Ok((vec![0.0; n], SolveStats::default()));
    }
    let mut rhs = b.to_vec();
    if null_space == NullSpace::Constants {
        let imbalance = b.iter().sum::<f64>().abs();
        if imbalance > tol.max(1e-10) * (n as f64).sqrt() * b_norm {
            return Err(SolverError::Incompatible { imbalance });
        }
        project_out_mean(&mut rhs);
    }
    let diag = a.diagonal();
    let inv_diag: Vec<f64> = diag.iter().map(|&d| if d.abs() > 0.0 { 1.0 / d } else { 1.0 }).collect();

    let mut x = vec![0.0; n];
    let mut r = rhs;
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(ri, di)| ri * di).collect();
    if null_space == NullSpace::Constants {
        project_out_mean(&mut z);
    }
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    for it in 0..max_iter {
        let res = norm(&r) / b_norm;
        if res <= tol {
            if null_space == NullSpace::Constants {
                project_out_mean(&mut x);
            }
            return Ok((x, SolveStats { iterations: it, residual: res }));
        }
        a.matvec(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            return Err(SolverError::NoConvergence { iterations: it, residual: res, history: vec![res] });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        if null_space == NullSpace::Constants {
            project_out_mean(&mut z);
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    let res = norm(&r) / b_norm;
    if res <= tol {
        if null_space == NullSpace::Constants {
            project_out_mean(&mut x);
        }
        return Ok((x, SolveStats { iterations: max_iter, residual: res }));
    }
    Err(SolverError::NoConvergence { iterations: max_iter, residual: res, history: vec![res] })
}

/// Jacobi-preconditioned BiCGSTAB solve of A x = b for nonsymmetric A.
pub fn solve_bicgstab(
    a: &CsrMatrix,
    b: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, SolveStats), SolverError> {
    let n = a.n_rows;
    if a.n_cols != n || b.len() != n {
        return Err(SolverError::Dimension { rows: a.n_rows, cols: a.n_cols, rhs: b.len() });
    }
    let b_norm = norm(b);
    if b_norm == 0.0 {
        return Ok((vec![0.0; n], SolveStats::default()));
    }
    let inv_diag: Vec<f64> =
        a.diagonal().iter().map(|&d| if d.abs() > 0.0 { 1.0 / d } else { 1.0 }).collect();
    let precond = |v: &[f64]| -> Vec<f64> { v.iter().zip(&inv_diag).map(|(x, d)| x * d).collect() };

    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let r0 = r.clone();
    let mut rho = 1.0;
    let mut alpha = 1.0;
    let mut omega = 1.0;
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut history = Vec::new();
    for it in 0..max_iter {
        let res = norm(&r) / b_norm;
        history.push(res);
        if res <= tol {
            return Ok((x, SolveStats { iterations: it, residual: res }));
        }
        let rho_new = dot(&r0, &r);
        if rho_new.abs() < 1e-300 {
            return Err(SolverError::NoConvergence { iterations: it, residual: res, history });
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        let ph = precond(&p);
        a.matvec(&ph, &mut v);
        alpha = rho / dot(&r0, &v);
        let s: Vec<f64> = (0..n).map(|i| r[i] - alpha * v[i]).collect();
        let sh = precond(&s);
        let t = a.matvec_alloc(&sh);
        let tt = dot(&t, &t);
        omega = if tt > 0.0 { dot(&t, &s) / tt } else { 0.0 };
        for i in 0..n {
            x[i] += alpha * ph[i] + omega * sh[i];
            r[i] = s[i] - omega * t[i];
        }
        if omega == 0.0 {
            let res = norm(&r) / b_norm;
            history.push(res);
            if res <= tol {
                return Ok((x, SolveStats { iterations: it + 1, residual: res }));
            }
            return Err(SolverError::NoConvergence { iterations: it + 1, residual: res, history });
        }
    }
    let res = norm(&r) / b_norm;
    history.push(res);
    if res <= tol {
        return Ok((x, SolveStats { iterations: max_iter, residual: res }));
    }
    Err(SolverError::NoConvergence { iterations: max_iter, residual: res, history })
}

/// Dense LU factorization with partial pivoting.
pub struct DenseLu {
    n: usize,
    lu: Vec<f64>,
    piv: Vec<usize>,
}

impl DenseLu {
    pub fn from_csr(a: &CsrMatrix) -> Result<Self, SolverError> {
        assert_eq!(a.n_rows, a.n_cols);
        let n = a.n_rows;
        let mut m = vec![0.0; n * n];
        for i in 0..n {
            for k in a.row_ptr[i]..a.row_ptr[i + 1] {
                m[i * n + a.col_idx[k]] = a.values[k];
            }
        }
        Self::from_dense(n, m)
    }

    pub fn from_dense(n: usize, mut m: Vec<f64>) -> Result<Self, SolverError> {
        assert_eq!(m.len(), n * n);
        let mut piv = vec![0usize; n];
        let scale: f64 = m.iter().fold(0.0_f64, |acc, &v| acc.max(v.abs())).max(1e-300);
        for k in 0..n {
            let mut pk = k;
            let mut best = m[k * n + k].abs();
            for i in k + 1..n {
                let v = m[i * n + k].abs();
                if v > best {
                    best = v;
                    pk = i;
                }
            }
            if best < 1e-14 * scale {
                return Err(SolverError::Singular { pivot: k });
            }
            piv[k] = pk;
            if pk != k {
                for j in 0..n {
                    m.swap(k * n + j, pk * n + j);
                }
            }
            let pivot = m[k * n + k];
            for i in k + 1..n {
                let f = m[i * n + k] / pivot;
                m[i * n + k] = f;
                if f != 0.0 {
                    for j in k + 1..n {
                        m[i * n + j] -= f * m[k * n + j];
                    }
                }
            }
        }
        Ok(DenseLu { n, lu: m, piv })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let n = self.n;
        let mut x = b.to_vec();
        for k in 0..n {
            x.swap(k, self.piv[k]);
            let xk = x[k];
            if xk != 0.0 {
                for i in k + 1..n {
                    x[i] -= self.lu[i * n + k] * xk;
                }
            }
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..n {
                s -= self.lu[i * n + j] * x[j];
            }
            x[i] = s / self.lu[i * n + i];
        }
        x
    }
}

/// General solve dispatch: dense LU up to `DENSE_FALLBACK_LIMIT` unknowns,
/// BiCGSTAB beyond.
pub fn solve_general(
    a: &CsrMatrix,
    b: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, SolveStats), SolverError> {
    if a.n_rows != a.n_cols || b.len() != a.n_rows {
        return Err(SolverError::Dimension { rows: a.n_rows, cols: a.n_cols, rhs: b.len() });
    }
    if a.n_rows <= DENSE_FALLBACK_LIMIT {
        let lu = DenseLu::from_csr(a)?;
        let x = lu.solve(b);
        let mut r = a.matvec_alloc(&x);
        for i in 0..r.len() {
            r[i] = b[i] - r[i];
        }
        let bn = norm(b);
        let res = if bn > 0.0 { norm(&r) / bn } else { 0.0 };
        Ok((x, SolveStats { iterations: 0, residual: res }))
    } else {
        solve_bicgstab(a, b, tol, max_iter)
    }
}
