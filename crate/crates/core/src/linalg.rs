//! Dense helpers on top of nalgebra and sparse solvers on top of faer.

use faer::prelude::*;
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;
use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

/// Number of singular values above `rel_tol` times the largest one.
pub fn numeric_rank(a: &DMatrix<f64>, rel_tol: f64) -> usize {
    if a.is_empty() {
        return 0;
    }
    let sv = a.singular_values();
    let max = sv.max();
    if max == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * max).count()
}

/// Orthonormal basis of the null space of `a`, one column per vector.
pub fn null_space(a: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let n = a.ncols();
    if a.nrows() == 0 {
        return DMatrix::identity(n, n);
    }
    // Pad to at least square so the SVD returns a full set of right vectors.
    let rows = a.nrows().max(n);
    let mut padded = DMatrix::zeros(rows, n);
    padded.view_mut((0, 0), (a.nrows(), n)).copy_from(a);
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("requested right singular vectors");
    let max = svd.singular_values.max();
    let cols: Vec<DVector<f64>> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|&(_, &s)| s <= rel_tol * max || max == 0.0)
        .map(|(i, _)| v_t.row(i).transpose())
        .collect();
    if cols.is_empty() {
        DMatrix::zeros(n, 0)
    } else {
        DMatrix::from_columns(&cols)
    }
}

/// Solves `a x = b` by LU with partial pivoting; `None` when singular.
pub fn lu_solve(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let x = a.clone().lu().solve(b)?;
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Square matrix in triplet form; duplicate entries are summed.
#[derive(Clone, Debug, Default)]
pub struct TripletMatrix {
    pub n: usize,
    pub entries: Vec<(usize, usize, f64)>,
}

impl TripletMatrix {
    pub fn new(n: usize) -> Self {
        TripletMatrix {
            n,
            entries: Vec::new(),
        }
    }

    pub fn push(&mut self, i: usize, j: usize, v: f64) {
        if v != 0.0 {
            self.entries.push((i, j, v));
        }
    }

    fn to_faer(&self) -> Result<SparseColMat<usize, f64>> {
        let t: Vec<Triplet<usize, usize, f64>> = self
            .entries
            .iter()
            .map(|&(i, j, v)| Triplet::new(i, j, v))
            .collect();
        SparseColMat::try_new_from_triplets(self.n, self.n, &t)
            .map_err(|e| Error::Solve(format!("{e:?}")))
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for &(i, j, v) in &self.entries {
            y[i] += v * x[j];
        }
        y
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for &(i, j, v) in &self.entries {
            m[(i, j)] += v;
        }
        m
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// Relative residual `‖b - A x‖ / ‖b‖` (absolute when `b = 0`).
pub fn relative_residual(a: &TripletMatrix, x: &[f64], b: &[f64]) -> f64 {
    let ax = a.mul_vec(x);
    let r: Vec<f64> = b.iter().zip(&ax).map(|(b, ax)| b - ax).collect();
    let nb = norm(b);
    if nb == 0.0 {
        norm(&r)
    } else {
        norm(&r) / nb
    }
}

/// Sparse LU solve with a few steps of iterative refinement. Fails when the
/// relative residual stays above `tol`.
pub fn sparse_solve(a: &TripletMatrix, b: &[f64], tol: f64) -> Result<Vec<f64>> {
    let n = a.n;
    if b.iter().all(|&v| v == 0.0) {
        return Ok(vec![0.0; n]);
    }
    let mat = a.to_faer()?;
    let lu = mat
        .sp_lu()
        .map_err(|e| Error::Solve(format!("sparse LU failed: {e:?}")))?;
    let solve = |rhs: &[f64]| -> Vec<f64> {
        let m = Mat::<f64>::from_fn(n, 1, |i, _| rhs[i]);
        let x = lu.solve(&m);
        (0..n).map(|i| x[(i, 0)]).collect()
    };
    let mut x = solve(b);
    let mut res = relative_residual(a, &x, b);
    for _ in 0..3 {
        if res < 1e-14 || !res.is_finite() {
            break;
        }
        let ax = a.mul_vec(&x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(b, ax)| b - ax).collect();
        let dx = solve(&r);
        let cand: Vec<f64> = x.iter().zip(&dx).map(|(x, d)| x + d).collect();
        let cres = relative_residual(a, &cand, b);
        if cres >= res {
            break;
        }
        x = cand;
        res = cres;
    }
    if !(res < tol) {
        return Err(Error::Solve(format!(
            "relative residual {res:.3e} above {tol:.1e}"
        )));
    }
    Ok(x)
}

/// Preconditioned MINRES for symmetric (possibly indefinite) systems.
/// `precond` applies a symmetric positive definite approximate inverse.
/// Returns the solution and the iteration count.
pub fn minres(
    a: &TripletMatrix,
    b: &[f64],
    precond: impl Fn(&[f64]) -> Vec<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, usize)> {
    let n = a.n;
    let mut x = vec![0.0; n];
    let mut v_old = vec![0.0; n];
    let mut v = b.to_vec();
    let mut z = precond(&v);
    let mut gamma = dot(&z, &v);
    if gamma < 0.0 {
        return Err(Error::Solve(
            "preconditioner is not positive definite".into(),
        ));
    }
    gamma = gamma.sqrt();
    if gamma == 0.0 {
        return Ok((x, 0));
    }
    let gamma1 = gamma;
    let mut gamma_old = 1.0;
    let mut eta = gamma;
    let (mut s_old, mut s) = (0.0, 0.0);
    let (mut c_old, mut c) = (1.0, 1.0);
    let mut w_old = vec![0.0; n];
    let mut w = vec![0.0; n];
    for it in 1..=max_iter {
        z.iter_mut().for_each(|zi| *zi /= gamma);
        let az = a.mul_vec(&z);
        let delta = dot(&az, &z);
        let v_new: Vec<f64> = (0..n)
            .map(|i| az[i] - delta / gamma * v[i] - gamma / gamma_old * v_old[i])
            .collect();
        let z_new = precond(&v_new);
        let gamma_new = dot(&z_new, &v_new).max(0.0).sqrt();
        let a0 = c * delta - c_old * s * gamma;
        let a1 = a0.hypot(gamma_new);
        let a2 = s * delta + c_old * c * gamma;
        let a3 = s_old * gamma;
        let c_new = a0 / a1;
        let s_new = gamma_new / a1;
        let w_new: Vec<f64> = (0..n)
            .map(|i| (z[i] - a3 * w_old[i] - a2 * w[i]) / a1)
            .collect();
        for i in 0..n {
            x[i] += c_new * eta * w_new[i];
        }
        eta *= -s_new;
        if eta.abs() / gamma1 < tol || gamma_new == 0.0 {
            return Ok((x, it));
        }
        v_old = std::mem::replace(&mut v, v_new);
        z = z_new;
        gamma_old = gamma;
        gamma = gamma_new;
        w_old = std::mem::replace(&mut w, w_new);
        c_old = c;
        c = c_new;
        s_old = s;
        s = s_new;
    }
    Err(Error::Solve(format!(
        "MINRES did not converge in {max_iter} iterations"
    )))
}
