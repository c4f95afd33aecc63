//! Small dense linear-algebra helpers shared by the operator modules.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// Largest absolute entry.
pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, &v| acc.max(v.abs()))
}

/// Matrix exponential by scaling-and-squaring with a Taylor core.
///
/// The argument is scaled until its 1-norm is below 1/2, the series is summed
/// to machine precision, and the result squared back up. Plenty for the small
/// well-scaled matrices that appear here.
pub fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "expm requires a square matrix");
    let norm = a
        .column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0_f64, f64::max);
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as u32 } else { 0 };
    let scaled = a / 2f64.powi(squarings as i32);

    let mut result = DMatrix::identity(n, n);
    let mut term = DMatrix::identity(n, n);
    for k in 1..=40 {
        term = (&term * &scaled) / k as f64;
        result += &term;
        if max_abs(&term) < 1e-20 * max_abs(&result).max(1.0) {
            break;
        }
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

/// Solves the continuous Lyapunov equation `B X + X Bᵀ = C` by vectorizing
/// into the Kronecker system `(I ⊗ B + B ⊗ I) vec(X) = vec(C)`.
pub fn solve_lyapunov(b: &DMatrix<f64>, c: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let d = b.nrows();
    if b.ncols() != d || c.nrows() != d || c.ncols() != d {
        return Err(Error::Dimension("lyapunov: B and C must be square and same size".into()));
    }
    // column-major vec: (B X)_{ij} couples vec index i + d*j.
    let mut k = DMatrix::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            let row = i + d * j;
            for l in 0..d {
                k[(row, l + d * j)] += b[(i, l)];
                k[(row, i + d * l)] += b[(j, l)];
            }
        }
    }
    let rhs = DVector::from_iterator(d * d, c.iter().copied());
    let lu = k.lu();
    let sol = lu
        .solve(&rhs)
        .ok_or_else(|| Error::Singular("lyapunov system is singular (is B stable?)".into()))?;
    let mut x = DMatrix::zeros(d, d);
    for j in 0..d {
        for i in 0..d {
            x[(i, j)] = sol[i + d * j];
        }
    }
    // symmetrize roundoff
    let xt = x.transpose();
    Ok((x + xt) * 0.5)
}

/// Eigenvalues of a symmetric matrix, ascending.
pub fn symmetric_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let sym = (m + m.transpose()) * 0.5;
    let mut ev: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ev
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_symmetric_eigenvalue(m: &DMatrix<f64>) -> f64 {
    symmetric_eigenvalues(m)[0]
}

/// Condition number (ratio of extreme eigenvalues) of a symmetric
/// positive-definite matrix.
pub fn spd_condition_number(m: &DMatrix<f64>) -> Result<f64> {
    let ev = symmetric_eigenvalues(m);
    let (lo, hi) = (ev[0], ev[ev.len() - 1]);
    if lo <= 0.0 {
        return Err(Error::Domain(format!(
            "condition number requires a positive-definite matrix, min eigenvalue {lo}"
        )));
    }
    Ok(hi / lo)
}

/// Symmetric positive-semidefinite square root.
pub fn spsd_sqrt(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let sym = (m + m.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let mut vals = eig.eigenvalues.clone();
    for v in vals.iter_mut() {
        if *v < -1e-10 {
            return Err(Error::Domain(format!("square root of an indefinite matrix ({v})")));
        }
        *v = v.max(0.0).sqrt();
    }
    let q = &eig.eigenvectors;
    Ok(q * DMatrix::from_diagonal(&vals) * q.transpose())
}

/// Real eigen-decomposition of a small (not necessarily symmetric) matrix.
///
/// Returns eigenvalues ascending and the matrix of matching right
/// eigenvectors as columns (unit norm, first significant component positive).
/// Errors if any eigenvalue has a non-negligible imaginary part or if two
/// eigenvalues coincide within `tol`.
pub fn real_eigen(m: &DMatrix<f64>, tol: f64) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let d = m.nrows();
    let complex = m.clone().complex_eigenvalues();
    let mut vals = Vec::with_capacity(d);
    for ev in complex.iter() {
        if ev.im.abs() > tol * (1.0 + ev.re.abs()) {
            return Err(Error::Domain(format!(
                "complex eigenvalue {} + {}i; real spectrum required",
                ev.re, ev.im
            )));
        }
        vals.push(ev.re);
    }
    vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for w in vals.windows(2) {
        if (w[1] - w[0]).abs() <= tol * (1.0 + w[0].abs()) {
            return Err(Error::Degenerate(format!(
                "eigenvalues {} and {} coincide within tolerance",
                w[0], w[1]
            )));
        }
    }
    let mut vectors = DMatrix::zeros(d, d);
    for (k, &lambda) in vals.iter().enumerate() {
        let shifted = m - DMatrix::<f64>::identity(d, d) * lambda;
        let svd = shifted.svd(true, true);
        let v_t = svd.v_t.as_ref().expect("svd vectors requested");
        // right singular vector of the smallest singular value spans the kernel
        let null = v_t.row(d - 1).transpose();
        let lead = null.iter().find(|v| v.abs() > 1e-8).copied().unwrap_or(1.0);
        let sign = if lead < 0.0 { -1.0 } else { 1.0 };
        for i in 0..d {
            vectors[(i, k)] = sign * null[i];
        }
    }
    Ok((vals, vectors))
}
