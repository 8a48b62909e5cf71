use super::sparse::{dot, norm2, CsrMatrix};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgOptions {
    /// Relative residual target `||b - A x|| <= tol ||b||`.
    pub tol: f64,
    /// Iteration cap; `None` means `10 n`.
    pub max_iter: Option<usize>,
}

impl Default for CgOptions {
    fn default() -> Self {
        CgOptions {
            tol: 1e-10,
            max_iter: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CgOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// Final relative residual, recomputed from scratch.
    pub residual: f64,
}

/// Conjugate gradients with Jacobi preconditioning for a symmetric
/// positive-definite `a`, starting from `x0` (zero if `None`).
pub fn solve_spd(a: &CsrMatrix, b: &[f64], x0: Option<&[f64]>, opts: CgOptions) -> Result<CgOutcome> {
    let n = a.dim();
    assert_eq!(b.len(), n);
    let bnorm = norm2(b);
    let mut x = x0.map_or_else(|| vec![0.0; n], |x| x.to_vec());
    if n == 0 || bnorm == 0.0 {
        return Ok(CgOutcome {
            x: vec![0.0; n],
            iterations: 0,
            residual: 0.0,
        });
    }
    let inv_diag: Vec<f64> = a
        .diag()
        .iter()
        .map(|&d| {
            if d > 0.0 {
                Ok(1.0 / d)
            } else {
                Err(Error::Breakdown(format!("non-positive diagonal entry {d:.3e}")))
            }
        })
        .collect::<Result<_>>()?;
    let max_iter = opts.max_iter.unwrap_or(10 * n).max(1);
    let target = opts.tol * bnorm;

    let mut r: Vec<f64> = b.iter().zip(a.mul(&x)).map(|(bi, ai)| bi - ai).collect();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let mut it = 0;
    while norm2(&r) > target {
        if it == max_iter {
            return Err(Error::NoConvergence {
                iterations: it,
                residual: norm2(&r) / bnorm,
            });
        }
        a.mul_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::Breakdown(format!("p^T A p = {pap:.3e} at iteration {it}")));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
        it += 1;
    }
    let ax = a.mul(&x);
    let res: f64 = b.iter().zip(&ax).map(|(b, a)| (b - a) * (b - a)).sum::<f64>().sqrt();
    Ok(CgOutcome {
        x,
        iterations: it,
        residual: res / bnorm,
    })
}
