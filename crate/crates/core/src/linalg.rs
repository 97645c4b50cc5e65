//! Small dense symmetric matrices (row-major `Vec<f64>`, `p x p`).

use alloc::vec;
use alloc::vec::Vec;

/// Lower Cholesky factor of a symmetric positive definite matrix, or `None`
/// if a pivot is not positive.
pub fn cholesky(a: &[f64], p: usize) -> Option<Vec<f64>> {
    debug_assert_eq!(a.len(), p * p);
    let mut l = vec![0.0; p * p];
    for j in 0..p {
        let mut d = a[j * p + j];
        for k in 0..j {
            d -= l[j * p + k] * l[j * p + k];
        }
        if d <= 0.0 || !d.is_finite() {
            return None;
        }
        let djj = libm::sqrt(d);
        l[j * p + j] = djj;
        for i in j + 1..p {
            let mut s = a[i * p + j];
            for k in 0..j {
                s -= l[i * p + k] * l[j * p + k];
            }
            l[i * p + j] = s / djj;
        }
    }
    Some(l)
}

/// Solves `L Lᵀ x = b` in place.
pub fn cholesky_solve(l: &[f64], p: usize, b: &mut [f64]) {
    for i in 0..p {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * p + k] * b[k];
        }
        b[i] = s / l[i * p + i];
    }
    for i in (0..p).rev() {
        let mut s = b[i];
        for k in i + 1..p {
            s -= l[k * p + i] * b[k];
        }
        b[i] = s / l[i * p + i];
    }
}

/// Inverse of a symmetric positive definite matrix.
pub fn spd_inverse(a: &[f64], p: usize) -> Option<Vec<f64>> {
    let l = cholesky(a, p)?;
    let mut inv = vec![0.0; p * p];
    let mut col = vec![0.0; p];
    for j in 0..p {
        col.iter_mut().for_each(|v| *v = 0.0);
        col[j] = 1.0;
        cholesky_solve(&l, p, &mut col);
        for i in 0..p {
            inv[i * p + j] = col[i];
        }
    }
    symmetrize(&mut inv, p);
    Some(inv)
}

pub fn symmetrize(a: &mut [f64], p: usize) {
    for i in 0..p {
        for j in i + 1..p {
            let m = 0.5 * (a[i * p + j] + a[j * p + i]);
            a[i * p + j] = m;
            a[j * p + i] = m;
        }
    }
}

/// `a * b * a` for symmetric `a` and `b`.
pub fn sandwich(a: &[f64], b: &[f64], p: usize) -> Vec<f64> {
    let mut ab = vec![0.0; p * p];
    for i in 0..p {
        for k in 0..p {
            let aik = a[i * p + k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..p {
                ab[i * p + j] += aik * b[k * p + j];
            }
        }
    }
    let mut out = vec![0.0; p * p];
    for i in 0..p {
        for k in 0..p {
            let v = ab[i * p + k];
            for j in 0..p {
                out[i * p + j] += v * a[k * p + j];
            }
        }
    }
    symmetrize(&mut out, p);
    out
}

/// A column that is (numerically) a combination of earlier columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Dependency {
    pub column: usize,
    /// Earlier columns with a non-negligible weight in the combination.
    pub partners: Vec<usize>,
}

/// Scans the columns of a Gram matrix `XᵀX` in order and reports the first
/// one whose residual after projecting on the earlier independent columns
/// is below `tol` relative to its own squared norm.
pub fn first_dependency(gram: &[f64], p: usize, tol: f64) -> Option<Dependency> {
    let mut basis: Vec<usize> = Vec::new();
    // Cholesky factor of gram[basis, basis], row-major over basis positions.
    let mut l: Vec<Vec<f64>> = Vec::new();
    for j in 0..p {
        let gjj = gram[j * p + j];
        let mut coef = Vec::with_capacity(basis.len());
        for (r, &bi) in basis.iter().enumerate() {
            let mut s = gram[bi * p + j];
            for (k, c) in coef.iter().enumerate() {
                s -= l[r][k] * c;
            }
            coef.push(s / l[r][r]);
        }
        let resid = gjj - coef.iter().map(|c| c * c).sum::<f64>();
        if gjj.is_nan() || gjj <= 0.0 || resid <= tol * gjj {
            // Back-substitute Lᵀ w = coef for the combination weights.
            let m = basis.len();
            let mut w = coef;
            for i in (0..m).rev() {
                let mut s = w[i];
                for (k, row) in l.iter().enumerate().skip(i + 1) {
                    s -= row[i] * w[k];
                }
                w[i] = s / l[i][i];
            }
            let partners = basis
                .iter()
                .zip(&w)
                .filter(|(&bi, wi)| {
                    let scale = libm::sqrt(gram[bi * p + bi] / gjj.max(f64::MIN_POSITIVE));
                    libm::fabs(**wi) * scale > 1e-6
                })
                .map(|(&bi, _)| bi)
                .collect();
            return Some(Dependency {
                column: j,
                partners,
            });
        }
        let mut row = coef;
        row.push(libm::sqrt(resid));
        l.push(row);
        basis.push(j);
    }
    None
}
