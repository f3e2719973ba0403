//! Signatures of symmetric forms, exact elimination over ℚ, and small fits.

use nalgebra::DMatrix;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Rational;

/// Inertia of a symmetric form: (positive, negative, zero) eigenvalue counts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Signature {
    pub pos: usize,
    pub neg: usize,
    pub zero: usize,
}

/// Inertia from a symmetric eigendecomposition. Eigenvalues within
/// `tol · max(1, max|Mᵢⱼ|)` of zero count as zero; so does the symmetry test.
pub fn signature(m: &DMatrix<f64>, tol: f64) -> Result<Signature> {
    if m.nrows() != m.ncols() {
        return Err(Error::Shape(format!("matrix is {}x{}", m.nrows(), m.ncols())));
    }
    let scale = m.iter().fold(1.0f64, |a, x| a.max(x.abs()));
    let n = m.nrows();
    for i in 0..n {
        for j in 0..i {
            if (m[(i, j)] - m[(j, i)]).abs() > tol * scale {
                return Err(Error::Shape(format!("matrix is not symmetric at ({i},{j})")));
            }
        }
    }
    let sym = (m + m.transpose()) * 0.5;
    let eig = sym.symmetric_eigenvalues();
    let thr = tol * scale;
    let mut s = Signature { pos: 0, neg: 0, zero: 0 };
    for &l in eig.iter() {
        if l > thr {
            s.pos += 1;
        } else if l < -thr {
            s.neg += 1;
        } else {
            s.zero += 1;
        }
    }
    Ok(s)
}

/// Exact inertia by symmetric Gaussian elimination (Sylvester's law).
/// Uses a 1×1 pivot when some diagonal entry is nonzero, otherwise a 2×2
/// hyperbolic block [[0,b],[b,0]] which contributes one of each sign.
pub fn signature_exact(m: &[Vec<Rational>]) -> Result<Signature> {
    let n = m.len();
    if m.iter().any(|r| r.len() != n) {
        return Err(Error::Shape("matrix is not square".into()));
    }
    for i in 0..n {
        for j in 0..i {
            if m[i][j] != m[j][i] {
                return Err(Error::Shape(format!("matrix is not symmetric at ({i},{j})")));
            }
        }
    }
    let mut a: Vec<Vec<Rational>> = m.to_vec();
    let mut live: Vec<usize> = (0..n).collect();
    let mut s = Signature { pos: 0, neg: 0, zero: 0 };
    while !live.is_empty() {
        if let Some(&p) = live.iter().find(|&&i| !a[i][i].is_zero()) {
            let d = a[p][p].clone();
            if d.is_positive() {
                s.pos += 1;
            } else {
                s.neg += 1;
            }
            live.retain(|&i| i != p);
            let col: Vec<Rational> = live.iter().map(|&i| a[i][p].clone()).collect();
            for (x, &i) in live.iter().enumerate() {
                if col[x].is_zero() {
                    continue;
                }
                let f = &col[x] / &d;
                for (y, &j) in live.iter().enumerate() {
                    if !col[y].is_zero() {
                        let delta = &f * &col[y];
                        a[i][j] -= delta;
                    }
                }
            }
            continue;
        }
        let pair = live.iter().enumerate().find_map(|(x, &i)| {
            live[x + 1..].iter().find(|&&j| !a[i][j].is_zero()).map(|&j| (i, j))
        });
        let Some((p, q)) = pair else {
            s.zero += live.len();
            break;
        };
        // Block B = [[0,b],[b,0]], B⁻¹ = [[0,1/b],[1/b,0]].
        s.pos += 1;
        s.neg += 1;
        let b = a[p][q].clone();
        live.retain(|&i| i != p && i != q);
        let cp: Vec<Rational> = live.iter().map(|&i| a[i][p].clone()).collect();
        let cq: Vec<Rational> = live.iter().map(|&i| a[i][q].clone()).collect();
        for (x, &i) in live.iter().enumerate() {
            for (y, &j) in live.iter().enumerate() {
                let t = &cp[x] * &cq[y] + &cq[x] * &cp[y];
                if !t.is_zero() {
                    a[i][j] -= t / &b;
                }
            }
        }
    }
    Ok(s)
}

/// Reduced row echelon form in place; returns the pivot columns.
pub fn rref(rows: &mut [Vec<Rational>]) -> Vec<usize> {
    let ncols = rows.first().map_or(0, Vec::len);
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        let Some(p) = (r..rows.len()).find(|&i| !rows[i][c].is_zero()) else { continue };
        rows.swap(r, p);
        let inv = rows[r][c].recip();
        for v in rows[r].iter_mut() {
            *v = &*v * &inv;
        }
        for i in 0..rows.len() {
            if i != r && !rows[i][c].is_zero() {
                let f = rows[i][c].clone();
                let pivot_row = rows[r].clone();
                for (v, w) in rows[i].iter_mut().zip(pivot_row.iter()) {
                    *v -= &f * w;
                }
            }
        }
        pivots.push(c);
        r += 1;
        if r == rows.len() {
            break;
        }
    }
    pivots
}

/// Basis of {x : R x = 0} for the row set R (each row of length `ncols`).
pub fn nullspace(rows: &[Vec<Rational>], ncols: usize) -> Vec<Vec<Rational>> {
    let mut m: Vec<Vec<Rational>> = rows.to_vec();
    let pivots = if m.is_empty() { Vec::new() } else { rref(&mut m) };
    let free: Vec<usize> = (0..ncols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![Rational::zero(); ncols];
            v[f] = Rational::from_integer(1.into());
            for (r, &pc) in pivots.iter().enumerate() {
                v[pc] = -m[r][f].clone();
            }
            v
        })
        .collect()
}

/// Ordinary least-squares slope and intercept of y against x.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    if x.len() != y.len() {
        return Err(Error::Fit("x and y lengths differ".into()));
    }
    if x.len() < 2 {
        return Err(Error::Fit("need at least two points".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(Error::Fit("x values are all equal".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    if !slope.is_finite() {
        return Err(Error::Fit("non-finite slope".into()));
    }
    Ok((slope, my - slope * mx))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Scalar;

    fn q(v: i64) -> Rational {
        Rational::of_i64(v)
    }

    #[test]
    fn hyperbolic_and_diagonal() {
        let h = vec![vec![q(0), q(1)], vec![q(1), q(0)]];
        assert_eq!(signature_exact(&h).unwrap(), Signature { pos: 1, neg: 1, zero: 0 });
        let d = vec![vec![q(2), q(0), q(0)], vec![q(0), q(-3), q(0)], vec![q(0), q(0), q(0)]];
        assert_eq!(signature_exact(&d).unwrap(), Signature { pos: 1, neg: 1, zero: 1 });
        let asym = vec![vec![q(0), q(1)], vec![q(2), q(0)]];
        assert!(matches!(signature_exact(&asym), Err(Error::Shape(_))));
    }

    #[test]
    fn float_rejects_asymmetry() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        assert!(matches!(signature(&m, 1e-9), Err(Error::Shape(_))));
    }

    #[test]
    fn nullspace_of_single_row() {
        let ns = nullspace(&[vec![q(1), q(-1), q(0)]], 3);
        assert_eq!(ns.len(), 2);
        for v in ns {
            assert_eq!(&v[0] - &v[1], q(0));
        }
    }

    #[test]
    fn fit_rejects_single_point() {
        assert!(linear_fit(&[1.0], &[2.0]).is_err());
        let (s, c) = linear_fit(&[0.0, 1.0, 2.0], &[1.0, 3.0, 5.0]).unwrap();
        assert!((s - 2.0).abs() < 1e-12 && (c - 1.0).abs() < 1e-12);
    }
}
