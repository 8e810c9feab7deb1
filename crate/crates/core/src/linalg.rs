//! Real symmetric eigensolvers: Householder reduction followed by implicit QL
//! with Wilkinson-style shifts.
//!
//! `tridiagonal_first_components` runs the same QL iteration on a
//! tridiagonal matrix but rotates only the first row of the eigenvector
//! matrix, which is all a return amplitude `⟨1|e^{-iht}|1⟩` needs. That keeps
//! chains of a few thousand sites at `O(n²)`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

const MAX_QL_ITERATIONS: usize = 60;

/// Eigenvalues (ascending) and orthonormal eigenvectors (as columns).
pub fn symmetric_eigen(a: &DMatrix<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "matrix must be square");
    if n == 0 {
        return Ok((DVector::zeros(0), DMatrix::zeros(0, 0)));
    }
    // v is stored row-major: v[i * n + j]
    let mut v: Vec<f64> = (0..n * n).map(|k| a[(k / n, k % n)]).collect();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tred2(n, &mut v, &mut d, &mut e);
    tql2(n, Some(&mut v), &mut d, &mut e)?;
    let vals = DVector::from_vec(d);
    let vecs = DMatrix::from_fn(n, n, |i, j| v[i * n + j]);
    Ok((vals, vecs))
}

/// Eigenvalues of a symmetric tridiagonal matrix together with the first
/// component of each normalized eigenvector.
///
/// `diag` has length `n`, `off` length `n - 1` (`off[k]` couples `k` and `k+1`).
pub fn tridiagonal_first_components(diag: &[f64], off: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = diag.len();
    if n == 0 {
        return Ok((Vec::new(), Vec::new()));
    }
    assert_eq!(off.len() + 1, n, "off-diagonal must have n - 1 entries");
    let mut d = diag.to_vec();
    let mut e = vec![0.0; n];
    e[..n - 1].copy_from_slice(off);
    let mut first = vec![0.0; n];
    first[0] = 1.0;
    tql2_row(n, &mut first, &mut d, &mut e)?;
    Ok((d, first))
}

/// Householder reduction to tridiagonal form, accumulating the transformation
/// in `v`. On exit `d` holds the diagonal and `e[1..]` the sub-diagonal.
fn tred2(n: usize, v: &mut [f64], d: &mut [f64], e: &mut [f64]) {
    let idx = |i: usize, j: usize| i * n + j;
    for j in 0..n {
        d[j] = v[idx(n - 1, j)];
    }
    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for k in 0..i {
            scale += d[k].abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[idx(i - 1, j)];
                v[idx(i, j)] = 0.0;
                v[idx(j, i)] = 0.0;
            }
        } else {
            for k in 0..i {
                d[k] /= scale;
                h += d[k] * d[k];
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for j in 0..i {
                e[j] = 0.0;
            }
            for j in 0..i {
                f = d[j];
                v[idx(j, i)] = f;
                g = e[j] + v[idx(j, j)] * f;
                for k in (j + 1)..i {
                    g += v[idx(k, j)] * d[k];
                    e[k] += v[idx(k, j)] * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[idx(k, j)] -= f * e[k] + g * d[k];
                }
                d[j] = v[idx(i - 1, j)];
                v[idx(i, j)] = 0.0;
            }
        }
        d[i] = h;
    }
    for i in 0..n - 1 {
        v[idx(n - 1, i)] = v[idx(i, i)];
        v[idx(i, i)] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[idx(k, i + 1)] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[idx(k, i + 1)] * v[idx(k, j)];
                }
                for k in 0..=i {
                    v[idx(k, j)] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[idx(k, i + 1)] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[idx(n - 1, j)];
        v[idx(n - 1, j)] = 0.0;
    }
    v[idx(n - 1, n - 1)] = 1.0;
    e[0] = 0.0;
}

/// Implicit QL on the tridiagonal `(d, e[1..])`, with the rotations applied to
/// the rows of `v` when given. Eigenvalues end up sorted ascending.
fn tql2(n: usize, mut v: Option<&mut [f64]>, d: &mut [f64], e: &mut [f64]) -> Result<()> {
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    ql_iterate(n, d, e, |i, c, s| {
        if let Some(v) = v.as_deref_mut() {
            for k in 0..n {
                let h = v[k * n + i + 1];
                v[k * n + i + 1] = s * v[k * n + i] + c * h;
                v[k * n + i] = c * v[k * n + i] - s * h;
            }
        }
    })?;
    // selection sort keeps the column permutation cheap to apply
    for i in 0..n.saturating_sub(1) {
        let mut k = i;
        let mut p = d[i];
        for j in (i + 1)..n {
            if d[j] < p {
                k = j;
                p = d[j];
            }
        }
        if k != i {
            d[k] = d[i];
            d[i] = p;
            if let Some(v) = v.as_deref_mut() {
                for r in 0..n {
                    v.swap(r * n + i, r * n + k);
                }
            }
        }
    }
    Ok(())
}

/// `tql2` variant that tracks a single row of the eigenvector matrix.
/// `e` holds the off-diagonal in `e[0..n-1]` on entry.
fn tql2_row(n: usize, row: &mut [f64], d: &mut [f64], e: &mut [f64]) -> Result<()> {
    ql_iterate(n, d, e, |i, c, s| {
        let h = row[i + 1];
        row[i + 1] = s * row[i] + c * h;
        row[i] = c * row[i] - s * h;
    })?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    let (ds, rs): (Vec<f64>, Vec<f64>) = order.iter().map(|&k| (d[k], row[k])).unzip();
    d.copy_from_slice(&ds);
    row.copy_from_slice(&rs);
    Ok(())
}

/// Core QL sweep; `rotate(i, c, s)` applies each Givens rotation on columns
/// `i, i+1` of the eigenvector matrix. `e[0..n-1]` is the off-diagonal.
fn ql_iterate<F: FnMut(usize, f64, f64)>(
    n: usize,
    d: &mut [f64],
    e: &mut [f64],
    mut rotate: F,
) -> Result<()> {
    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    let eps = f64::EPSILON;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m == n {
            m = n - 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > MAX_QL_ITERATIONS {
                    return Err(Error::Diagonalization(format!(
                        "QL iteration did not converge for eigenvalue {l} of {n}"
                    )));
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().take(n).skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    rotate(i, c, s);
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_symmetric(n: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        (&a + a.transpose()) * 0.5
    }

    fn check(a: &DMatrix<f64>) {
        let (vals, vecs) = symmetric_eigen(a).unwrap();
        let n = a.nrows();
        let resid = a * &vecs - &vecs * DMatrix::from_diagonal(&vals);
        assert!(resid.amax() < 1e-13 * (1.0 + a.amax()) * n as f64, "residual {}", resid.amax());
        let ortho = vecs.transpose() * &vecs - DMatrix::identity(n, n);
        assert!(ortho.amax() < 1e-13 * n as f64, "orthogonality {}", ortho.amax());
        for w in vals.as_slice().windows(2) {
            assert!(w[0] <= w[1]);
        }
    }

    #[test]
    fn random_matrices_decompose() {
        for (n, seed) in [(1, 0), (2, 1), (3, 2), (10, 3), (57, 4), (120, 5)] {
            check(&random_symmetric(n, seed));
        }
    }

    #[test]
    fn degenerate_spectrum() {
        // chain with many degenerate levels after symmetrization
        let n = 40;
        let mut a = DMatrix::zeros(n, n);
        for k in 0..n {
            a[(k, (k + 1) % n)] = 0.5;
            a[((k + 1) % n, k)] = 0.5;
        }
        check(&a);
        check(&DMatrix::identity(7, 7));
        check(&DMatrix::zeros(5, 5));
    }

    #[test]
    fn two_by_two_closed_form() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 0.5, 0.5, 0.0]);
        let (vals, _) = symmetric_eigen(&a).unwrap();
        assert!((vals[0] + 0.5).abs() < 1e-15 && (vals[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn first_components_match_full_solver() {
        let n = 30;
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let diag: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let off: Vec<f64> = (0..n - 1).map(|_| rng.gen_range(0.1..1.0)).collect();
        let mut a = DMatrix::from_diagonal(&DVector::from_vec(diag.clone()));
        for k in 0..n - 1 {
            a[(k, k + 1)] = off[k];
            a[(k + 1, k)] = off[k];
        }
        let (vals, vecs) = symmetric_eigen(&a).unwrap();
        let (tvals, first) = tridiagonal_first_components(&diag, &off).unwrap();
        for k in 0..n {
            assert!((vals[k] - tvals[k]).abs() < 1e-13);
            assert!((vecs[(0, k)].powi(2) - first[k].powi(2)).abs() < 1e-13);
        }
        let total: f64 = first.iter().map(|x| x * x).sum();
        assert!((total - 1.0).abs() < 1e-13);
    }
}
