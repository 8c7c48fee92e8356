//! Dense linear algebra kernels: a cyclic Jacobi eigensolver for symmetric matrices
//! and an LU solve with a singularity guard.

use nalgebra::{DMatrix, DVector};

const MAX_SWEEPS: usize = 64;

/// Largest `|a_ij − a_ji|`.
pub fn max_asymmetry(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    worst
}

/// Eigenvalues of a symmetric matrix, sorted descending, by cyclic Jacobi rotations.
///
/// Only the upper triangle is read. The matrix must be square.
pub fn symmetric_eigenvalues(a: &DMatrix<f64>) -> Vec<f64> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "matrix must be square");
    // row-major working copy, symmetrised from the upper triangle
    let mut w = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            w[i * n + j] = a[(i, j)];
            w[j * n + i] = a[(i, j)];
        }
    }
    let frob = w.iter().map(|x| x * x).sum::<f64>().sqrt();
    if frob == 0.0 {
        return vec![0.0; n];
    }
    let skip = 1e-18 * frob;

    for _ in 0..MAX_SWEEPS {
        let off = (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .map(|(i, j)| 2.0 * w[i * n + j] * w[i * n + j])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-14 * frob {
            break;
        }
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = w[p * n + q];
                if apq.abs() <= skip {
                    continue;
                }
                rotated = true;
                let app = w[p * n + p];
                let aqq = w[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    if k == p || k == q {
                        continue;
                    }
                    let akp = w[k * n + p];
                    let akq = w[k * n + q];
                    let new_kp = c * akp - s * akq;
                    let new_kq = s * akp + c * akq;
                    w[k * n + p] = new_kp;
                    w[p * n + k] = new_kp;
                    w[k * n + q] = new_kq;
                    w[q * n + k] = new_kq;
                }
                w[p * n + p] = app - t * apq;
                w[q * n + q] = aqq + t * apq;
                w[p * n + q] = 0.0;
                w[q * n + p] = 0.0;
            }
        }
        if !rotated {
            break;
        }
    }

    let mut eigs: Vec<f64> = (0..n).map(|i| w[i * n + i]).collect();
    eigs.sort_by(|a, b| b.total_cmp(a));
    eigs
}

/// Solves `a x = b` by partially pivoted LU. Returns `None` when a pivot falls below
/// `1e−13 · max(1, max|a_ij|)`.
pub fn solve_dense(a: DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    let scale = a.amax().max(1.0);
    let lu = a.lu();
    let min_pivot = lu.u().diagonal().amin();
    if min_pivot.is_nan() || min_pivot <= 1e-13 * scale {
        return None;
    }
    lu.solve(b)
}
