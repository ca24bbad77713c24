// SPDX-License-Identifier: Apache-2.0

//! Extremal eigenpairs of large symmetric matrices by Lanczos iteration with
//! full reorthogonalization.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::eigen::{check_symmetric, symmetric_eigen, SpectralDecomposition};
use crate::error::{Error, Result};

/// Which end of the spectrum to return.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    /// Algebraically largest.
    Largest,
    /// Largest in absolute value.
    LargestMagnitude,
}

const RELATIVE_TOLERANCE: f64 = 1e-12;

/// The `k` wanted eigenpairs of a symmetric matrix, ordered by the target
/// criterion (descending value or descending magnitude).
///
/// Small matrices are handed to the dense solver directly.
pub fn top_eigenpairs(a: &DMatrix<f64>, k: usize, target: Target) -> Result<SpectralDecomposition> {
    check_symmetric(a)?;
    let n = a.nrows();
    if k == 0 {
        return Ok(SpectralDecomposition {
            values: Vec::new(),
            vectors: DMatrix::zeros(n, 0),
        });
    }
    if k > n {
        return Err(Error::InvalidParameter(format!("{k} eigenpairs requested of a {n}x{n} matrix")));
    }
    if n <= 64 {
        let full = symmetric_eigen(a)?;
        return Ok(select(&full.values, &full.vectors, k, target));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(0x1a2c_2052);
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut q = random_unit(n, &mut rng, &basis).ok_or(Error::RankDeficient)?;
    let mut w = DVector::zeros(n);
    let mut next_check = (2 * k + 10).min(n);
    let mut scale = 0.0f64;

    loop {
        w.gemv(1.0, a, &q, 0.0);
        let alpha = q.dot(&w);
        w.axpy(-alpha, &q, 1.0);
        if let (Some(prev), Some(&b)) = (basis.last(), betas.last()) {
            w.axpy(-b, prev, 1.0);
        }
        basis.push(q.clone());
        alphas.push(alpha);
        for _ in 0..2 {
            for v in &basis {
                let c = v.dot(&w);
                w.axpy(-c, v, 1.0);
            }
        }
        let mut beta = w.norm();
        scale = scale.max(alpha.abs() + beta);
        let steps = basis.len();

        let breakdown = beta <= 1e-14 * scale.max(f64::MIN_POSITIVE);
        if steps >= next_check || steps == n || breakdown {
            let t = tridiagonal(&alphas, &betas);
            let ritz = symmetric_eigen(&t)?;
            let wanted = select_indices(&ritz.values, k, target);
            let anorm = ritz.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let residual_ok = wanted.iter().all(|&i| {
                let r = if breakdown { 0.0 } else { beta * ritz.vectors[(steps - 1, i)].abs() };
                r <= RELATIVE_TOLERANCE * anorm.max(f64::MIN_POSITIVE)
            });
            if (residual_ok && wanted.len() == k) || steps == n {
                return Ok(ritz_pairs(&basis, &ritz, &wanted));
            }
            next_check = (steps + steps / 4).max(steps + 5).min(n);
        }

        if breakdown {
            // invariant subspace found; continue in its orthogonal complement
            match random_unit(n, &mut rng, &basis) {
                Some(fresh) => {
                    q = fresh;
                    beta = 0.0;
                }
                None => {
                    let t = tridiagonal(&alphas, &betas);
                    let ritz = symmetric_eigen(&t)?;
                    let wanted = select_indices(&ritz.values, k, target);
                    return Ok(ritz_pairs(&basis, &ritz, &wanted));
                }
            }
        } else {
            q = &w / beta;
        }
        betas.push(beta);
    }
}

fn random_unit(n: usize, rng: &mut ChaCha8Rng, basis: &[DVector<f64>]) -> Option<DVector<f64>> {
    for _ in 0..8 {
        let mut v = DVector::from_fn(n, |_, _| rng.gen::<f64>() - 0.5);
        for _ in 0..2 {
            for b in basis {
                let c = b.dot(&v);
                v.axpy(-c, b, 1.0);
            }
        }
        let norm = v.norm();
        if norm > 1e-8 {
            return Some(v / norm);
        }
    }
    None
}

fn tridiagonal(alphas: &[f64], betas: &[f64]) -> DMatrix<f64> {
    let m = alphas.len();
    DMatrix::from_fn(m, m, |i, j| {
        if i == j {
            alphas[i]
        } else if i + 1 == j {
            betas[i]
        } else if j + 1 == i {
            betas[j]
        } else {
            0.0
        }
    })
}

fn select_indices(values: &[f64], k: usize, target: Target) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    if target == Target::LargestMagnitude {
        idx.sort_by(|&i, &j| values[j].abs().total_cmp(&values[i].abs()));
    }
    idx.truncate(k);
    idx
}

fn select(values: &[f64], vectors: &DMatrix<f64>, k: usize, target: Target) -> SpectralDecomposition {
    let idx = select_indices(values, k, target);
    SpectralDecomposition {
        values: idx.iter().map(|&i| values[i]).collect(),
        vectors: DMatrix::from_fn(vectors.nrows(), idx.len(), |r, c| vectors[(r, idx[c])]),
    }
}

fn ritz_pairs(basis: &[DVector<f64>], ritz: &SpectralDecomposition, wanted: &[usize]) -> SpectralDecomposition {
    let n = basis[0].len();
    let mut vectors = DMatrix::zeros(n, wanted.len());
    for (c, &i) in wanted.iter().enumerate() {
        let mut col = vectors.column_mut(c);
        for (j, b) in basis.iter().enumerate() {
            col.axpy(ritz.vectors[(j, i)], b, 1.0);
        }
        let norm = col.norm();
        col /= norm;
    }
    SpectralDecomposition {
        values: wanted.iter().map(|&i| ritz.values[i]).collect(),
        vectors,
    }
}

/// `‖A‖₂` of a symmetric matrix.
pub fn symmetric_norm(a: &DMatrix<f64>) -> Result<f64> {
    if a.nrows() == 0 {
        return Ok(0.0);
    }
    Ok(top_eigenpairs(a, 1, Target::LargestMagnitude)?.values[0].abs())
}
