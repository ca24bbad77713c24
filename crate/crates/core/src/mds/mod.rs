// SPDX-License-Identifier: Apache-2.0

//! Classical multidimensional scaling and the centralized MDS-MAP pipeline.

pub mod eigen;
pub mod lanczos;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::network::MeasurementGraph;
use crate::paths::{shortest_paths, squared_matrix};
use eigen::check_symmetric;
use lanczos::{top_eigenpairs, Target};

/// The centering projector `L = I - 𝟙𝟙ᵀ/n`, applied without forming it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CenteringOperator {
    pub n: usize,
}

impl CenteringOperator {
    /// `L A`: subtract column means.
    pub fn apply_left(&self, a: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = a.clone();
        for mut col in out.column_iter_mut() {
            let mean = col.mean();
            col.add_scalar_mut(-mean);
        }
        out
    }

    /// `L A L` for square `A`.
    pub fn apply_both(&self, a: &DMatrix<f64>) -> DMatrix<f64> {
        let n = a.nrows();
        let rows: Vec<f64> = a.row_iter().map(|r| r.mean()).collect();
        let cols: Vec<f64> = a.column_iter().map(|c| c.mean()).collect();
        let grand = rows.iter().sum::<f64>() / n as f64;
        DMatrix::from_fn(n, n, |i, j| a[(i, j)] - rows[i] - cols[j] + grand)
    }

    /// The projector as an explicit matrix.
    pub fn matrix(&self) -> DMatrix<f64> {
        let n = self.n as f64;
        DMatrix::from_fn(self.n, self.n, |i, j| if i == j { 1.0 } else { 0.0 } - 1.0 / n)
    }
}

/// `M = -½ L D̂ L` for a symmetric matrix of squared distance estimates.
/// The diagonal of `D̂` is taken to be zero.
pub fn double_center(dhat_sq: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if dhat_sq.nrows() == 0 {
        return Err(Error::Empty("distance matrix"));
    }
    check_symmetric(dhat_sq)?;
    let mut d = dhat_sq.clone();
    d.fill_diagonal(0.0);
    let mut m = CenteringOperator { n: d.nrows() }.apply_both(&d);
    m *= -0.5;
    // exact symmetry for the eigensolver
    let n = m.nrows();
    for i in 0..n {
        for j in i + 1..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    Ok(m)
}

/// A relative map: centered coordinates, determined up to a rigid motion.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    /// `n × d`, columns centered.
    pub coords: DMatrix<f64>,
    /// The `d` leading eigenvalues of `M`, descending, before clamping.
    pub eigenvalues: Vec<f64>,
    /// Fewer than `d` eigenvalues were positive (relative to the largest).
    pub degenerate: bool,
}

/// Rank-`d` embedding `X̂ = U_d Σ_d^{1/2}` of the double-centered `D̂`.
/// Negative eigenvalues are clamped to zero.
pub fn mds_embed(dhat_sq: &DMatrix<f64>, d: usize) -> Result<Embedding> {
    let m = double_center(dhat_sq)?;
    let n = m.nrows();
    if d == 0 || d > n {
        return Err(Error::InvalidParameter(format!("cannot embed {n} points in {d} dimensions")));
    }
    let top = top_eigenpairs(&m, d, Target::Largest)?;
    let mut coords = DMatrix::zeros(n, d);
    for (c, &lambda) in top.values.iter().enumerate() {
        let s = lambda.max(0.0).sqrt();
        coords.set_column(c, &(top.vectors.column(c) * s));
    }
    let coords = CenteringOperator { n }.apply_left(&coords);
    let tol = 1e-10 * top.values[0].abs();
    Ok(Embedding {
        coords,
        degenerate: top.values.iter().filter(|&&v| v > tol).count() < d,
        eigenvalues: top.values,
    })
}

/// Shortest paths, squared estimates and classical MDS on one graph.
/// Errors with [`Error::Unreachable`] when the graph is disconnected.
pub fn mds_map(graph: &MeasurementGraph, d: usize) -> Result<Embedding> {
    let h = shortest_paths(graph);
    mds_embed(&squared_matrix(&h)?, d)
}
