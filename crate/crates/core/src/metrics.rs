// SPDX-License-Identifier: Apache-2.0

//! Error metrics, the closed-form bounds and the numerical checks built on them.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::geometry::{check_dimension, make_anchors, AnchorMode, Seed};
use crate::hopterrain::LaterationSystem;
use crate::mds::eigen::{check_symmetric, symmetric_eigen};
use crate::mds::lanczos::symmetric_norm;
use crate::mds::CenteringOperator;
use crate::network::MeasurementGraph;
use crate::paths::all_pairs_hops;

fn same_shape(x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<()> {
    if x.shape() != y.shape() {
        return Err(Error::ShapeMismatch(format!(
            "{}x{} versus {}x{}",
            x.nrows(),
            x.ncols(),
            y.nrows(),
            y.ncols()
        )));
    }
    if x.nrows() == 0 {
        return Err(Error::Empty("configuration"));
    }
    Ok(())
}

/// `(1/n) ‖L X Xᵀ L - L X̂ X̂ᵀ L‖_F`, invariant under rigid motions of either argument.
///
/// The Gram difference is summed entry by entry; expanding it into traces
/// loses too many digits when the two configurations nearly agree.
pub fn d_inv(x: &DMatrix<f64>, xhat: &DMatrix<f64>) -> Result<f64> {
    same_shape(x, xhat)?;
    let n = x.nrows();
    let l = CenteringOperator { n };
    // row-major copies of the centred coordinates
    let flat = |m: &DMatrix<f64>| -> Vec<f64> {
        let c = l.apply_left(m);
        (0..n).flat_map(|i| (0..c.ncols()).map(move |k| (i, k))).map(|(i, k)| c[(i, k)]).collect()
    };
    let (a, b) = (flat(x), flat(xhat));
    let (da, db) = (x.ncols(), xhat.ncols());
    let mut sum = 0.0;
    for i in 0..n {
        let (ai, bi) = (&a[i * da..(i + 1) * da], &b[i * db..(i + 1) * db]);
        for j in 0..n {
            let (aj, bj) = (&a[j * da..(j + 1) * da], &b[j * db..(j + 1) * db]);
            let g: f64 = ai.iter().zip(aj).map(|(p, q)| p * q).sum::<f64>()
                - bi.iter().zip(bj).map(|(p, q)| p * q).sum::<f64>();
            sum += g * g;
        }
    }
    Ok(sum.sqrt() / n as f64)
}

/// Best linear map from the centred estimate onto the centred truth.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformFit {
    /// `d × d`, minimizing `‖L X - L X̂ S‖_F`.
    pub s: DMatrix<f64>,
    /// `(1/√n)` times the minimum.
    pub error: f64,
}

/// Least-squares fit of `S`; errors when `L X̂` is rank deficient.
pub fn optimal_transform_error(x: &DMatrix<f64>, xhat: &DMatrix<f64>) -> Result<TransformFit> {
    same_shape(x, xhat)?;
    let l = CenteringOperator { n: x.nrows() };
    let (y, yhat) = (l.apply_left(x), l.apply_left(xhat));
    let gram = yhat.transpose() * &yhat;
    let eig = symmetric_eigen(&gram)?;
    let (hi, lo) = (eig.values[0], *eig.values.last().unwrap());
    if !(lo > 1e-12 * hi) {
        return Err(Error::RankDeficient);
    }
    let s = gram.try_inverse().ok_or(Error::RankDeficient)? * yhat.transpose() * &y;
    let error = (&y - &yhat * &s).norm() / (x.nrows() as f64).sqrt();
    Ok(TransformFit { s, error })
}

/// `√((1/|mask|) Σ ‖xᵢ - x̂ᵢ‖²)` over the rows selected by `mask`.
pub fn rmse(x: &DMatrix<f64>, xhat: &DMatrix<f64>, mask: &[bool]) -> Result<f64> {
    same_shape(x, xhat)?;
    if mask.len() != x.nrows() {
        return Err(Error::ShapeMismatch("mask length".into()));
    }
    let rows: Vec<usize> = (0..x.nrows()).filter(|&i| mask[i]).collect();
    if rows.is_empty() {
        return Err(Error::Empty("mask"));
    }
    let sum: f64 = rows.iter().map(|&i| (x.row(i) - xhat.row(i)).norm_squared()).sum();
    Ok((sum / rows.len() as f64).sqrt())
}

/// The radii appearing in the error and hop-count bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundSet {
    pub n: usize,
    pub d: usize,
    pub alpha: f64,
    pub r_tilde: f64,
    pub r_mds: f64,
    pub r_hop: f64,
    pub r_critical: f64,
}

impl BoundSet {
    /// Envelope `R_MDS / R + 20 R` on `d_inv` at radio range `R`.
    pub fn mds_envelope(&self, range: f64) -> f64 {
        self.r_mds / range + 20.0 * range
    }

    /// Right-hand side of the hop-count bound for a pair at distance `z`.
    pub fn hop_bound(&self, z: f64, range: f64) -> f64 {
        (1.0 + self.r_tilde / range) * z / range + 2.0
    }
}

/// Evaluate the bound radii; `r_critical` uses the unit-ball volume (`π` or `4π/3`).
pub fn bounds(n: usize, d: usize, alpha: f64) -> Result<BoundSet> {
    check_dimension(d)?;
    if n < 3 {
        return Err(Error::InvalidParameter(format!("bounds need n >= 3, got {n}")));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidParameter(format!("alpha {alpha} must lie in (0, 1]")));
    }
    let nf = n as f64;
    let base = (12.0 * nf.ln() / (alpha * (nf - 2.0))).powf(1.0 / d as f64);
    let ball = if d == 2 {
        std::f64::consts::PI
    } else {
        4.0 * std::f64::consts::PI / 3.0
    };
    Ok(BoundSet {
        n,
        d,
        alpha,
        r_tilde: 2.0 * base,
        r_mds: 32.0 * base,
        r_hop: 12.0 * base,
        r_critical: (nf.ln() / (ball * nf)).powf(1.0 / d as f64),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Disc {
    pub center: f64,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GershgorinBounds {
    pub discs: Vec<Disc>,
    pub lower: f64,
    pub upper: f64,
}

impl GershgorinBounds {
    pub fn contains(&self, lambda: f64, slack: f64) -> bool {
        self.discs.iter().any(|d| (lambda - d.center).abs() <= d.radius + slack)
    }
}

/// Row discs `(aᵢᵢ, Σ_{j≠i} |aᵢⱼ|)`.
pub fn gershgorin_eigen_bounds(a: &DMatrix<f64>) -> Result<GershgorinBounds> {
    if !a.is_square() {
        return Err(Error::ShapeMismatch("Gershgorin discs need a square matrix".into()));
    }
    let discs: Vec<Disc> = (0..a.nrows())
        .map(|i| Disc {
            center: a[(i, i)],
            radius: (0..a.ncols()).filter(|&j| j != i).map(|j| a[(i, j)].abs()).sum(),
        })
        .collect();
    Ok(GershgorinBounds {
        lower: discs.iter().map(|d| d.center - d.radius).fold(f64::INFINITY, f64::min),
        upper: discs.iter().map(|d| d.center + d.radius).fold(f64::NEG_INFINITY, f64::max),
        discs,
    })
}

/// `‖A‖₂`. Symmetric matrices use their extremal eigenvalue, anything else
/// `√λ_max` of the smaller Gram matrix.
pub fn spectral_norm(a: &DMatrix<f64>) -> Result<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Ok(0.0);
    }
    if a.is_square() && check_symmetric(a).is_ok() {
        return symmetric_norm(a);
    }
    let gram = if a.nrows() >= a.ncols() {
        a.transpose() * a
    } else {
        a * a.transpose()
    };
    Ok(symmetric_norm(&gram)?.max(0.0).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HopLemmaReport {
    pub pairs: usize,
    pub violations: usize,
    /// Largest `hᵢⱼ / bound` over reachable pairs.
    pub worst_ratio: f64,
    pub unreachable: usize,
}

/// Check `hᵢⱼ ≤ (1 + R̃/R) dᵢⱼ / R + 2` over all pairs `i < j`.
///
/// `coords` are indexed by graph node id. Unreachable pairs are counted
/// separately and not as violations.
pub fn verify_hop_lemma(graph: &MeasurementGraph, coords: &DMatrix<f64>, alpha: f64) -> Result<HopLemmaReport> {
    if coords.nrows() != graph.node_count {
        return Err(Error::ShapeMismatch("one coordinate row per node expected".into()));
    }
    let b = bounds(graph.node_count, coords.ncols(), alpha)?;
    let range = graph.model.range;
    let h = all_pairs_hops(graph);
    let rows: Vec<Vec<f64>> = coords.row_iter().map(|r| r.iter().copied().collect()).collect();
    let mut report = HopLemmaReport {
        pairs: 0,
        violations: 0,
        worst_ratio: 0.0,
        unreachable: 0,
    };
    for i in 0..graph.node_count {
        for j in i + 1..graph.node_count {
            report.pairs += 1;
            let Some(hops) = h.hops(i, j) else {
                report.unreachable += 1;
                continue;
            };
            let z = crate::network::distance(&rows[i], &rows[j]);
            let bound = b.hop_bound(z, range);
            let hops = hops as f64;
            if hops > bound {
                report.violations += 1;
            }
            report.worst_ratio = report.worst_ratio.max(hops / bound);
        }
    }
    Ok(report)
}

/// Smallest singular value of `L X`.
pub fn verify_sigma_min(x: &DMatrix<f64>) -> Result<f64> {
    if x.nrows() < x.ncols() {
        return Err(Error::InvalidParameter("need at least d points".into()));
    }
    let lx = CenteringOperator { n: x.nrows() }.apply_left(x);
    let eig = symmetric_eigen(&(lx.transpose() * &lx))?;
    Ok(eig.values.last().copied().unwrap_or(0.0).max(0.0).sqrt())
}

/// Both sides of `n · d_inv(X, X̂) ≤ √(2d) ‖D̂ - D‖₂`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormChain {
    pub lhs: f64,
    pub rhs: f64,
}

impl NormChain {
    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs * (1.0 + 1e-9) + 1e-12
    }
}

/// `dhat_sq` holds the squared estimates used to produce `xhat`.
pub fn norm_chain(x: &DMatrix<f64>, xhat: &DMatrix<f64>, dhat_sq: &DMatrix<f64>) -> Result<NormChain> {
    same_shape(x, xhat)?;
    let n = x.nrows();
    if dhat_sq.shape() != (n, n) {
        return Err(Error::ShapeMismatch("distance matrix size".into()));
    }
    let rows: Vec<Vec<f64>> = x.row_iter().map(|r| r.iter().copied().collect()).collect();
    let mut z = DMatrix::from_fn(n, n, |i, j| {
        let t = crate::network::distance(&rows[i], &rows[j]);
        dhat_sq[(i, j)] - t * t
    });
    z.fill_diagonal(0.0);
    Ok(NormChain {
        lhs: n as f64 * d_inv(x, xhat)?,
        rhs: (2.0 * x.ncols() as f64).sqrt() * spectral_norm(&z)?,
    })
}

/// `‖(AᵀA)⁻¹Aᵀ‖₂` for the lateration matrix of the given anchor rows.
pub fn lateration_gain(anchor_positions: &DMatrix<f64>) -> Result<f64> {
    let a = LaterationSystem::new(anchor_positions)?.a;
    let p = (a.transpose() * &a).try_inverse().ok_or(Error::RankDeficient)? * a.transpose();
    spectral_norm(&p)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnchorGainCheck {
    pub d: usize,
    pub value: f64,
    pub bound: f64,
}

impl AnchorGainCheck {
    pub fn pass(&self) -> bool {
        self.value <= self.bound
    }

    pub fn gap(&self) -> f64 {
        self.bound - self.value
    }
}

/// Gain of the unit-simplex anchors against `d / 2`.
pub fn deterministic_anchor_check(d: usize) -> Result<AnchorGainCheck> {
    let anchors = make_anchors(AnchorMode::UnitSimplex, d, d + 1, Seed::new(0, 0))?;
    Ok(AnchorGainCheck {
        d,
        value: lateration_gain(&anchors.positions)?,
        bound: d as f64 / 2.0,
    })
}

/// `B = AᵀA` for `m` uniformly placed anchors.
pub fn random_anchor_gram(m: usize, d: usize, seed: Seed) -> Result<DMatrix<f64>> {
    let anchors = make_anchors(AnchorMode::RandomSubset(m), d, m, seed)?;
    let a = LaterationSystem::new(&anchors.positions)?.a;
    Ok(a.transpose() * a)
}

pub fn lambda_min(b: &DMatrix<f64>) -> Result<f64> {
    Ok(*symmetric_eigen(b)?.values.last().ok_or(Error::Empty("matrix"))?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Concentration {
    /// `maxᵢ |bᵢᵢ - 2(m-1)/3|`.
    pub diagonal_deviation: f64,
    /// `max_{i≠j} |bᵢⱼ|`.
    pub off_diagonal: f64,
    pub diagonal_bound: f64,
    pub off_diagonal_bound: f64,
}

impl Concentration {
    pub fn diagonal_ok(&self) -> bool {
        self.diagonal_deviation <= self.diagonal_bound
    }

    pub fn off_diagonal_ok(&self) -> bool {
        self.off_diagonal <= self.off_diagonal_bound
    }
}

/// Entry deviations of `B` against `4 m^{1/2+ε}` and `16 m^{1/2+ε}`.
pub fn concentration(b: &DMatrix<f64>, m: usize, eps: f64) -> Concentration {
    let mf = m as f64;
    let mean = 2.0 * (mf - 1.0) / 3.0;
    let d = b.nrows();
    let mut diag = 0.0f64;
    let mut off = 0.0f64;
    for i in 0..d {
        diag = diag.max((b[(i, i)] - mean).abs());
        for j in 0..d {
            if i != j {
                off = off.max(b[(i, j)].abs());
            }
        }
    }
    let scale = mf.powf(0.5 + eps);
    Concentration {
        diagonal_deviation: diag,
        off_diagonal: off,
        diagonal_bound: 4.0 * scale,
        off_diagonal_bound: 16.0 * scale,
    }
}

/// Required success fraction `1 - 4 exp(-m^{2ε})`.
pub fn concentration_fraction(m: usize, eps: f64) -> f64 {
    1.0 - 4.0 * (-(m as f64).powf(2.0 * eps)).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bound_values() {
        let b = bounds(1000, 2, 1.0).unwrap();
        assert!((b.r_mds - 9.222).abs() < 1e-3, "{}", b.r_mds);
        assert!((b.r_mds / b.r_tilde - 16.0).abs() < 1e-12);
        assert!((b.r_hop / b.r_tilde - 6.0).abs() < 1e-12);
        assert!(bounds(2, 2, 1.0).is_err());
        assert!(bounds(10, 2, 0.0).is_err());
    }

    #[test]
    fn rmse_three_four_five() {
        let x = DMatrix::from_row_slice(1, 2, &[0.0, 0.0]);
        let y = DMatrix::from_row_slice(1, 2, &[0.3, 0.4]);
        assert!((rmse(&x, &y, &[true]).unwrap() - 0.5).abs() < 1e-15);
        assert!(matches!(rmse(&x, &y, &[false]), Err(Error::Empty(_))));
    }

    #[test]
    fn gershgorin_diagonal() {
        let a = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, -2.0]));
        let g = gershgorin_eigen_bounds(&a).unwrap();
        assert_eq!(g.discs, vec![Disc { center: 1.0, radius: 0.0 }, Disc { center: -2.0, radius: 0.0 }]);
        assert_eq!((g.lower, g.upper), (-2.0, 1.0));
    }

    #[test]
    fn sigma_min_of_identical_points() {
        let x = DMatrix::from_element(5, 2, 0.3);
        assert_eq!(verify_sigma_min(&x).unwrap(), 0.0);
    }

    #[test]
    fn transform_of_linear_image() {
        let x = DMatrix::from_row_slice(4, 2, &[0.1, 0.2, 0.9, 0.3, 0.4, 0.8, 0.5, 0.5]);
        let g = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 0.5, 1.5]);
        let fit = optimal_transform_error(&x, &(&x * &g)).unwrap();
        assert!(fit.error < 1e-12);
        assert!((fit.s - g.try_inverse().unwrap()).norm() < 1e-10);
        let flat = DMatrix::from_row_slice(4, 2, &[0.1, 0.0, 0.2, 0.0, 0.3, 0.0, 0.4, 0.0]);
        assert!(matches!(optimal_transform_error(&x, &flat), Err(Error::RankDeficient)));
    }

    #[test]
    fn spectral_norm_nonsquare() {
        let a = DMatrix::from_row_slice(2, 3, &[3.0, 0.0, 0.0, 0.0, 4.0, 0.0]);
        assert!((spectral_norm(&a).unwrap() - 4.0).abs() < 1e-12);
    }
}
