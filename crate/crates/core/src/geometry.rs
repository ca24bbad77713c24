// SPDX-License-Identifier: Apache-2.0

//! Node and anchor placement in the unit cube, plus the seed plumbing that
//! makes every random draw reproducible.
//!
//! All randomness is drawn from ChaCha8 streams keyed by
//! `(master, trial_index, purpose)`. ChaCha is counter based, so streams for
//! different purposes never overlap and any position inside a stream can be
//! reached by seeking, which is what the per-pair detection draws rely on.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Purpose tag mixed into the stream id so independent draws never share a stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Purpose {
    Placement = 1,
    Anchors = 2,
    Detection = 3,
}

/// Master seed plus trial index; together they determine every draw of a trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Seed {
    pub master: u64,
    pub trial_index: u64,
}

impl Seed {
    const MAX_TRIAL: u64 = 1 << 56;

    pub fn new(master: u64, trial_index: u64) -> Self {
        assert!(trial_index < Self::MAX_TRIAL, "trial index out of range");
        Seed {
            master,
            trial_index,
        }
    }

    /// Generator for one purpose of this trial.
    pub fn rng(&self, purpose: Purpose) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master);
        rng.set_stream((self.trial_index << 8) | purpose as u64);
        rng
    }

    /// A single 64-bit identifier of the trial, used in reports.
    pub fn key(&self) -> u64 {
        // splitmix64 finalizer over the pair
        let mut z = self
            .master
            .wrapping_add(self.trial_index.wrapping_mul(0x9E37_79B9_7F4A_7C15));
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
}

pub(crate) fn check_dimension(d: usize) -> Result<()> {
    if d == 2 || d == 3 {
        Ok(())
    } else {
        Err(Error::InvalidDimension(d))
    }
}

/// True node positions: an `n × d` matrix with every entry in `[0, 1]` and `d ∈ {2, 3}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PositionMatrix {
    coords: DMatrix<f64>,
}

impl PositionMatrix {
    pub fn new(coords: DMatrix<f64>) -> Result<Self> {
        check_dimension(coords.ncols())?;
        if let Some(bad) = coords.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidParameter(format!(
                "coordinate {bad} lies outside the unit cube"
            )));
        }
        Ok(PositionMatrix { coords })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::ShapeMismatch("ragged rows".into()));
        }
        Self::new(DMatrix::from_fn(rows.len(), d, |i, j| rows[i][j]))
    }

    pub fn n(&self) -> usize {
        self.coords.nrows()
    }

    pub fn d(&self) -> usize {
        self.coords.ncols()
    }

    pub fn coords(&self) -> &DMatrix<f64> {
        &self.coords
    }

    pub fn point(&self, i: usize) -> Vec<f64> {
        self.coords.row(i).iter().copied().collect()
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.coords
    }
}

/// `n` i.i.d. uniform points in `[0, 1]^d`.
pub fn place_uniform(n: usize, d: usize, seed: Seed) -> Result<PositionMatrix> {
    check_dimension(d)?;
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    Ok(PositionMatrix {
        coords: uniform_points(n, d, &mut seed.rng(Purpose::Placement)),
    })
}

// Row-major fill so that the first k rows do not depend on n.
fn uniform_points(n: usize, d: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, d);
    for i in 0..n {
        for j in 0..d {
            m[(i, j)] = rng.gen::<f64>();
        }
    }
    m
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnchorMode {
    /// No anchors (the centralized algorithm works on a relative map).
    Absent,
    /// `m` anchors drawn uniformly, independent of the unknown nodes.
    RandomSubset(usize),
    /// `d + 1` anchors at the origin and at the `d` standard unit vectors.
    UnitSimplex,
}

/// Anchor positions; rows are ordered by anchor id.
#[derive(Debug, Clone, PartialEq)]
pub struct AnchorLayout {
    pub mode: AnchorMode,
    pub positions: DMatrix<f64>,
}

impl AnchorLayout {
    pub fn empty(d: usize) -> Self {
        AnchorLayout {
            mode: AnchorMode::Absent,
            positions: DMatrix::zeros(0, d),
        }
    }

    pub fn m(&self) -> usize {
        self.positions.nrows()
    }

    pub fn d(&self) -> usize {
        self.positions.ncols()
    }

    pub fn position(&self, a: usize) -> Vec<f64> {
        self.positions.row(a).iter().copied().collect()
    }
}

/// Build the anchor layout for a trial.
///
/// `UnitSimplex` rows are `0, e₁, …, e_d` in that order. `RandomSubset(m)`
/// requires `d + 1 ≤ m ≤ n`.
pub fn make_anchors(mode: AnchorMode, d: usize, n: usize, seed: Seed) -> Result<AnchorLayout> {
    check_dimension(d)?;
    let positions = match mode {
        AnchorMode::Absent => DMatrix::zeros(0, d),
        AnchorMode::UnitSimplex => {
            DMatrix::from_fn(d + 1, d, |i, j| if i == j + 1 { 1.0 } else { 0.0 })
        }
        AnchorMode::RandomSubset(m) => {
            if m < d + 1 {
                return Err(Error::TooFewAnchors {
                    required: d + 1,
                    got: m,
                });
            }
            if m > n {
                return Err(Error::InvalidParameter(format!(
                    "{m} anchors requested for {n} nodes"
                )));
            }
            uniform_points(m, d, &mut seed.rng(Purpose::Anchors))
        }
    };
    Ok(AnchorLayout { mode, positions })
}

/// Stack anchors on top of the unknown nodes, giving coordinates indexed by graph node id.
pub fn node_coordinates(positions: &PositionMatrix, anchors: &AnchorLayout) -> Result<DMatrix<f64>> {
    if anchors.m() > 0 && anchors.d() != positions.d() {
        return Err(Error::ShapeMismatch(format!(
            "anchors are {}-dimensional, nodes {}-dimensional",
            anchors.d(),
            positions.d()
        )));
    }
    let (m, n, d) = (anchors.m(), positions.n(), positions.d());
    Ok(DMatrix::from_fn(m + n, d, |i, j| {
        if i < m {
            anchors.positions[(i, j)]
        } else {
            positions.coords[(i - m, j)]
        }
    }))
}
