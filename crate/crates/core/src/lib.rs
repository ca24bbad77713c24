// SPDX-License-Identifier: Apache-2.0

//! Simulation and analysis of sensor-network localization from connectivity
//! or range information.
//!
//! Two localization schemes are provided:
//!
//! * [`mds::mds_map`], a centralized scheme that embeds the whole graph from
//!   shortest-path distance estimates by classical multidimensional scaling;
//! * [`hopterrain::hop_terrain`], a distributed scheme in which anchors flood
//!   their positions and every node solves a small least-squares problem.
//!
//! [`metrics`] holds the error measures and the numerical checks of the
//! analytical bounds, and [`harness`] drives Monte-Carlo sweeps over the radio
//! range.
//!
//! ```
//! use sensorloc::geometry::{place_uniform, AnchorLayout, Seed};
//! use sensorloc::network::{build_graph, DetectionModel, MeasurementMode};
//! use sensorloc::{mds, metrics};
//!
//! let seed = Seed::new(7, 0);
//! let x = place_uniform(200, 2, seed)?;
//! let model = DetectionModel::disc(0.3, 2)?;
//! let g = build_graph(&x, &AnchorLayout::empty(2), model, MeasurementMode::ConnectivityBased, seed)?;
//! let estimate = mds::mds_map(&g, 2)?;
//! let err = metrics::d_inv(x.coords(), &estimate.coords)?;
//! assert!(err < 0.1);
//! # Ok::<(), sensorloc::Error>(())
//! ```

pub mod error;
pub mod geometry;
pub mod harness;
pub mod hopterrain;
pub mod mds;
pub mod metrics;
pub mod network;
pub mod paths;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/detection-model.md")]
    mod detection_model {}
    #[doc = include_str!("../../../book/src/shortest-paths.md")]
    mod shortest_paths {}
    #[doc = include_str!("../../../book/src/mds.md")]
    mod mds {}
    #[doc = include_str!("../../../book/src/hop-terrain.md")]
    mod hop_terrain {}
    #[doc = include_str!("../../../book/src/bounds.md")]
    mod bounds {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
}
