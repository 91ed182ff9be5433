//! Finsler geodesic random walks: metrics, geodesics, step measures, walk
//! simulation and the limit generator.

pub mod atlas;
pub mod config;
pub mod error;
pub mod export;
pub mod generator;
pub mod geodesic;
pub mod linalg;
pub mod measure;
pub mod metric;
pub mod study;
pub mod testfn;
pub mod walk;
pub mod zoo;

pub use atlas::{ChartAtlas, ChartId, Point};
pub use error::{Error, Result};
pub use linalg::{Christoffel, Matrix, Vector};
pub use metric::{christoffel, fundamental_tensor, spray, DiffSteps, FinslerMetric};
