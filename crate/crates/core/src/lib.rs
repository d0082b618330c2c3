//! Axially symmetric weighted-volume preserving curvature flows between two
//! parallel hyperplanes, the unduloid family bifurcating from the critical
//! cylinder, and the exact and numerical criteria deciding its stability.
//!
//! Profiles live on a uniform grid over `[0, d]` with even reflection at both
//! ends (see [`grid`]). The speed `F` and the weight `Xi = sum c_a E_a` are
//! pluggable ([`speed`], [`geometry::WeightModel`]).

pub mod error;
pub mod export;
pub mod flow;
pub mod geometry;
pub mod grid;
pub mod quadrature;
pub mod reduction;
pub mod roots;
pub mod special;
pub mod speed;
pub mod stability;
pub mod unduloid;
pub mod verify;

pub use error::{CurvError, Result};
pub use flow::{integrate, FlowConfig, FlowMode, InitialFamily, RadiusSpec, Termination, Trajectory};
pub use geometry::{RadialProfile, WeightModel};
pub use grid::{DiffMode, GridCalculus};
pub use speed::{CylinderSpeed, Speed, SpeedSpec};
