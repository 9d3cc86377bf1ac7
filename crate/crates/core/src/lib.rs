//! Solvers and experiments for degenerate p-Laplace (`p > 2`) and
//! p-parabolic problems on uniform grids: Dirichlet and obstacle problems,
//! Riesz measures, mollification, Bessel-potential dual norms, closed-form
//! references and the approximation experiments built from them.
//!
//! Everything numerical is generic over the scalar ([`Real`]: `f32` or
//! `f64`); the `*64` aliases below fix `f64`.

mod energy;
mod newton;
mod quadrature;
mod sparse;

pub mod elliptic;
pub mod error;
pub mod exact;
pub mod grid;
pub mod io;
pub mod measures;
pub mod norms;
pub mod operators;
pub mod parabolic;
pub mod pipeline;
pub mod real;

pub use elliptic::{solve_dirichlet, solve_obstacle, SolveStats, SolverOptions};
pub use energy::SchemeKind;
pub use error::{Error, Result};
pub use grid::{BoxDomain, Grid, GridFunction, NodeBox, PParams, SpaceTimeBox, SpaceTimeFunction, SpaceTimeGrid};
pub use measures::{DiscreteMeasure, NodalFunctional, SpaceTimeFunctional, SpaceTimeMeasure};
pub use quadrature::{bisect, integrate};
pub use real::Real;
pub use sparse::{InteriorSystem, Ldl, SymMatrix};

pub type Grid64 = Grid<f64>;
pub type GridFunction64 = GridFunction<f64>;
pub type SpaceTimeGrid64 = SpaceTimeGrid<f64>;
pub type SpaceTimeFunction64 = SpaceTimeFunction<f64>;
pub type PParams64 = PParams<f64>;
pub type DiscreteMeasure64 = DiscreteMeasure<f64>;
pub type SpaceTimeMeasure64 = SpaceTimeMeasure<f64>;
pub type SolverOptions64 = SolverOptions<f64>;
pub type Grid32 = Grid<f32>;
pub type GridFunction32 = GridFunction<f32>;
