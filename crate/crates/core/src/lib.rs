//! Pseudosoliton curves and hypersurfaces on Riemannian charts.

pub mod chart;
pub mod equivalence;
pub mod error;
pub mod expr;
pub mod fields;
pub mod hypersurface;
pub mod io;
pub mod ode;
pub mod quad;
pub mod soliton;
pub mod stencil;
pub mod weyl;

pub use chart::{Christoffel, ConformalFactor, Domain, FdSteps, MetricChart, Point};
pub use error::{GeomError, Result};
pub use fields::{ClosednessReport, Covector, VectorFieldSpec};
pub use soliton::{CurveState, SolitonCurve, SIGMA};
