//! Numerical verification of φ-coupled static perfect fluid geometry.
//!
//! The crate evaluates curvature tensors, field equations, integrability
//! conditions and divergence identities pointwise on user-described scenes,
//! using exact Taylor-jet differentiation, and provides quadrature,
//! symmetric-function and ODE tools for the integral and non-existence
//! criteria.

pub mod catalog;
pub mod curvature;
pub mod error;
pub mod expr;
pub mod geometry;
pub mod lorentz;
pub mod newton;
pub mod oscillation;
pub mod jet;
pub mod quadrature;
pub mod report;
pub mod scene;
pub mod sceneio;
pub mod spfst;
pub mod tensor;
pub mod tol;

pub use error::{Error, ParseError, Result};
pub use expr::Expr;
pub use geometry::Geo;
pub use jet::{Jet, Space, MAX_ORDER};
pub use scene::{Chart, Claim, Closure, JetValue, MapSpec, ScalarField, Scene, TensorSpec, WarpedProfile};
pub use tensor::{kulkarni_nomizu, raise_lower, Field, TensorValue};
pub use tol::Tier;
