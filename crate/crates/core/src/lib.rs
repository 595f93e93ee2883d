//! Numerical laboratory for transverse measures on foliated 3-manifolds.
//!
//! The pipeline runs from a transverse measure `τ = f dz` on a discretized
//! foliated chart to a contact form `α = τ + εβ` whose Reeb field crosses the
//! leaves:
//!
//! 1. [`brownian`] samples leafwise Brownian paths and estimates holonomy
//!    contraction, occupation measures and drift integrals.
//! 2. [`diffusion`] applies logarithmic diffusion with a radial cutoff and
//!    certifies strict log-superharmonicity with confidence bounds.
//! 3. [`contact`] builds `β = -⋆₂ d log f`, the contact form, its volume and
//!    Reeb field, and checks transversality.
//! 4. [`lp`] decides, in exact rational arithmetic, whether a leaf complex
//!    admits a suitable `β` or carries an obstruction 2-chain.
//!
//! [`instances`] holds the built-in foliations and [`pipeline`] chains the
//! stages together.

// `!(x > 0.0)` is how NaN gets rejected alongside non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod expr;
pub mod geometry;
pub mod measures;
pub mod brownian;
pub mod rng;
pub mod stats;
pub mod instances;
pub mod diffusion;
pub mod contact;
pub mod lp;
pub mod pipeline;
pub mod svg;

pub use brownian::{BrownianPath, EstimatorReport, PathConfig};
pub use contact::{ThreeFormField, VectorField3};
pub use diffusion::{CutoffSpec, DiffusionParams, Verdict};
pub use error::{Error, Result};
pub use geometry::{DiscreteForm, FoliatedChartModel, LeafPoint};
pub use instances::{make_instance, InstanceDescriptor};
pub use lp::{LPOutcome, LeafComplex};
pub use measures::{IntervalMapSample, TransverseMeasureField};
